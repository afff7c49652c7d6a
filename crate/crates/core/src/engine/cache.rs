//! Plain-text persistence of the memo store.
//!
//! ```text
//! GWCACHE V1 <basis-hash>
//! V1|<r> <s>|<beta coeffs>|<idx^mult,...>|<p>/<q>
//! ```
//! Keys of the base `P^r` of a point blow-up are written with `s = 0`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_bigint::BigInt;

use super::{Engine, GwKey};
use crate::error::{GwError, Result};
use crate::homology::CurveClass;
use crate::ring::Rational;
use crate::wdvv::Insertions;

fn render_line(r: usize, s: usize, key: &GwKey, v: &Rational) -> String {
    format!("V1|{r} {s}|{}|{}|{}/{}", key.beta, key.classes, v.numer(), v.denom())
}

pub fn save(engine: &Engine, path: &Path) -> Result<usize> {
    let t = engine.target();
    let tmp = path.with_extension("tmp");
    let mut out = BufWriter::new(fs::File::create(&tmp)?);
    writeln!(out, "GWCACHE V1 {}", t.basis_hash())?;
    let mut n = 0;
    if let Some(base) = engine.base() {
        for (k, v) in base.memo_snapshot() {
            writeln!(out, "{}", render_line(t.dim, 0, &k, &v))?;
            n += 1;
        }
    }
    for (k, v) in engine.memo_snapshot() {
        writeln!(out, "{}", render_line(t.dim, t.points, &k, &v))?;
        n += 1;
    }
    out.flush()?;
    drop(out);
    fs::rename(&tmp, path)?;
    Ok(n)
}

fn parse_line(line: &str, lineno: usize) -> Result<(usize, usize, CurveClass, Insertions, Rational)> {
    let bad = |what: &str| GwError::Cache(format!("line {lineno}: {what}"));
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() != 5 || fields[0] != "V1" {
        return Err(bad("expected five `|`-separated fields starting with V1"));
    }
    let (r, s) = fields[1]
        .split_once(' ')
        .and_then(|(r, s)| Some((r.parse().ok()?, s.parse().ok()?)))
        .ok_or_else(|| bad("bad `<r> <s>` field"))?;
    let beta: CurveClass = fields[2].parse().map_err(|_| bad("bad curve class"))?;
    let mut classes = Insertions::new();
    for tok in fields[3].split(',').filter(|t| !t.is_empty()) {
        let (i, m) = tok.split_once('^').ok_or_else(|| bad("bad class multiset"))?;
        let i: usize = i.parse().map_err(|_| bad("bad class index"))?;
        let m: u32 = m.parse().map_err(|_| bad("bad multiplicity"))?;
        classes.add(i, m);
    }
    let (p, q) = fields[4].split_once('/').ok_or_else(|| bad("value must be p/q"))?;
    let p: BigInt = p.parse().map_err(|_| bad("bad numerator"))?;
    let q: BigInt = q.parse().map_err(|_| bad("bad denominator"))?;
    if q == BigInt::from(0) {
        return Err(bad("zero denominator"));
    }
    Ok((r, s, beta, classes, Rational::new(p, q)))
}

/// Load a cache file into the engine's memo. Values disagreeing with ones
/// already present are reported as conflicts.
pub fn load(engine: &Engine, path: &Path) -> Result<usize> {
    let text = fs::read_to_string(path)?;
    let t = engine.target();
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| GwError::Cache("empty cache file".into()))?;
    let expected = format!("GWCACHE V1 {}", t.basis_hash());
    if header.trim() != expected {
        return Err(GwError::Cache(format!(
            "header `{header}` does not match this target (`{expected}`)"
        )));
    }
    let mut n = 0;
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (r, s, beta, classes, v) = parse_line(line, k + 2)?;
        let dest = if s == t.points {
            engine
        } else if s == 0 && engine.base().is_some() {
            engine.base().unwrap()
        } else {
            return Err(GwError::Cache(format!("line {}: unexpected target {r} {s}", k + 2)));
        };
        let dt = dest.target();
        if r != dt.dim || beta.rank() != dt.curve_basis.len() || classes.iter().any(|(c, _)| c >= dt.len()) {
            return Err(GwError::Cache(format!("line {}: key does not fit the target", k + 2)));
        }
        dest.store(GwKey::new(beta, classes), v)?;
        n += 1;
    }
    Ok(n)
}
