//! Consistency checks: vanishing certificates, the point-exchange identity,
//! relation residuals, symmetry and divisor checks, and table regression.

use std::time::{Duration, Instant};

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::derived::{make_table, parse_rational, Table, TableEngines, TableId};
use crate::engine::blowup::{order_rank, select_equation, vanishing_certificate, Case};
use crate::engine::normalize::{exceptional_weight, required_weight};
use crate::engine::{Engine, GwKey};
use crate::error::{GwError, Result};
use crate::homology::{divisor_pair_basis, is_candidate, CurveClass};
use crate::ring::{rat, ClassKind, CohClass, Rational, TargetData};
use crate::wdvv::{build_relation, residual, Factors, Insertions};

/// Point index `i₀` whose weights prove the invariant vanishes, if any.
pub fn check_vanishing(t: &TargetData, beta: &CurveClass, classes: &Insertions) -> Option<usize> {
    vanishing_certificate(t, beta, classes)
}

/// `GW_{β-E'_i}(T) == GW_β(T ⊗ pt)`, for `e_i(β) = 0`, `w_i(T) = 0`, `d(β) != 0`.
pub fn check_ptexc(engine: &Engine, beta: &CurveClass, i: usize, classes: &Insertions) -> Result<bool> {
    let t = engine.target();
    if i == 0 || i > t.points {
        return Err(GwError::Precondition(format!("no blown-up point {i}")));
    }
    if beta.degree() == 0 || beta.e(i) != 0 || exceptional_weight(t, classes, i) != 0 {
        return Err(GwError::Precondition(format!(
            "need d != 0, e_{i} = 0 and w_{i} = 0 for {beta} with {classes}"
        )));
    }
    let lowered = beta.minus(&CurveClass::unit(beta.rank(), i));
    let left = engine.gw_basis(&lowered, &classes.expanded().collect::<Vec<_>>())?;
    let right = engine.gw_basis(
        beta,
        &classes.expanded().chain([t.pt_index()]).collect::<Vec<_>>(),
    )?;
    Ok(left == right)
}

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub name: String,
    pub checked: usize,
    pub failures: Vec<String>,
    pub max_terms: usize,
    pub elapsed: Duration,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn merge(&mut self, other: SuiteReport) {
        self.checked += other.checked;
        self.failures.extend(other.failures);
        self.max_terms = self.max_terms.max(other.max_terms);
        self.elapsed += other.elapsed;
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{}: {} checked, {} failed", self.name, self.checked, self.failures.len());
        if self.max_terms > 0 {
            s.push_str(&format!(", largest relation {} terms", self.max_terms));
        }
        s.push_str(&format!(", {:.2?}", self.elapsed));
        s
    }
}

/// Random candidate class of degree in `1..=dmax` (or occasionally a
/// multiple of an exceptional line).
fn sample_beta(t: &TargetData, rng: &mut ChaCha8Rng, dmax: i64) -> CurveClass {
    loop {
        let d = if t.points > 0 && rng.gen_ratio(1, 10) { 0 } else { rng.gen_range(1..=dmax) };
        let coeffs = std::iter::once(d).chain((1..=t.points).map(|_| {
            if d == 0 {
                rng.gen_range(0..=2)
            } else {
                rng.gen_range(-d..=1)
            }
        }));
        let beta = CurveClass::new(coeffs);
        if is_candidate(t, &beta) {
            return beta;
        }
    }
}

/// Random multiset of non-divisor classes with `Σ (codim - 1) = weight`.
fn fill_weight(t: &TargetData, rng: &mut ChaCha8Rng, weight: i64) -> Insertions {
    fill_weight_from(t, rng, weight, |_| true)
}

fn fill_weight_from(
    t: &TargetData,
    rng: &mut ChaCha8Rng,
    weight: i64,
    allow: impl Fn(usize) -> bool,
) -> Insertions {
    let pool: Vec<usize> = (0..t.len()).filter(|&c| t.codim(c) >= 2 && allow(c)).collect();
    let mut out = Insertions::new();
    let mut left = weight;
    while left > 0 {
        let fits: Vec<usize> = pool
            .iter()
            .copied()
            .filter(|&c| t.codim(c) as i64 - 1 <= left)
            .collect();
        let c = *fits.choose(rng).expect("codimension-2 classes always fit");
        out.add(c, 1);
        left -= t.codim(c) as i64 - 1;
    }
    out
}

/// Random dimension-matched key on a point blow-up.
pub fn sample_key(t: &TargetData, rng: &mut ChaCha8Rng, dmax: i64) -> GwKey {
    loop {
        let beta = sample_beta(t, rng, dmax);
        let w = required_weight(t, &beta);
        if w < 0 {
            continue;
        }
        return GwKey::new(beta.clone(), fill_weight(t, rng, w));
    }
}

/// Sample admissible `(β, T, μ₁..μ₄)`, build the relation and check that it
/// evaluates to exactly zero.
pub fn residual_suite(engine: &Engine, samples: usize, seed: u64, dmax: i64) -> SuiteReport {
    let start = Instant::now();
    let t = engine.target();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new(&format!("residual {}", t.name));
    let mus: Vec<usize> = (0..t.len()).filter(|&c| t.codim(c) >= 1).collect();
    while report.checked < samples {
        let beta = sample_beta(t, &mut rng, dmax);
        let mu: [usize; 4] = std::array::from_fn(|_| *mus.choose(&mut rng).unwrap());
        let mu_codim: i64 = mu.iter().map(|&m| t.codim(m) as i64).sum();
        let weight = required_weight(t, &beta) + 3 - mu_codim;
        if weight < 0 {
            continue;
        }
        let mut ins = fill_weight(t, &mut rng, weight);
        if rng.gen_ratio(1, 4) {
            let h = t.ambient_index(1).expect("hyperplane");
            ins.add(h, 1);
        }
        let tuple = format!("beta={beta} T={} mu={:?}", ins.render(t), mu.map(|m| t.class_name(m).to_string()));
        match build_relation(t, &beta, &ins, mu) {
            Ok(rel) => {
                report.max_terms = report.max_terms.max(rel.len());
                match residual(&rel, &mut |k| engine.value(k)) {
                    Ok(v) if v.is_zero() => {}
                    Ok(v) => report.failures.push(format!("{tuple}: residual {v}")),
                    Err(e) => report.failures.push(format!("{tuple}: {e}")),
                }
                report.checked += 1;
            }
            Err(e) => report.failures.push(format!("{tuple}: {e}")),
        }
    }
    report.elapsed = start.elapsed();
    report
}

/// Sample tuples meeting the preconditions of the point-exchange identity.
pub fn ptexc_suite(engine: &Engine, samples: usize, seed: u64, dmax: i64) -> SuiteReport {
    let start = Instant::now();
    let t = engine.target();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new(&format!("ptexc {}", t.name));
    while report.checked < samples {
        let i = rng.gen_range(1..=t.points);
        let beta = sample_beta(t, &mut rng, dmax).with(i, 0);
        if beta.degree() == 0 || !is_candidate(t, &beta) {
            continue;
        }
        let lowered = beta.minus(&CurveClass::unit(beta.rank(), i));
        let w = required_weight(t, &lowered);
        if w < 0 {
            continue;
        }
        let ins = fill_weight_from(t, &mut rng, w, |c| {
            !matches!(t.kind(c), ClassKind::Exceptional { point, .. } if point == i)
        });
        match check_ptexc(engine, &beta, i, &ins) {
            Ok(true) => {}
            Ok(false) => report
                .failures
                .push(format!("beta={beta} i={i} T={}", ins.render(t))),
            Err(e) => report.failures.push(e.to_string()),
        }
        report.checked += 1;
    }
    report.elapsed = start.elapsed();
    report
}

/// Sample keys with a vanishing certificate and check that the recursion
/// (which never consults certificates unless asked to) returns 0.
pub fn vanishing_suite(engine: &Engine, samples: usize, seed: u64, dmax: i64) -> SuiteReport {
    let start = Instant::now();
    let t = engine.target();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new(&format!("vanishing {}", t.name));
    let mut tries = 0usize;
    while report.checked < samples {
        tries += 1;
        if tries > samples * 1000 {
            report.failures.push("too few certified keys found".into());
            break;
        }
        let key = sample_key(t, &mut rng, dmax);
        if check_vanishing(t, &key.beta, &key.classes).is_none() {
            continue;
        }
        match engine.value(&key) {
            Ok(v) if v.is_zero() => {}
            Ok(v) => report.failures.push(format!("{key} certified zero but is {v}")),
            Err(e) => report.failures.push(format!("{key}: {e}")),
        }
        report.checked += 1;
    }
    report.elapsed = start.elapsed();
    report
}

/// Swap two blown-up points in a key.
pub fn permute_points(t: &TargetData, key: &GwKey, a: usize, b: usize) -> GwKey {
    let mut coeffs = key.beta.coeffs().to_vec();
    coeffs.swap(a, b);
    let mut classes = Insertions::new();
    for (c, m) in key.classes.iter() {
        let mapped = match t.kind(c) {
            ClassKind::Exceptional { point, power } if point == a || point == b => {
                let other = if point == a { b } else { a };
                t.exceptional_index(other, power).expect("same powers at every point")
            }
            _ => c,
        };
        classes.add(mapped, m);
    }
    GwKey::new(CurveClass::new(coeffs), classes)
}

pub fn permutation_suite(engine: &Engine, samples: usize, seed: u64, dmax: i64) -> SuiteReport {
    let start = Instant::now();
    let t = engine.target();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new(&format!("point permutation {}", t.name));
    if t.points < 2 {
        report.failures.push("needs at least two points".into());
        return report;
    }
    while report.checked < samples {
        let key = sample_key(t, &mut rng, dmax);
        let swapped = permute_points(t, &key, 1, 2);
        match (engine.value(&key), engine.value(&swapped)) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(a), Ok(b)) => report.failures.push(format!("{key} = {a} but {swapped} = {b}")),
            (Err(e), _) | (_, Err(e)) => report.failures.push(format!("{key}: {e}")),
        }
        report.checked += 1;
    }
    report.elapsed = start.elapsed();
    report
}

/// `GW_β(D ⊗ T) = (D·β) GW_β(T)` for random divisors `D`, with `D` inserted
/// as a class combination so the multilinear path is exercised.
pub fn divisor_suite(engine: &Engine, samples: usize, seed: u64, dmax: i64) -> SuiteReport {
    let start = Instant::now();
    let t = engine.target();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new(&format!("divisor axiom {}", t.name));
    while report.checked < samples {
        let key = sample_key(t, &mut rng, dmax);
        let d = CohClass::from_terms(t.divisors.iter().map(|&c| (c, rat(rng.gen_range(-3..=3)))));
        let dbeta: i64 = d
            .terms()
            .map(|(c, q)| q.to_integer().try_into().unwrap_or(0i64) * divisor_pair_basis(t, c, &key.beta))
            .sum();
        let mut ins: Vec<CohClass> = key.classes.expanded().map(CohClass::basis).collect();
        let plain = engine.gw(&key.beta, &ins);
        ins.insert(rng.gen_range(0..=ins.len()), d.clone());
        let with = engine.gw(&key.beta, &ins);
        match (plain, with) {
            (Ok(p), Ok(w)) if w == rat(dbeta) * &p => {}
            (Ok(p), Ok(w)) => report
                .failures
                .push(format!("{key}: D·β = {dbeta}, GW = {p}, GW(D ⊗ T) = {w}")),
            (Err(e), _) | (_, Err(e)) => report.failures.push(format!("{key}: {e}")),
        }
        report.checked += 1;
    }
    report.elapsed = start.elapsed();
    report
}

/// For sampled keys, check that every other contributing invariant of the
/// chosen relation with the same degree ranks strictly lower, allowing case
/// (C) one chained step before the rank drops.
pub fn termination_suite(engine: &Engine, samples: usize, seed: u64, dmax: i64) -> SuiteReport {
    let start = Instant::now();
    let t = engine.target();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new(&format!("rank descent {}", t.name));
    let recursive = |k: &GwKey| {
        k.beta.degree() != 0
            && !(k.beta.coeffs()[1..].iter().all(|&e| e == 0)
                && k.classes.iter().all(|(c, _)| t.kind(c).is_ambient()))
    };
    let rank = |k: &GwKey| order_rank(t, &k.beta, &k.classes);
    let same_degree_unknowns = |key: &GwKey| -> Result<(Case, Vec<GwKey>)> {
        let sel = select_equation(t, key)?;
        let rel = build_relation(t, &sel.beta, &sel.insertions, sel.mu)?;
        let mut out = Vec::new();
        for (f, c) in &rel.terms {
            if c.is_zero() {
                continue;
            }
            // a product term only matters when its partner factor is nonzero
            let keys: Vec<&GwKey> = match f {
                Factors::One(k) => vec![k],
                Factors::Two(a, b) => {
                    let mut live = Vec::new();
                    if !engine.value(b)?.is_zero() {
                        live.push(a);
                    }
                    if !engine.value(a)?.is_zero() {
                        live.push(b);
                    }
                    live
                }
            };
            out.extend(
                keys.into_iter()
                    .filter(|k| *k != key && recursive(k) && k.beta.degree() == key.beta.degree())
                    .cloned(),
            );
        }
        Ok((sel.case, out))
    };
    while report.checked < samples {
        let key = sample_key(t, &mut rng, dmax);
        if !recursive(&key) {
            continue;
        }
        report.checked += 1;
        let top = rank(&key);
        let (case, unknowns) = match same_degree_unknowns(&key) {
            Ok(x) => x,
            Err(e) => {
                report.failures.push(format!("{key}: {e}"));
                continue;
            }
        };
        for k in unknowns {
            if rank(&k) < top {
                continue;
            }
            if case != Case::C {
                report.failures.push(format!("{key} (case {case:?}) needs {k} of no lower rank"));
                continue;
            }
            match same_degree_unknowns(&k) {
                Ok((_, next)) => {
                    for k2 in next {
                        if k2 != key && rank(&k2) >= top {
                            report
                                .failures
                                .push(format!("{key} -> {k} -> {k2} does not descend"));
                        }
                    }
                }
                Err(e) => report.failures.push(format!("{k}: {e}")),
            }
        }
    }
    report.elapsed = start.elapsed();
    report
}

/// Parse a fixture or `--format tsv` table.
pub fn parse_table(text: &str) -> Result<Table> {
    let err = |line: usize, message: &str| GwError::Parse {
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty table"))?;
    let mut id = None;
    let mut r = None;
    let mut s = None;
    for tok in header.trim_start_matches('#').split_whitespace() {
        match tok.split_once('=') {
            Some(("table", v)) => id = Some(v.to_string()),
            Some(("r", v)) => r = Some(v.to_string()),
            Some(("s", v)) => s = Some(v.to_string()),
            _ => return Err(err(1, "header must be `# table=<id> r=<r> s=<s>`")),
        }
    }
    let (Some(id), Some(r), Some(s)) = (id, r, s) else {
        return Err(err(1, "header must be `# table=<id> r=<r> s=<s>`"));
    };
    let (n, cols) = lines.next().ok_or_else(|| err(2, "missing column header"))?;
    let mut cols = cols.split('\t');
    let row_header = cols.next().unwrap_or("").to_string();
    let degrees = cols
        .map(|c| c.trim().parse::<i64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| err(n + 1, "bad degree column"))?;
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (n, line) in lines {
        let mut fields = line.split('\t');
        let label = fields.next().unwrap_or("");
        let row = label
            .split(',')
            .map(|x| x.trim().parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| err(n + 1, "bad row label"))?;
        let vals = fields
            .map(|f| match f.trim() {
                "-" => Ok(None),
                v => parse_rational(v).map(Some).ok_or_else(|| err(n + 1, "bad cell")),
            })
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != degrees.len() {
            return Err(err(n + 1, "row length differs from the header"));
        }
        rows.push(row);
        cells.push(vals);
    }
    Ok(Table {
        id,
        r,
        s,
        row_header,
        rows,
        degrees,
        cells,
    })
}

pub fn bundled_fixture(id: TableId) -> Table {
    let text = match id {
        TableId::P2One => include_str!("../data/fixtures/p2-1.tsv"),
        TableId::P3One => include_str!("../data/fixtures/p3-1.tsv"),
        TableId::P3Two => include_str!("../data/fixtures/p3-2.tsv"),
        TableId::P4Two => include_str!("../data/fixtures/p4-1.tsv"),
        TableId::Tangency => include_str!("../data/fixtures/ex-tangency.tsv"),
    };
    parse_table(text).expect("bundled fixtures parse")
}

/// Cells of `computed` that disagree with `expected` (cells absent from either are ignored).
pub fn diff_tables(expected: &Table, computed: &Table) -> Vec<String> {
    let mut out = Vec::new();
    for (row, cells) in computed.rows.iter().zip(&computed.cells) {
        for (&d, c) in computed.degrees.iter().zip(cells) {
            if let Some(e) = expected.cell(row, d) {
                if e != c {
                    let show = |x: &Option<Rational>| {
                        x.as_ref().map(crate::derived::format_rational).unwrap_or("-".into())
                    };
                    out.push(format!(
                        "{} row {:?} d={}: expected {}, computed {}",
                        computed.id,
                        row,
                        d,
                        show(e),
                        show(c)
                    ));
                }
            }
        }
    }
    out
}

/// Recompute a table through `dmax` and diff it against its fixture.
pub fn regress_tables(id: TableId, engines: &TableEngines, dmax: i64) -> Result<(Table, Vec<String>)> {
    let computed = make_table(id, engines, dmax)?;
    let diffs = diff_tables(&bundled_fixture(id), &computed);
    Ok((computed, diffs))
}
