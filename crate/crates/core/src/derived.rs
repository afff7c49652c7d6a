//! Quantities assembled from invariants: tangency counts, multiple-cover
//! contributions, multisecant numbers and the standard tables.

use std::fmt::Write as _;

use num_traits::Zero;
use rayon::prelude::*;

use crate::engine::Engine;
use crate::error::{GwError, Result};
use crate::homology::{vdim, CurveClass};
use crate::ring::{abelian_surface_ring, curve_secant_ring, rat, CohClass, Rational, Strategy, TargetData};
use crate::wdvv::Insertions;

/// Render `p/q`, dropping `/1` for integers.
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: num_bigint::BigInt = p.parse().ok()?;
            let q: num_bigint::BigInt = q.parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rational::new(p, q))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

/// Number of degree-`d` rational curves in `P^r` through the constraints
/// `extra` that are tangent at a fixed point to a fixed `k`-plane.
pub struct TangencyQuery {
    pub r: usize,
    pub d: i64,
    pub k: usize,
    /// Pulled-back classes `H^a`, given as powers `a`.
    pub extra: Vec<usize>,
}

/// `one_point` is an engine for `P^r(1)`; its base engine supplies the `P^r` terms.
pub fn tangency_count(one_point: &Engine, q: &TangencyQuery) -> Result<Rational> {
    let (r, d, k) = (q.r, q.d, q.k);
    if k < 1 || k > r - 1 || d < 1 {
        return Err(GwError::Precondition(format!("need d >= 1 and 1 <= k <= {}", r - 1)));
    }
    let b = one_point.target();
    let plain = match one_point.base() {
        Some(base) if b.dim == r && b.points == 1 => base,
        _ => return Err(GwError::Precondition(format!("tangency needs an engine for P^{r}(1)"))),
    };
    let p = plain.target();
    let have: i64 = q.extra.iter().map(|&a| a as i64).sum();
    let need = vdim(p, &CurveClass::new([d]), q.extra.len()) - r as i64 + 1 - k as i64;
    if have != need {
        return Err(GwError::Balance { have, need });
    }
    let classes = |t: &crate::ring::TargetData| -> Result<Vec<CohClass>> {
        q.extra
            .iter()
            .map(|&a| {
                t.ambient_index(a)
                    .map(CohClass::basis)
                    .ok_or_else(|| GwError::UnknownClass(format!("H{a}")))
            })
            .collect()
    };
    if k < r - 1 {
        // -(-E)^{k+1} = (-1)^k E^{k+1}
        let mut ins = classes(b)?;
        let ek = b.exceptional_index(1, k + 1).expect("exceptional power");
        let sign = if k % 2 == 0 { rat(1) } else { rat(-1) };
        ins.push(CohClass::from_terms([(ek, sign)]));
        one_point.gw(&CurveClass::new([d, -1]), &ins)
    } else {
        let mut ins = classes(p)?;
        let pt = CohClass::basis(p.pt_index());
        ins.push(pt.clone());
        ins.push(pt);
        let through = plain.gw(&CurveClass::new([d]), &ins)?;
        let doubled = one_point.gw(&CurveClass::new([d, -2]), &classes(b)?)?;
        Ok(through - rat(2) * doubled)
    }
}

/// Contribution of degree-`d` covers of a rigid line: `GW_{dH'-dE'_1-dE'_2}()` on `P^3(2)`.
pub fn multiple_cover_number(engine: &Engine, d: i64) -> Result<Rational> {
    let t = engine.target();
    if t.dim != 3 || t.points != 2 {
        return Err(GwError::Precondition("multiple covers are read off P^3(2)".into()));
    }
    engine.gw(&CurveClass::new([d, -d, -d]), &[])
}

pub struct SecantNumbers {
    /// Trisecants of the curve meeting a general line.
    pub t: Rational,
    /// Quadrisecants of the curve.
    pub q: Rational,
}

pub fn curve_secant_engine(d: i64, g: i64) -> Engine {
    Engine::new(curve_secant_ring(d, g)).expect("bundled curve ring has consistent seeds")
}

pub fn secant_numbers(engine: &Engine) -> Result<SecantNumbers> {
    let t = engine.target();
    let h2 = t.index_of("H2").ok_or_else(|| GwError::UnknownClass("H2".into()))?;
    Ok(SecantNumbers {
        t: engine.gw_basis(&CurveClass::new([1, -3]), &[h2])?,
        q: engine.gw_basis(&CurveClass::new([1, -4]), &[])?,
    })
}

pub fn abelian_engine() -> Engine {
    Engine::new(abelian_surface_ring()).expect("bundled abelian ring has consistent seeds")
}

/// Lines meeting the abelian surface six times: `GW_{H'-6E'}()`.
pub fn abelian_sixsecants(engine: &Engine) -> Result<Rational> {
    engine.gw_basis(&CurveClass::new([1, -6]), &[])
}

/// Whether `GW_β(T)` on a point blow-up is known to count irreducible
/// rational curves: either at most one point is blown up and `T` consists of
/// pulled-back classes, or the target is `P^3(s)` with `s <= 4`, `T` is all
/// points and `β` is not a multiple `dH'-dE'_i-dE'_j` with `d >= 2`.
pub fn is_enumerative(t: &TargetData, beta: &CurveClass, classes: &Insertions) -> bool {
    if !matches!(t.strategy, Some(Strategy::Projective | Strategy::PointBlowup)) {
        return false;
    }
    let d = beta.degree();
    let es = &beta.coeffs()[1..];
    if d <= 0 || es.iter().any(|&e| e > 0) {
        return false;
    }
    if classes.iter().any(|(c, _)| !t.kind(c).is_ambient() || t.codim(c) == 0) {
        return false;
    }
    if classes.codim_sum(t) as i64 != vdim(t, beta, classes.len()) {
        return false;
    }
    if t.points <= 1 {
        return true;
    }
    let pt = t.pt_index();
    let double_line = d >= 2 && {
        let mut hit: Vec<i64> = es.iter().copied().filter(|&e| e != 0).collect();
        hit.sort();
        hit == [-d, -d]
    };
    t.dim == 3 && t.points <= 4 && classes.iter().all(|(c, _)| c == pt) && !double_line
}

/// Identifier of a bundled table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableId {
    P2One,
    P3One,
    P3Two,
    P4Two,
    Tangency,
}

impl TableId {
    pub const ALL: [TableId; 5] = [
        TableId::P2One,
        TableId::P3One,
        TableId::P3Two,
        TableId::P4Two,
        TableId::Tangency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TableId::P2One => "p2-1",
            TableId::P3One => "p3-1",
            TableId::P3Two => "p3-2",
            TableId::P4Two => "p4-1",
            TableId::Tangency => "ex-tangency",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    /// `(r, s)` of the blow-up the table is computed on; the tangency table
    /// mixes `P^r` and `P^r(1)` for two values of `r`.
    pub fn target(self) -> Option<(usize, usize)> {
        match self {
            TableId::P2One => Some((2, 1)),
            TableId::P3One => Some((3, 1)),
            TableId::P3Two => Some((3, 2)),
            TableId::P4Two => Some((4, 2)),
            TableId::Tangency => None,
        }
    }

    fn header_target(self) -> (String, String) {
        match self.target() {
            Some((r, s)) => (r.to_string(), s.to_string()),
            None => ("2,3".into(), "0,1".into()),
        }
    }

    pub fn row_header(self) -> &'static str {
        match self {
            TableId::P2One | TableId::P3One => "e",
            TableId::P3Two | TableId::P4Two => "e1,e2",
            TableId::Tangency => "r,k",
        }
    }

    pub fn rows(self) -> Vec<Vec<i64>> {
        match self {
            TableId::P2One => (0..=6).map(|e| vec![-e]).collect(),
            TableId::P3One => (0..=4).map(|e| vec![-e]).collect(),
            TableId::P3Two => vec![
                vec![-2, -2],
                vec![-3, -2],
                vec![-3, -3],
                vec![-4, -2],
                vec![-4, -3],
                vec![-4, -4],
            ],
            TableId::P4Two => vec![
                vec![-1, -1],
                vec![-2, -1],
                vec![-2, -2],
                vec![-3, -1],
                vec![-3, -2],
                vec![-3, -3],
                vec![-4, -1],
                vec![-4, -2],
            ],
            TableId::Tangency => vec![vec![2, 1], vec![3, 1], vec![3, 2]],
        }
    }

    pub fn dmin(self) -> i64 {
        match self {
            TableId::P2One | TableId::P3One => 1,
            _ => 2,
        }
    }

    pub fn default_dmax(self) -> i64 {
        match self {
            TableId::P2One => 7,
            TableId::P3One => 8,
            TableId::P3Two => 7,
            TableId::P4Two => 7,
            TableId::Tangency => 7,
        }
    }
}

/// One table: row labels, degree columns, and cells (`None` = out of range).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub id: String,
    /// Dimension(s) and point count(s), as written in the header.
    pub r: String,
    pub s: String,
    pub row_header: String,
    pub rows: Vec<Vec<i64>>,
    pub degrees: Vec<i64>,
    pub cells: Vec<Vec<Option<Rational>>>,
}

/// Insertions for one cell as `(codim, count)` of pulled-back classes, or
/// `None` when the count would be negative.
fn cell_pattern(id: TableId, row: &[i64], d: i64) -> Option<Vec<(usize, usize)>> {
    match id {
        TableId::P2One => {
            let n = 3 * d + row[0] - 1;
            (n >= 0).then(|| vec![(2, n as usize)])
        }
        TableId::P3One => {
            let n = 2 * d + row[0];
            (n >= 0).then(|| vec![(3, n as usize)])
        }
        TableId::P3Two => {
            let n = 2 * d + row[0] + row[1];
            (n >= 0).then(|| vec![(3, n as usize)])
        }
        TableId::P4Two => {
            let total = 5 * d + 3 * row[0] + 3 * row[1] + 1;
            (total >= 0).then(|| vec![(4, (total / 3) as usize), (2, (total % 3) as usize)])
        }
        TableId::Tangency => {
            let n = match (row[0], row[1]) {
                (2, 1) => 3 * d - 3,
                _ => 2 * d - 2,
            };
            if n < 0 {
                return None;
            }
            let mut v = vec![(row[0] as usize, n as usize)];
            if (row[0], row[1]) == (3, 1) {
                v.push((2, 1));
            }
            Some(v)
        }
    }
}

/// Engines a table is computed with.
pub enum TableEngines {
    Blowup(Engine),
    /// `P^r(1)` engines, one per dimension.
    Tangency(Vec<Engine>),
}

impl TableEngines {
    pub fn new(id: TableId) -> Self {
        match id {
            TableId::Tangency => TableEngines::Tangency(vec![Engine::blowup(2, 1), Engine::blowup(3, 1)]),
            _ => {
                let (r, s) = id.target().expect("blow-up table");
                TableEngines::Blowup(Engine::blowup(r, s))
            }
        }
    }
}

fn cell_value(id: TableId, engines: &TableEngines, row: &[i64], d: i64) -> Result<Option<Rational>> {
    let Some(pattern) = cell_pattern(id, row, d) else {
        return Ok(None);
    };
    match engines {
        TableEngines::Blowup(e) => {
            let t = e.target();
            let mut classes = Vec::new();
            for (codim, n) in pattern {
                let c = t.ambient_index(codim).expect("ambient class");
                classes.extend(std::iter::repeat_n(c, n));
            }
            let beta = CurveClass::new(std::iter::once(d).chain(row.iter().copied()));
            e.gw_basis(&beta, &classes).map(Some)
        }
        TableEngines::Tangency(list) => {
            let r = row[0] as usize;
            let eng = list.iter().find(|e| e.target().dim == r).expect("dimension");
            let extra = pattern
                .iter()
                .flat_map(|&(c, n)| std::iter::repeat_n(c, n))
                .collect();
            let q = TangencyQuery {
                r,
                d,
                k: row[1] as usize,
                extra,
            };
            tangency_count(eng, &q).map(Some)
        }
    }
}

/// Compute a table for degrees `dmin..=dmax`. Cells run on the current rayon
/// pool; output does not depend on the schedule.
pub fn make_table(id: TableId, engines: &TableEngines, dmax: i64) -> Result<Table> {
    let degrees: Vec<i64> = (id.dmin()..=dmax).collect();
    let rows = id.rows();
    let jobs: Vec<(usize, usize)> = (0..rows.len())
        .flat_map(|i| (0..degrees.len()).map(move |j| (i, j)))
        .collect();
    let values: Vec<Result<Option<Rational>>> = jobs
        .par_iter()
        .map(|&(i, j)| cell_value(id, engines, &rows[i], degrees[j]))
        .collect();
    let mut cells = vec![vec![None; degrees.len()]; rows.len()];
    for ((i, j), v) in jobs.into_iter().zip(values) {
        cells[i][j] = v?;
    }
    let (r, s) = id.header_target();
    Ok(Table {
        id: id.name().to_string(),
        r,
        s,
        row_header: id.row_header().to_string(),
        rows,
        degrees,
        cells,
    })
}

fn row_label(row: &[i64]) -> String {
    row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn cell_text(c: &Option<Rational>) -> String {
    c.as_ref().map(format_rational).unwrap_or_else(|| "-".to_string())
}

impl Table {
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# table={} r={} s={}\n", self.id, self.r, self.s);
        out.push_str(&self.row_header);
        for d in &self.degrees {
            write!(out, "\t{d}").unwrap();
        }
        out.push('\n');
        for (row, cells) in self.rows.iter().zip(&self.cells) {
            out.push_str(&row_label(row));
            for c in cells {
                write!(out, "\t{}", cell_text(c)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut grid = vec![std::iter::once(format!("{} \\ d", self.row_header))
            .chain(self.degrees.iter().map(|d| d.to_string()))
            .collect::<Vec<_>>()];
        for (row, cells) in self.rows.iter().zip(&self.cells) {
            grid.push(
                std::iter::once(row_label(row))
                    .chain(cells.iter().map(cell_text))
                    .collect(),
            );
        }
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|j| grid.iter().map(|r| r[j].len()).max().unwrap_or(1))
            .collect();
        let line = |r: &Vec<String>| {
            let cols: Vec<String> = r
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (c, w))| if j == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            format!("| {} |\n", cols.join(" | "))
        };
        let mut out = line(&grid[0]);
        let rule: Vec<String> = widths
            .iter()
            .enumerate()
            .map(|(j, w)| if j == 0 { "-".repeat(w + 2) } else { format!("{}:", "-".repeat(w + 1)) })
            .collect();
        out.push_str(&format!("|{}|\n", rule.join("|")));
        for r in &grid[1..] {
            out.push_str(&line(r));
        }
        out
    }

    pub fn cell(&self, row: &[i64], d: i64) -> Option<&Option<Rational>> {
        let i = self.rows.iter().position(|r| r == row)?;
        let j = self.degrees.iter().position(|&x| x == d)?;
        Some(&self.cells[i][j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::ratio;

    #[test]
    fn rational_text() {
        assert_eq!(format_rational(&rat(12)), "12");
        assert_eq!(format_rational(&ratio(-1, 12)), "-1/12");
        assert_eq!(parse_rational("-1/12"), Some(ratio(-1, 12)));
        assert_eq!(parse_rational("x"), None);
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn cell_patterns_mark_negative_counts() {
        assert_eq!(cell_pattern(TableId::P2One, &[-3], 1), None);
        assert_eq!(cell_pattern(TableId::P2One, &[-6], 3), Some(vec![(2, 2)]));
        assert_eq!(cell_pattern(TableId::P4Two, &[-3, -3], 3), None);
        assert_eq!(cell_pattern(TableId::P4Two, &[-4, -1], 3), Some(vec![(4, 0), (2, 1)]));
    }

    #[test]
    fn tangency_balance_is_checked() {
        let e = Engine::blowup(2, 1);
        let q = TangencyQuery {
            r: 2,
            d: 3,
            k: 1,
            extra: vec![2; 5],
        };
        assert!(matches!(tangency_count(&e, &q), Err(GwError::Balance { .. })));
    }

    #[test]
    fn small_tangency_counts() {
        let e = Engine::blowup(2, 1);
        let q = TangencyQuery {
            r: 2,
            d: 2,
            k: 1,
            extra: vec![2; 3],
        };
        assert_eq!(tangency_count(&e, &q).unwrap(), rat(1));
    }

    #[test]
    fn tangency_examples() {
        let cases = [(2, 1, 4, vec![2; 9], 428), (3, 1, 3, vec![3, 3, 3, 3, 2], 3), (3, 2, 5, vec![3; 8], 81)];
        for (r, k, d, extra, want) in cases {
            let e = Engine::blowup(r, 1);
            let q = TangencyQuery { r, d, k, extra };
            assert_eq!(tangency_count(&e, &q).unwrap(), rat(want), "r={r} k={k} d={d}");
        }
    }

    #[test]
    fn enumerative_regimes() {
        let t = crate::ring::build_blowup_point_ring(3, 2);
        let pt = t.pt_index();
        let pts = |n| Insertions::from_indices(std::iter::repeat_n(pt, n));
        assert!(is_enumerative(&t, &CurveClass::new([5, -2, -2]), &pts(6)));
        assert!(!is_enumerative(&t, &CurveClass::new([2, -2, -2]), &pts(0)));
        assert!(!is_enumerative(&t, &CurveClass::new([5, -2, -2]), &pts(5)));
        let t = crate::ring::build_blowup_point_ring(4, 2);
        let pt = t.pt_index();
        let ins = Insertions::from_indices([pt; 5]);
        assert!(!is_enumerative(&t, &CurveClass::new([4, -1, -1]), &ins));
        let t = crate::ring::build_blowup_point_ring(2, 1);
        let e = t.exceptional_index(1, 1).unwrap();
        assert!(is_enumerative(&t, &CurveClass::new([3, -1]), &Insertions::from_indices([t.pt_index(); 7])));
        assert!(!is_enumerative(&t, &CurveClass::new([3, -1]), &Insertions::from_indices([e])));
    }

    fn closed_secants(d: i64, g: i64) -> (Rational, Rational) {
        let t = ratio((d - 1) * (d - 2) * (d - 3), 3) - rat(g * (d - 2));
        let q = ratio((d - 2) * (d - 3) * (d - 3) * (d - 4), 12) - ratio(g * (d * d - 7 * d + 13 - g), 2);
        (t, q)
    }

    #[test]
    fn secant_numbers_match_closed_forms() {
        for d in 3..=8 {
            for g in 0..=3 {
                let s = secant_numbers(&curve_secant_engine(d, g)).unwrap();
                assert_eq!((s.t, s.q), closed_secants(d, g), "d={d} g={g}");
            }
        }
    }

    #[test]
    fn curve_secant_intermediate_values() {
        for d in 3..=8 {
            for g in 0..=3 {
                let e = curve_secant_engine(d, g);
                let t = e.target();
                let [h2, f, pt] = ["H2", "F", "pt"].map(|n| t.index_of(n).unwrap());
                let gw = |b: i64, cls: &[usize]| e.gw_basis(&CurveClass::new([1, b]), cls).unwrap();
                assert_eq!(gw(-1, &[h2, h2, h2]), rat(2 * d));
                assert_eq!(gw(-1, &[h2, pt]), rat(d));
                assert_eq!(gw(-1, &[f, f, h2]), rat(0));
                assert_eq!(gw(-1, &[f, h2, h2]), rat(1));
                assert_eq!(gw(-1, &[f, pt]), rat(1));
                assert_eq!(gw(-2, &[h2, h2]), rat(d * (d - 2) + 1 - g));
                assert_eq!(gw(-2, &[pt]), ratio(d * (d - 3), 2) + rat(1 - g));
                assert_eq!(gw(-2, &[f, h2]), rat(d - 1));
                assert_eq!(gw(-2, &[f, f]), rat(1));
                assert_eq!(gw(-3, &[f]), ratio((d - 1) * (d - 4), 2) + rat(1 - g));
            }
        }
    }

    /// Degree-one seeds of a loaded ring must agree with the lines of `P^r`.
    fn assert_line_seeds_match_projective(e: &Engine) {
        let t = e.target();
        let p = Engine::blowup(t.dim, 0);
        let mut n = 0;
        for seed in t.seeds.iter().filter(|s| s.beta.degree() == 1) {
            let classes: Vec<usize> = seed
                .classes
                .expanded()
                .map(|c| p.target().index_of(t.class_name(c)).unwrap())
                .collect();
            assert_eq!(p.gw_basis(&CurveClass::new([1]), &classes).unwrap(), seed.value);
            n += 1;
        }
        assert!(n > 0);
    }

    #[test]
    fn line_seeds_are_projective_values() {
        assert_line_seeds_match_projective(&curve_secant_engine(4, 1));
        assert_line_seeds_match_projective(&abelian_engine());
    }

    #[test]
    fn abelian_sixsecant_count() {
        let e = abelian_engine();
        assert_eq!(abelian_sixsecants(&e).unwrap(), rat(25));
        let t = e.target();
        let [f, gamma] = ["F", "gamma"].map(|n| t.index_of(n).unwrap());
        assert_eq!(e.gw_basis(&CurveClass::new([0, 2]), &[f, gamma]).unwrap(), rat(0));
        assert_eq!(e.gw_basis(&CurveClass::new([0, 2]), &[gamma, gamma, gamma]).unwrap(), rat(0));
    }

    #[test]
    fn multiple_covers_scale_as_inverse_cubes() {
        let e = Engine::blowup(3, 2);
        for d in 1..=4 {
            assert_eq!(multiple_cover_number(&e, d).unwrap(), ratio(1, d * d * d));
        }
    }
}
