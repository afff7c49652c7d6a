//! Curve classes, virtual dimension and splittings of a class into two parts.

use std::fmt;
use std::str::FromStr;

use num_traits::{ToPrimitive, Zero};
use smallvec::SmallVec;

use crate::error::{GwError, Result};
use crate::ring::{rat, CohClass, Rational, Strategy, TargetData};

/// Integer coordinates over a target's curve basis. For `P^r(s)` this is
/// `(d; e_1, ..., e_s)` with `β = dH' + Σ e_i E'_i`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CurveClass(SmallVec<[i64; 4]>);

impl CurveClass {
    pub fn new<I: IntoIterator<Item = i64>>(coeffs: I) -> Self {
        CurveClass(coeffs.into_iter().collect())
    }

    pub fn zero(rank: usize) -> Self {
        CurveClass(SmallVec::from_elem(0, rank))
    }

    /// The generator with index `k` (0 is `H'`, `i` is `E'_i`).
    pub fn unit(rank: usize, k: usize) -> Self {
        let mut c = Self::zero(rank);
        c.0[k] = 1;
        c
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> i64 {
        self.0[0]
    }

    /// `e_i(β)`, points numbered from 1.
    pub fn e(&self, i: usize) -> i64 {
        self.0[i]
    }

    /// `e(β) = Σ e_i`.
    pub fn e_total(&self) -> i64 {
        self.0[1..].iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn plus(&self, other: &Self) -> Self {
        CurveClass(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn minus(&self, other: &Self) -> Self {
        CurveClass(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn with(&self, k: usize, value: i64) -> Self {
        let mut c = self.clone();
        c.0[k] = value;
        c
    }

    /// `Some(i)` when the class is a positive multiple of the single generator `E'_i`.
    pub fn exceptional_multiple(&self) -> Option<usize> {
        if self.0[0] != 0 {
            return None;
        }
        let mut found = None;
        for (i, &c) in self.0.iter().enumerate().skip(1) {
            if c < 0 || (c > 0 && found.replace(i).is_some()) {
                return None;
            }
        }
        found
    }
}

impl fmt::Display for CurveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for CurveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

impl FromStr for CurveClass {
    type Err = GwError;

    fn from_str(s: &str) -> Result<Self> {
        let coeffs = s
            .split(',')
            .map(|c| c.trim().parse::<i64>())
            .collect::<std::result::Result<SmallVec<[i64; 4]>, _>>()
            .map_err(|_| GwError::InvalidCurveClass(format!("`{s}`")))?;
        if coeffs.is_empty() {
            return Err(GwError::InvalidCurveClass(format!("`{s}`")));
        }
        Ok(CurveClass(coeffs))
    }
}

/// Parse a curve class and check it has one coefficient per curve-basis generator.
pub fn parse_curve_class(t: &TargetData, s: &str) -> Result<CurveClass> {
    let c: CurveClass = s.parse()?;
    if c.rank() != t.curve_basis.len() {
        return Err(GwError::InvalidCurveClass(format!(
            "`{s}` (expected {} coefficients)",
            t.curve_basis.len()
        )));
    }
    Ok(c)
}

/// `D · β` for the basis divisor with index `divisor`.
pub fn divisor_pair_basis(t: &TargetData, divisor: usize, beta: &CurveClass) -> i64 {
    t.divisor_pairing[divisor]
        .iter()
        .zip(beta.coeffs())
        .map(|(p, c)| p * c)
        .sum()
}

pub fn divisor_pair(t: &TargetData, d: &CohClass, beta: &CurveClass) -> Result<Rational> {
    if d.homogeneous_codim(t) != Some(1) {
        return Err(GwError::NotADivisor);
    }
    let mut out = Rational::zero();
    for (i, q) in d.terms() {
        out += q * rat(divisor_pair_basis(t, i, beta));
    }
    Ok(out)
}

/// `-K · β`.
pub fn anticanonical_degree(t: &TargetData, beta: &CurveClass) -> i64 {
    let k = divisor_pair(t, &t.canonical, beta).expect("canonical class is a divisor");
    (-k).to_integer()
        .to_i64()
        .expect("canonical degree fits in i64")
}

/// Virtual dimension `-K·β + r + n - 3` of `n`-pointed genus-zero stable maps.
pub fn vdim(t: &TargetData, beta: &CurveClass, n: usize) -> i64 {
    anticanonical_degree(t, beta) + t.dim as i64 + n as i64 - 3
}

fn uses_point_rule(t: &TargetData) -> bool {
    t.points > 0 || t.strategy == Some(Strategy::Projective) || t.strategy == Some(Strategy::PointBlowup)
}

/// Cheap over-approximation of effectivity; `false` means every invariant in
/// the class vanishes.
pub fn is_candidate(t: &TargetData, beta: &CurveClass) -> bool {
    let d = beta.degree();
    let rest = &beta.coeffs()[1..];
    if uses_point_rule(t) {
        if d > 0 {
            rest.iter().all(|&e| e >= -d)
        } else {
            d == 0 && rest.iter().all(|&e| e >= 0) && rest.iter().any(|&e| e > 0)
        }
    } else {
        let b = rest.first().copied().unwrap_or(0);
        (d > 0 && b >= -d * t.secant_bound) || (d == 0 && b > 0)
    }
}

/// All ordered pairs `(β₁, β₂)` of nonzero candidate classes with
/// `β₁ + β₂ = β`, dropping degree-zero parts that are not a positive multiple
/// of a single `E'_i`.
pub fn enumerate_splits(t: &TargetData, beta: &CurveClass) -> Vec<(CurveClass, CurveClass)> {
    let d = beta.degree();
    let mut out = Vec::new();
    if d < 0 {
        return out;
    }
    let rank = beta.rank();
    let admissible = |c: &CurveClass| {
        !c.is_zero()
            && is_candidate(t, c)
            && (c.degree() != 0 || c.exceptional_multiple().is_some())
    };
    let point_rule = uses_point_rule(t);
    for d1 in 0..=d {
        let d2 = d - d1;
        let ranges: Vec<(i64, i64)> = (1..rank)
            .map(|i| {
                if point_rule {
                    (-d1, beta.e(i) + d2)
                } else {
                    let lo = if d1 > 0 { -d1 * t.secant_bound } else { 1 };
                    let hi = if d2 > 0 {
                        beta.e(i) + d2 * t.secant_bound
                    } else {
                        beta.e(i) - 1
                    };
                    (lo, hi)
                }
            })
            .collect();
        if ranges.iter().any(|(lo, hi)| lo > hi) {
            continue;
        }
        let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        'box_: loop {
            let b1 = CurveClass::new(std::iter::once(d1).chain(cur.iter().copied()));
            let b2 = beta.minus(&b1);
            if admissible(&b1) && admissible(&b2) {
                out.push((b1, b2));
            }
            let mut k = 0;
            loop {
                if k == cur.len() {
                    break 'box_;
                }
                cur[k] += 1;
                if cur[k] <= ranges[k].1 {
                    break;
                }
                cur[k] = ranges[k].0;
                k += 1;
            }
        }
    }
    out
}
