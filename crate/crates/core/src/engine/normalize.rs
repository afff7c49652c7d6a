use std::fmt;

use num_traits::Zero;

use crate::homology::{anticanonical_degree, divisor_pair_basis, is_candidate, CurveClass};
use crate::ring::{rat, ClassKind, Rational, TargetData};
use crate::wdvv::Insertions;

/// Canonical memo key: a curve class and a sorted multiset of non-divisor
/// classes whose weights match the virtual dimension. Every key belongs to
/// the memo of exactly one target.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GwKey {
    pub beta: CurveClass,
    pub classes: Insertions,
}

impl GwKey {
    pub fn new(beta: CurveClass, classes: Insertions) -> Self {
        GwKey { beta, classes }
    }
}

impl fmt::Display for GwKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GW[{}]({})", self.beta, self.classes)
    }
}

impl fmt::Debug for GwKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Value(Rational),
    Key(GwKey),
}

/// `factor * outcome` equals the invariant that was normalized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Normalized {
    pub factor: Rational,
    pub outcome: Outcome,
}

impl Normalized {
    pub fn zero() -> Self {
        Normalized {
            factor: Rational::zero(),
            outcome: Outcome::Value(Rational::zero()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.factor.is_zero() || matches!(&self.outcome, Outcome::Value(v) if v.is_zero())
    }
}

/// `Σ (codim - 1)` that a dimension-matched insertion list must reach.
pub fn required_weight(t: &TargetData, beta: &CurveClass) -> i64 {
    anticanonical_degree(t, beta) + t.dim as i64 - 3
}

/// Apply, in order: the fundamental-class axiom, the degree-zero axiom, the
/// dimension check, the divisor axiom and the candidate filter.
pub fn normalize<I>(t: &TargetData, beta: &CurveClass, classes: I) -> Normalized
where
    I: IntoIterator<Item = usize>,
{
    let classes: smallvec::SmallVec<[usize; 16]> = classes.into_iter().collect();
    if beta.is_zero() {
        if classes.len() != 3 {
            return Normalized::zero();
        }
        return Normalized {
            factor: rat(1),
            outcome: Outcome::Value(t.triple_product_basis(classes[0], classes[1], classes[2])),
        };
    }
    let mut weight = 0i64;
    for &c in &classes {
        let codim = t.codim(c);
        if codim == 0 {
            return Normalized::zero();
        }
        weight += codim as i64 - 1;
    }
    if weight != required_weight(t, beta) {
        return Normalized::zero();
    }
    let mut factor = 1i64;
    let mut kept = Insertions::new();
    for &c in &classes {
        if t.codim(c) == 1 {
            factor *= divisor_pair_basis(t, c, beta);
            if factor == 0 {
                return Normalized::zero();
            }
        } else {
            kept.add(c, 1);
        }
    }
    if !is_candidate(t, beta) {
        return Normalized::zero();
    }
    Normalized {
        factor: rat(factor),
        outcome: Outcome::Key(GwKey::new(beta.clone(), kept)),
    }
}

/// `w_i(T) = Σ (k - 1)` over the classes `E_i^k` of `T`.
pub fn exceptional_weight(t: &TargetData, classes: &Insertions, point: usize) -> i64 {
    classes
        .iter()
        .map(|(c, m)| match t.kind(c) {
            ClassKind::Exceptional { point: p, power } if p == point => {
                (power as i64 - 1) * m as i64
            }
            _ => 0,
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::build_blowup_point_ring;

    #[test]
    fn divisor_is_stripped_with_its_degree() {
        let t = build_blowup_point_ring(2, 0);
        let h = t.resolve_class("H").unwrap();
        let pt = t.pt_index();
        let beta = CurveClass::new([2]);
        let n = normalize(&t, &beta, [h, pt, pt, pt, pt, pt]);
        let mut five = Insertions::new();
        five.add(pt, 5);
        assert_eq!(n.factor, rat(2));
        assert_eq!(n.outcome, Outcome::Key(GwKey::new(beta, five)));
    }

    #[test]
    fn fundamental_class_kills_nonzero_classes() {
        let t = build_blowup_point_ring(2, 0);
        let pt = t.pt_index();
        let n = normalize(&t, &CurveClass::new([1]), [0, pt, pt]);
        assert!(n.is_zero());
    }

    #[test]
    fn non_candidate_is_zero() {
        let t = build_blowup_point_ring(3, 2);
        let pt = t.pt_index();
        let n = normalize(&t, &CurveClass::new([3, -4, 0]), std::iter::repeat_n(pt, 2));
        assert!(n.is_zero());
    }

    #[test]
    fn degree_zero_three_point_is_triple_product() {
        let t = build_blowup_point_ring(3, 1);
        let e = t.resolve_class("E1").unwrap();
        let n = normalize(&t, &CurveClass::new([0, 0]), [e, e, e]);
        assert_eq!(n.factor * match n.outcome {
            Outcome::Value(v) => v,
            _ => panic!(),
        }, rat(1));
    }
}
