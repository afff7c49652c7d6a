//! Splitting-axiom relations and how to solve them for one unknown.

use std::fmt;

use indexmap::IndexMap;
use num_traits::Zero;
use smallvec::SmallVec;

use crate::engine::normalize::{normalize, required_weight, GwKey, Normalized, Outcome};
use crate::error::{GwError, Result};
use crate::homology::{anticanonical_degree, divisor_pair_basis, enumerate_splits, CurveClass};
use crate::ring::{rat, Rational, TargetData};

/// Multiset of basis classes, stored as `(index, multiplicity)` sorted by index.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Insertions(SmallVec<[(u16, u16); 6]>);

impl Insertions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        let mut out = Self::new();
        for i in it {
            out.add(i, 1);
        }
        out
    }

    pub fn add(&mut self, index: usize, mult: u32) {
        if mult == 0 {
            return;
        }
        let idx = index as u16;
        match self.0.binary_search_by_key(&idx, |e| e.0) {
            Ok(p) => self.0[p].1 += mult as u16,
            Err(p) => self.0.insert(p, (idx, mult as u16)),
        }
    }

    /// Remove one copy; `false` if the class is absent.
    pub fn remove_one(&mut self, index: usize) -> bool {
        let idx = index as u16;
        match self.0.binary_search_by_key(&idx, |e| e.0) {
            Ok(p) => {
                if self.0[p].1 == 1 {
                    self.0.remove(p);
                } else {
                    self.0[p].1 -= 1;
                }
                true
            }
            Err(_) => false,
        }
    }

    pub fn count(&self, index: usize) -> u32 {
        let idx = index as u16;
        self.0
            .binary_search_by_key(&idx, |e| e.0)
            .map(|p| self.0[p].1 as u32)
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0.iter().map(|&(i, m)| (i as usize, m as u32))
    }

    /// Every class repeated by its multiplicity, in index order.
    pub fn expanded(&self) -> impl Iterator<Item = usize> + '_ {
        self.iter()
            .flat_map(|(i, m)| std::iter::repeat_n(i, m as usize))
    }

    /// Total number of insertions.
    pub fn len(&self) -> usize {
        self.0.iter().map(|e| e.1 as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn distinct(&self) -> usize {
        self.0.len()
    }

    pub fn codim_sum(&self, t: &TargetData) -> usize {
        self.iter().map(|(i, m)| t.codim(i) * m as usize).sum()
    }

    /// `Σ (codim - 1)` over all insertions.
    pub fn weight(&self, t: &TargetData) -> i64 {
        self.iter()
            .map(|(i, m)| (t.codim(i) as i64 - 1) * m as i64)
            .sum()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, m) in other.iter() {
            out.add(i, m);
        }
        out
    }

    pub fn render(&self, t: &TargetData) -> String {
        if self.is_empty() {
            return "1".to_string();
        }
        self.iter()
            .map(|(i, m)| format!("{}^{}", t.class_name(i), m))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for Insertions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (i, m)) in self.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}^{m}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Insertions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

fn binomial(n: u32, k: u32) -> u64 {
    let k = k.min(n - k) as u64;
    let n = n as u64;
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Call `f(T1, T2, multiplicity)` for every ordered sub-multiset splitting of `t`.
pub fn for_each_distribution<F>(t: &Insertions, mut f: F)
where
    F: FnMut(&Insertions, &Insertions, u64),
{
    let entries: Vec<(usize, u32)> = t.iter().collect();
    let mut take = vec![0u32; entries.len()];
    loop {
        let mut t1 = Insertions::new();
        let mut t2 = Insertions::new();
        let mut mult = 1u64;
        for (&(i, m), &k) in entries.iter().zip(&take) {
            t1.add(i, k);
            t2.add(i, m - k);
            mult *= binomial(m, k);
        }
        f(&t1, &t2, mult);
        let mut p = 0;
        loop {
            if p == entries.len() {
                return;
            }
            take[p] += 1;
            if take[p] <= entries[p].1 {
                break;
            }
            take[p] = 0;
            p += 1;
        }
    }
}

/// All ordered sub-multiset splittings of `t` with their multiplicities.
pub fn distribute(t: &Insertions) -> Vec<(Insertions, Insertions, u64)> {
    let mut out = Vec::new();
    for_each_distribution(t, |a, b, m| out.push((a.clone(), b.clone(), m)));
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Factors {
    One(GwKey),
    Two(GwKey, GwKey),
}

/// One instantiated relation `E(β, T | μ₁,μ₂ | μ₃,μ₄)`:
/// `constant + Σ coeff · Π factors = 0`.
#[derive(Clone, Debug)]
pub struct Relation {
    pub beta: CurveClass,
    pub insertions: Insertions,
    pub mu: [usize; 4],
    pub constant: Rational,
    pub terms: IndexMap<Factors, Rational>,
}

impl Relation {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.constant.is_zero()
    }

    fn add_single(&mut self, coeff: Rational, n: Normalized) {
        if n.is_zero() || coeff.is_zero() {
            return;
        }
        let c = coeff * n.factor;
        match n.outcome {
            Outcome::Value(v) => self.constant += c * v,
            Outcome::Key(k) => self.add_term(Factors::One(k), c),
        }
    }

    fn add_pair(&mut self, coeff: Rational, a: Normalized, b: Normalized) {
        if a.is_zero() || b.is_zero() || coeff.is_zero() {
            return;
        }
        let c = coeff * a.factor * b.factor;
        match (a.outcome, b.outcome) {
            (Outcome::Value(x), Outcome::Value(y)) => self.constant += c * x * y,
            (Outcome::Value(x), Outcome::Key(k)) | (Outcome::Key(k), Outcome::Value(x)) => {
                self.add_term(Factors::One(k), c * x)
            }
            (Outcome::Key(x), Outcome::Key(y)) => {
                let f = if x <= y {
                    Factors::Two(x, y)
                } else {
                    Factors::Two(y, x)
                };
                self.add_term(f, c)
            }
        }
    }

    fn add_term(&mut self, f: Factors, c: Rational) {
        let entry = self.terms.entry(f).or_insert_with(Rational::zero);
        *entry += c;
    }

    /// Whether `key` appears in any term with a nonzero coefficient.
    pub fn mentions(&self, key: &GwKey) -> bool {
        self.terms.iter().any(|(f, c)| {
            !c.is_zero()
                && match f {
                    Factors::One(k) => k == key,
                    Factors::Two(a, b) => a == key || b == key,
                }
        })
    }
}

/// The part of a product term evaluated first: lower degree, then fewer classes.
fn evaluation_order<'a>(a: &'a GwKey, b: &'a GwKey) -> (&'a GwKey, &'a GwKey) {
    let rank = |k: &GwKey| (k.beta.degree(), k.classes.len());
    if rank(b) < rank(a) {
        (b, a)
    } else {
        (a, b)
    }
}

/// Instantiate the splitting-axiom relation. Divisor classes in `t_ins` are
/// removed first: each scales every term by the same `D·β`, so the relation
/// without them is equivalent unless some `D·β` vanishes, in which case the
/// relation is trivial.
pub fn build_relation(
    t: &TargetData,
    beta: &CurveClass,
    t_ins: &Insertions,
    mu: [usize; 4],
) -> Result<Relation> {
    let have = t_ins.codim_sum(t) as i64 + mu.iter().map(|&m| t.codim(m) as i64).sum::<i64>();
    let need = anticanonical_degree(t, beta) + t.dim as i64 + t_ins.len() as i64;
    if have != need {
        return Err(GwError::Balance { have, need });
    }
    let mut rel = Relation {
        beta: beta.clone(),
        insertions: t_ins.clone(),
        mu,
        constant: Rational::zero(),
        terms: IndexMap::new(),
    };
    let mut rest = Insertions::new();
    for (c, m) in t_ins.iter() {
        if t.codim(c) == 1 {
            if divisor_pair_basis(t, c, beta) == 0 {
                return Ok(rel);
            }
        } else {
            rest.add(c, m);
        }
    }
    let [m1, m2, m3, m4] = mu;

    let explicit: [(i64, usize, usize, usize, usize); 4] = [
        (1, m1, m2, m3, m4),
        (1, m3, m4, m1, m2),
        (-1, m1, m3, m2, m4),
        (-1, m2, m4, m1, m3),
    ];
    // sign * GW_β(T ⊗ a ⊗ b ⊗ (x·y))
    for (sign, a, b, x, y) in explicit {
        for (k, q) in t.product_basis(x, y).terms() {
            let n = normalize(t, beta, rest.expanded().chain([a, b, k]));
            rel.add_single(rat(sign) * q, n);
        }
    }

    let r = t.dim as i64;
    let rest_weight = rest.weight(t);
    for (b1, b2) in enumerate_splits(t, beta) {
        let need1 = required_weight(t, &b1);
        for_each_distribution(&rest, |t1, t2, mult| {
            let w1 = t1.weight(t);
            debug_assert_eq!(w1 + t2.weight(t), rest_weight);
            for (sign, (a, b), (c, d)) in [(1i64, (m1, m2), (m3, m4)), (-1, (m1, m3), (m2, m4))] {
                let base = w1 + t.codim(a) as i64 + t.codim(b) as i64 - 2;
                let ci = need1 - base + 1;
                if ci < 1 || ci > r - 1 {
                    continue;
                }
                for i in 0..t.len() {
                    if t.codim(i) as i64 != ci {
                        continue;
                    }
                    let left = normalize(t, &b1, t1.expanded().chain([a, b, i]));
                    if left.is_zero() {
                        continue;
                    }
                    for (j, g) in t.dual(i) {
                        let right = normalize(t, &b2, t2.expanded().chain([*j, c, d]));
                        rel.add_pair(rat(sign) * rat(mult as i64) * g, left.clone(), right);
                    }
                }
            }
        });
    }
    Ok(rel)
}

/// Solve `rel` for `target`, evaluating every other invariant with `oracle`.
/// Co-factors of the target are evaluated before anything else.
pub fn solve_for(
    rel: &Relation,
    target: &GwKey,
    oracle: &mut dyn FnMut(&GwKey) -> Result<Rational>,
) -> Result<Rational> {
    let mut coeff = Rational::zero();
    for (f, c) in &rel.terms {
        match f {
            Factors::One(k) if k == target => coeff += c,
            Factors::Two(a, b) if a == target && b == target => {
                return Err(GwError::ZeroCoefficient(format!(
                    "{target} appears squared in the relation"
                )))
            }
            Factors::Two(a, b) if a == target => coeff += c * oracle(b)?,
            Factors::Two(a, b) if b == target => coeff += c * oracle(a)?,
            _ => {}
        }
    }
    if coeff.is_zero() {
        return Err(GwError::ZeroCoefficient(target.to_string()));
    }
    let mut rest = rel.constant.clone();
    for (f, c) in &rel.terms {
        match f {
            Factors::One(k) => {
                if k != target {
                    rest += c * oracle(k)?;
                }
            }
            Factors::Two(a, b) => {
                if a == target || b == target {
                    continue;
                }
                let (first, second) = evaluation_order(a, b);
                let v = oracle(first)?;
                if v.is_zero() {
                    continue;
                }
                rest += c * v * oracle(second)?;
            }
        }
    }
    Ok(-rest / coeff)
}

/// Value of the relation's left-hand side with every invariant supplied by `oracle`.
pub fn residual(rel: &Relation, oracle: &mut dyn FnMut(&GwKey) -> Result<Rational>) -> Result<Rational> {
    let mut total = rel.constant.clone();
    for (f, c) in &rel.terms {
        match f {
            Factors::One(k) => total += c * oracle(k)?,
            Factors::Two(a, b) => {
                let (first, second) = evaluation_order(a, b);
                let v = oracle(first)?;
                if !v.is_zero() {
                    total += c * v * oracle(second)?;
                }
            }
        }
    }
    Ok(total)
}

/// The multiplicity-weighted count of labelled distributions: `2^n`.
pub fn total_multiplicity(t: &Insertions) -> u64 {
    let mut total = 0u64;
    for_each_distribution(t, |_, _, m| total += m);
    total
}
