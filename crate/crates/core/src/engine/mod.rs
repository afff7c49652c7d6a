//! The memoized invariant oracle.

pub mod blowup;
pub mod cache;
pub mod normalize;
pub mod projective;
pub mod scripted;

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use dashmap::mapref::entry::Entry;
use dashmap::DashMap;
use num_traits::Zero;

use crate::error::{GwError, Result};
use crate::homology::CurveClass;
use crate::ring::{build_blowup_point_ring, rat, ClassKind, CohClass, Rational, Strategy, TargetData};
use crate::wdvv::{build_relation, solve_for, Insertions, Relation};

pub use normalize::{normalize, GwKey, Normalized, Outcome};

#[derive(Clone, Copy, Debug, Default)]
pub struct EngineOptions {
    /// Return 0 without recursing for keys carrying a vanishing certificate.
    pub vanishing_fast_path: bool,
}

/// Per-call-stack state: the keys currently being computed.
#[derive(Default)]
pub struct Ctx {
    stack: HashSet<GwKey>,
}

impl Ctx {
    pub fn new() -> Self {
        Self::default()
    }
}

pub struct Engine {
    target: Arc<TargetData>,
    memo: DashMap<GwKey, Rational>,
    seeds: HashMap<GwKey, Rational>,
    base: Option<Arc<Engine>>,
    options: EngineOptions,
    computed: AtomicU64,
}

impl Engine {
    pub fn new(target: TargetData) -> Result<Self> {
        Self::with_options(target, EngineOptions::default())
    }

    pub fn with_options(target: TargetData, options: EngineOptions) -> Result<Self> {
        let base = if target.points > 0 {
            Some(Arc::new(Engine::with_options(
                build_blowup_point_ring(target.dim, 0),
                options,
            )?))
        } else {
            None
        };
        let mut seeds = HashMap::new();
        for s in &target.seeds {
            let n = normalize(&target, &s.beta, s.classes.expanded());
            match n.outcome {
                Outcome::Key(k) if !n.factor.is_zero() => {
                    let v = &s.value / &n.factor;
                    if let Some(prev) = seeds.insert(k.clone(), v.clone()) {
                        if prev != v {
                            return Err(GwError::Inconsistent(format!(
                                "seeds disagree on {k}: {prev} vs {v}"
                            )));
                        }
                    }
                }
                _ => {
                    if !s.value.is_zero() {
                        return Err(GwError::Inconsistent(format!(
                            "seed {}|{} is forced to vanish but has value {}",
                            s.beta, s.classes, s.value
                        )));
                    }
                }
            }
        }
        Ok(Engine {
            target: Arc::new(target),
            memo: DashMap::new(),
            seeds,
            base,
            options,
            computed: AtomicU64::new(0),
        })
    }

    /// Engine for `P^r` blown up at `s` points.
    pub fn blowup(r: usize, s: usize) -> Self {
        Self::new(build_blowup_point_ring(r, s)).expect("point blow-up rings carry no seeds")
    }

    pub fn target(&self) -> &TargetData {
        &self.target
    }

    pub fn base(&self) -> Option<&Engine> {
        self.base.as_deref()
    }

    pub fn options(&self) -> EngineOptions {
        self.options
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    /// Number of keys computed (not looked up) by this engine.
    pub fn computed(&self) -> u64 {
        self.computed.load(Ordering::Relaxed)
    }

    pub fn memo_snapshot(&self) -> Vec<(GwKey, Rational)> {
        let mut out: Vec<_> = self
            .memo
            .iter()
            .map(|e| (e.key().clone(), e.value().clone()))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Record a value; a different value already stored for the key is an error.
    pub fn store(&self, key: GwKey, value: Rational) -> Result<()> {
        match self.memo.entry(key) {
            Entry::Occupied(e) => {
                if e.get() != &value {
                    return Err(GwError::Conflict {
                        key: e.key().to_string(),
                        stored: e.get().to_string(),
                        computed: value.to_string(),
                    });
                }
            }
            Entry::Vacant(e) => {
                e.insert(value);
            }
        }
        Ok(())
    }

    pub fn lookup(&self, key: &GwKey) -> Option<Rational> {
        self.memo.get(key).map(|v| v.clone())
    }

    /// `GW_β(γ₁ ⊗ … ⊗ γ_n)`, multilinear in the insertions.
    pub fn gw(&self, beta: &CurveClass, insertions: &[CohClass]) -> Result<Rational> {
        if beta.rank() != self.target.curve_basis.len() {
            return Err(GwError::InvalidCurveClass(format!(
                "`{beta}` (expected {} coefficients)",
                self.target.curve_basis.len()
            )));
        }
        let mut total = Rational::zero();
        let mut idx = vec![0usize; insertions.len()];
        let terms: Vec<Vec<(usize, Rational)>> = insertions
            .iter()
            .map(|c| c.terms().map(|(i, q)| (i, q.clone())).collect())
            .collect();
        if terms.iter().any(|t| t.is_empty()) {
            return Ok(total);
        }
        let mut ctx = Ctx::new();
        loop {
            let mut coeff = rat(1);
            for (t, &k) in terms.iter().zip(&idx) {
                coeff *= &t[k].1;
            }
            let classes = terms.iter().zip(&idx).map(|(t, &k)| t[k].0);
            total += coeff * self.eval(normalize(&self.target, beta, classes), &mut ctx)?;
            let mut p = 0;
            loop {
                if p == idx.len() {
                    return Ok(total);
                }
                idx[p] += 1;
                if idx[p] < terms[p].len() {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
    }

    /// Invariant with basis-class insertions.
    pub fn gw_basis(&self, beta: &CurveClass, classes: &[usize]) -> Result<Rational> {
        let n = normalize(&self.target, beta, classes.iter().copied());
        self.eval(n, &mut Ctx::new())
    }

    pub fn eval(&self, n: Normalized, ctx: &mut Ctx) -> Result<Rational> {
        if n.factor.is_zero() {
            return Ok(Rational::zero());
        }
        match n.outcome {
            Outcome::Value(v) => Ok(n.factor * v),
            Outcome::Key(k) => Ok(n.factor * self.value_in(&k, ctx)?),
        }
    }

    /// Value of a normalized key.
    pub fn value(&self, key: &GwKey) -> Result<Rational> {
        self.value_in(key, &mut Ctx::new())
    }

    pub fn value_in(&self, key: &GwKey, ctx: &mut Ctx) -> Result<Rational> {
        if let Some(v) = self.memo.get(key) {
            return Ok(v.clone());
        }
        if !ctx.stack.insert(key.clone()) {
            return Err(GwError::Cycle(key.to_string()));
        }
        let result = stacker::maybe_grow(256 * 1024, 8 * 1024 * 1024, || self.compute(key, ctx));
        ctx.stack.remove(key);
        let v = result?;
        self.computed.fetch_add(1, Ordering::Relaxed);
        self.store(key.clone(), v.clone())?;
        Ok(v)
    }

    fn compute(&self, key: &GwKey, ctx: &mut Ctx) -> Result<Rational> {
        if let Some(v) = self.seeds.get(key) {
            return Ok(v.clone());
        }
        match self.target.strategy {
            Some(Strategy::Projective) => projective::compute(self, key, ctx),
            Some(Strategy::PointBlowup) => blowup::compute(self, key, ctx),
            Some(Strategy::CurveSecant) => scripted::curve_secant(self, key, ctx),
            Some(Strategy::AbelianSurface) => scripted::abelian_surface(self, key, ctx),
            None => Err(GwError::Unsupported(format!(
                "target {} declares no recursion strategy",
                self.target.name
            ))),
        }
    }

    /// Build `E(β, T | μ)` and solve it for `target`.
    pub fn solve(
        &self,
        beta: &CurveClass,
        insertions: &Insertions,
        mu: [usize; 4],
        target: &GwKey,
        ctx: &mut Ctx,
    ) -> Result<Rational> {
        let rel = build_relation(&self.target, beta, insertions, mu)?;
        solve_for(&rel, target, &mut |k| self.value_in(k, ctx))
    }

    pub fn relation(&self, beta: &CurveClass, insertions: &Insertions, mu: [usize; 4]) -> Result<Relation> {
        build_relation(&self.target, beta, insertions, mu)
    }

    /// Map a key whose classes are all pulled back from `P^r` to the base engine's key.
    pub(crate) fn to_base_key(&self, key: &GwKey) -> Option<GwKey> {
        let base = self.base.as_ref()?;
        let mut classes = Insertions::new();
        for (c, m) in key.classes.iter() {
            match self.target.kind(c) {
                ClassKind::Ambient(k) => classes.add(base.target.ambient_index(k)?, m),
                _ => return None,
            }
        }
        Some(GwKey::new(CurveClass::new([key.beta.degree()]), classes))
    }
}
