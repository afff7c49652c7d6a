//! Recursion on `P^r(s)`: keys induced from `P^r`, purely exceptional
//! classes, and the three relation choices for everything else.

use num_traits::Zero;

use super::normalize::exceptional_weight;
use super::{Ctx, Engine, GwKey};
use crate::error::{GwError, Result};
use crate::homology::CurveClass;
use crate::ring::{rat, ClassKind, Rational, TargetData};
use crate::wdvv::Insertions;

pub fn compute(engine: &Engine, key: &GwKey, ctx: &mut Ctx) -> Result<Rational> {
    let t = engine.target();
    if engine.options().vanishing_fast_path && vanishing_certificate(t, &key.beta, &key.classes).is_some() {
        return Ok(Rational::zero());
    }
    if key.beta.degree() == 0 {
        return purely_exceptional(engine, key, ctx);
    }
    if let Some(base_key) = induced_key(engine, key) {
        let base = engine.base().expect("blow-up engines have a base");
        return base.value(&base_key);
    }
    let sel = select_equation(t, key)?;
    engine.solve(&sel.beta, &sel.insertions, sel.mu, key, ctx)
}

/// Keys with `e_i(β) = 0` for all `i` and only pulled-back classes equal the
/// corresponding invariant of `P^r`.
fn induced_key(engine: &Engine, key: &GwKey) -> Option<GwKey> {
    if key.beta.coeffs()[1..].iter().any(|&e| e != 0) {
        return None;
    }
    engine.to_base_key(key)
}

/// Index `i` such that some `e_i(β)`-style certificate proves the key vanishes.
pub fn vanishing_certificate(t: &TargetData, beta: &CurveClass, classes: &Insertions) -> Option<usize> {
    let d = beta.degree();
    if d == 0 || t.points == 0 {
        return None;
    }
    let r = t.dim as i64;
    (1..=t.points).find(|&i| {
        let w = exceptional_weight(t, classes, i);
        let e = beta.e(i);
        (w > 0 || e > 0) && w < (e + 1) * (r - 1)
    })
}

fn purely_exceptional(engine: &Engine, key: &GwKey, ctx: &mut Ctx) -> Result<Rational> {
    let t = engine.target();
    let Some(point) = key.beta.exceptional_multiple() else {
        return Ok(Rational::zero());
    };
    let supported = key.classes.iter().all(|(c, _)| {
        matches!(t.kind(c), ClassKind::Exceptional { point: p, .. } if p == point)
    });
    if !supported {
        return Ok(Rational::zero());
    }
    let d = key.beta.e(point);
    let r = t.dim;
    if key.classes.len() <= 2 {
        if d != 1 {
            return Ok(Rational::zero());
        }
        // GW_{E'}(E^{r-1} ⊗ E^{r-1}) = 1, whatever normal form it takes.
        let top = t.exceptional_index(point, r - 1).expect("exceptional classes exist");
        let base = super::normalize(t, &key.beta, [top, top]);
        return Ok(match &base.outcome {
            super::Outcome::Key(k) if k == key => rat(1) / base.factor,
            _ => Rational::zero(),
        });
    }
    let mut rest = key.classes.clone();
    let low = rest.iter().next().map(|(c, _)| c).expect("nonempty");
    rest.remove_one(low);
    let hb = rest.iter().last().map(|(c, _)| c).expect("three classes");
    rest.remove_one(hb);
    let ha = rest.iter().last().map(|(c, _)| c).expect("three classes");
    rest.remove_one(ha);
    let ClassKind::Exceptional { power, .. } = t.kind(low) else {
        unreachable!("support was checked")
    };
    let c = t.exceptional_index(point, power - 1).expect("lower power exists");
    let e = t.exceptional_index(point, 1).expect("exceptional divisor");
    engine.solve(&key.beta, &rest, [ha, hb, c, e], key, ctx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    A,
    B,
    C,
}

/// The relation chosen for a key with `d(β) != 0` that is not induced from `P^r`.
#[derive(Clone, Debug)]
pub struct Selection {
    pub case: Case,
    pub point: usize,
    pub beta: CurveClass,
    pub insertions: Insertions,
    pub mu: [usize; 4],
}

/// Key classes plus copies of `H` until the pulled-back classes reach total
/// codimension `r + 1`.
pub fn padded(t: &TargetData, classes: &Insertions) -> Insertions {
    let h = t.ambient_index(1).expect("hyperplane class");
    let mut out = classes.clone();
    let ambient: usize = classes
        .iter()
        .filter(|(c, _)| t.kind(*c).is_ambient())
        .map(|(c, m)| t.codim(c) * m as usize)
        .sum();
    if ambient < t.dim + 1 {
        out.add(h, (t.dim + 1 - ambient) as u32);
    }
    out
}

/// Pulled-back classes of `w`, largest codimension first, ties by basis index.
fn ambient_sorted(t: &TargetData, w: &Insertions) -> Vec<usize> {
    let mut v: Vec<usize> = w
        .expanded()
        .filter(|&c| t.kind(c).is_ambient())
        .collect();
    v.sort_by(|&a, &b| t.codim(b).cmp(&t.codim(a)).then(a.cmp(&b)));
    v
}

pub fn select_equation(t: &TargetData, key: &GwKey) -> Result<Selection> {
    let w = padded(t, &key.classes);
    let ambient = ambient_sorted(t, &w);
    let (j1, j2) = (ambient[0], ambient[1]);
    let exceptional = w
        .iter()
        .filter_map(|(c, _)| match t.kind(c) {
            ClassKind::Exceptional { point, power } => Some((c, point, power)),
            _ => None,
        })
        .last();
    let mut rest = w.clone();
    rest.remove_one(j1);
    rest.remove_one(j2);
    let r = t.dim;
    if let Some((c, point, power)) = exceptional {
        rest.remove_one(c);
        let e = t.exceptional_index(point, 1).expect("exceptional divisor");
        let lower = t.exceptional_index(point, power - 1).expect("lower power");
        return Ok(Selection {
            case: Case::A,
            point,
            beta: key.beta.clone(),
            insertions: rest,
            mu: [j1, j2, e, lower],
        });
    }
    let point = (1..=t.points).find(|&i| key.beta.e(i) != 0).ok_or_else(|| {
        GwError::Unsupported(format!("{key} has no exceptional data to recurse on"))
    })?;
    let e = t.exceptional_index(point, 1).expect("exceptional divisor");
    if j1 == t.pt_index() && t.codim(j2) >= 2 {
        let h = t.ambient_index(1).expect("hyperplane class");
        let hr = t.ambient_index(r - 1).expect("codimension r-1 class");
        return Ok(Selection {
            case: Case::B,
            point,
            beta: key.beta.clone(),
            insertions: rest,
            mu: [h, hr, e, j2],
        });
    }
    let top = t.exceptional_index(point, r - 1).expect("top exceptional power");
    let beta = key.beta.plus(&CurveClass::unit(key.beta.rank(), point));
    Ok(Selection {
        case: Case::C,
        point,
        beta,
        insertions: rest,
        mu: [j1, j2, e, top],
    })
}

/// Lexicographic termination measure `(d, v, e)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct OrderRank {
    pub d: i64,
    pub v: i64,
    pub e: i64,
}

pub fn order_rank(t: &TargetData, beta: &CurveClass, classes: &Insertions) -> OrderRank {
    let w = padded(t, classes);
    let mut total = 0;
    let mut v = 0;
    for c in ambient_sorted(t, &w) {
        if total > t.dim {
            break;
        }
        total += t.codim(c);
        v += 1;
    }
    OrderRank {
        d: beta.degree(),
        v,
        e: beta.e_total(),
    }
}
