//! Recursions for `P^3` blown up along a curve and `P^4` blown up along an
//! abelian surface. Classes are `aH' + bE'`; seeds cover `a = 0` and `β = H'`,
//! and every other key with `a = 1` is reached by raising `b` towards 0.

use num_traits::Zero;

use super::{Ctx, Engine, GwKey};
use crate::error::{GwError, Result};
use crate::ring::{Rational, TargetData};

fn class(t: &TargetData, name: &str) -> Result<usize> {
    t.index_of(name)
        .ok_or_else(|| GwError::UnknownClass(format!("{name} (required by the {} strategy)", t.name)))
}

/// `Some(value)` for keys inside the seeded region.
fn seeded_region(key: &GwKey) -> Option<Rational> {
    let (a, b) = (key.beta.coeffs()[0], key.beta.coeffs()[1]);
    (a == 0 || (a == 1 && b == 0)).then(Rational::zero)
}

fn unsupported(key: &GwKey) -> GwError {
    GwError::Unsupported(format!("{key} is outside the reach of the recursion"))
}

pub fn curve_secant(engine: &Engine, key: &GwKey, ctx: &mut Ctx) -> Result<Rational> {
    if let Some(v) = seeded_region(key) {
        return Ok(v);
    }
    let t = engine.target();
    let (a, b) = (key.beta.coeffs()[0], key.beta.coeffs()[1]);
    if a != 1 || b > 0 {
        return Err(unsupported(key));
    }
    let (h, e, f) = (class(t, "H")?, class(t, "E")?, class(t, "F")?);
    let beta = key.beta.with(1, b + 1);
    let alpha = key.classes.count(f) as i64;
    if alpha + b != 0 {
        engine.solve(&beta, &key.classes, [h, h, e, e], key, ctx)
    } else {
        let mut rest = key.classes.clone();
        rest.remove_one(f);
        engine.solve(&beta, &rest, [h, h, e, f], key, ctx)
    }
}

pub fn abelian_surface(engine: &Engine, key: &GwKey, ctx: &mut Ctx) -> Result<Rational> {
    if let Some(v) = seeded_region(key) {
        return Ok(v);
    }
    let t = engine.target();
    let (a, b) = (key.beta.coeffs()[0], key.beta.coeffs()[1]);
    if a != 1 || b > 0 {
        return Err(unsupported(key));
    }
    let (h, e, f, gamma) = (class(t, "H")?, class(t, "E")?, class(t, "F")?, class(t, "gamma")?);
    let beta = key.beta.with(1, b + 1);
    let mut rest = key.classes.clone();
    if rest.remove_one(f) {
        engine.solve(&beta, &rest, [h, h, e, f], key, ctx)
    } else if rest.remove_one(gamma) {
        engine.solve(&beta, &rest, [h, h, gamma, e], key, ctx)
    } else {
        engine.solve(&beta, &rest, [h, h, e, e], key, ctx)
    }
}
