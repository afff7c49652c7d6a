//! Reconstruction on `P^r` from the single line count `GW_1(pt, pt) = 1`.

use num_traits::Zero;

use super::{Ctx, Engine, GwKey};
use crate::error::Result;
use crate::ring::{rat, Rational};

pub fn compute(engine: &Engine, key: &GwKey, ctx: &mut Ctx) -> Result<Rational> {
    let t = engine.target();
    let d = key.beta.degree();
    let n = key.classes.len();
    if n <= 2 {
        let pt = t.pt_index();
        let v = d == 1 && key.classes.count(pt) == 2;
        return Ok(if v { rat(1) } else { Rational::zero() });
    }
    // Every class is H^k with k >= 2; basis index k is H^k.
    let mut rest = key.classes.clone();
    let low = rest.iter().next().map(|(c, _)| c).expect("nonempty");
    rest.remove_one(low);
    let hb = rest.iter().last().map(|(c, _)| c).expect("three classes");
    rest.remove_one(hb);
    let ha = rest.iter().last().map(|(c, _)| c).expect("three classes");
    rest.remove_one(ha);
    let c = t.ambient_index(t.codim(low) - 1).expect("lower power exists");
    let h = t.ambient_index(1).expect("hyperplane class");
    // GW(rest ⊗ H^a ⊗ H^b ⊗ H^c·H) is the leading explicit term.
    engine.solve(&key.beta, &rest, [ha, hb, c, h], key, ctx)
}
