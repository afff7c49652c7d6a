//! Exact genus-zero Gromov-Witten invariants of projective space blown up at
//! points, and of targets described by a loadable intersection ring.

pub mod derived;
pub mod engine;
pub mod error;
pub mod homology;
pub mod ring;
pub mod verify;
pub mod wdvv;

pub use engine::{Engine, EngineOptions, GwKey};
pub use error::{GwError, Result};
pub use homology::CurveClass;
pub use ring::{CohClass, Rational, TargetData};
pub use wdvv::Insertions;
