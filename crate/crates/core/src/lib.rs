//! Landau-Zener transitions under partial counterdiabatic driving.

pub mod cuts;
pub mod ddp;
pub mod error;
pub mod field;
pub mod integrability;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod quadrature;
pub mod sweep;
pub mod tdse;
pub mod verify;

pub use error::{Error, Result};
pub use model::{AdiabaticParams, ComplexPoint};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/propagation.md")]
    mod propagation {}
    #[doc = include_str!("../../../book/src/phase-integrals.md")]
    mod phase_integrals {}
    #[doc = include_str!("../../../book/src/delta-field.md")]
    mod delta_field {}
    #[doc = include_str!("../../../book/src/flatness.md")]
    mod flatness {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
