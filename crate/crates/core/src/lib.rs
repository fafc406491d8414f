//! Spectral toolkit for penta-diagonal operators whose bands converge along
//! odd and even indices.

/// Library version recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod coeffs;
pub mod conditions;
pub mod eigensolve;
pub mod error;
pub mod operators;
pub mod oracle;
pub mod recurrence;
pub mod spectra;

pub use coeffs::{Band, BandKind, BandSpec, CoefficientModel, LimitProfile, Parity};
pub use eigensolve::{discrete_spectrum, DiscreteSpectrum, EigenvalueRecord, Rect, SearchOptions, Side};
pub use error::{Error, Result};
pub use operators::{BandOperator, FiniteSection, SpaceOrder};
pub use recurrence::Chain;
pub use spectra::{Interval, SpectralPoint, SpectralSet};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/essential.md")]
    mod essential {}
    #[doc = include_str!("../../../book/src/recurrences.md")]
    mod recurrences {}
    #[doc = include_str!("../../../book/src/eigenvalues.md")]
    mod eigenvalues {}
    #[doc = include_str!("../../../book/src/conditions.md")]
    mod conditions {}
    #[doc = include_str!("../../../book/src/fine-spectrum.md")]
    mod fine_spectrum {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
