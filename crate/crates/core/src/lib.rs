//! Weighted elliptic theory on half-cylinders and the full cylinder, in
//! Fourier form over a discrete link spectrum.

pub mod bootstrap;
pub mod diff;
pub mod error;
pub mod field;
pub mod green;
pub mod hardy;
pub mod index;
pub mod inverse;
pub mod jacobi;
pub mod ode;
pub mod operator;
pub mod quad;
pub mod spectrum;
pub mod tail;

pub use error::{Error, Result};
pub use operator::{IndicialRoot, RootKind, TidOperator, WeightClass, WeightSpec};
pub use spectrum::{EigenMode, LinkSpectrum, SpectrumSource};
pub use tail::Tail;
pub use field::{CylField, GraphNorms, Strip, TimeGrid};
pub use green::{BSide, Kernel, ModeCase, ModeSolution};
pub use inverse::{InverseHandle, PerturbationKind, PerturbationSpec, SeriesReport, Slot};
pub use index::{EndWeights, EtaResult, IndexReport};
pub use bootstrap::{BootstrapRun, DecayFit, Seed};
pub use hardy::{HardyCase, HardyVariant, TestFunction};
