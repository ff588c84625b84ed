//! Spectral Galerkin simulation of stochastic reaction-diffusion equations on an
//! interval with Dirichlet conditions, polynomial drifts and trace-class noise,
//! together with checks of the coercivity and growth hypotheses and Monte Carlo
//! probes of the moment, energy and continuity bounds they imply.

pub mod basis;
pub mod error;
pub mod integrate;
pub mod model;
pub mod noise;
pub mod poly;
pub mod probe;
pub mod serde_ext;

pub use basis::{Field, SpectralBasis};
pub use error::{Error, Result};
pub use integrate::{PathResult, Scheme, StepperConfig};
pub use model::{HypothesisCertificate, PolyModel, Verdict};
pub use noise::{NoiseFamily, NoiseSpec, RngStream};
