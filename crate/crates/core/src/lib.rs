//! Stability analysis and simulation of diffusive multilayer consensus
//! networks with a repeated agent-to-agent interaction pattern and two
//! constant delays: `tau1` on intra-layer couplings and `tau2` on
//! cross-layer couplings.
//!
//! The stacked dynamics of `n` agents with `d`-dimensional states are
//!
//! ```text
//! x'(t) = -(L ⊗ I_d) x(t - tau1) - (L ⊗ A_cross) x(t - tau2)
//! ```
//!
//! where `L` is the graph Laplacian and `A_cross` is the interaction
//! pattern with its unit diagonal removed.
//!
//! - [`graph`]: network graph, Laplacian and its spectrum.
//! - [`pattern`]: interaction pattern and the spectral quantities of `A_cross`.
//! - [`stability`]: closed-form consensus conditions and delay margins.
//! - [`quasipoly`]: characteristic quasi-polynomial root scanner, used as an
//!   independent oracle for the margins.
//! - [`sim`]: fixed-step RK4 integration of the delayed network.
//! - [`exec`]: sequential/parallel execution of independent batch work.

pub mod error;
pub mod exec;
pub mod graph;
pub mod pattern;
pub mod quasipoly;
pub mod sim;
pub mod stability;

pub use error::{Error, Result};
pub use exec::Exec;
pub use graph::{Graph, LaplacianSpectrum};
pub use num_complex::Complex64;
pub use pattern::{InteractionPattern, PatternSpectrum};
pub use quasipoly::{CharInstance, OracleReport, RootScanResult};
pub use sim::{Classification, History, SimConfig, Trajectory};
pub use stability::{DelayPair, Justification, MarginReport, TwoLayerReport, Verdict};
