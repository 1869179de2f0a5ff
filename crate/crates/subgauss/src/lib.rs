//! Numerical laboratory for sub-Gaussian heat-kernel upper bounds on
//! weighted graphs.
//!
//! The crate builds pre-fractal graphs (Sierpinski gasket, Vicsek cross,
//! lattice boxes), equips them with a discrete Dirichlet form and its
//! energy measure, computes heat kernels spectrally, constructs cutoff
//! functions satisfying a cutoff Sobolev annulus inequality, runs the
//! perturbed-semigroup iteration that turns on-diagonal decay into
//! off-diagonal decay, and verifies the assembled bound
//! `p_t(x,y) <= C1 t^{-df/dw} exp(-C2 (d^dw/t)^{1/(dw-1)})`
//! against exact kernels.
//!
//! Start from the runnable examples (`cargo run --release --example ...`)
//! or the `pipeline` subcommand of the bundled CLI.

pub mod builders;
pub mod config;
pub mod cutoff;
pub mod dife;
pub mod error;
pub mod exit;
pub mod fit;
pub mod frontier;
pub mod graph;
pub mod iterate;
pub mod linalg;
pub mod perturb;
pub mod pipeline;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{EnergyMeasure, MeasureKind, VertexFunction, WeightedGraph};
