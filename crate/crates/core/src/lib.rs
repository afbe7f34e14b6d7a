//! Finite-element solver for a radially symmetric stationary Fokker–Planck
//! problem with a scalar drift strength `μ`, and an inverter that picks `μ`
//! so that a weighted average of the solution hits a target value.

pub mod assembly;
pub mod config;
pub mod csv;
pub mod error;
pub mod experiment;
pub mod inverter;
pub mod mesh;
pub mod model;
pub mod oracles;
pub mod solver;
pub mod tridiag;

pub use assembly::{assemble, assemble_with, AssembledSystem, AssemblyOptions, DriftStyle, LoadStyle};
pub use config::RunConfig;
pub use error::{FpError, Result};
pub use inverter::{invert, scan_monotonicity, InversionReport, MonotonicityScan, Status};
pub use mesh::RadialMesh;
pub use model::{KernelSpec, ModelSpec, PotentialSpec, SourceSpec};
pub use solver::{solve_adjoint, solve_primal, solve_sensitivity};
