//! Linearized mechanics of polymer gels: Flory–Huggins mixing with Hadamard
//! elasticity, spherical equilibria, stability certificates and mixed finite
//! element simulation of the quasi-static poro-visco-elastic systems.

pub mod config;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod fem;
pub mod material;
pub mod mesh;
pub mod postprocess;
pub mod run;
pub mod stability;

pub use error::{GelError, Result};
