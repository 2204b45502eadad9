//! Grid-based quantum simulation that compares four routes to the local mean
//! momentum of a wavefunction: the phase gradient `grad S`, the
//! position-post-selected weak value of momentum, the first conditional
//! moment of the Wigner function, and the two-spray average built from
//! short-time path amplitudes. Bohm trajectories integrated through that
//! field are mean momentum flow lines, not single-particle paths.

pub mod config;
pub mod error;
pub mod feynman;
pub mod grid;
pub mod polar;
pub mod run;
pub mod schrodinger;
pub mod stencil;
pub mod trajectories;
pub mod weak;
pub mod wigner;

pub use error::{QflowError, Result};
pub use grid::{inner_product, make_grid, to_momentum_space, Grid1D, MomentumAmplitudes, WaveFunction};
