//! Fixed points, Lyapunov spectra, regime classification, sweeps and permutation entropy.

pub mod entropy;
pub mod fixed_points;
pub mod lyapunov;
pub mod regime;
pub mod sweep;

pub use entropy::permutation_entropy;
pub use fixed_points::{eigenvalues_at, fixed_point_roots, fixed_points, FixedPoint, Stability};
pub use lyapunov::{
    estimate, lyapunov_1d, lyapunov_spectrum, map1_lyapunov, map2_lyapunov, LyapunovEstimate,
    LyapunovSpectrum, TangentMap,
};
pub use regime::{classify_outcome, classify_regime, RegimeLabel, DEFAULT_EPS};
pub use sweep::{basin_grid, bifurcation_scan, Axis, AxisSpec, BasinGrid, BifurcationColumn, BifurcationScan};
