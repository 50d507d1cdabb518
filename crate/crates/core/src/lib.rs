//! Hyperuniformity of point sets on flat tori `R^d / Λ`: number variance by
//! spectral, real-space and Monte Carlo methods, point processes (uniform,
//! jittered, sublattice, projection DPP), QMC worst-case errors and
//! regime fits.

pub mod error;
pub mod io;
pub mod lattice;
pub mod pointgen;
pub mod qmc;
pub mod quad;
pub mod rng;
pub mod special;
pub mod variance;

pub use error::{Error, Result};
pub use lattice::{
    ball_volume, dual_basis, enumerate_dual, half_diameter, normalize_lattice, shortest_vector_length,
    torus_distance, DualVector, Lattice, TorusPoint,
};
pub use pointgen::{
    choose_spectrum, dpp_kernel_eval, gen_dpp, gen_jittered, gen_sublattice, gen_uniform, make_partition,
    Partition, PointSet, Provenance, SpectrumSelection,
};
pub use qmc::{kernel_eval, lemma1_bound_check, qmc_design_check, qmc_design_fit, wce, wce_detailed, KernelSpec, Lemma1Check, WceResult};
pub use rng::RngSpec;
pub use special::{bessel_envelope_sq, bessel_j, BesselOrder};
pub use variance::{
    ball_coefficient, expected_variance_dpp, expected_variance_dpp_closed, expected_variance_dpp_with,
    expected_variance_jittered, fit_regime, fit_regime_with, l2_discrepancy, lens_volume, variance_montecarlo,
    variance_realspace, variance_spectral, variance_spectral_with, weyl_sum_sq, Regime, RegimeReport, RegimeRow,
    ThresholdProfile, Truncation, VarianceEstimate, VarianceMethod, Verdict,
};

/// Library version embedded in every output record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
