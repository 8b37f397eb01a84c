//! Exact photon-number statistics of multiplexed heralded single-photon
//! sources, the search for the pump strength and unit count that maximize the
//! single-photon probability, and a Monte Carlo oracle for the statistics.
//!
//! Four architectures are modelled through [`LossModel`]: an ideal multiplexer
//! with unit-independent loss, cascaded spatial routers, a storage cavity and
//! a binary-delay bulk time multiplexer.
//!
//! ```
//! use muxphoton::{LossModel, MultiplexerSpec, single_photon_probability};
//!
//! let spec = MultiplexerSpec::new(LossModel::ideal(1.0).unwrap(), 1.0, 1, 1.0).unwrap();
//! let p1 = single_photon_probability(&spec, 1e-10).unwrap();
//! assert!((p1 - (-1.0f64).exp()).abs() < 1e-12);
//! ```

pub mod distribution;
pub mod error;
pub mod loss;
pub mod montecarlo;
pub mod optimize;
pub mod pair_stats;

pub use distribution::{
    output_distribution, photon_summary, single_photon_probability, MultiplexerSpec, OutputDistribution,
    PhotonSummary, DEFAULT_TOLERANCE,
};
pub use error::{Error, Result};
pub use loss::{hamming_weight, log2_units, minimal_period, LossModel, TimingParameters};
pub use montecarlo::{
    compare_to_analytic, simulate, BinComparison, BinLabel, ComparisonReport, EmpiricalDistribution,
    SimulationConfig,
};
pub use optimize::{
    asymptotic_check_spatial, default_unit_range, optimize_lambda, optimize_units, powers_of_two,
    LambdaSearchConfig, OptimizationResult, UnitScan,
};
pub use pair_stats::{apply_detector, pair_pmf, HeraldedUnitDistribution, PairLaw, PairSourceLaw};
