//! Event-by-event simulation of a multiplexed source, used as a brute-force
//! check of the analytic engine.
//!
//! Each trial draws the pair number of every unit in herald order, lets each
//! idler photon reach the detector independently, and routes every signal
//! photon of the first heralded unit through the individual lossy stages of
//! the architecture (router levels, cavity round trips, delay branches). None
//! of the closed-form thinning of [`crate::distribution`] or the transmission
//! formulas of [`crate::loss`] is reused.
//!
//! Trials are split into fixed-size chunks; chunk `c` draws from ChaCha8 stream
//! `c` of the configured seed, so histograms do not depend on the number of
//! worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distribution::{MultiplexerSpec, OutputDistribution};
use crate::error::{Error, Result};
use crate::loss::LossModel;
use crate::pair_stats::PairLaw;

/// Trials per random stream.
const CHUNK_TRIALS: u64 = 1 << 16;

/// Largest per-draw Poisson mean sampled by direct inversion; larger means
/// are split into a sum of independent smaller draws.
const INVERSION_MEAN: f64 = 10.0;

pub const DEFAULT_TRIALS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub spec: MultiplexerSpec,
    pub trials: u64,
    pub seed: u64,
    /// Outputs above this photon number are recorded in the last bin.
    pub max_recorded_photons: usize,
}

impl SimulationConfig {
    pub fn new(spec: MultiplexerSpec, trials: u64, seed: u64) -> Self {
        Self {
            spec,
            trials,
            seed,
            max_recorded_photons: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("simulation needs at least one trial".into()));
        }
        Ok(())
    }
}

/// Histogram of simulated output photon numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    pub spec: MultiplexerSpec,
    pub counts: Vec<u64>,
    pub trials: u64,
}

impl EmpiricalDistribution {
    pub fn frequency(&self, i: usize) -> f64 {
        self.counts.get(i).copied().unwrap_or(0) as f64 / self.trials as f64
    }

    /// Binomial standard error `sqrt(p(1-p)/trials)` of bin `i`.
    pub fn standard_error(&self, i: usize) -> f64 {
        binomial_se(self.frequency(i), self.trials)
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|i| self.standard_error(i)).collect()
    }
}

fn binomial_se(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Lossy stages seen by a photon heralded in one unit.
type Route = Vec<f64>;

fn routes(loss: &LossModel, units: u32) -> Vec<Route> {
    (1..=units)
        .map(|n| {
            let delay = units - n;
            let mut route = Vec::new();
            match *loss {
                LossModel::Ideal { .. } => {}
                LossModel::Spatial { v_router, .. } => {
                    let mut width = units;
                    while width > 1 {
                        route.push(v_router);
                        width /= 2;
                    }
                }
                LossModel::Cavity { v_cavity, .. } => {
                    route.extend(std::iter::repeat_n(v_cavity, delay as usize));
                }
                LossModel::BulkTime {
                    v_used,
                    v_bypass,
                    v_medium,
                    ..
                } => {
                    let mut branch_len = 1u32;
                    while branch_len < units {
                        if delay & branch_len != 0 {
                            route.push(v_used);
                            // Medium of this branch is branch_len / N of the longest path.
                            route.push(v_medium.powf(f64::from(branch_len) / f64::from(units)));
                        } else {
                            route.push(v_bypass);
                        }
                        branch_len *= 2;
                    }
                }
            }
            route.push(loss.v_b());
            route
        })
        .collect()
}

fn sample_poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let pieces = (mean / INVERSION_MEAN).ceil().max(1.0);
    let piece_mean = mean / pieces;
    let start = (-piece_mean).exp();
    let mut total = 0;
    for _ in 0..pieces as u64 {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = start;
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= piece_mean / k as f64;
            let next = cdf + p;
            if next == cdf {
                break;
            }
            cdf = next;
        }
        total += k;
    }
    total
}

fn sample_thermal<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // P(K >= k) = q^k.
    let q = mean / (1.0 + mean);
    let u: f64 = rng.random();
    ((1.0 - u).ln() / q.ln()).floor() as u64
}

fn run_trial<R: Rng>(rng: &mut R, spec: &MultiplexerSpec, routes: &[Route], mean: f64) -> u64 {
    for route in routes {
        let pairs = match spec.pair_law {
            PairLaw::Poisson => sample_poisson(rng, mean),
            PairLaw::Thermal => sample_thermal(rng, mean),
        };
        let clicked = (0..pairs).any(|_| rng.random::<f64>() < spec.detector_efficiency);
        if clicked {
            return (0..pairs)
                .filter(|_| route.iter().all(|&v| rng.random::<f64>() < v))
                .count() as u64;
        }
    }
    0
}

/// Simulates `cfg.trials` source periods.
pub fn simulate(cfg: &SimulationConfig) -> Result<EmpiricalDistribution> {
    cfg.validate()?;
    let spec = cfg.spec;
    let routes = routes(&spec.loss, spec.units);
    let mean = spec.total_mean_pairs / f64::from(spec.units);
    let bins = cfg.max_recorded_photons + 1;
    let chunks = cfg.trials.div_ceil(CHUNK_TRIALS);

    let counts = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(chunk);
            let begin = chunk * CHUNK_TRIALS;
            let end = (begin + CHUNK_TRIALS).min(cfg.trials);
            let mut hist = vec![0u64; bins];
            for _ in begin..end {
                let photons = run_trial(&mut rng, &spec, &routes, mean) as usize;
                hist[photons.min(bins - 1)] += 1;
            }
            hist
        })
        .reduce(
            || vec![0u64; bins],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    Ok(EmpiricalDistribution {
        spec,
        counts,
        trials: cfg.trials,
    })
}

/// Which photon numbers a compared bin covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinLabel {
    Photons(usize),
    /// All bins whose expected count is below the pooling threshold.
    PooledTail,
}

impl std::fmt::Display for BinLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BinLabel::Photons(i) => write!(f, "{i}"),
            BinLabel::PooledTail => f.write_str("tail"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinComparison {
    pub label: BinLabel,
    pub analytic: f64,
    pub empirical: f64,
    pub standard_error: f64,
    /// `(empirical - analytic) / standard_error`.
    pub z_score: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub z: f64,
    pub trials: u64,
    pub bins: Vec<BinComparison>,
    pub pass: bool,
    /// Index into `bins` of the largest `|z_score|`.
    pub worst: usize,
}

impl ComparisonReport {
    pub fn worst_bin(&self) -> &BinComparison {
        &self.bins[self.worst]
    }
}

/// Expected count below which bins are pooled.
pub const POOLING_THRESHOLD: f64 = 10.0;

/// Compares an empirical histogram with the analytic distribution of the same
/// spec, bin by bin, at `z` standard errors.
///
/// The standard error is `sqrt(p(1-p)/trials)` of the empirical frequency, or
/// of the analytic probability when the empirical one is exactly 0 or 1.
pub fn compare_to_analytic(
    emp: &EmpiricalDistribution,
    analytic: &OutputDistribution,
    z: f64,
) -> Result<ComparisonReport> {
    if analytic.spec != emp.spec {
        return Err(Error::Usage(format!(
            "analytic distribution was computed for {:?}, the simulation for {:?}",
            analytic.spec, emp.spec
        )));
    }
    if z.is_nan() || z <= 0.0 {
        return Err(Error::Domain {
            name: "z",
            value: z,
            expected: "a value > 0",
        });
    }
    let trials = emp.trials;
    let t = trials as f64;
    let mut kept = Vec::new();
    for (i, &p) in analytic.probabilities.iter().enumerate() {
        if p * t >= POOLING_THRESHOLD {
            kept.push(i);
        }
    }

    let compare = |label, analytic: f64, count: u64| {
        let empirical = count as f64 / t;
        let se = if count == 0 || count == trials {
            binomial_se(analytic, trials)
        } else {
            binomial_se(empirical, trials)
        };
        let diff = empirical - analytic;
        let z_score = if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        };
        BinComparison {
            label,
            analytic,
            empirical,
            standard_error: se,
            z_score,
            pass: diff.abs() <= z * se,
        }
    };

    let mut bins: Vec<BinComparison> = kept
        .iter()
        .map(|&i| {
            compare(
                BinLabel::Photons(i),
                analytic.probabilities[i],
                emp.counts.get(i).copied().unwrap_or(0),
            )
        })
        .collect();

    let kept_mass: f64 = kept.iter().map(|&i| analytic.probabilities[i]).sum();
    let kept_count: u64 = kept
        .iter()
        .map(|&i| emp.counts.get(i).copied().unwrap_or(0))
        .sum();
    let tail_expected = (1.0 - kept_mass).max(0.0);
    let tail_count = trials - kept_count;
    if tail_expected > 0.0 || tail_count > 0 {
        bins.push(compare(BinLabel::PooledTail, tail_expected, tail_count));
    }

    let worst = bins.iter().enumerate().fold(0, |w, (i, b)| {
        if b.z_score.abs() > bins[w].z_score.abs() {
            i
        } else {
            w
        }
    });
    let pass = bins.iter().all(|b| b.pass);
    Ok(ComparisonReport {
        z,
        trials,
        bins,
        pass,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{output_distribution, DEFAULT_TOLERANCE};

    fn spec(loss: LossModel, vd: f64, n: u32, lambda: f64) -> MultiplexerSpec {
        MultiplexerSpec::new(loss, vd, n, lambda).unwrap()
    }

    #[test]
    fn zero_mean_always_empty() {
        let s = spec(LossModel::ideal(0.9).unwrap(), 1.0, 8, 0.0);
        let e = simulate(&SimulationConfig::new(s, 10_000, 1)).unwrap();
        assert_eq!(e.counts[0], 10_000);
        assert_eq!(e.counts.iter().sum::<u64>(), 10_000);
    }

    #[test]
    fn seeded_runs_repeat() {
        let s = spec(LossModel::cavity(0.9, 1.0).unwrap(), 0.8, 5, 2.0);
        let cfg = SimulationConfig::new(s, 200_000, 7);
        assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
        let other = simulate(&SimulationConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(simulate(&cfg).unwrap(), other);
    }

    #[test]
    fn routes_reproduce_closed_form_transmissions() {
        let loss = LossModel::bulk_time(0.996, 0.97, 0.95, 0.9).unwrap();
        let r = routes(&loss, 256);
        let product: f64 = r[250].iter().product();
        let expected = 0.996f64.powi(2) * 0.97f64.powi(6) * 0.95f64.powf(5.0 / 256.0) * 0.9;
        assert!((product - expected).abs() < 1e-14);
    }

    #[test]
    fn large_poisson_mean_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| sample_poisson(&mut rng, 25.0) as f64).sum::<f64>() / n as f64;
        // sd of the sample mean is 5 / sqrt(20000) ~ 0.035.
        assert!((mean - 25.0).abs() < 0.15);
    }

    #[test]
    fn vacuum_comparison_passes() {
        let s = spec(LossModel::ideal(1.0).unwrap(), 1.0, 4, 0.0);
        let a = output_distribution(&s, DEFAULT_TOLERANCE).unwrap();
        let e = simulate(&SimulationConfig::new(s, 10_000, 3)).unwrap();
        let r = compare_to_analytic(&e, &a, 3.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.bins.len(), 1);
    }

    #[test]
    fn perturbed_analytic_fails_on_bin_one() {
        let s = spec(LossModel::spatial(0.9, 1.0).unwrap(), 1.0, 8, 3.44);
        let mut a = output_distribution(&s, DEFAULT_TOLERANCE).unwrap();
        let e = simulate(&SimulationConfig::new(s, 200_000, 11)).unwrap();
        a.probabilities[1] += 10.0 * e.standard_error(1);
        let r = compare_to_analytic(&e, &a, 3.0).unwrap();
        assert!(!r.pass);
        let bin1 = r.bins.iter().find(|b| b.label == BinLabel::Photons(1)).unwrap();
        assert!(!bin1.pass);
    }

    #[test]
    fn mismatched_spec_is_a_usage_error() {
        let s = spec(LossModel::ideal(1.0).unwrap(), 1.0, 4, 1.0);
        let a = output_distribution(&s, DEFAULT_TOLERANCE).unwrap();
        let e = simulate(&SimulationConfig::new(s, 100, 3)).unwrap();
        let a = OutputDistribution {
            spec: s.with_mean_pairs(2.0),
            ..a
        };
        assert!(matches!(compare_to_analytic(&e, &a, 3.0), Err(Error::Usage(_))));
    }
}
