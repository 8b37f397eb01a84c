//! Output photon-number distribution of a multiplexed source.
//!
//! Units are scanned in herald order; the first unit whose detector clicks
//! supplies the output and every later unit is ignored. With `p0` the
//! no-click probability of one unit, `c_j` the probability of a click with `j`
//! pairs and `V_n` the transmission of unit `n`:
//!
//! ```text
//! P_i = sum_n p0^(n-1) sum_{j>=i} c_j C(j,i) V_n^i (1-V_n)^(j-i)     (i >= 1)
//! P_0 = p0^N + sum_n p0^(n-1) sum_{j>=1} c_j (1-V_n)^j
//! ```
//!
//! The heralded unit distribution does not depend on `n`, so it is computed
//! once and the prefix `p0^(n-1)` is carried along the unit loop.

use crate::error::{check_probability, check_tolerance, Error, Result};
use crate::loss::LossModel;
use crate::pair_stats::{apply_detector, HeraldedUnitDistribution, PairLaw, PairSourceLaw};

/// Default truncation tolerance for distribution evaluation.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// A fully specified multiplexed source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplexerSpec {
    pub loss: LossModel,
    pub pair_law: PairLaw,
    /// `V_D`.
    pub detector_efficiency: f64,
    /// `N`.
    pub units: u32,
    /// `lambda`, the mean pair number summed over all units.
    pub total_mean_pairs: f64,
}

impl MultiplexerSpec {
    /// Poisson-fed multiplexer, validated.
    pub fn new(loss: LossModel, detector_efficiency: f64, units: u32, total_mean_pairs: f64) -> Result<Self> {
        let spec = Self {
            loss,
            pair_law: PairLaw::Poisson,
            detector_efficiency,
            units,
            total_mean_pairs,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_pair_law(mut self, pair_law: PairLaw) -> Self {
        self.pair_law = pair_law;
        self
    }

    pub fn with_mean_pairs(mut self, total_mean_pairs: f64) -> Self {
        self.total_mean_pairs = total_mean_pairs;
        self
    }

    pub fn with_units(mut self, units: u32) -> Self {
        self.units = units;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        self.loss.check_units(self.units)?;
        check_probability("detector_efficiency", self.detector_efficiency)?;
        if !(self.total_mean_pairs >= 0.0 && self.total_mean_pairs.is_finite()) {
            return Err(Error::Domain {
                name: "total_mean_pairs",
                value: self.total_mean_pairs,
                expected: "a finite value >= 0",
            });
        }
        Ok(())
    }

    /// Mean pair number of one unit, `lambda / N`.
    pub fn mean_per_unit(&self) -> f64 {
        self.total_mean_pairs / f64::from(self.units)
    }

    pub fn unit_law(&self) -> Result<PairSourceLaw> {
        PairSourceLaw::new(self.pair_law, self.mean_per_unit())
    }
}

/// `P_0, ..., P_imax` plus the probability mass not listed.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputDistribution {
    pub spec: MultiplexerSpec,
    pub probabilities: Vec<f64>,
    /// Bound on the mass missing from `probabilities`: the bins past `i_max`
    /// plus every series cut made on the way.
    pub residual_mass: f64,
}

impl OutputDistribution {
    pub fn i_max(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn p(&self, i: usize) -> f64 {
        self.probabilities.get(i).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// Accumulated output bins `0..bins.len()` of one evaluation.
struct Accumulated {
    bins: Vec<f64>,
    /// `p0^N`, the all-silent probability.
    all_silent: f64,
    truncation_bound: f64,
}

/// Adds `sum_j weights[j] C(j,i) v^i (1-v)^(j-i)` to `bins[i]` for each bin.
///
/// The binomial factor is advanced along `j` by the multiplicative recurrence
/// `t(j+1) = t(j) (1-v) (j+1)/(j+1-i)`, starting from `t(i) = v^i`.
fn thin_into(bins: &mut [f64], weights: &[f64], v: f64, pre: f64) {
    let loss = 1.0 - v;
    let j_max = weights.len() - 1;
    let mut v_pow = 1.0;
    for (i, bin) in bins.iter_mut().enumerate() {
        if i > j_max {
            break;
        }
        let mut t = v_pow;
        let mut acc = 0.0;
        for j in i..=j_max {
            acc += weights[j] * t;
            t *= loss * (j + 1) as f64 / (j + 1 - i) as f64;
        }
        *bin += pre * acc;
        v_pow *= v;
    }
}

/// Runs the unit loop, filling `bins_wanted` bins (all of them when `None`).
fn accumulate(spec: &MultiplexerSpec, tolerance: f64, bins_wanted: Option<usize>) -> Result<Accumulated> {
    spec.validate()?;
    check_tolerance(tolerance)?;

    let units = spec.units;
    let n_f = f64::from(units);
    let unit: HeraldedUnitDistribution = apply_detector(
        &spec.unit_law()?,
        spec.detector_efficiency,
        tolerance / (4.0 * n_f),
    )?;
    let transmissions = spec.loss.transmissions(units)?;

    // weights[j] = c_j, with weights[0] = 0 (a click needs at least one pair).
    let mut weights = Vec::with_capacity(unit.j_max() + 1);
    weights.push(0.0);
    weights.extend_from_slice(&unit.click);

    let len = bins_wanted.unwrap_or(weights.len()).min(weights.len());
    let mut bins = vec![0.0; len.max(1)];

    let p0 = unit.p_no_click;
    let all_silent = p0.powf(n_f);
    let mut pre = 1.0;
    let mut prefix_sum = 0.0;
    let mut skipped = 0.0;
    for &v in &transmissions {
        if pre < tolerance / 4.0 {
            // Remaining units can only add p0^(n-1) - p0^N in total.
            skipped = (pre - all_silent).max(0.0);
            break;
        }
        thin_into(&mut bins, &weights, v, pre);
        prefix_sum += pre;
        pre *= p0;
    }

    let truncation_bound = unit.truncation_mass * prefix_sum + skipped;
    bins[0] += all_silent;
    if bins.iter().any(|b| !b.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite output probability for {spec:?}"
        )));
    }
    Ok(Accumulated {
        bins,
        all_silent,
        truncation_bound,
    })
}

/// Full output distribution, listed up to the first `i_max` past which less
/// than a quarter of `tolerance` remains.
pub fn output_distribution(spec: &MultiplexerSpec, tolerance: f64) -> Result<OutputDistribution> {
    let acc = accumulate(spec, tolerance, None)?;
    let mut tail = 0.0;
    let mut i_max = 0;
    for (i, &b) in acc.bins.iter().enumerate().rev() {
        if tail + b >= tolerance / 4.0 {
            i_max = i;
            break;
        }
        tail += b;
    }
    let mut probabilities = acc.bins;
    probabilities.truncate(i_max + 1);
    debug_assert!(acc.all_silent <= probabilities[0] + f64::EPSILON);
    Ok(OutputDistribution {
        spec: *spec,
        probabilities,
        residual_mass: tail + acc.truncation_bound,
    })
}

/// `P_0` and `P_1` of a source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonSummary {
    pub p0: f64,
    pub p1: f64,
}

/// Evaluates only the zero- and one-photon bins. Values are bit-identical to
/// those of [`output_distribution`].
pub fn photon_summary(spec: &MultiplexerSpec, tolerance: f64) -> Result<PhotonSummary> {
    let acc = accumulate(spec, tolerance, Some(2))?;
    Ok(PhotonSummary {
        p0: acc.bins[0],
        p1: acc.bins.get(1).copied().unwrap_or(0.0),
    })
}

/// Single-photon probability `P_1`.
pub fn single_photon_probability(spec: &MultiplexerSpec, tolerance: f64) -> Result<f64> {
    photon_summary(spec, tolerance).map(|s| s.p1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal(vb: f64, vd: f64, n: u32, lambda: f64) -> MultiplexerSpec {
        MultiplexerSpec::new(LossModel::ideal(vb).unwrap(), vd, n, lambda).unwrap()
    }

    #[test]
    fn single_perfect_unit_is_the_poisson_law() {
        let d = output_distribution(&ideal(1.0, 1.0, 1, 1.0), DEFAULT_TOLERANCE).unwrap();
        let e = (-1.0f64).exp();
        assert!((d.p(0) - e).abs() < 1e-14);
        assert!((d.p(1) - e).abs() < 1e-14);
        assert!((d.p(2) - e / 2.0).abs() < 1e-14);
        assert!((d.p(3) - e / 6.0).abs() < 1e-14);
    }

    #[test]
    fn zero_mean_gives_vacuum() {
        for loss in [
            LossModel::ideal(0.5).unwrap(),
            LossModel::cavity(0.9, 1.0).unwrap(),
            LossModel::bulk_time(0.9, 0.9, 0.9, 0.9).unwrap(),
        ] {
            let spec = MultiplexerSpec::new(loss, 0.7, 4, 0.0).unwrap();
            let d = output_distribution(&spec, DEFAULT_TOLERANCE).unwrap();
            assert_eq!(d.probabilities, vec![1.0]);
            assert_eq!(d.residual_mass, 0.0);
        }
    }

    #[test]
    fn blind_detector_gives_vacuum() {
        let d = output_distribution(&ideal(1.0, 0.0, 8, 5.0), DEFAULT_TOLERANCE).unwrap();
        assert!((d.p(0) - 1.0).abs() < DEFAULT_TOLERANCE);
        assert_eq!(d.i_max(), 0);
    }

    #[test]
    fn summary_matches_full_distribution_bitwise() {
        let spec = MultiplexerSpec::new(
            LossModel::bulk_time(0.996, 0.97, 0.95, 1.0).unwrap(),
            0.9,
            128,
            6.6,
        )
        .unwrap();
        let d = output_distribution(&spec, DEFAULT_TOLERANCE).unwrap();
        let s = photon_summary(&spec, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(s.p0.to_bits(), d.p(0).to_bits());
        assert_eq!(s.p1.to_bits(), d.p(1).to_bits());
    }

    #[test]
    fn invalid_inputs() {
        let spec = ideal(1.0, 1.0, 4, 1.0);
        assert!(matches!(
            output_distribution(&spec, 0.0),
            Err(Error::Domain { .. })
        ));
        let bad = MultiplexerSpec {
            units: 6,
            loss: LossModel::Spatial {
                v_router: 0.9,
                v_b: 1.0,
            },
            ..spec
        };
        assert!(matches!(output_distribution(&bad, 1e-10), Err(Error::Config(_))));
        assert!(MultiplexerSpec::new(LossModel::ideal(1.0).unwrap(), 1.0, 4, -1.0).is_err());
    }

    #[test]
    fn thermal_single_unit_perfect() {
        let spec = ideal(1.0, 1.0, 1, 2.0).with_pair_law(PairLaw::Thermal);
        let d = output_distribution(&spec, DEFAULT_TOLERANCE).unwrap();
        for i in 0..6u64 {
            let expected = 2f64.powi(i as i32) / 3f64.powi(i as i32 + 1);
            assert!((d.p(i as usize) - expected).abs() < 1e-13);
        }
    }
}
