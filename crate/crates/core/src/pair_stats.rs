//! Photon-pair number laws of a single multiplexed unit and the click/no-click
//! detector that heralds them.
//!
//! A unit receives `k` pairs with probability `pmf(k)`. A detector of
//! efficiency `V_D` that cannot resolve photon number stays silent with
//! probability `(1 - V_D)^k`, so the heralded distribution splits into
//!
//! ```text
//! p_no_click  = sum_k pmf(k) (1 - V_D)^k
//! p_click(j)  = pmf(j) (1 - (1 - V_D)^j),   j >= 1
//! ```
//!
//! Both series are cut once an analytic bound on the omitted tail of `pmf`
//! falls below the requested tolerance, so the cut point follows the mean
//! instead of being a fixed constant.

use crate::error::{check_probability, check_tolerance, Error, Result};

/// Hard ceiling on series length; reaching it means the request is not
/// numerically sensible (enormous mean with a vanishing tolerance).
const MAX_SERIES_TERMS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairLaw {
    Poisson,
    /// Single-mode thermal (Bose-Einstein) law `mu^k / (1 + mu)^(k + 1)`.
    Thermal,
}

impl std::fmt::Display for PairLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PairLaw::Poisson => f.write_str("poisson"),
            PairLaw::Thermal => f.write_str("thermal"),
        }
    }
}

/// Pair-number law of one unit with its mean pair count `mu = lambda / N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSourceLaw {
    kind: PairLaw,
    mean: f64,
}

impl PairSourceLaw {
    pub fn new(kind: PairLaw, mean_per_unit: f64) -> Result<Self> {
        if !(mean_per_unit >= 0.0 && mean_per_unit.is_finite()) {
            return Err(Error::Domain {
                name: "mean_per_unit",
                value: mean_per_unit,
                expected: "a finite value >= 0",
            });
        }
        Ok(Self {
            kind,
            mean: mean_per_unit,
        })
    }

    pub fn poisson(mean_per_unit: f64) -> Result<Self> {
        Self::new(PairLaw::Poisson, mean_per_unit)
    }

    pub fn thermal(mean_per_unit: f64) -> Result<Self> {
        Self::new(PairLaw::Thermal, mean_per_unit)
    }

    pub fn kind(&self) -> PairLaw {
        self.kind
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Probability of exactly `k` pairs.
    pub fn pmf(&self, k: u64) -> f64 {
        let mu = self.mean;
        if mu == 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        match self.kind {
            PairLaw::Poisson => {
                let ln_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
                (k as f64 * mu.ln() - mu - ln_fact).exp()
            }
            PairLaw::Thermal => {
                let q = mu / (1.0 + mu);
                q.powf(k as f64) / (1.0 + mu)
            }
        }
    }

    /// Returns `pmf(0..=K)` together with an upper bound on `sum_{k > K} pmf(k)`,
    /// where `K` is the first index at which that bound drops below `tolerance`.
    pub fn truncated_pmf(&self, tolerance: f64) -> Result<(Vec<f64>, f64)> {
        check_tolerance(tolerance)?;
        let mu = self.mean;
        if mu == 0.0 {
            return Ok((vec![1.0], 0.0));
        }
        let mut terms = Vec::new();
        match self.kind {
            PairLaw::Poisson => {
                let ln_mu = mu.ln();
                let mut ln_p = -mu;
                loop {
                    let k = terms.len();
                    terms.push(ln_p.exp());
                    // Ratio bound: pmf(k'+1)/pmf(k') <= mu/(k+2) for k' >= k+1.
                    let ln_next = ln_p + ln_mu - ((k + 1) as f64).ln();
                    let ratio = mu / (k + 2) as f64;
                    if ratio < 1.0 {
                        let bound = ln_next.exp() / (1.0 - ratio);
                        if bound < tolerance {
                            return Ok((terms, bound));
                        }
                    }
                    if terms.len() >= MAX_SERIES_TERMS {
                        return Err(series_overflow(mu, tolerance));
                    }
                    ln_p = ln_next;
                }
            }
            PairLaw::Thermal => {
                let q = mu / (1.0 + mu);
                let mut p = 1.0 / (1.0 + mu);
                // Tail after index k is exactly q^(k+1).
                let mut tail = q;
                loop {
                    terms.push(p);
                    if tail < tolerance {
                        return Ok((terms, tail));
                    }
                    if terms.len() >= MAX_SERIES_TERMS {
                        return Err(series_overflow(mu, tolerance));
                    }
                    p *= q;
                    tail *= q;
                }
            }
        }
    }
}

fn series_overflow(mu: f64, tolerance: f64) -> Error {
    Error::Numerical(format!(
        "pair-number series for mean {mu} did not reach tolerance {tolerance} within {MAX_SERIES_TERMS} terms"
    ))
}

/// Probability of `k` pairs under `law`.
pub fn pair_pmf(law: &PairSourceLaw, k: u64) -> f64 {
    law.pmf(k)
}

/// Heralded content of one unit after the click/no-click detector.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldedUnitDistribution {
    /// Probability that the unit's detector stays silent.
    pub p_no_click: f64,
    /// `click[j - 1]` is the probability of a click with `j` pairs present.
    pub click: Vec<f64>,
    /// Upper bound on the pair-number mass left out of both series.
    pub truncation_mass: f64,
}

impl HeraldedUnitDistribution {
    /// Largest pair number kept in the click series.
    pub fn j_max(&self) -> usize {
        self.click.len()
    }

    /// Probability of a click with `j >= 1` pairs, zero past the cut.
    pub fn p_click_with(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        self.click.get(j - 1).copied().unwrap_or(0.0)
    }

    pub fn p_click(&self) -> f64 {
        self.click.iter().sum()
    }
}

/// Applies a detector of efficiency `detector_efficiency` to `law`.
pub fn apply_detector(
    law: &PairSourceLaw,
    detector_efficiency: f64,
    tolerance: f64,
) -> Result<HeraldedUnitDistribution> {
    check_probability("detector_efficiency", detector_efficiency)?;
    let (pmf, truncation_mass) = law.truncated_pmf(tolerance)?;

    let miss = 1.0 - detector_efficiency;
    let ln_miss = (-detector_efficiency).ln_1p();
    let mut p_no_click = 0.0;
    let mut miss_pow = 1.0;
    for &p in &pmf {
        p_no_click += p * miss_pow;
        miss_pow *= miss;
    }
    let click = pmf
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &p)| p * -(j as f64 * ln_miss).exp_m1())
        .collect();

    Ok(HeraldedUnitDistribution {
        p_no_click,
        click,
        truncation_mass,
    })
}
