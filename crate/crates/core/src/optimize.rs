//! Maximization of the single-photon probability over the mean pair number
//! `lambda` at fixed unit count, and over the unit count itself.
//!
//! `P_1(lambda)` is not always unimodal: with strong storage losses a second,
//! low-`lambda` peak appears. The search therefore scans a logarithmic grid
//! first and refines each grid peak by golden-section search, keeping the best.

use rayon::prelude::*;

use crate::distribution::{photon_summary, MultiplexerSpec, DEFAULT_TOLERANCE};
use crate::error::{check_probability, check_tolerance, Error, Result};
use crate::loss::{log2_units, LossModel};

/// `1 / phi`.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSearchConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub coarse_grid_points: usize,
    /// Absolute resolution of the refined `lambda`.
    pub refine_tolerance: f64,
    /// Refine every coarse-grid peak instead of only the highest one.
    pub multimodal_guard: bool,
    /// Truncation tolerance handed to the distribution engine.
    pub tolerance: f64,
}

impl Default for LambdaSearchConfig {
    fn default() -> Self {
        Self {
            lambda_min: 1e-3,
            lambda_max: 1e2,
            coarse_grid_points: 256,
            refine_tolerance: 1e-4,
            multimodal_guard: true,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl LambdaSearchConfig {
    /// Default search whose upper end grows as `1 / V_D` for lossy detectors.
    pub fn for_detector(detector_efficiency: f64) -> Self {
        let scale = if detector_efficiency > 0.0 {
            (1.0 / detector_efficiency).max(1.0)
        } else {
            1.0
        };
        Self {
            lambda_max: 1e2 * scale,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min > 0.0 && self.lambda_min.is_finite()) {
            return Err(Error::Domain {
                name: "lambda_min",
                value: self.lambda_min,
                expected: "a finite value > 0",
            });
        }
        if !(self.lambda_max > self.lambda_min && self.lambda_max.is_finite()) {
            return Err(Error::Domain {
                name: "lambda_max",
                value: self.lambda_max,
                expected: "a finite value > lambda_min",
            });
        }
        if self.coarse_grid_points < 16 {
            return Err(Error::Domain {
                name: "coarse_grid_points",
                value: self.coarse_grid_points as f64,
                expected: "at least 16",
            });
        }
        if !(self.refine_tolerance > 0.0 && self.refine_tolerance.is_finite()) {
            return Err(Error::Domain {
                name: "refine_tolerance",
                value: self.refine_tolerance,
                expected: "a finite value > 0",
            });
        }
        check_tolerance(self.tolerance)
    }

    /// The coarse logarithmic grid.
    pub fn grid(&self) -> Vec<f64> {
        let last = (self.coarse_grid_points - 1) as f64;
        let ratio = (self.lambda_max / self.lambda_min).ln();
        (0..self.coarse_grid_points)
            .map(|k| {
                if k + 1 == self.coarse_grid_points {
                    self.lambda_max
                } else {
                    self.lambda_min * (ratio * k as f64 / last).exp()
                }
            })
            .collect()
    }
}

/// Best `lambda` at one unit count.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub units: u32,
    /// `m = log2 N` when `N` is a power of two.
    pub stages: Option<u32>,
    pub lambda_opt: f64,
    pub p1_max: f64,
    pub p0_at_opt: f64,
    /// Refined local maxima `(lambda, P_1)` in increasing `lambda`.
    pub local_maxima: Vec<(f64, f64)>,
    /// The optimum sits on an end of the search interval.
    pub at_boundary: bool,
    pub evaluations: usize,
}

impl OptimizationResult {
    pub fn lambda_per_unit(&self) -> f64 {
        self.lambda_opt / f64::from(self.units)
    }
}

struct Objective<'a> {
    template: &'a MultiplexerSpec,
    tolerance: f64,
    evaluations: usize,
}

impl Objective<'_> {
    fn p1(&mut self, lambda: f64) -> Result<f64> {
        self.evaluations += 1;
        let p1 = photon_summary(&self.template.with_mean_pairs(lambda), self.tolerance)?.p1;
        if !p1.is_finite() {
            return Err(Error::Numerical(format!(
                "P_1 is not finite at lambda = {lambda}"
            )));
        }
        Ok(p1)
    }
}

/// Golden-section maximization on `[a, b]`; returns the best point seen,
/// including the supplied interior sample.
fn golden_max(
    obj: &mut Objective<'_>,
    mut a: f64,
    mut b: f64,
    seed: (f64, f64),
    tol: f64,
) -> Result<(f64, f64)> {
    let mut best = seed;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = obj.p1(c)?;
    let mut fd = obj.p1(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = obj.p1(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = obj.p1(d)?;
        }
    }
    for (x, f) in [(c, fc), (d, fd)] {
        if f > best.1 {
            best = (x, f);
        }
    }
    Ok(best)
}

/// Maximizes `P_1` over `lambda` for the unit count and losses of `template`
/// (its `total_mean_pairs` is ignored).
pub fn optimize_lambda(template: &MultiplexerSpec, cfg: &LambdaSearchConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    template.with_mean_pairs(0.0).validate()?;
    let mut obj = Objective {
        template,
        tolerance: cfg.tolerance,
        evaluations: 0,
    };

    let grid = cfg.grid();
    let values = grid.iter().map(|&l| obj.p1(l)).collect::<Result<Vec<_>>>()?;
    let last = grid.len() - 1;

    let peaks: Vec<usize> = if cfg.multimodal_guard {
        (0..=last)
            .filter(|&i| (i == 0 || values[i] > values[i - 1]) && (i == last || values[i] >= values[i + 1]))
            .collect()
    } else {
        let mut best = 0;
        for i in 1..=last {
            if values[i] > values[best] {
                best = i;
            }
        }
        vec![best]
    };

    let mut local_maxima = Vec::with_capacity(peaks.len());
    for &i in &peaks {
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(last)];
        local_maxima.push(golden_max(
            &mut obj,
            lo,
            hi,
            (grid[i], values[i]),
            cfg.refine_tolerance,
        )?);
    }

    let (lambda_opt, p1_max) =
        local_maxima.iter().copied().fold(
            (f64::NAN, f64::NEG_INFINITY),
            |acc, m| if m.1 > acc.1 { m } else { acc },
        );
    let p0_at_opt = photon_summary(&template.with_mean_pairs(lambda_opt), cfg.tolerance)?.p0;
    let at_boundary = lambda_opt - cfg.lambda_min <= cfg.refine_tolerance
        || cfg.lambda_max - lambda_opt <= cfg.refine_tolerance;

    Ok(OptimizationResult {
        units: template.units,
        stages: log2_units(template.units),
        lambda_opt,
        p1_max,
        p0_at_opt,
        local_maxima,
        at_boundary,
        evaluations: obj.evaluations + 1,
    })
}

/// Per-unit-count optima and the joint optimum over a range of unit counts.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitScan {
    /// One result per unit count, ascending in `N`.
    pub per_unit: Vec<OptimizationResult>,
    /// Index of the joint optimum in `per_unit`.
    pub best_index: usize,
    /// The joint optimum is the smallest or largest `N` scanned.
    pub at_edge: bool,
}

impl UnitScan {
    pub fn best(&self) -> &OptimizationResult {
        &self.per_unit[self.best_index]
    }

    pub fn at_units(&self, units: u32) -> Option<&OptimizationResult> {
        self.per_unit.iter().find(|r| r.units == units)
    }
}

/// Optimizes `lambda` for every `N` in `unit_range` and picks the `N` with the
/// highest `P_1`; ties go to the smaller `N`.
pub fn optimize_units(
    loss: &LossModel,
    detector_efficiency: f64,
    unit_range: &[u32],
    cfg: &LambdaSearchConfig,
) -> Result<UnitScan> {
    check_probability("detector_efficiency", detector_efficiency)?;
    let mut units: Vec<u32> = unit_range.to_vec();
    units.sort_unstable();
    units.dedup();
    if units.is_empty() {
        return Err(Error::Usage("unit range is empty".into()));
    }
    for &n in &units {
        loss.check_units(n)?;
    }

    let per_unit = units
        .par_iter()
        .map(|&n| {
            let template = MultiplexerSpec::new(*loss, detector_efficiency, n, 0.0)?;
            optimize_lambda(&template, cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best_index = 0;
    for (i, r) in per_unit.iter().enumerate() {
        if r.p1_max > per_unit[best_index].p1_max {
            best_index = i;
        }
    }
    let at_edge = per_unit.len() > 1 && (best_index == 0 || best_index + 1 == per_unit.len());
    Ok(UnitScan {
        per_unit,
        best_index,
        at_edge,
    })
}

/// `2^lo, ..., 2^hi`.
pub fn powers_of_two(lo: u32, hi: u32) -> Vec<u32> {
    (lo..=hi).map(|m| 1u32 << m).collect()
}

/// Default unit-count scan for each architecture.
pub fn default_unit_range(loss: &LossModel) -> Vec<u32> {
    match loss {
        LossModel::Ideal { .. } => powers_of_two(0, 14),
        LossModel::Spatial { .. } | LossModel::BulkTime { .. } => powers_of_two(0, 15),
        LossModel::Cavity { .. } => (1..=64).collect(),
    }
}

/// `P_1` of a lossless-detector spatial multiplexer with `2^m` sources at the
/// per-unit mean `V_R^-m`, where the large-`m` behaviour is probed.
pub fn asymptotic_check_spatial(v_router: f64, stages: u32) -> Result<(f64, f64)> {
    if !(v_router > 0.0 && v_router <= 1.0) {
        return Err(Error::Domain {
            name: "v_router",
            value: v_router,
            expected: "a transmission in (0, 1]",
        });
    }
    if stages > 30 {
        return Err(Error::Config(format!("{stages} router levels exceed 2^30 units")));
    }
    let units = 1u32 << stages;
    let lambda_over_n = v_router.powi(-(stages as i32));
    let spec = MultiplexerSpec::new(
        LossModel::spatial(v_router, 1.0)?,
        1.0,
        units,
        lambda_over_n * f64::from(units),
    )?;
    let p1 = photon_summary(&spec, DEFAULT_TOLERANCE)?.p1;
    Ok((lambda_over_n, p1))
}
