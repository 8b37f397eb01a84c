use muxphoton::{
    compare_to_analytic, log2_units, optimize_units, output_distribution, simulate, LambdaSearchConfig,
    LossModel, MultiplexerSpec, SimulationConfig, UnitScan,
};

use crate::config::ResolvedConfig;
use crate::error::CliResult;
use crate::report::{Cell, CsvReport, Num};

/// Shift applied by the verification self-test to `P_1` (to `P_0` when it is
/// the only bin), in standard errors.
pub const PERTURBATION_SE: f64 = 10.0;

pub const OPTIMIZE_COLUMNS: [&str; 9] = [
    "row",
    "N [units]",
    "m [stages]",
    "lambda_opt [pairs]",
    "lambda_opt/N [pairs/unit]",
    "P1_max [probability]",
    "P0 [probability]",
    "local_maxima [count]",
    "at_boundary",
];

fn describe(r: &mut CsvReport, command: &str, cfg: &ResolvedConfig) {
    r.meta("command", command);
    r.meta("scheme", cfg.scheme.name());
    for (k, v) in cfg.scheme_parameters() {
        r.meta(k, Num(v));
    }
    r.meta("pair_law", cfg.pair_law);
    r.meta("detector_efficiency", Num(cfg.detector_efficiency));
    r.meta("tolerance", Num(cfg.tolerance));
}

fn spec_of(cfg: &ResolvedConfig) -> CliResult<MultiplexerSpec> {
    Ok(
        MultiplexerSpec::new(cfg.loss, cfg.detector_efficiency, cfg.units[0], cfg.lambda)?
            .with_pair_law(cfg.pair_law),
    )
}

/// Output distribution at fixed `(N, lambda)`: rows `(i, P_i)` followed by the
/// residual mass.
pub fn cmd_dist(cfg: &ResolvedConfig) -> CliResult<CsvReport> {
    let spec = spec_of(cfg)?;
    let d = output_distribution(&spec, cfg.tolerance)?;
    let mut r = CsvReport::new(&["i [photons]", "P_i [probability]"]);
    describe(&mut r, "dist", cfg);
    r.meta("units", spec.units)
        .meta("lambda", Num(spec.total_mean_pairs));
    r.meta("residual_mass", Num(d.residual_mass));
    for (i, &p) in d.probabilities.iter().enumerate() {
        r.push(vec![i.into(), p.into()]);
    }
    r.push(vec!["residual".into(), d.residual_mass.into()]);
    Ok(r)
}

/// Runs the `lambda` optimization over a set of unit counts.
pub fn scan_units(
    loss: &LossModel,
    detector_efficiency: f64,
    units: &[u32],
    search: &LambdaSearchConfig,
) -> CliResult<UnitScan> {
    Ok(optimize_units(loss, detector_efficiency, units, search)?)
}

/// Search settings used when nothing overrides them.
pub fn default_search(detector_efficiency: f64, tolerance: f64) -> LambdaSearchConfig {
    LambdaSearchConfig {
        tolerance,
        ..LambdaSearchConfig::for_detector(detector_efficiency)
    }
}

fn unit_range_text(units: &[u32]) -> String {
    let (lo, hi) = (units[0], *units.last().unwrap());
    match (log2_units(lo), log2_units(hi)) {
        (Some(a), Some(b)) if units.len() as u32 == b - a + 1 => format!("2^{a}..2^{b}"),
        _ if units.len() as u32 == hi - lo + 1 => format!("{lo}..{hi}"),
        _ => units.iter().map(u32::to_string).collect::<Vec<_>>().join(" "),
    }
}

/// Best `lambda` at every scanned `N`, then the joint optimum as a final row.
pub fn cmd_optimize(cfg: &ResolvedConfig) -> CliResult<CsvReport> {
    let scan = scan_units(
        &poisson_loss(cfg)?,
        cfg.detector_efficiency,
        &cfg.units,
        &cfg.search,
    )?;
    let mut r = CsvReport::new(&OPTIMIZE_COLUMNS);
    describe(&mut r, "optimize", cfg);
    r.meta("units", unit_range_text(&cfg.units));
    r.meta(
        "lambda_search",
        format!(
            "log grid of {} points on [{}, {}], refine tolerance {}, multimodal guard {}",
            cfg.search.coarse_grid_points,
            Num(cfg.search.lambda_min),
            Num(cfg.search.lambda_max),
            Num(cfg.search.refine_tolerance),
            cfg.search.multimodal_guard
        ),
    );
    for res in &scan.per_unit {
        if res.at_boundary {
            r.meta(
                "warning",
                format!(
                    "optimum for N = {} is pinned to the lambda search boundary",
                    res.units
                ),
            );
        }
    }
    if scan.at_edge && cfg.units.len() > 1 {
        r.meta(
            "warning",
            format!(
                "best N = {} lies at the edge of the scanned range",
                scan.best().units
            ),
        );
    }
    for res in &scan.per_unit {
        r.push(optimize_row("scan", res));
    }
    r.push(optimize_row("optimum", scan.best()));
    Ok(r)
}

pub fn optimize_row(label: &str, res: &muxphoton::OptimizationResult) -> Vec<Cell> {
    vec![
        label.into(),
        res.units.into(),
        res.stages.into(),
        res.lambda_opt.into(),
        res.lambda_per_unit().into(),
        res.p1_max.into(),
        res.p0_at_opt.into(),
        res.local_maxima.len().into(),
        res.at_boundary.into(),
    ]
}

fn poisson_loss(cfg: &ResolvedConfig) -> CliResult<LossModel> {
    // The unit scan evaluates Poisson-fed sources only.
    if cfg.pair_law != muxphoton::PairLaw::Poisson {
        return Err(crate::error::CliError::config(
            "scheme.pair_law",
            "optimize supports the poisson pair law only",
        ));
    }
    Ok(cfg.loss)
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub report: CsvReport,
    pub pass: bool,
}

/// Simulates the configured source and compares it bin by bin with the
/// analytic distribution.
pub fn cmd_verify(cfg: &ResolvedConfig) -> CliResult<VerifyOutcome> {
    let spec = spec_of(cfg)?;
    let mut analytic = output_distribution(&spec, cfg.tolerance)?;
    let emp = simulate(&SimulationConfig::new(spec, cfg.trials, cfg.seed))?;

    let mut perturbed = None;
    if cfg.perturb {
        let bin = usize::from(analytic.probabilities.len() > 1);
        let p = analytic.probabilities[bin];
        let t = cfg.trials as f64;
        let se = (p * (1.0 - p) / t).sqrt().max(1.0 / t.sqrt());
        let shift = if bin == 0 {
            -PERTURBATION_SE * se
        } else {
            PERTURBATION_SE * se
        };
        analytic.probabilities[bin] = (p + shift).clamp(0.0, 1.0);
        perturbed = Some((bin, shift));
    }

    let cmp = compare_to_analytic(&emp, &analytic, cfg.z)?;
    let mut r = CsvReport::new(&[
        "bin [photons]",
        "P_i [probability]",
        "P_hat_i [probability]",
        "SE_i [probability]",
        "z [standard errors]",
        "pass",
    ]);
    describe(&mut r, "verify", cfg);
    r.meta("units", spec.units)
        .meta("lambda", Num(spec.total_mean_pairs));
    r.meta("trials", cfg.trials)
        .meta("seed", cfg.seed)
        .meta("z", Num(cfg.z));
    if let Some((bin, shift)) = perturbed {
        r.meta(
            "self_test",
            format!("P_{bin} shifted by {} before comparison", Num(shift)),
        );
    }
    let worst = cmp.worst_bin();
    r.meta(
        "worst_bin",
        format!("{} (z = {})", worst.label, Num(worst.z_score)),
    );
    r.meta("result", if cmp.pass { "PASS" } else { "FAIL" });
    for b in &cmp.bins {
        r.push(vec![
            b.label.to_string().into(),
            b.analytic.into(),
            b.empirical.into(),
            b.standard_error.into(),
            b.z_score.into(),
            b.pass.into(),
        ]);
    }
    Ok(VerifyOutcome {
        report: r,
        pass: cmp.pass,
    })
}
