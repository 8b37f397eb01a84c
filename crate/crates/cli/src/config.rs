//! Run configuration: a TOML file whose keys are all optional, overlaid by
//! command-line flags and resolved into concrete engine inputs.
//!
//! ```toml
//! tolerance = 1e-10          # truncation tolerance of the series
//!
//! [scheme]
//! kind = "bulk"              # ideal | spatial | cavity | bulk   (default ideal)
//! pair_law = "poisson"       # poisson | thermal                 (default poisson)
//! v_b = 1.0                  # shared transmission, every scheme (default 1)
//! v_router = 0.9             # spatial: per-router transmission  (default 1)
//! v_cavity = 0.97            # cavity: per-round-trip transmission (default 1)
//! v_used = 0.996             # bulk: branch taken                (default 1)
//! v_bypass = 0.97            # bulk: branch skipped              (default 1)
//! v_medium = 0.95            # bulk: full-length medium          (default 1)
//!
//! [detector]
//! efficiency = 1.0           # V_D (default 1)
//!
//! [units]
//! n = 128                    # fixed N, or
//! m = 7                      # fixed N = 2^m, or a scan:
//! m_min = 0                  # N = 2^m_min ..= 2^m_max
//! m_max = 15
//! n_min = 1                  # N in [n_min, n_max]; every integer for the
//! n_max = 64                 # cavity, powers of two otherwise
//!
//! [lambda]
//! value = 6.6                # fixed lambda for dist/verify (default 1)
//! min = 1e-3                 # search interval (default [1e-3, 1e2 max(1, 1/V_D)])
//! max = 100.0
//! grid_points = 256
//! refine_tolerance = 1e-4
//! multimodal_guard = true
//!
//! [output]
//! path = "out.csv"           # default: standard output
//! format = "csv"
//! paper_precision = false
//!
//! [simulation]
//! trials = 1000000
//! seed = 42
//! z = 3.0
//! perturb = false            # shift P_1 by 10 standard errors to force a failure
//! ```

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use muxphoton::{
    default_unit_range, powers_of_two, LambdaSearchConfig, LossModel, PairLaw, DEFAULT_TOLERANCE,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_Z: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Ideal,
    Spatial,
    Cavity,
    Bulk,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Ideal => "ideal",
            SchemeKind::Spatial => "spatial",
            SchemeKind::Cavity => "cavity",
            SchemeKind::Bulk => "bulk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PairLawName {
    Poisson,
    Thermal,
}

impl From<PairLawName> for PairLaw {
    fn from(p: PairLawName) -> Self {
        match p {
            PairLawName::Poisson => PairLaw::Poisson,
            PairLawName::Thermal => PairLaw::Thermal,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<SchemeKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_law: Option<PairLawName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_router: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_cavity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_used: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_bypass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_medium: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_min: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_min: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multimodal_guard: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_precision: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturb: Option<bool>,
}

/// Contents of a configuration file, or of the flags layered over one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default)]
    pub units: UnitsSection,
    #[serde(default)]
    pub lambda: LambdaSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub simulation: SimulationSection,
}

macro_rules! overlay {
    ($base:expr, $top:expr; $($field:ident),+) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )+
    };
}

impl RunConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let key = unknown_key(&msg).unwrap_or_else(|| "config".to_string());
            CliError::config(key, msg)
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Values set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &RunConfigFile) -> Self {
        overlay!(self, top; tolerance);
        overlay!(self.scheme, top.scheme; kind, pair_law, v_b, v_router, v_cavity, v_used, v_bypass, v_medium);
        overlay!(self.detector, top.detector; efficiency);
        overlay!(self.lambda, top.lambda; value, min, max, grid_points, refine_tolerance, multimodal_guard);
        overlay!(self.output, top.output; path, format, paper_precision);
        overlay!(self.simulation, top.simulation; trials, seed, z, perturb);
        // A unit choice on top replaces the whole section so that a fixed N
        // never mixes with a scan range from the file.
        if top.units != UnitsSection::default() {
            self.units = top.units.clone();
        }
        self
    }

    pub fn resolve(&self, mode: UnitMode) -> CliResult<ResolvedConfig> {
        resolve(self, mode)
    }
}

fn unknown_key(msg: &str) -> Option<String> {
    let rest = msg.split("unknown field `").nth(1)?;
    rest.split('`').next().map(str::to_string)
}

/// Whether a command evaluates one unit count or scans several.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitMode {
    Single,
    Scan,
}

/// Fully validated inputs of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub scheme: SchemeKind,
    pub loss: LossModel,
    pub pair_law: PairLaw,
    pub detector_efficiency: f64,
    /// The single `N` in [`UnitMode::Single`], the scan otherwise.
    pub units: Vec<u32>,
    pub lambda: f64,
    pub search: LambdaSearchConfig,
    pub tolerance: f64,
    pub output: Option<PathBuf>,
    pub paper_precision: bool,
    pub trials: u64,
    pub seed: u64,
    pub z: f64,
    pub perturb: bool,
    /// The same configuration with every default written out.
    pub echo: RunConfigFile,
}

impl ResolvedConfig {
    /// Named parameters of the scheme, in a fixed order.
    pub fn scheme_parameters(&self) -> Vec<(&'static str, f64)> {
        scheme_parameters(&self.loss)
    }
}

pub fn scheme_parameters(loss: &LossModel) -> Vec<(&'static str, f64)> {
    match *loss {
        LossModel::Ideal { v_b } => vec![("v_b", v_b)],
        LossModel::Spatial { v_router, v_b } => vec![("v_router", v_router), ("v_b", v_b)],
        LossModel::Cavity { v_cavity, v_b } => vec![("v_cavity", v_cavity), ("v_b", v_b)],
        LossModel::BulkTime {
            v_used,
            v_bypass,
            v_medium,
            v_b,
        } => vec![
            ("v_used", v_used),
            ("v_bypass", v_bypass),
            ("v_medium", v_medium),
            ("v_b", v_b),
        ],
    }
}

fn probability(key: &str, value: Option<f64>) -> CliResult<f64> {
    let v = value.unwrap_or(1.0);
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(CliError::config(
            key,
            format!("{v} is not a probability in [0, 1]"),
        ))
    }
}

fn reject_unused(kind: SchemeKind, s: &SchemeSection) -> CliResult<()> {
    let used: &[&str] = match kind {
        SchemeKind::Ideal => &[],
        SchemeKind::Spatial => &["v_router"],
        SchemeKind::Cavity => &["v_cavity"],
        SchemeKind::Bulk => &["v_used", "v_bypass", "v_medium"],
    };
    let given = [
        ("v_router", s.v_router),
        ("v_cavity", s.v_cavity),
        ("v_used", s.v_used),
        ("v_bypass", s.v_bypass),
        ("v_medium", s.v_medium),
    ];
    for (name, value) in given {
        if value.is_some() && !used.contains(&name) {
            return Err(CliError::config(
                format!("scheme.{name}"),
                format!("not a parameter of scheme `{}`", kind.name()),
            ));
        }
    }
    Ok(())
}

fn build_loss(kind: SchemeKind, s: &SchemeSection) -> CliResult<LossModel> {
    reject_unused(kind, s)?;
    let v_b = probability("scheme.v_b", s.v_b)?;
    Ok(match kind {
        SchemeKind::Ideal => LossModel::Ideal { v_b },
        SchemeKind::Spatial => LossModel::Spatial {
            v_router: probability("scheme.v_router", s.v_router)?,
            v_b,
        },
        SchemeKind::Cavity => LossModel::Cavity {
            v_cavity: probability("scheme.v_cavity", s.v_cavity)?,
            v_b,
        },
        SchemeKind::Bulk => LossModel::BulkTime {
            v_used: probability("scheme.v_used", s.v_used)?,
            v_bypass: probability("scheme.v_bypass", s.v_bypass)?,
            v_medium: probability("scheme.v_medium", s.v_medium)?,
            v_b,
        },
    })
}

const MAX_STAGES: u32 = 30;

fn stage_count(key: &str, m: u32) -> CliResult<u32> {
    if m > MAX_STAGES {
        return Err(CliError::config(
            key,
            format!("{m} exceeds the largest supported value {MAX_STAGES}"),
        ));
    }
    Ok(1 << m)
}

fn check_unit_count(key: &str, loss: &LossModel, n: u32) -> CliResult<()> {
    if n == 0 {
        return Err(CliError::config(key, "the unit count must be at least 1"));
    }
    if n > 1 << MAX_STAGES {
        return Err(CliError::config(
            key,
            format!("{n} exceeds the largest supported unit count 2^{MAX_STAGES}"),
        ));
    }
    if loss.requires_power_of_two() && !n.is_power_of_two() {
        return Err(CliError::config(
            key,
            format!(
                "{n} is not a power of two, as the `{}` scheme requires",
                loss.name()
            ),
        ));
    }
    Ok(())
}

/// Resolves the unit section, returning the units and their echo.
fn resolve_units(u: &UnitsSection, loss: &LossModel, mode: UnitMode) -> CliResult<(Vec<u32>, UnitsSection)> {
    let fixed = u.n.is_some() || u.m.is_some();
    let by_n = u.n_min.is_some() || u.n_max.is_some();
    let by_m = u.m_min.is_some() || u.m_max.is_some();
    if u.n.is_some() && u.m.is_some() {
        return Err(CliError::config(
            "units.m",
            "give either units.n or units.m, not both",
        ));
    }
    if fixed && (by_n || by_m) {
        let key = if u.n.is_some() { "units.n" } else { "units.m" };
        return Err(CliError::config(
            key,
            "a fixed unit count cannot be combined with a scan range",
        ));
    }
    if by_n && by_m {
        return Err(CliError::config(
            "units.m_min",
            "give the scan range in n or in m, not both",
        ));
    }

    if fixed {
        let n = match (u.n, u.m) {
            (Some(n), _) => {
                check_unit_count("units.n", loss, n)?;
                n
            }
            (_, Some(m)) => stage_count("units.m", m)?,
            _ => unreachable!(),
        };
        return Ok((vec![n], u.clone()));
    }

    let scanning = by_n || by_m;
    if mode == UnitMode::Single {
        if scanning {
            let key = if by_n { "units.n_min" } else { "units.m_min" };
            return Err(CliError::config(
                key,
                "this command needs a single unit count (units.n or units.m)",
            ));
        }
        return Ok((
            vec![1],
            UnitsSection {
                n: Some(1),
                ..Default::default()
            },
        ));
    }

    let defaults = default_unit_range(loss);
    let (lo, hi) = (defaults[0], *defaults.last().unwrap());
    let every_integer = matches!(loss, LossModel::Cavity { .. });
    if by_m || (!by_n && !every_integer) {
        let m_lo = u.m_min.unwrap_or(lo.trailing_zeros());
        let m_hi = u.m_max.unwrap_or(hi.trailing_zeros());
        stage_count("units.m_max", m_hi)?;
        if m_lo > m_hi {
            return Err(CliError::config(
                "units.m_min",
                format!("{m_lo} exceeds units.m_max = {m_hi}"),
            ));
        }
        let echo = UnitsSection {
            m_min: Some(m_lo),
            m_max: Some(m_hi),
            ..Default::default()
        };
        return Ok((powers_of_two(m_lo, m_hi), echo));
    }

    let n_lo = u.n_min.unwrap_or(lo);
    let n_hi = u.n_max.unwrap_or(hi);
    check_unit_count("units.n_min", &LossModel::Ideal { v_b: 1.0 }, n_lo)?;
    check_unit_count("units.n_max", &LossModel::Ideal { v_b: 1.0 }, n_hi)?;
    if n_lo > n_hi {
        return Err(CliError::config(
            "units.n_min",
            format!("{n_lo} exceeds units.n_max = {n_hi}"),
        ));
    }
    let units: Vec<u32> = if every_integer {
        (n_lo..=n_hi).collect()
    } else {
        (n_lo..=n_hi).filter(|n| n.is_power_of_two()).collect()
    };
    if units.is_empty() {
        return Err(CliError::config(
            "units.n_min",
            format!("no power of two lies in [{n_lo}, {n_hi}]"),
        ));
    }
    let echo = UnitsSection {
        n_min: Some(n_lo),
        n_max: Some(n_hi),
        ..Default::default()
    };
    Ok((units, echo))
}

fn positive(key: &str, value: f64) -> CliResult<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::config(
            key,
            format!("{value} must be a finite value > 0"),
        ))
    }
}

fn resolve(file: &RunConfigFile, mode: UnitMode) -> CliResult<ResolvedConfig> {
    let kind = file.scheme.kind.unwrap_or(SchemeKind::Ideal);
    let loss = build_loss(kind, &file.scheme)?;
    let pair_law_name = file.scheme.pair_law.unwrap_or(PairLawName::Poisson);
    let vd = probability("detector.efficiency", file.detector.efficiency)?;
    let tolerance = positive("tolerance", file.tolerance.unwrap_or(DEFAULT_TOLERANCE))?;

    let (units, units_echo) = resolve_units(&file.units, &loss, mode)?;

    let lambda = file.lambda.value.unwrap_or(1.0);
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(CliError::config(
            "lambda.value",
            format!("{lambda} must be a finite value >= 0"),
        ));
    }
    let base = LambdaSearchConfig::for_detector(vd);
    let search = LambdaSearchConfig {
        lambda_min: positive("lambda.min", file.lambda.min.unwrap_or(base.lambda_min))?,
        lambda_max: positive("lambda.max", file.lambda.max.unwrap_or(base.lambda_max))?,
        coarse_grid_points: file.lambda.grid_points.unwrap_or(base.coarse_grid_points),
        refine_tolerance: positive(
            "lambda.refine_tolerance",
            file.lambda.refine_tolerance.unwrap_or(base.refine_tolerance),
        )?,
        multimodal_guard: file.lambda.multimodal_guard.unwrap_or(base.multimodal_guard),
        tolerance,
    };
    if search.lambda_max <= search.lambda_min {
        return Err(CliError::config(
            "lambda.max",
            format!(
                "{} must exceed lambda.min = {}",
                search.lambda_max, search.lambda_min
            ),
        ));
    }
    if search.coarse_grid_points < 16 {
        return Err(CliError::config(
            "lambda.grid_points",
            format!("{} is below the minimum of 16", search.coarse_grid_points),
        ));
    }

    let format = file.output.format.clone().unwrap_or_else(|| "csv".to_string());
    if format != "csv" {
        return Err(CliError::config(
            "output.format",
            format!("unsupported format `{format}` (only `csv`)"),
        ));
    }
    let trials = file
        .simulation
        .trials
        .unwrap_or(muxphoton::montecarlo::DEFAULT_TRIALS);
    if trials == 0 {
        return Err(CliError::config(
            "simulation.trials",
            "at least one trial is required",
        ));
    }
    let seed = file.simulation.seed.unwrap_or(DEFAULT_SEED);
    let z = positive("simulation.z", file.simulation.z.unwrap_or(DEFAULT_Z))?;
    let perturb = file.simulation.perturb.unwrap_or(false);
    let paper_precision = file.output.paper_precision.unwrap_or(false);

    let mut scheme_echo = SchemeSection {
        kind: Some(kind),
        pair_law: Some(pair_law_name),
        v_b: Some(loss.v_b()),
        ..Default::default()
    };
    match loss {
        LossModel::Ideal { .. } => {}
        LossModel::Spatial { v_router, .. } => scheme_echo.v_router = Some(v_router),
        LossModel::Cavity { v_cavity, .. } => scheme_echo.v_cavity = Some(v_cavity),
        LossModel::BulkTime {
            v_used,
            v_bypass,
            v_medium,
            ..
        } => {
            scheme_echo.v_used = Some(v_used);
            scheme_echo.v_bypass = Some(v_bypass);
            scheme_echo.v_medium = Some(v_medium);
        }
    }
    let echo = RunConfigFile {
        tolerance: Some(tolerance),
        scheme: scheme_echo,
        detector: DetectorSection { efficiency: Some(vd) },
        units: units_echo,
        lambda: LambdaSection {
            value: Some(lambda),
            min: Some(search.lambda_min),
            max: Some(search.lambda_max),
            grid_points: Some(search.coarse_grid_points),
            refine_tolerance: Some(search.refine_tolerance),
            multimodal_guard: Some(search.multimodal_guard),
        },
        output: OutputSection {
            path: file.output.path.clone(),
            format: Some(format),
            paper_precision: Some(paper_precision),
        },
        simulation: SimulationSection {
            trials: Some(trials),
            seed: Some(seed),
            z: Some(z),
            perturb: Some(perturb),
        },
    };

    Ok(ResolvedConfig {
        scheme: kind,
        loss,
        pair_law: pair_law_name.into(),
        detector_efficiency: vd,
        units,
        lambda,
        search,
        tolerance,
        output: file.output.path.clone(),
        paper_precision,
        trials,
        seed,
        z,
        perturb,
        echo,
    })
}
