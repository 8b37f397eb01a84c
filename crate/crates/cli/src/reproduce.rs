//! Reproduction of the tabulated optima and of the curves behind each figure.
//!
//! Figures come in two shapes. Curve figures evaluate `P_1` along a `lambda/N`
//! grid at fixed `N`; scan figures optimize `lambda` at every `N` of a range.
//! Every figure CSV starts with the columns `(series, x, y)`; scan figures
//! append the remaining optimization quantities after them.
//!
//! | target | scheme  | x         | y              | series |
//! |--------|---------|-----------|----------------|--------|
//! | fig5   | ideal   | lambda/N  | P1 (N = 256)   | V_b    |
//! | fig6   | ideal   | N         | lambda_opt/N   | V_b    |
//! | fig7   | ideal   | N         | lambda_opt     | V_b    |
//! | fig8   | ideal   | N         | P1_max         | V_b    |
//! | fig9   | spatial | lambda/N  | P1 (N = 8)     | V_R    |
//! | fig10  | spatial | N         | lambda_opt/N   | V_R    |
//! | fig11  | spatial | N         | P1_max         | V_R    |
//! | fig12  | cavity  | lambda/N  | P1 (N = 8)     | V_c    |
//! | fig13  | cavity  | N         | lambda_opt/N   | V_c    |
//! | fig14  | cavity  | N         | lambda_opt     | V_c    |
//! | fig15  | cavity  | N         | P1_max         | V_c    |
//! | fig16  | bulk    | lambda/N  | P1 (N = 256)   | row    |
//! | fig17  | bulk    | N         | lambda_opt     | row    |
//! | fig18  | bulk    | N         | P1_max         | row    |

use std::fmt;
use std::str::FromStr;

use muxphoton::{
    default_unit_range, photon_summary, LossModel, MultiplexerSpec, OptimizationResult, UnitScan,
};

use crate::commands::{default_search, scan_units};
use crate::error::{CliError, CliResult};
use crate::reference::{
    ReferenceOptimum, BULK_DETECTORS, BULK_ROW4_AT_DETECTOR, BULK_ROW4_DETECTOR, BULK_TABLE,
    SPATIAL_DETECTORS, SPATIAL_TABLE,
};
use crate::report::{Cell, CsvReport, Num};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Table1,
    Table2,
    Figure(u8),
}

pub const FIRST_FIGURE: u8 = 5;
pub const LAST_FIGURE: u8 = 18;

impl Target {
    pub fn all() -> Vec<Target> {
        let mut v = vec![Target::Table1, Target::Table2];
        v.extend((FIRST_FIGURE..=LAST_FIGURE).map(Target::Figure));
        v
    }

    pub fn names() -> String {
        Target::all()
            .iter()
            .map(Target::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Table1 => f.write_str("table1"),
            Target::Table2 => f.write_str("table2"),
            Target::Figure(n) => write!(f, "fig{n}"),
        }
    }
}

impl FromStr for Target {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let found = match s {
            "table1" => Some(Target::Table1),
            "table2" => Some(Target::Table2),
            _ => s
                .strip_prefix("fig")
                .and_then(|n| n.parse::<u8>().ok())
                .filter(|n| (FIRST_FIGURE..=LAST_FIGURE).contains(n))
                .map(Target::Figure),
        };
        found.ok_or_else(|| {
            CliError::Usage(format!(
                "unknown target `{s}`; valid targets: {}",
                Target::names()
            ))
        })
    }
}

pub fn cmd_reproduce(target: Target, tolerance: f64) -> CliResult<CsvReport> {
    let mut r = match target {
        Target::Table1 => table1(tolerance)?,
        Target::Table2 => table2(tolerance)?,
        Target::Figure(n) => figure(n, tolerance)?,
    };
    r.metadata.insert(1, ("target".into(), target.to_string()));
    r.metadata
        .insert(2, ("tolerance".into(), Num(tolerance).to_string()));
    Ok(r)
}

const TABLE_TAIL: [&str; 11] = [
    "m_opt [stages]",
    "lambda_opt [pairs]",
    "P1_max [probability]",
    "P0 [probability]",
    "ref_m [stages]",
    "ref_lambda [pairs]",
    "ref_P1 [probability]",
    "ref_P0 [probability]",
    "lambda_opt_at_ref_m [pairs]",
    "P1_at_ref [probability]",
    "P0_at_ref [probability]",
];

/// Columns after the parameter columns of one table cell.
fn table_cells(
    loss: &LossModel,
    vd: f64,
    reference: &ReferenceOptimum,
    tolerance: f64,
) -> CliResult<Vec<Cell>> {
    let units = default_unit_range(loss);
    let scan = scan_units(loss, vd, &units, &default_search(vd, tolerance))?;
    let best = scan.best();
    let ref_units = 1u32 << reference.stages;
    let at_ref_m = scan.at_units(ref_units).map(|o| o.lambda_opt);
    let spec = MultiplexerSpec::new(*loss, vd, ref_units, reference.lambda)?;
    let at_ref = photon_summary(&spec, tolerance)?;
    Ok(vec![
        best.stages.into(),
        best.lambda_opt.into(),
        best.p1_max.into(),
        best.p0_at_opt.into(),
        reference.stages.into(),
        reference.lambda.into(),
        reference.p1.into(),
        reference.p0.into(),
        at_ref_m.into(),
        at_ref.p1.into(),
        at_ref.p0.into(),
    ])
}

fn with_tail(head: &[&'static str]) -> Vec<&'static str> {
    head.iter().chain(TABLE_TAIL.iter()).copied().collect()
}

fn table1(tolerance: f64) -> CliResult<CsvReport> {
    let mut r = CsvReport::new(&with_tail(&["row", "V_R", "V_D"]));
    r.meta("scheme", "spatial").meta("v_b", 1.0);
    r.meta("units", "2^0..2^15");
    r.meta("lambda_search", "default grid on [1e-3, 1e2 max(1, 1/V_D)]");
    for (row, (v_r, refs)) in SPATIAL_TABLE.iter().enumerate() {
        let loss = LossModel::spatial(*v_r, 1.0)?;
        for (vd, reference) in SPATIAL_DETECTORS.iter().zip(refs) {
            let mut cells: Vec<Cell> = vec![(row + 1).into(), (*v_r).into(), (*vd).into()];
            cells.extend(table_cells(&loss, *vd, reference, tolerance)?);
            r.push(cells);
        }
    }
    Ok(r)
}

fn table2(tolerance: f64) -> CliResult<CsvReport> {
    let mut r = CsvReport::new(&with_tail(&["row", "V_r", "V_r0", "V_t", "V_D"]));
    r.meta("scheme", "bulk").meta("v_b", 1.0);
    r.meta("units", "2^0..2^15");
    r.meta("lambda_search", "default grid on [1e-3, 1e2 max(1, 1/V_D)]");
    r.meta(
        "footnote",
        format!("row 4* repeats row 4 with V_D = {BULK_ROW4_DETECTOR}"),
    );
    let mut cells_for = |label: String, params: (f64, f64, f64), vd: f64, reference: &ReferenceOptimum| {
        let loss = LossModel::bulk_time(params.0, params.1, params.2, 1.0)?;
        let mut cells: Vec<Cell> = vec![
            label.into(),
            params.0.into(),
            params.1.into(),
            params.2.into(),
            vd.into(),
        ];
        cells.extend(table_cells(&loss, vd, reference, tolerance)?);
        r.push(cells);
        Ok::<_, CliError>(())
    };
    for (row, (params, refs)) in BULK_TABLE.iter().enumerate() {
        for (vd, reference) in BULK_DETECTORS.iter().zip(refs) {
            cells_for((row + 1).to_string(), *params, *vd, reference)?;
        }
    }
    cells_for(
        "4*".into(),
        BULK_TABLE[3].0,
        BULK_ROW4_DETECTOR,
        &BULK_ROW4_AT_DETECTOR,
    )?;
    Ok(r)
}

/// `points_per_decade` logarithmically spaced values on `[lo, hi]`.
fn log_grid(lo: f64, hi: f64, points_per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let steps = (decades * points_per_decade as f64).round() as usize;
    (0..=steps)
        .map(|k| lo * 10f64.powf(decades * k as f64 / steps as f64))
        .collect()
}

const POINTS_PER_DECADE: usize = 40;

struct Series {
    label: String,
    loss: LossModel,
}

fn series_of(values: &[f64], make: impl Fn(f64) -> CliResult<LossModel>) -> CliResult<Vec<Series>> {
    values
        .iter()
        .map(|&v| {
            Ok(Series {
                label: v.to_string(),
                loss: make(v)?,
            })
        })
        .collect()
}

fn bulk_series() -> CliResult<Vec<Series>> {
    BULK_TABLE
        .iter()
        .enumerate()
        .map(|(row, ((r, r0, t), _))| {
            Ok(Series {
                label: (row + 1).to_string(),
                loss: LossModel::bulk_time(*r, *r0, *t, 1.0)?,
            })
        })
        .collect()
}

const IDEAL_V_B: [f64; 7] = [1.0, 0.95, 0.9, 0.8, 0.7, 0.6, 0.5];
const CURVE_V_R: [f64; 7] = [0.95, 0.9, 0.85, 0.8, 0.6, 0.5, 0.3];
const SCAN_V_R: [f64; 5] = [0.95, 0.9, 0.85, 0.8, 0.6];
const CURVE_V_C: [f64; 7] = [0.97, 0.95, 0.9, 0.85, 0.8, 0.7, 0.6];
const SCAN_V_C: [f64; 5] = [0.97, 0.95, 0.9, 0.85, 0.8];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScanY {
    LambdaPerUnit,
    Lambda,
    P1,
}

fn figure(n: u8, tolerance: f64) -> CliResult<CsvReport> {
    let ideal = |v| Ok(LossModel::ideal(v)?);
    let spatial = |v| Ok(LossModel::spatial(v, 1.0)?);
    let cavity = |v| Ok(LossModel::cavity(v, 1.0)?);
    match n {
        5 => curve("V_b", series_of(&IDEAL_V_B, ideal)?, 256, (1e-4, 1.0), tolerance),
        6 => unit_scan(
            "V_b",
            series_of(&IDEAL_V_B, ideal)?,
            ScanY::LambdaPerUnit,
            tolerance,
        ),
        7 => unit_scan("V_b", series_of(&IDEAL_V_B, ideal)?, ScanY::Lambda, tolerance),
        8 => unit_scan("V_b", series_of(&IDEAL_V_B, ideal)?, ScanY::P1, tolerance),
        9 => curve("V_R", series_of(&CURVE_V_R, spatial)?, 8, (1e-3, 1e2), tolerance),
        10 => unit_scan(
            "V_R",
            series_of(&SCAN_V_R, spatial)?,
            ScanY::LambdaPerUnit,
            tolerance,
        ),
        11 => unit_scan("V_R", series_of(&SCAN_V_R, spatial)?, ScanY::P1, tolerance),
        12 => curve("V_c", series_of(&CURVE_V_C, cavity)?, 8, (1e-3, 1e2), tolerance),
        13 => unit_scan(
            "V_c",
            series_of(&SCAN_V_C, cavity)?,
            ScanY::LambdaPerUnit,
            tolerance,
        ),
        14 => unit_scan("V_c", series_of(&SCAN_V_C, cavity)?, ScanY::Lambda, tolerance),
        15 => unit_scan("V_c", series_of(&SCAN_V_C, cavity)?, ScanY::P1, tolerance),
        16 => curve("row", bulk_series()?, 256, (1e-4, 1e1), tolerance),
        17 => unit_scan("row", bulk_series()?, ScanY::Lambda, tolerance),
        18 => unit_scan("row", bulk_series()?, ScanY::P1, tolerance),
        _ => Err(CliError::Usage(format!(
            "unknown target `fig{n}`; valid targets: {}",
            Target::names()
        ))),
    }
}

fn describe_series(r: &mut CsvReport, name: &str, series: &[Series]) {
    r.meta("scheme", series[0].loss.name());
    if name == "row" {
        for s in series {
            let params = crate::config::scheme_parameters(&s.loss)
                .iter()
                .map(|(k, v)| format!("{k} = {v}"))
                .collect::<Vec<_>>()
                .join(", ");
            r.meta("series", format!("row {}: {params}", s.label));
        }
    } else {
        let values = series
            .iter()
            .map(|s| s.label.as_str())
            .collect::<Vec<_>>()
            .join(", ");
        r.meta("series", format!("{name} = {values}; other transmissions 1"));
    }
}

fn curve(
    name: &str,
    series: Vec<Series>,
    units: u32,
    range: (f64, f64),
    tolerance: f64,
) -> CliResult<CsvReport> {
    let grid = log_grid(range.0, range.1, POINTS_PER_DECADE);
    let mut r = CsvReport::new(&[name, "lambda/N [pairs/unit]", "P1 [probability]"]);
    describe_series(&mut r, name, &series);
    r.meta("detector_efficiency", Num(1.0)).meta("units", units);
    r.meta(
        "x_range",
        format!(
            "lambda/N on [{}, {}], {POINTS_PER_DECADE} log-spaced points per decade",
            range.0, range.1
        ),
    );
    for s in &series {
        for &x in &grid {
            let spec = MultiplexerSpec::new(s.loss, 1.0, units, x * f64::from(units))?;
            let p1 = photon_summary(&spec, tolerance)?.p1;
            r.push(vec![s.label.clone().into(), x.into(), p1.into()]);
        }
    }
    Ok(r)
}

fn unit_scan(name: &str, series: Vec<Series>, y: ScanY, tolerance: f64) -> CliResult<CsvReport> {
    let units = default_unit_range(&series[0].loss);
    let search = default_search(1.0, tolerance);
    let (y_col, rest): (&str, [&str; 3]) = match y {
        ScanY::LambdaPerUnit => (
            "lambda_opt/N [pairs/unit]",
            ["lambda_opt [pairs]", "P1_max [probability]", "P0 [probability]"],
        ),
        ScanY::Lambda => (
            "lambda_opt [pairs]",
            [
                "lambda_opt/N [pairs/unit]",
                "P1_max [probability]",
                "P0 [probability]",
            ],
        ),
        ScanY::P1 => (
            "P1_max [probability]",
            [
                "lambda_opt [pairs]",
                "lambda_opt/N [pairs/unit]",
                "P0 [probability]",
            ],
        ),
    };
    let mut cols = vec![name, "N [units]", y_col];
    cols.extend(rest);
    let mut r = CsvReport::new(&cols);
    describe_series(&mut r, name, &series);
    r.meta("detector_efficiency", Num(1.0));
    let (lo, hi) = (units[0], *units.last().unwrap());
    if matches!(series[0].loss, LossModel::Cavity { .. }) {
        r.meta("x_range", format!("every N in {lo}..{hi}"));
    } else {
        r.meta(
            "x_range",
            format!("N = 2^{}..2^{}", lo.trailing_zeros(), hi.trailing_zeros()),
        );
    }
    r.meta(
        "lambda_search",
        format!(
            "log grid of {} points on [{}, {}]",
            search.coarse_grid_points, search.lambda_min, search.lambda_max
        ),
    );

    for s in &series {
        let scan: UnitScan = scan_units(&s.loss, 1.0, &units, &search)?;
        let best = scan.best();
        r.meta(
            "optimum",
            format!(
                "{name} = {}: N = {}, lambda_opt = {}, P1_max = {}",
                s.label,
                best.units,
                Num(best.lambda_opt),
                Num(best.p1_max)
            ),
        );
        for o in &scan.per_unit {
            if o.at_boundary {
                r.meta(
                    "warning",
                    format!(
                        "{name} = {}: optimum for N = {} is pinned to the lambda search boundary",
                        s.label, o.units
                    ),
                );
            }
        }
        for o in &scan.per_unit {
            r.push(scan_row(&s.label, o, y));
        }
    }
    Ok(r)
}

fn scan_row(label: &str, o: &OptimizationResult, y: ScanY) -> Vec<Cell> {
    let (l, lpn, p1, p0) = (o.lambda_opt, o.lambda_per_unit(), o.p1_max, o.p0_at_opt);
    let values = match y {
        ScanY::LambdaPerUnit => [lpn, l, p1, p0],
        ScanY::Lambda => [l, lpn, p1, p0],
        ScanY::P1 => [p1, l, lpn, p0],
    };
    let mut row: Vec<Cell> = vec![label.into(), o.units.into()];
    row.extend(values.iter().map(|&v| Cell::from(v)));
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_names_parse_back() {
        for t in Target::all() {
            assert_eq!(t.to_string().parse::<Target>().unwrap(), t);
        }
        for bad in ["fig4", "fig19", "table3", "fig", ""] {
            let e = bad.parse::<Target>().unwrap_err();
            assert!(matches!(&e, CliError::Usage(m) if m.contains("table1") && m.contains("fig15")));
        }
    }

    #[test]
    fn grid_ends_are_exact_enough() {
        let g = log_grid(1e-3, 1e2, 40);
        assert_eq!(g.len(), 201);
        assert_eq!(g[0], 1e-3);
        assert!((g[200] - 1e2).abs() < 1e-10);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
