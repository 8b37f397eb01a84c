//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

use std::process::Command;
use std::time::{Duration, Instant};

use muxphoton::{
    asymptotic_check_spatial, compare_to_analytic, optimize_lambda, optimize_units, output_distribution,
    powers_of_two, simulate, LambdaSearchConfig, LossModel, MultiplexerSpec, PairLaw, SimulationConfig,
};
use muxphoton_cli::{cmd_reproduce, Cell, CsvReport, Target};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-10;
const E_INV: f64 = 0.367_879_441_171_442_3;

/// `(m, lambda, P1, P0)` as printed in the reference tables.
type Cell4 = (u32, f64, f64, f64);

const SPATIAL_VD: [f64; 3] = [1.0, 0.9, 0.2];
const SPATIAL: [(f64, [Cell4; 3]); 7] = [
    (
        0.3,
        [
            (1, 5.60, 0.385, 0.397),
            (1, 5.63, 0.385, 0.392),
            (2, 43.00, 0.369, 0.369),
        ],
    ),
    (
        0.5,
        [
            (1, 2.90, 0.434, 0.364),
            (1, 3.03, 0.423, 0.356),
            (3, 59.38, 0.371, 0.372),
        ],
    ),
    (
        0.6,
        [
            (1, 2.41, 0.456, 0.331),
            (1, 2.52, 0.439, 0.330),
            (3, 30.18, 0.379, 0.375),
        ],
    ),
    (
        0.8,
        [
            (2, 3.03, 0.535, 0.312),
            (2, 3.19, 0.521, 0.308),
            (4, 20.50, 0.422, 0.378),
        ],
    ),
    (
        0.85,
        [
            (2, 2.73, 0.569, 0.264),
            (3, 4.20, 0.556, 0.336),
            (5, 25.25, 0.449, 0.409),
        ],
    ),
    (
        0.9,
        [
            (3, 3.44, 0.635, 0.255),
            (3, 3.63, 0.621, 0.254),
            (5, 16.93, 0.515, 0.332),
        ],
    ),
    (
        0.95,
        [
            (4, 3.89, 0.737, 0.185),
            (5, 5.04, 0.729, 0.220),
            (7, 21.27, 0.648, 0.282),
        ],
    ),
];

const BULK_VD: [f64; 2] = [1.0, 0.2];
const BULK: [([f64; 3], [Cell4; 2]); 8] = [
    (
        [1.0, 1.0, 1.0],
        [(15, 11.09, 0.999, 1.5e-5), (15, 44.45, 0.999, 1.4e-4)],
    ),
    (
        [1.0, 1.0, 0.95],
        [(15, 6.85, 0.956, 0.0439), (15, 33.62, 0.955, 0.0439)],
    ),
    (
        [0.996, 0.97, 0.99],
        [(7, 7.00, 0.887, 0.0903), (10, 35.24, 0.843, 0.1341)],
    ),
    (
        [0.996, 0.97, 0.95],
        [(7, 6.60, 0.858, 0.1222), (10, 33.27, 0.815, 0.1646)],
    ),
    (
        [0.996, 0.97, 0.9],
        [(6, 5.21, 0.822, 0.1484), (9, 26.26, 0.781, 0.1890)],
    ),
    (
        [0.98, 0.97, 0.95],
        [(6, 5.19, 0.806, 0.1662), (9, 26.50, 0.749, 0.2240)],
    ),
    (
        [0.97, 0.97, 0.95],
        [(5, 4.41, 0.779, 0.1748), (8, 22.75, 0.715, 0.2410)],
    ),
    (
        [0.96, 0.97, 0.95],
        [(5, 4.37, 0.755, 0.2021), (8, 22.71, 0.684, 0.2767)],
    ),
];

struct Outcome {
    pass: bool,
    summary: String,
    failures: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            summary: String::new(),
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.pass = false;
            self.failures.push(what());
        }
    }
}

fn num(c: &Cell) -> f64 {
    match c {
        Cell::Real(x) => *x,
        Cell::Int(i) => *i as f64,
        other => panic!("expected a number, got {other:?}"),
    }
}

fn text(c: &Cell) -> String {
    match c {
        Cell::Text(s) => s.clone(),
        Cell::Int(i) => i.to_string(),
        other => panic!("expected a label, got {other:?}"),
    }
}

fn col(r: &CsvReport, name: &str) -> usize {
    r.column(name).unwrap_or_else(|| panic!("missing column {name}"))
}

fn lambda_close(ours: f64, reference: f64) -> bool {
    let diff = (ours - reference).abs();
    diff <= 0.02 * reference || diff <= 0.05
}

/// Shared protocol of the two table criteria, applied to one reproduced row.
fn check_table_row(o: &mut Outcome, r: &CsvReport, row: &[Cell], label: &str, reference: Cell4) {
    let (m, lambda, p1, p0) = reference;
    let get = |name: &str| num(&row[col(r, name)]);
    o.check(
        get("ref_m [stages]") as u32 == m && get("ref_lambda [pairs]") == lambda,
        || format!("{label}: reproduced reference columns differ from the frozen reference"),
    );
    let p1_at = get("P1_at_ref [probability]");
    let p0_at = get("P0_at_ref [probability]");
    let p1_max = get("P1_max [probability]");
    let lam_at_m = get("lambda_opt_at_ref_m [pairs]");
    o.check((p1_at - p1).abs() <= 0.005, || {
        format!("{label}: P1 at reference {p1_at} vs {p1}")
    });
    o.check((p0_at - p0).abs() <= 0.005, || {
        format!("{label}: P0 at reference {p0_at} vs {p0}")
    });
    o.check(p1_max <= p1 + 0.005, || {
        format!("{label}: our maximum {p1_max} exceeds {p1} + 0.005")
    });
    o.check(lambda_close(lam_at_m, lambda), || {
        format!("{label}: lambda_opt at m = {m} is {lam_at_m}, reference {lambda}")
    });
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let (r, took) = timed(|| cmd_reproduce(Target::Table1, TOL).unwrap());
    o.check(r.rows.len() == 21, || {
        format!("{} rows instead of 21", r.rows.len())
    });
    for row in &r.rows {
        let (v_r, vd) = (num(&row[col(&r, "V_R")]), num(&row[col(&r, "V_D")]));
        let (_, refs) = SPATIAL.iter().find(|(v, _)| *v == v_r).expect("known V_R");
        let k = SPATIAL_VD.iter().position(|&d| d == vd).expect("known V_D");
        check_table_row(&mut o, &r, row, &format!("V_R={v_r} V_D={vd}"), refs[k]);
    }
    o.check(took < Duration::from_secs(60), || {
        format!("took {took:?}, limit 60 s")
    });
    o.summary = format!("Table I, 21 cells in {:.1} s", took.as_secs_f64());
    o
}

fn criteria_2_and_3() -> (Outcome, Outcome) {
    let mut two = Outcome::new();
    let mut three = Outcome::new();
    let (r, took) = timed(|| cmd_reproduce(Target::Table2, TOL).unwrap());
    let mut cells = 0;
    for row in &r.rows {
        let label = text(&row[col(&r, "row")]);
        let vd = num(&row[col(&r, "V_D")]);
        if label == "4*" {
            let m = num(&row[col(&r, "m_opt [stages]")]) as u32;
            let lambda = num(&row[col(&r, "lambda_opt [pairs]")]);
            let p1 = num(&row[col(&r, "P1_max [probability]")]);
            three.check(vd == 0.9, || format!("footnote row has V_D = {vd}"));
            three.check(m == 7, || format!("m_opt = {m}, expected 7"));
            three.check((lambda - 6.92).abs() <= 0.02 * 6.92, || {
                format!("lambda_opt = {lambda}, expected 6.92 +- 2%")
            });
            three.check((p1 - 0.854).abs() <= 0.005, || {
                format!("P1_max = {p1}, expected 0.854 +- 0.005")
            });
            three.summary = format!("V_D=0.9 bulk row 4: m_opt={m}, lambda_opt={lambda:.3}, P1_max={p1:.4}");
            continue;
        }
        let idx: usize = label.parse::<usize>().unwrap() - 1;
        let params = [
            num(&row[col(&r, "V_r")]),
            num(&row[col(&r, "V_r0")]),
            num(&row[col(&r, "V_t")]),
        ];
        two.check(params == BULK[idx].0, || {
            format!("row {label}: parameters {params:?}")
        });
        let k = BULK_VD.iter().position(|&d| d == vd).expect("known V_D");
        check_table_row(
            &mut two,
            &r,
            row,
            &format!("row {label} V_D={vd}"),
            BULK[idx].1[k],
        );
        cells += 1;
    }
    two.check(cells == 16, || format!("{cells} cells instead of 16"));
    two.check(took < Duration::from_secs(300), || {
        format!("took {took:?}, limit 300 s")
    });
    two.summary = format!("Table II, {cells} cells in {:.1} s", took.as_secs_f64());
    if three.summary.is_empty() {
        three.check(false, || "footnote row missing".into());
        three.summary = "V_D=0.9 bulk row 4".into();
    }
    (two, three)
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::new();
    let loss = LossModel::ideal(0.9).unwrap();
    let spec = MultiplexerSpec::new(loss, 1.0, 256, 1.0).unwrap();
    let r = optimize_lambda(&spec, &LambdaSearchConfig::default()).unwrap();
    o.check((r.lambda_opt - 6.46).abs() <= 0.02 * 6.46, || {
        format!("lambda_opt = {}", r.lambda_opt)
    });
    o.check((r.p1_max - 0.8895).abs() <= 0.003, || {
        format!("P1_max = {}", r.p1_max)
    });

    let scan = optimize_units(&loss, 1.0, &powers_of_two(1, 12), &LambdaSearchConfig::default()).unwrap();
    let gaps: Vec<f64> = scan.per_unit.iter().map(|x| 0.9 - x.p1_max).collect();
    o.check(gaps.iter().all(|&g| g >= 0.0), || {
        format!("P1_max above V_b: gaps {gaps:?}")
    });
    o.check(gaps.windows(2).all(|w| w[1] < w[0]), || {
        format!("gap not shrinking: {gaps:?}")
    });
    o.summary = format!(
        "ideal V_b=0.9 N=256: lambda_opt={:.4}, P1={:.5}; gap to V_b {:.2e} -> {:.2e} over N=2..4096",
        r.lambda_opt,
        r.p1_max,
        gaps[0],
        gaps[gaps.len() - 1]
    );
    o
}

fn criterion_5() -> Outcome {
    let mut o = Outcome::new();
    let cfg = LambdaSearchConfig::default();
    let units: Vec<u32> = (1..=64).collect();
    let scan = optimize_units(&LossModel::cavity(0.97, 1.0).unwrap(), 1.0, &units, &cfg).unwrap();
    let b = scan.best();
    o.check(b.units == 9, || format!("N_opt = {}", b.units));
    o.check((b.lambda_opt - 3.014).abs() <= 0.02 * 3.014, || {
        format!("lambda_opt = {}", b.lambda_opt)
    });
    o.check((b.p1_max - 0.706).abs() <= 0.005, || {
        format!("P1_max = {}", b.p1_max)
    });

    let spec = MultiplexerSpec::new(LossModel::cavity(0.8, 1.0).unwrap(), 1.0, 8, 1.0).unwrap();
    let r = optimize_lambda(&spec, &cfg).unwrap();
    o.check(r.local_maxima.len() >= 2, || {
        format!("V_c=0.8 maxima: {:?}", r.local_maxima)
    });
    o.summary = format!(
        "cavity V_c=0.97: N_opt={}, lambda_opt={:.4}, P1={:.4}; V_c=0.8 N=8: {} local maxima",
        b.units,
        b.lambda_opt,
        b.p1_max,
        r.local_maxima.len()
    );
    o
}

fn criterion_6() -> Outcome {
    let mut o = Outcome::new();
    let mut parts = Vec::new();
    for v_r in [0.6, 0.9] {
        let (_, p1) = asymptotic_check_spatial(v_r, 14).unwrap();
        o.check((p1 - E_INV).abs() < 0.02, || format!("V_R={v_r}: P1={p1}"));
        parts.push(format!("V_R={v_r}: |P1-1/e|={:.2e}", (p1 - E_INV).abs()));
    }
    o.summary = format!("spatial asymptote at m=14, {}", parts.join(", "));
    o
}

fn random_spec(rng: &mut ChaCha8Rng, scheme: usize) -> MultiplexerSpec {
    let mut p = || rng.random_range(0.05..=1.0);
    let loss = match scheme {
        0 => LossModel::ideal(p()).unwrap(),
        1 => LossModel::spatial(p(), p()).unwrap(),
        2 => LossModel::cavity(p(), p()).unwrap(),
        _ => LossModel::bulk_time(p(), p(), p(), p()).unwrap(),
    };
    let vd = rng.random_range(0.05..=1.0);
    let units = if loss.requires_power_of_two() || scheme == 0 {
        1 << rng.random_range(0..=10)
    } else {
        rng.random_range(1..=64)
    };
    let lambda = rng.random_range(0.0..50.0);
    let law = if rng.random_bool(0.25) {
        PairLaw::Thermal
    } else {
        PairLaw::Poisson
    };
    MultiplexerSpec::new(loss, vd, units, lambda)
        .unwrap()
        .with_pair_law(law)
}

fn criterion_7() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let spec = random_spec(&mut rng, k % 4);
        let d = output_distribution(&spec, TOL).unwrap();
        let err = (d.total() - 1.0).abs();
        worst = worst.max(err);
        o.check(err < 1e-8, || format!("{spec:?}: |sum - 1| = {err}"));
    }
    o.summary = format!("200 random specs, max |sum P_i - 1| = {worst:.2e}");
    o
}

fn criterion_8() -> Outcome {
    let mut o = Outcome::new();
    let anchors = [
        ("ideal", LossModel::ideal(0.9).unwrap(), 256, 6.46),
        ("spatial", LossModel::spatial(0.95, 1.0).unwrap(), 16, 3.89),
        ("cavity", LossModel::cavity(0.97, 1.0).unwrap(), 9, 3.014),
        (
            "bulk",
            LossModel::bulk_time(0.996, 0.97, 0.95, 1.0).unwrap(),
            128,
            6.60,
        ),
    ];
    let mut parts = Vec::new();
    for (name, loss, units, lambda) in anchors {
        let spec = MultiplexerSpec::new(loss, 1.0, units, lambda).unwrap();
        let analytic = output_distribution(&spec, TOL).unwrap();
        // One re-run with a second fixed seed absorbs the ~1% false-failure
        // rate of a z = 3 test over several bins.
        let mut result = None;
        for seed in [20_240_601u64, 20_240_602] {
            let (cmp, took) = timed(|| {
                let emp = simulate(&SimulationConfig::new(spec, 1_000_000, seed)).unwrap();
                compare_to_analytic(&emp, &analytic, 3.0).unwrap()
            });
            o.check(took < Duration::from_secs(10), || {
                format!("{name}: comparison took {took:?}")
            });
            let pass = cmp.pass;
            result = Some((cmp, seed));
            if pass {
                break;
            }
        }
        let (cmp, seed) = result.unwrap();
        let worst = cmp.worst_bin();
        o.check(cmp.pass, || {
            format!("{name}: bin {} z = {}", worst.label, worst.z_score)
        });
        parts.push(format!("{name} |z|max={:.2} (seed {seed})", worst.z_score.abs()));
    }
    o.summary = format!("Monte Carlo 1e6 trials, z=3: {}", parts.join(", "));
    o
}

fn criterion_9() -> Outcome {
    let mut o = Outcome::new();
    let (v_b, vd) = (0.9, 0.8);
    let mut worst: f64 = 0.0;
    for units in [2u32, 32, 1024] {
        for lambda in [0.5, 5.0, 40.0] {
            let ideal = output_distribution(
                &MultiplexerSpec::new(LossModel::ideal(v_b).unwrap(), vd, units, lambda).unwrap(),
                TOL,
            )
            .unwrap();
            for loss in [
                LossModel::spatial(1.0, v_b).unwrap(),
                LossModel::cavity(1.0, v_b).unwrap(),
                LossModel::bulk_time(1.0, 1.0, 1.0, v_b).unwrap(),
            ] {
                let d = output_distribution(&MultiplexerSpec::new(loss, vd, units, lambda).unwrap(), TOL)
                    .unwrap();
                let len = d.probabilities.len().max(ideal.probabilities.len());
                let diff = (0..len).map(|i| (d.p(i) - ideal.p(i)).abs()).fold(0.0, f64::max);
                worst = worst.max(diff);
                o.check(diff < 1e-12, || {
                    format!("{} N={units} lambda={lambda}: {diff}", loss.name())
                });
            }
        }
    }
    o.summary = format!("collapse to ideal on 3x3 (N, lambda) grid, max diff {worst:.1e}");
    o
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_muxphoton"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn criterion_10() -> Outcome {
    let mut o = Outcome::new();
    let optimize = [
        "optimize",
        "--scheme",
        "bulk",
        "--v-used",
        "0.996",
        "--v-bypass",
        "0.97",
        "--v-medium",
        "0.95",
        "--m-min",
        "0",
        "--m-max",
        "9",
    ];
    let verify = [
        "verify",
        "--scheme",
        "spatial",
        "--v-router",
        "0.95",
        "--m",
        "4",
        "--lambda",
        "3.89",
        "--trials",
        "200000",
        "--seed",
        "11",
    ];
    for args in [&optimize[..], &verify[..]] {
        let a = run_cli(args);
        let b = run_cli(args);
        o.check(!a.is_empty() && a == b, || {
            format!("{} output differs between runs", args[0])
        });
    }
    o.summary = "repeated optimize and verify runs are byte-identical".into();
    o
}

fn main() {
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut report = |n: u32, o: Outcome| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {n:>2}: {}", o.summary);
        for f in &o.failures {
            println!("         {f}");
        }
        results.push((n, o));
    };
    report(1, criterion_1());
    let (two, three) = criteria_2_and_3();
    report(2, two);
    report(3, three);
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    report(7, criterion_7());
    report(8, criterion_8());
    report(9, criterion_9());
    report(10, criterion_10());

    let failed: Vec<u32> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
