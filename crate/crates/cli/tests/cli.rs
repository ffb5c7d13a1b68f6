//! End-to-end tests of the installed binary: exit codes, file schemas,
//! byte stability, and the JSON error records. Physics already has its own
//! suite in the core crate; here a run only has to agree with the library.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_impulse-dose"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary must spawn")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout must be UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr must be UTF-8")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("{name} must exist: {e}"))
}

const NOMINAL_DESIGN: &str = r#"
[design]
lambda = 300.0
period = 20.0
f_slope = -0.15
phi_slope = 0.29
"#;

const NOMINAL_MODULATION: &str = r#"
[modulation]
k1 = 21.513304929121425
k2 = -0.7119461732338956
k3 = 299.2172560711441
k4 = 0.3682480206382219
"#;

#[test]
fn print_defaults_round_trips_as_runnable_config() {
    let out = run(&["--print-defaults"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("[plant]") && text.contains("[sweep]"));

    // The printed text is itself a valid config for every subcommand.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &text);
    let design = run(&["design", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(design.status.code(), Some(0), "{}", stderr(&design));
    let feas = run(&["feasibility", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(feas.status.code(), Some(0), "{}", stderr(&feas));
}

#[test]
fn design_reports_the_known_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), NOMINAL_DESIGN);
    let out = run(&["design", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let report = read(dir.path(), "design_report.txt");
    assert!(report.contains("k1 = 21.51330493"), "report:\n{report}");
    assert!(report.contains("k2 = -0.7119461732"));
    assert!(report.contains("k3 = 299.2172561"));
    assert!(report.contains("k4 = 0.3682480206"));
    assert!(report.contains("Schur stable"));
    assert!(report.contains("corridor check: not requested"));
    assert!(stdout(&out).contains("k1 = 21.51330493"));
}

#[test]
fn design_report_eigenvalues_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), NOMINAL_DESIGN);
    run(&["design", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    let report = read(dir.path(), "design_report.txt");

    let design = impulse_dose_core::design::synthesize(&impulse_dose_core::design::DesignRequest {
        spec: impulse_dose_core::cycle::CycleSpec::new(300.0, 20.0).unwrap(),
        f_slope: -0.15,
        phi_slope: 0.29,
        bounds: impulse_dose_core::modulation::SaturationBounds::default_clinical(),
        plant: impulse_dose_core::model::PlantParams::nominal(),
        hill: impulse_dose_core::model::HillNonlinearity::nominal(),
    })
    .unwrap();
    for e in &design.cycle.eigenvalues {
        let rendered = format!("{:.10}", e.re);
        // 10 significant digits of each real part appear in the report.
        assert!(
            report.contains(&rendered[..11.min(rendered.len())]),
            "eigenvalue {} missing from report:\n{report}",
            e.re
        );
    }
}

#[test]
fn zero_slope_design_reports_a_constant_regimen() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[design]
lambda = 300.0
period = 20.0
f_slope = 0.0
phi_slope = 0.0
"#,
    );
    let out = run(&["design", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = read(dir.path(), "design_report.txt");
    // k2 = k4 = 0: the regimen is open loop, k1/k3 carry the cycle itself.
    assert!(report.contains("k2 = 0\n"), "report:\n{report}");
    assert!(report.contains("k4 = 0\n"));
    assert!(report.contains("k1 = 20.00000000"));
    assert!(report.contains("k3 = 300.0000000"));
}

#[test]
fn feasibility_accepts_the_reference_regimen_and_rejects_zero_dose() {
    let dir = tempfile::tempdir().unwrap();
    let base = r#"
[corridor]
y_min = 2.0
y_max = 10.0

[cycle]
lambda = {LAMBDA}
period = 37.3834
"#;
    let cfg = write_config(dir.path(), &base.replace("{LAMBDA}", "415.8412"));
    let out = run(&["feasibility", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = read(dir.path(), "feasibility_report.txt");
    assert!(report.contains("verdict: FEASIBLE"), "report:\n{report}");

    let cfg = write_config(dir.path(), &base.replace("{LAMBDA}", "0.0"));
    let out = run(&["feasibility", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "zero dose cannot hold a positive corridor");
    assert!(read(dir.path(), "feasibility_report.txt").contains("verdict: NOT FEASIBLE"));
}

#[test]
fn feasibility_lambda_opt_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[corridor]
y_min = 2.0
y_max = 10.0

[cycle]
lambda = 300.0
period = 20.0
"#,
    );
    let out = run(&["feasibility", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    // Overdosing regimen: analysis-negative exit, report still written.
    assert_eq!(out.status.code(), Some(1));
    let report = read(dir.path(), "feasibility_report.txt");

    let plant = impulse_dose_core::model::build_plant(
        &impulse_dose_core::model::PlantParams::nominal(),
    )
    .unwrap();
    let hill = impulse_dose_core::model::HillNonlinearity::nominal();
    let corridor = impulse_dose_core::feasibility::Corridor::new(2.0, 10.0, &hill).unwrap();
    let iff = impulse_dose_core::feasibility::iff_check(
        &plant,
        &corridor,
        &impulse_dose_core::cycle::CycleSpec::new(300.0, 20.0).unwrap(),
    )
    .unwrap();
    let expected = format!("minimal feasible dose at this period: {:.7} ug", iff.lambda_opt);
    assert!(report.contains(&expected), "expected `{expected}` in:\n{report}");
}

#[test]
fn simulate_writes_exact_headers_and_a_constant_designed_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "{NOMINAL_MODULATION}
[scenario]
x0 = [269.597430920153, 84.58193228346, 13.624940024233]
horizon_impulses = 12
dense_dt = 0.5
"
        ),
    );
    let out = run(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let events = read(dir.path(), "events.csv");
    let mut lines = events.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,t,lambda,T,x1_pre,x2_pre,x3_pre,x1_post,x2_post,x3_post"
    );
    // Started on the fixed point: every event fires the designed regimen.
    let mut n = 0;
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 10, "line {i}: {line}");
        assert_eq!(cols[0], i.to_string());
        let lambda: f64 = cols[2].parse().unwrap();
        let period: f64 = cols[3].parse().unwrap();
        assert!((lambda - 300.0).abs() < 1e-6, "line {i}: lambda = {lambda}");
        assert!((period - 20.0).abs() < 1e-6, "line {i}: period = {period}");
        n += 1;
    }
    assert_eq!(n, 12);

    let dense = read(dir.path(), "dense.csv");
    assert_eq!(dense.lines().next().unwrap(), "t,x1,x2,x3,ybar,y");
    assert!(events.ends_with('\n') && dense.ends_with('\n'));
    assert!(!events.contains('\r') && !dense.contains('\r'));
}

#[test]
fn simulate_output_is_byte_stable_across_runs() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let body = format!(
        "{NOMINAL_DESIGN}
[scenario]
x0 = [0.0, 0.0, 0.0]
bolus = 450.0
horizon_impulses = 40
dense_dt = 0.25
"
    );
    let cfg_a = write_config(dir_a.path(), &body);
    let cfg_b = write_config(dir_b.path(), &body);
    assert!(run(&["simulate", "--config", &cfg_a, "--out", dir_a.path().to_str().unwrap()])
        .status
        .success());
    assert!(run(&["simulate", "--config", &cfg_b, "--out", dir_b.path().to_str().unwrap()])
        .status
        .success());
    assert_eq!(read(dir_a.path(), "events.csv"), read(dir_b.path(), "events.csv"));
    assert_eq!(read(dir_a.path(), "dense.csv"), read(dir_b.path(), "dense.csv"));
}

#[test]
fn simulate_dense_effect_range_matches_the_cycle_output_range() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "{NOMINAL_MODULATION}
[scenario]
x0 = [269.597430920153, 84.58193228346, 13.624940024233]
horizon_impulses = 50
dense_dt = 0.01
"
        ),
    );
    assert!(run(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()])
        .status
        .success());
    let dense = read(dir.path(), "dense.csv");
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for line in dense.lines().skip(1) {
        let y: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    let plant = impulse_dose_core::model::build_plant(
        &impulse_dose_core::model::PlantParams::nominal(),
    )
    .unwrap();
    let range = impulse_dose_core::cycle::output_range(
        &plant,
        &impulse_dose_core::model::HillNonlinearity::nominal(),
        &impulse_dose_core::cycle::CycleSpec::new(300.0, 20.0).unwrap(),
    )
    .unwrap();
    assert!((y_min - range.y_min).abs() < 1e-4, "{y_min} vs {}", range.y_min);
    assert!((y_max - range.y_max).abs() < 1e-4, "{y_max} vs {}", range.y_max);
}

#[test]
fn simulate_zero_horizon_writes_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "{NOMINAL_MODULATION}
[scenario]
horizon_impulses = 0
"
        ),
    );
    let out = run(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        read(dir.path(), "events.csv"),
        "n,t,lambda,T,x1_pre,x2_pre,x3_pre,x1_post,x2_post,x3_post\n"
    );
    assert_eq!(read(dir.path(), "dense.csv"), "t,x1,x2,x3,ybar,y\n");
}

#[test]
fn simulate_svg_flag_renders_both_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "{NOMINAL_MODULATION}
[scenario]
horizon_impulses = 5
dense_dt = 0.5
"
        ),
    );
    let no_svg = run(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(no_svg.status.success());
    assert!(!dir.path().join("trace.svg").exists(), "svg only on request");

    let with_svg =
        run(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap(), "--svg"]);
    assert!(with_svg.status.success());
    let svg = read(dir.path(), "trace.svg");
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("</svg>"));
    assert_eq!(svg.matches("<polyline").count(), 2, "one curve each for ybar and y");
}

#[test]
fn bifurcate_degenerate_sweep_recovers_the_nominal_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "{NOMINAL_MODULATION}
[sweep]
parameter = \"alpha\"
lo = 0.0374
hi = 0.03745
steps = 2
transient_impulses = 400
record_impulses = 64
max_period = 8
"
        ),
    );
    let out = run(&["bifurcate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = read(dir.path(), "bifurcation.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "param,value,period,point_index,x1,x2,x3,saturated");

    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "alpha");
    assert_eq!(first[1], "0.03740000000");
    assert_eq!(first[2], "1", "nominal alpha settles on the 1-cycle");
    assert_eq!(first[3], "0");
    let x1: f64 = first[4].parse().unwrap();
    assert!((x1 - 269.6).abs() < 0.1, "x1 = {x1}");
    assert_eq!(first[7], "false");
}

#[test]
fn bifurcate_csv_matches_the_library_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "{NOMINAL_MODULATION}
[sweep]
parameter = \"gamma\"
lo = 1.8
hi = 3.4
steps = 5
transient_impulses = 300
record_impulses = 64
max_period = 8
"
        ),
    );
    assert!(run(&["bifurcate", "--config", &cfg, "--out", dir.path().to_str().unwrap()])
        .status
        .success());
    let csv = read(dir.path(), "bifurcation.csv");

    let modulation = impulse_dose_core::modulation::ModulationConfig::new(
        21.513304929121425,
        -0.7119461732338956,
        299.2172560711441,
        0.3682480206382219,
        impulse_dose_core::modulation::SaturationBounds::default_clinical(),
        impulse_dose_core::model::HillNonlinearity::nominal(),
    )
    .unwrap();
    let template = impulse_dose_core::bifurcation::SweepTemplate {
        plant: impulse_dose_core::model::PlantParams::nominal(),
        modulation,
    };
    let mut cfg_lib = impulse_dose_core::bifurcation::SweepConfig::new(
        impulse_dose_core::bifurcation::SweepParameter::Gamma,
        1.8,
        3.4,
        5,
    );
    cfg_lib.transient_impulses = 300;
    cfg_lib.record_impulses = 64;
    cfg_lib.max_period = 8;
    let diagram = impulse_dose_core::bifurcation::sweep(&template, &cfg_lib).unwrap();

    let rows: Vec<&str> = csv.lines().skip(1).collect();
    let expected_rows: usize = diagram.rows.iter().map(|r| r.points.len()).sum();
    assert_eq!(rows.len(), expected_rows, "one CSV row per periodic point");
    let mut k = 0;
    for row in &diagram.rows {
        for point in &row.points {
            let cols: Vec<&str> = rows[k].split(',').collect();
            let x1: f64 = cols[4].parse().unwrap();
            assert!(
                (x1 - point.x[0]).abs() <= 1e-6 * (1.0 + point.x[0].abs()),
                "row {k}: {x1} vs {}",
                point.x[0]
            );
            k += 1;
        }
    }
}

#[test]
fn invalid_configs_exit_2_with_an_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap().to_string();

    // Config file missing entirely.
    let missing = dir.path().join("absent.toml");
    let out = run(&["design", "--config", missing.to_str().unwrap(), "--out", &out_dir]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("\"kind\":\"config\""), "{}", stderr(&out));

    // Not TOML at all.
    let cfg = write_config(dir.path(), "this is : not toml [");
    let out = run(&["design", "--config", &cfg, "--out", &out_dir]);
    assert_eq!(out.status.code(), Some(2));

    // Required section absent.
    let cfg = write_config(dir.path(), "[plant]\nalpha = 0.0374\n");
    let out = run(&["design", "--config", &cfg, "--out", &out_dir]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("[design]"), "{}", stderr(&out));

    // Both controller sections present.
    let cfg = write_config(dir.path(), &format!("{NOMINAL_DESIGN}{NOMINAL_MODULATION}"));
    let out = run(&["design", "--config", &cfg, "--out", &out_dir]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("exactly one"), "{}", stderr(&out));

    // Constraint violation inside a section (k2 > 0).
    let cfg = write_config(
        dir.path(),
        "[modulation]\nk1 = 20.0\nk2 = 0.5\nk3 = 300.0\nk4 = 0.0\n
[scenario]\nhorizon_impulses = 1\n",
    );
    let out = run(&["simulate", "--config", &cfg, "--out", &out_dir]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("k2"), "{}", stderr(&out));

    // Unknown key (typo protection).
    let cfg = write_config(dir.path(), "[plant]\nalhpa = 0.0374\n");
    let out = run(&["design", "--config", &cfg, "--out", &out_dir]);
    assert_eq!(out.status.code(), Some(2));

    // Nothing was written on any of these.
    assert!(!dir.path().join("design_report.txt").exists());
    assert!(!dir.path().join("events.csv").exists());
}

#[test]
fn unwritable_output_path_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), NOMINAL_DESIGN);
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "occupied").unwrap();
    let out_sub = blocker.join("sub");
    let out = run(&["design", "--config", &cfg, "--out", out_sub.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("\"kind\":\"io\""), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_2() {
    let out = run(&["design"]); // missing --config
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["frobnicate", "--config", "x.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}
