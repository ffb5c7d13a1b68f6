//! Subcommand implementations. Each command resolves and validates the
//! whole config, builds every output file in memory, and only then hands
//! the finished buffers back to the driver for writing — no partial output
//! on a bad config.

use crate::config::{Controller, FileConfig};
use crate::output::{bifurcation_csv, dense_csv, events_csv, num};
use crate::svg::trace_svg;
use crate::Failure;
use impulse_dose_core::bifurcation::{sweep, SweepTemplate};
use impulse_dose_core::design::{verify_design, DesignResult};
use impulse_dose_core::feasibility::analyze;
use impulse_dose_core::model::LinearPlant;
use impulse_dose_core::nalgebra::Complex;
use impulse_dose_core::sim::simulate;
use std::fmt::Write;

/// Everything a command produced: files are written (in order) only after
/// the command returned successfully.
pub struct CommandOutput {
    pub exit: i32,
    /// `(file name, content)` pairs, relative to the output directory.
    pub files: Vec<(&'static str, String)>,
    /// Short human summary printed to stdout.
    pub summary: String,
}

fn core_err(context: &str, e: impulse_dose_core::Error) -> Failure {
    Failure::Config(format!("{context}: {e}"))
}

fn plant_line(plant: &LinearPlant) -> String {
    let a = plant.rates();
    format!(
        "plant: rates a = ({}, {}, {}) 1/min, gains g1 = {}, g2 = {}",
        num(a[0]),
        num(a[1]),
        num(a[2]),
        num(plant.g1()),
        num(plant.g2())
    )
}

fn eig_line(e: &Complex<f64>) -> String {
    format!("{} + {}i  (modulus {})", num(e.re), num(e.im), num(e.norm()))
}

pub fn cmd_design(cfg: &FileConfig) -> Result<CommandOutput, Failure> {
    let request = cfg.design_request()?;
    let plant = cfg.plant()?;
    let hill = cfg.hill()?;
    let controller = cfg.controller()?;
    let design: &DesignResult = match &controller {
        Controller::Designed(d) => d,
        Controller::Explicit(_) => unreachable!("design_request() already required [design]"),
    };
    let m = &design.modulation;
    let cycle = &design.cycle;
    let fp = &cycle.fixed_point;

    let mut r = String::new();
    let _ = writeln!(r, "design report");
    let _ = writeln!(r, "=============");
    let _ = writeln!(r, "{}", plant_line(&plant));
    let _ = writeln!(r, "hill: c50 = {}, gamma = {}", num(hill.c50), num(hill.gamma));
    let _ = writeln!(
        r,
        "target cycle: lambda = {} ug, period = {} min",
        num(cycle.spec.lambda),
        num(cycle.spec.period)
    );
    let _ = writeln!(
        r,
        "requested slopes: f_slope = {}, phi_slope = {}",
        num(request.f_slope),
        num(request.phi_slope)
    );
    let _ = writeln!(r);
    let _ = writeln!(r, "modulation coefficients");
    let _ = writeln!(r, "  k1 = {}", num(m.k1));
    let _ = writeln!(r, "  k2 = {}", num(m.k2));
    let _ = writeln!(r, "  k3 = {}", num(m.k3));
    let _ = writeln!(r, "  k4 = {}", num(m.k4));
    let _ = writeln!(
        r,
        "saturation box: interval [{}, {}] min, dose [{}, {}] ug",
        num(m.bounds.phi_lo),
        num(m.bounds.phi_hi),
        num(m.bounds.f_lo),
        num(m.bounds.f_hi)
    );
    let _ = writeln!(r);
    let _ = writeln!(r, "fixed point");
    let _ = writeln!(
        r,
        "  pre-jump  x = ({}, {}, {})",
        num(fp.pre_jump[0]),
        num(fp.pre_jump[1]),
        num(fp.pre_jump[2])
    );
    let _ = writeln!(
        r,
        "  post-jump x = ({}, {}, {})",
        num(fp.post_jump[0]),
        num(fp.post_jump[1]),
        num(fp.post_jump[2])
    );
    let _ = writeln!(r, "  ybar at firings = {}", num(fp.ybar0));
    let _ = writeln!(r);
    let _ = writeln!(r, "jacobian eigenvalues");
    for e in &cycle.eigenvalues {
        let _ = writeln!(r, "  {}", eig_line(e));
    }
    let _ = writeln!(r, "spectral radius = {}", num(cycle.spectral_radius));
    let _ = writeln!(
        r,
        "stability: {}",
        if cycle.schur_stable {
            "Schur stable (cycle is locally orbitally stable)"
        } else {
            "NOT Schur stable"
        }
    );
    let _ = writeln!(r);
    match cfg.corridor(&hill)? {
        None => {
            let _ = writeln!(r, "corridor check: not requested (no [corridor] section)");
        }
        Some((corridor, _)) => {
            let v = verify_design(design, &plant, &corridor)
                .map_err(|e| core_err("corridor check", e))?;
            let _ = writeln!(
                r,
                "corridor check (y in [{}, {}])",
                num(corridor.y_min),
                num(corridor.y_max)
            );
            let _ = writeln!(
                r,
                "  attained effect range: [{}, {}]",
                num(v.y_attained.0),
                num(v.y_attained.1)
            );
            let _ = writeln!(
                r,
                "  attained concentration range: [{}, {}] vs corridor [{}, {}]",
                num(v.iff.ybar_attained.0),
                num(v.iff.ybar_attained.1),
                num(corridor.ybar_min),
                num(corridor.ybar_max)
            );
            let _ = writeln!(
                r,
                "  exact corridor condition: {}",
                if v.corridor_compliant { "satisfied" } else { "NOT satisfied" }
            );
            let _ = writeln!(
                r,
                "  minimal feasible dose at this period: {} ug",
                num(v.iff.lambda_opt)
            );
            let _ = writeln!(
                r,
                "  hugs lower corridor edge: {}",
                if v.hugs_lower_edge { "yes" } else { "no" }
            );
            let _ = writeln!(r, "  closed-loop fixed-point residual: {:e}", v.residual);
        }
    }
    let _ = writeln!(r);
    if design.warnings.is_empty() {
        let _ = writeln!(r, "warnings: none");
    } else {
        let _ = writeln!(r, "warnings:");
        for w in &design.warnings {
            let _ = writeln!(r, "  - {w}");
        }
    }

    let summary = format!(
        "designed k1 = {}, k2 = {}, k3 = {}, k4 = {}; spectral radius {} ({})",
        num(m.k1),
        num(m.k2),
        num(m.k3),
        num(m.k4),
        num(cycle.spectral_radius),
        if cycle.schur_stable { "stable" } else { "unstable" }
    );
    Ok(CommandOutput {
        exit: if cycle.schur_stable { 0 } else { 1 },
        files: vec![("design_report.txt", r)],
        summary,
    })
}

pub fn cmd_feasibility(cfg: &FileConfig) -> Result<CommandOutput, Failure> {
    let plant = cfg.plant()?;
    let (corridor, lambda_max) = cfg.required_corridor()?;
    let spec = cfg.cycle_spec()?;
    let report = analyze(&plant, &corridor, &spec, lambda_max)
        .map_err(|e| core_err("feasibility", e))?;

    let mut r = String::new();
    let _ = writeln!(r, "feasibility report");
    let _ = writeln!(r, "==================");
    let _ = writeln!(r, "{}", plant_line(&plant));
    let _ = writeln!(
        r,
        "corridor: y in [{}, {}] percent  =>  ybar in [{}, {}]",
        num(corridor.y_min),
        num(corridor.y_max),
        num(corridor.ybar_min),
        num(corridor.ybar_max)
    );
    let _ = writeln!(
        r,
        "regimen under test: lambda = {} ug every {} min (budget lambda_max = {} ug)",
        num(spec.lambda),
        num(spec.period),
        num(lambda_max)
    );
    let _ = writeln!(r);
    let (lo, hi) = report.necessary_interval;
    let _ = writeln!(r, "necessary dose interval at this period: [{}, {}] ug", num(lo), num(hi));
    match report.sufficient_simple {
        Some(w) => {
            let _ = writeln!(
                r,
                "simple sufficient condition: holds, witness dose = {} ug",
                num(w)
            );
        }
        None => {
            let _ = writeln!(
                r,
                "simple sufficient condition: not conclusive at this period/budget"
            );
        }
    }
    let iff = &report.iff;
    let _ = writeln!(r);
    let _ = writeln!(r, "exact corridor condition");
    let _ = writeln!(
        r,
        "  attained concentration range: [{}, {}]",
        num(iff.ybar_attained.0),
        num(iff.ybar_attained.1)
    );
    let _ = writeln!(
        r,
        "  kernel swing ratio = {} vs corridor ratio = {} ({})",
        num(iff.ratio),
        num(iff.corridor_ratio),
        if iff.ratio_ok { "some dose fits" } else { "no dose can fit" }
    );
    let _ = writeln!(r, "  minimal feasible dose at this period: {} ug", num(iff.lambda_opt));
    let _ = writeln!(r, "  relative slack: {:e}", iff.tol);
    let _ = writeln!(r);
    let _ = writeln!(r, "verdict: {}", if iff.holds { "FEASIBLE" } else { "NOT FEASIBLE" });

    let summary = format!(
        "{}: lambda = {} every {} min vs y in [{}, {}]; minimal feasible dose {}",
        if iff.holds { "feasible" } else { "not feasible" },
        num(spec.lambda),
        num(spec.period),
        num(corridor.y_min),
        num(corridor.y_max),
        num(iff.lambda_opt)
    );
    Ok(CommandOutput {
        exit: if iff.holds { 0 } else { 1 },
        files: vec![("feasibility_report.txt", r)],
        summary,
    })
}

pub fn cmd_simulate(cfg: &FileConfig, want_svg: bool) -> Result<CommandOutput, Failure> {
    let plant = cfg.plant()?;
    let hill = cfg.hill()?;
    let controller = cfg.controller()?;
    let resolved = cfg.scenario()?;
    let trace = simulate(
        &plant,
        controller.modulation(),
        &hill,
        &resolved.scenario,
        resolved.horizon,
        resolved.dense_dt,
    )
    .map_err(|e| core_err("simulate", e))?;

    let mut files = vec![("events.csv", events_csv(&trace)), ("dense.csv", dense_csv(&trace))];
    if want_svg {
        files.push(("trace.svg", trace_svg(&trace)));
    }
    let span = trace.events.last().map(|ev| ev.t + ev.period).unwrap_or(0.0);
    let summary = format!(
        "simulated {} impulses over {} min ({} dense samples)",
        trace.events.len(),
        num(span),
        trace.dense.len()
    );
    Ok(CommandOutput { exit: 0, files, summary })
}

pub fn cmd_bifurcate(cfg: &FileConfig) -> Result<CommandOutput, Failure> {
    let params = cfg.plant_params()?;
    // Realizes the plant once so parameter errors surface before the sweep.
    let _ = cfg.plant()?;
    let controller = cfg.controller()?;
    let sweep_cfg = cfg.sweep_config()?;
    let template = SweepTemplate { plant: params, modulation: controller.modulation().clone() };
    let diagram = sweep(&template, &sweep_cfg).map_err(|e| core_err("bifurcate", e))?;

    let n_aperiodic = diagram.rows.iter().filter(|row| row.period.is_none()).count();
    let max_period =
        diagram.rows.iter().filter_map(|row| row.period).max().unwrap_or(0);
    let n_saturated = diagram.rows.iter().filter(|row| row.any_saturated()).count();
    let summary = format!(
        "swept {} over [{}, {}] in {} steps: max period {}, {} aperiodic, {} saturated rows",
        diagram.parameter.name(),
        num(sweep_cfg.lo),
        num(sweep_cfg.hi),
        sweep_cfg.steps,
        max_period,
        n_aperiodic,
        n_saturated
    );
    Ok(CommandOutput {
        exit: 0,
        files: vec![("bifurcation.csv", bifurcation_csv(&diagram))],
        summary,
    })
}
