//! Parameter sweeps of the closed loop with the controller frozen: orbit
//! structure (period detection, periodic points, saturation flags) charted
//! against a plant parameter.
//!
//! Sweep rows are independent of one another; with the `parallel` feature
//! (default) they run on a rayon pool, and [`sweep_serial`] is always
//! available for single-threaded use or comparison.

use nalgebra::Vector3;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{HillNonlinearity, LinearPlant, PlantParams, GAMMA_MAX};
use crate::modulation::ModulationConfig;
use crate::sim::{step_cached, ExpCache};

/// Which plant parameter the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Rate scale. Each row rebuilds the rate matrix at the swept value with
    /// the default gain split `g1 = v1·α`, `g2 = v2·v3·α²` (the split is
    /// similarity gauge, not physics).
    Alpha,
    /// Hill exponent. Each row swaps the Hill map inside the controller
    /// composition and in the reported effect; the affine coefficients stay
    /// at their designed values.
    Gamma,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Alpha => "alpha",
            SweepParameter::Gamma => "gamma",
        }
    }
}

/// Where each row's orbit starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    /// Iterate the *nominal* closed loop from empty state for the transient
    /// length and start every row from the resulting steady state
    /// (continuation from the nominal attractor).
    NominalSteadyState,
    /// Explicit common initial state.
    State(Vector3<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub lo: f64,
    pub hi: f64,
    /// Number of grid points, ≥ 2 (endpoints included).
    pub steps: usize,
    /// Impulses discarded before recording.
    pub transient_impulses: usize,
    /// Pre-jump states recorded for period detection.
    pub record_impulses: usize,
    /// Largest period searched; at most `record_impulses / 2`.
    pub max_period: usize,
    /// Relative tolerance for period detection.
    pub tol: f64,
    pub start: Start,
}

impl SweepConfig {
    /// Defaults sized for this plant family's contraction rates: transient
    /// 500 ≫ settling time, 128 recorded states, periods up to 32.
    pub fn new(parameter: SweepParameter, lo: f64, hi: f64, steps: usize) -> Self {
        SweepConfig {
            parameter,
            lo,
            hi,
            steps,
            transient_impulses: 500,
            record_impulses: 128,
            max_period: 32,
            tol: 1e-6,
            start: Start::NominalSteadyState,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) {
            return Err(Error::InvalidParameter(format!(
                "sweep range must satisfy lo < hi, got ({}, {})",
                self.lo, self.hi
            )));
        }
        if !(self.lo > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "swept parameter must stay positive, got lo = {}",
                self.lo
            )));
        }
        if self.parameter == SweepParameter::Gamma && self.hi > GAMMA_MAX {
            return Err(Error::InvalidParameter(format!(
                "gamma sweep exceeds {GAMMA_MAX}, got hi = {}",
                self.hi
            )));
        }
        if self.steps < 2 {
            return Err(Error::InvalidParameter(format!("steps must be >= 2, got {}", self.steps)));
        }
        if self.max_period == 0 || self.max_period * 2 > self.record_impulses {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= max_period <= record_impulses/2, got {} vs {}",
                self.max_period, self.record_impulses
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", self.tol)));
        }
        Ok(())
    }

    fn value_at(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64
    }
}

/// Whether a periodic point fires against a saturation border.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SaturationFlags {
    pub dose_at_lo: bool,
    pub dose_at_hi: bool,
    pub period_at_lo: bool,
    pub period_at_hi: bool,
}

impl SaturationFlags {
    pub fn any(&self) -> bool {
        self.dose_at_lo || self.dose_at_hi || self.period_at_lo || self.period_at_hi
    }
}

/// One state of a detected periodic orbit, with the dose/interval it fires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicPoint {
    pub x: Vector3<f64>,
    pub lambda: f64,
    pub period: f64,
    pub saturation: SaturationFlags,
}

/// One parameter value's steady-state classification.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    /// Detected orbit period, or `None` when nothing ≤ `max_period` fits.
    pub period: Option<usize>,
    /// The p points of the orbit in firing order (last recorded cycle);
    /// for an undetected period, the single last recorded state.
    pub points: Vec<PeriodicPoint>,
    /// Realized dose range over the recorded window.
    pub lambda_range: (f64, f64),
    /// Realized interval range over the recorded window.
    pub period_range: (f64, f64),
}

impl SweepRow {
    pub fn any_saturated(&self) -> bool {
        self.points.iter().any(|p| p.saturation.any())
    }
}

/// Saturation flags of one periodic point via exact border comparison —
/// clamping emits the bound values exactly, so equality is the right test.
pub fn classify_saturation(modulation: &ModulationConfig, lambda: f64, period: f64) -> SaturationFlags {
    let b = &modulation.bounds;
    SaturationFlags {
        dose_at_lo: lambda == b.f_lo,
        dose_at_hi: lambda == b.f_hi,
        period_at_lo: period == b.phi_lo,
        period_at_hi: period == b.phi_hi,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationDiagram {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
}

/// Smallest `p ≤ max_period` with `‖X_{n+p} − X_n‖ ≤ tol·(1 + ‖X_n‖)` for
/// every recorded index `n`.
pub fn detect_period(samples: &[Vector3<f64>], max_period: usize, tol: f64) -> Result<Option<usize>> {
    if samples.len() < 2 * max_period {
        return Err(Error::InvalidParameter(format!(
            "need at least 2*max_period = {} samples, got {}",
            2 * max_period,
            samples.len()
        )));
    }
    'candidates: for p in 1..=max_period {
        for n in 0..samples.len() - p {
            if (samples[n + p] - samples[n]).norm() > tol * (1.0 + samples[n].norm()) {
                continue 'candidates;
            }
        }
        return Ok(Some(p));
    }
    Ok(None)
}

/// The plant/controller family being swept: nominal parameters plus the
/// frozen modulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTemplate {
    pub plant: PlantParams,
    pub modulation: ModulationConfig,
}

fn row_system(template: &SweepTemplate, parameter: SweepParameter, value: f64) -> Result<(LinearPlant, ModulationConfig)> {
    match parameter {
        SweepParameter::Alpha => {
            let v = template.plant.v;
            let rates = [v[0] * value, v[1] * value, v[2] * value];
            let plant = LinearPlant::from_rates(rates, v[0] * value, v[1] * v[2] * value * value)?;
            Ok((plant, template.modulation.clone()))
        }
        SweepParameter::Gamma => {
            let plant = crate::model::build_plant(&template.plant)?;
            let hill = HillNonlinearity::new(template.modulation.hill.c50, value)?;
            let mut modulation = template.modulation.clone();
            modulation.hill = hill;
            Ok((plant, modulation))
        }
    }
}

fn nominal_steady_state(template: &SweepTemplate, transient: usize) -> Result<Vector3<f64>> {
    let plant = crate::model::build_plant(&template.plant)?;
    let mut cache = ExpCache::new(&plant);
    let mut x = Vector3::zeros();
    for _ in 0..transient.max(64) {
        let (_, _, next) = step_cached(&plant, &template.modulation, &x, &mut cache)?;
        x = next;
    }
    Ok(x)
}

fn sweep_row(
    template: &SweepTemplate,
    cfg: &SweepConfig,
    x0: Vector3<f64>,
    value: f64,
) -> Result<SweepRow> {
    let (plant, modulation) = row_system(template, cfg.parameter, value)?;
    let mut cache = ExpCache::new(&plant);
    let mut x = x0;
    for _ in 0..cfg.transient_impulses {
        let (_, _, next) = step_cached(&plant, &modulation, &x, &mut cache)?;
        x = next;
    }
    let mut states = Vec::with_capacity(cfg.record_impulses);
    let mut fires = Vec::with_capacity(cfg.record_impulses);
    for _ in 0..cfg.record_impulses {
        states.push(x);
        let (lambda, period, next) = step_cached(&plant, &modulation, &x, &mut cache)?;
        fires.push((lambda, period));
        x = next;
    }
    let period = detect_period(&states, cfg.max_period, cfg.tol)?;
    let span = period.unwrap_or(1);
    let tail = states.len() - span;
    let points = (tail..states.len())
        .map(|i| PeriodicPoint {
            x: states[i],
            lambda: fires[i].0,
            period: fires[i].1,
            saturation: classify_saturation(&modulation, fires[i].0, fires[i].1),
        })
        .collect();
    let lambda_range = fires.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, f| {
        (acc.0.min(f.0), acc.1.max(f.0))
    });
    let period_range = fires.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, f| {
        (acc.0.min(f.1), acc.1.max(f.1))
    });
    Ok(SweepRow { value, period, points, lambda_range, period_range })
}

/// Run the sweep serially, in parameter order.
pub fn sweep_serial(template: &SweepTemplate, cfg: &SweepConfig) -> Result<BifurcationDiagram> {
    cfg.validate()?;
    let x0 = start_state(template, cfg)?;
    let rows = (0..cfg.steps)
        .map(|i| sweep_row(template, cfg, x0, cfg.value_at(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BifurcationDiagram { parameter: cfg.parameter, rows })
}

/// Run the sweep, one rayon task per row (with the `parallel` feature;
/// otherwise identical to [`sweep_serial`]). Row results are assembled in
/// parameter order regardless of completion order.
pub fn sweep(template: &SweepTemplate, cfg: &SweepConfig) -> Result<BifurcationDiagram> {
    cfg.validate()?;
    let x0 = start_state(template, cfg)?;
    #[cfg(feature = "parallel")]
    {
        let rows = (0..cfg.steps)
            .into_par_iter()
            .map(|i| sweep_row(template, cfg, x0, cfg.value_at(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BifurcationDiagram { parameter: cfg.parameter, rows })
    }
    #[cfg(not(feature = "parallel"))]
    {
        let rows = (0..cfg.steps)
            .map(|i| sweep_row(template, cfg, x0, cfg.value_at(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BifurcationDiagram { parameter: cfg.parameter, rows })
    }
}

fn start_state(template: &SweepTemplate, cfg: &SweepConfig) -> Result<Vector3<f64>> {
    match cfg.start {
        Start::NominalSteadyState => nominal_steady_state(template, cfg.transient_impulses),
        Start::State(x0) => {
            if x0.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "start state must be nonnegative, got {x0:?}"
                )));
            }
            Ok(x0)
        }
    }
}
