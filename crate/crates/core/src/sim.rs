//! Exact event-driven simulation of the impulsive closed loop.
//!
//! Between firings the state flows linearly, so each inter-impulse interval
//! is advanced by one matrix exponential — there is no integration error
//! anywhere. Dense output samples are reconstructed after the fact from
//! `x(t_n + τ) = e^{τA}(X_n + λ_n B)` and never influence the events.

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::model::{HillNonlinearity, LinearPlant};
use crate::modulation::ModulationConfig;

/// One firing of the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Firing index, 0-based.
    pub n: usize,
    /// Firing time (min); `t_{n+1} = t_n + T_n` exactly.
    pub t: f64,
    /// Dose λ_n (µg).
    pub lambda: f64,
    /// Interval to the next firing T_n (min).
    pub period: f64,
    /// State an instant before the jump.
    pub pre: Vector3<f64>,
    /// `pre + λ_n·B`.
    pub post: Vector3<f64>,
}

/// One dense output sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSample {
    pub t: f64,
    pub x: Vector3<f64>,
    /// `ȳ = x₃`, continuous across firings since `C·B = 0`.
    pub ybar: f64,
    /// Measured effect `y = φ(ȳ)`.
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub events: Vec<Event>,
    pub dense: Vec<DenseSample>,
}

/// Simulation horizon: a firing count or an end time (min).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Impulses(usize),
    Time(f64),
}

/// Dose schedule: fully closed-loop, or closed-loop after a forced first
/// dose (an induction bolus fired from the initial state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub x0: Vector3<f64>,
    pub bolus: Option<f64>,
}

impl Scenario {
    pub fn closed_loop(x0: Vector3<f64>) -> Self {
        Scenario { x0, bolus: None }
    }

    /// Start empty and fire `dose` first; the controller takes over after.
    pub fn induction(dose: f64) -> Self {
        Scenario { x0: Vector3::zeros(), bolus: Some(dose) }
    }
}

/// Matrix exponentials keyed by interval length. Closed-loop simulations
/// revisit a handful of distinct `T_n` values (often exactly one), so each
/// exponential is computed once.
pub(crate) struct ExpCache<'p> {
    plant: &'p LinearPlant,
    map: HashMap<i64, Matrix3<f64>>,
}

/// Interval lengths are considered equal when they differ by < 1e-12 min.
const CACHE_QUANTUM: f64 = 1e-12;

impl<'p> ExpCache<'p> {
    pub(crate) fn new(plant: &'p LinearPlant) -> Self {
        ExpCache { plant, map: HashMap::new() }
    }

    pub(crate) fn get(&mut self, t: f64) -> Result<Matrix3<f64>> {
        let key = (t / CACHE_QUANTUM).round() as i64;
        if let Some(m) = self.map.get(&key) {
            return Ok(*m);
        }
        let m = self.plant.mat_exp(t)?;
        self.map.insert(key, m);
        Ok(m)
    }
}

/// One closed-loop step from a pre-jump state: returns `(λ_n, T_n, next
/// pre-jump state)`.
pub fn step(
    plant: &LinearPlant,
    modulation: &ModulationConfig,
    state: &Vector3<f64>,
) -> Result<(f64, f64, Vector3<f64>)> {
    let mut cache = ExpCache::new(plant);
    step_cached(plant, modulation, state, &mut cache)
}

pub(crate) fn step_cached(
    plant: &LinearPlant,
    modulation: &ModulationConfig,
    state: &Vector3<f64>,
    cache: &mut ExpCache,
) -> Result<(f64, f64, Vector3<f64>)> {
    let ybar = state[2];
    let lambda = modulation.eval_dose(ybar)?;
    let period = modulation.eval_period(ybar)?;
    let next = cache.get(period)? * (state + plant.b() * lambda);
    Ok((lambda, period, next))
}

/// Simulate the closed loop from `scenario.x0` over `horizon`, sampling
/// dense output every `dense_dt` minutes.
pub fn simulate(
    plant: &LinearPlant,
    modulation: &ModulationConfig,
    hill: &HillNonlinearity,
    scenario: &Scenario,
    horizon: Horizon,
    dense_dt: f64,
) -> Result<SimTrace> {
    if !(dense_dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dense_dt must be > 0, got {dense_dt}")));
    }
    if scenario.x0.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "initial state must be nonnegative, got {:?}",
            scenario.x0
        )));
    }
    match horizon {
        Horizon::Impulses(0) => {
            return Ok(SimTrace { events: Vec::new(), dense: Vec::new() });
        }
        Horizon::Time(t) if !(t > 0.0) => {
            return Err(Error::InvalidParameter(format!("horizon must be > 0, got {t}")));
        }
        _ => {}
    }

    let mut cache = ExpCache::new(plant);
    let mut events = Vec::new();
    let mut state = scenario.x0;
    let mut t = 0.0;
    let mut n = 0;
    loop {
        let done = match horizon {
            Horizon::Impulses(count) => n >= count,
            Horizon::Time(end) => t >= end,
        };
        if done {
            break;
        }
        let lambda = match (n, scenario.bolus) {
            (0, Some(dose)) => dose,
            _ => modulation.eval_dose(state[2])?,
        };
        let period = modulation.eval_period(state[2])?;
        let post = state + plant.b() * lambda;
        events.push(Event { n, t, lambda, period, pre: state, post });
        state = cache.get(period)? * post;
        t += period;
        n += 1;
    }

    // Dense reconstruction on the global grid t = j·dense_dt: each sample
    // falls in exactly one inter-impulse interval, so refining the grid can
    // never move an event.
    let t_end = t;
    let mut dense = Vec::new();
    let mut j = 0usize;
    for ev in &events {
        let t_next = ev.t + ev.period;
        loop {
            let ts = j as f64 * dense_dt;
            if ts >= t_next || ts > t_end {
                break;
            }
            let x = cache.get(ts - ev.t)? * ev.post;
            dense.push(DenseSample { t: ts, x, ybar: x[2], y: hill.hill(x[2].max(0.0))? });
            j += 1;
        }
    }
    Ok(SimTrace { events, dense })
}

/// Settled tail of a trace: the first index after which consecutive events
/// differ by less than `tol·(1 + magnitude)` in dose, interval, and state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settled {
    pub n_settle: usize,
    pub lambda_inf: f64,
    pub period_inf: f64,
}

/// Requires at least this many events to judge convergence.
pub const CONVERGENCE_MIN_EVENTS: usize = 10;

pub fn detect_convergence(trace: &SimTrace, tol: f64) -> Result<Option<Settled>> {
    if trace.events.len() < CONVERGENCE_MIN_EVENTS {
        return Err(Error::InvalidParameter(format!(
            "need at least {CONVERGENCE_MIN_EVENTS} events, got {}",
            trace.events.len()
        )));
    }
    let close = |a: &Event, b: &Event| {
        (a.lambda - b.lambda).abs() <= tol * (1.0 + a.lambda.abs())
            && (a.period - b.period).abs() <= tol * (1.0 + a.period.abs())
            && (a.pre - b.pre).norm() <= tol * (1.0 + a.pre.norm())
    };
    let mut n_settle = None;
    for i in 0..trace.events.len() - 1 {
        if close(&trace.events[i], &trace.events[i + 1]) {
            n_settle.get_or_insert(i);
        } else {
            n_settle = None;
        }
    }
    Ok(n_settle.map(|n| {
        let last = trace.events.last().unwrap();
        Settled { n_settle: n, lambda_inf: last.lambda, period_inf: last.period }
    }))
}
