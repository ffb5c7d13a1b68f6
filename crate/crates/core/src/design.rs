//! Controller synthesis: choose modulation coefficients so the closed loop
//! admits a prescribed `(λ, T)` cycle with prescribed local feedback slopes.
//!
//! At the cycle's firing concentration `ȳ₀` the requirements are
//! `F(ȳ₀) = λ`, `Φ(ȳ₀) = T`, `F′(ȳ₀) = f_slope`, `Φ′(ȳ₀) = phi_slope`.
//! Since both maps are affine in the measured effect `y = φ(ȳ)`, the chain
//! rule fixes all four coefficients:
//!
//! ```text
//!   k4 = f_slope / φ′(ȳ₀)      k3 = λ − k4·φ(ȳ₀)
//!   k2 = phi_slope / φ′(ȳ₀)    k1 = T − k2·φ(ȳ₀)
//! ```

use crate::cycle::{CycleSolution, CycleSpec};
use crate::error::{Error, Result};
use crate::feasibility::{iff_check, Corridor, IffReport};
use crate::model::{build_plant, HillNonlinearity, LinearPlant, PlantParams};
use crate::modulation::{ModulationConfig, SaturationBounds};
use crate::sim;

/// Everything a synthesis run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRequest {
    pub spec: CycleSpec,
    /// Desired dose slope `F′(ȳ₀) ≤ 0` (µg per concentration unit).
    pub f_slope: f64,
    /// Desired period slope `Φ′(ȳ₀) ≥ 0` (min per concentration unit).
    pub phi_slope: f64,
    pub bounds: SaturationBounds,
    pub plant: PlantParams,
    pub hill: HillNonlinearity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub modulation: ModulationConfig,
    pub cycle: CycleSolution,
    pub warnings: Vec<String>,
}

/// Synthesize the modulation coefficients for a [`DesignRequest`].
///
/// Saturation at the operating point and a failed stability test are
/// reported as warnings, not errors: the coefficient equations are local
/// and remain well-defined either way.
pub fn synthesize(req: &DesignRequest) -> Result<DesignResult> {
    if req.f_slope > 0.0 {
        return Err(Error::InvalidParameter(format!(
            "dose slope must be <= 0, got {}",
            req.f_slope
        )));
    }
    if req.phi_slope < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "period slope must be >= 0, got {}",
            req.phi_slope
        )));
    }
    let plant = build_plant(&req.plant)?;
    let fp = crate::cycle::fixed_point(&plant, &req.spec)?;
    let dphi = req.hill.hill_deriv(fp.ybar0)?;
    if dphi == 0.0 {
        return Err(Error::DegenerateSlope(format!(
            "output map has zero slope at the operating concentration {}",
            fp.ybar0
        )));
    }
    let y0 = req.hill.hill(fp.ybar0)?;
    let k4 = req.f_slope / dphi;
    let k2 = req.phi_slope / dphi;
    let k3 = req.spec.lambda - k4 * y0;
    let k1 = req.spec.period - k2 * y0;
    let modulation = ModulationConfig::new(k1, k2, k3, k4, req.bounds, req.hill)?;

    let mut warnings = Vec::new();
    if !modulation.unsaturated_at(fp.ybar0)? {
        warnings.push(format!(
            "operating point ybar0 = {} sits in a saturated region; the designed \
             slopes are not realized there",
            fp.ybar0
        ));
    }
    let cycle = CycleSolution::solve(&plant, &req.hill, &req.spec, req.f_slope, req.phi_slope)?;
    if !cycle.schur_stable {
        warnings.push(format!(
            "closed loop is not locally stable at the designed cycle \
             (spectral radius {})",
            cycle.spectral_radius
        ));
    }
    Ok(DesignResult { modulation, cycle, warnings })
}

/// Fraction of the corridor above its lower edge within which the entire
/// attained effect range must sit to be flagged as hugging that edge.
pub const LOWER_EDGE_FRACTION: f64 = 0.1;

/// Post-synthesis verification against a corridor.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignVerification {
    /// Exact corridor test for the designed `(λ, T)`.
    pub iff: IffReport,
    /// `‖Q(X) − X‖ / (1 + ‖X‖)`: the designed cycle re-evaluated through the
    /// full nonlinear closed-loop map.
    pub residual: f64,
    pub corridor_compliant: bool,
    /// The attained effect range sits in the bottom
    /// [`LOWER_EDGE_FRACTION`] of the corridor: the regimen holds the
    /// output barely above the lower edge (an overdosing pattern).
    pub hugs_lower_edge: bool,
    /// Attained effect range `(min y, max y)` over one period.
    pub y_attained: (f64, f64),
}

/// Residual threshold for accepting that the synthesized modulation
/// reproduces the designed cycle exactly.
pub const RESIDUAL_TOL: f64 = 1e-9;

pub fn verify_design(
    result: &DesignResult,
    plant: &LinearPlant,
    corridor: &Corridor,
) -> Result<DesignVerification> {
    let iff = iff_check(plant, corridor, &result.cycle.spec)?;
    let x = result.cycle.fixed_point.pre_jump;
    let (_, _, next) = sim::step(plant, &result.modulation, &x)?;
    let residual = (next - x).norm() / (1.0 + x.norm());
    let out = &result.cycle.output;
    let edge = corridor.y_min + LOWER_EDGE_FRACTION * (corridor.y_max - corridor.y_min);
    Ok(DesignVerification {
        iff,
        residual,
        corridor_compliant: iff.holds,
        hugs_lower_edge: out.y_max <= edge,
        y_attained: (out.y_min, out.y_max),
    })
}

/// Convenience helper: scan a slope box for the pair minimizing the
/// closed-loop spectral radius. The synthesis procedure itself treats the
/// slopes as free inputs; this is one defensible way to pick them.
pub fn grid_search_slopes(
    plant: &LinearPlant,
    spec: &CycleSpec,
    f_slope_range: (f64, f64),
    phi_slope_range: (f64, f64),
    steps: usize,
) -> Result<(f64, f64, f64)> {
    if steps < 2 {
        return Err(Error::InvalidParameter(format!("grid needs >= 2 steps, got {steps}")));
    }
    if !(f_slope_range.1 <= 0.0) || !(phi_slope_range.0 >= 0.0) {
        return Err(Error::InvalidParameter(
            "slope box must satisfy f_slope <= 0 <= phi_slope".into(),
        ));
    }
    let mut best = (f64::NAN, f64::NAN, f64::INFINITY);
    for i in 0..steps {
        let f = f_slope_range.0
            + (f_slope_range.1 - f_slope_range.0) * i as f64 / (steps - 1) as f64;
        for j in 0..steps {
            let p = phi_slope_range.0
                + (phi_slope_range.1 - phi_slope_range.0) * j as f64 / (steps - 1) as f64;
            let jac = crate::cycle::jacobian(plant, spec, f, p)?;
            let (_, radius) = crate::cycle::is_schur(&jac);
            if radius < best.2 {
                best = (f, p, radius);
            }
        }
    }
    Ok(best)
}
