//! Periodic solutions of the impulsive loop: 1-cycle fixed points, the
//! periodic output kernel and its extrema, and Jacobian-based orbital
//! stability.
//!
//! A 1-cycle firing dose `λ` every `T` minutes has pre-jump state `X`
//! solving `X = e^{TA}(X + λB)`, i.e. post-jump `X⁺ = λ(I − e^{TA})⁻¹B`
//! and `X = e^{TA}X⁺`. Within a period the output traces
//! `ȳ(t_n + τ) = λ·ξ_T(τ)` with kernel `ξ_T(τ) = C·e^{τA}(I − e^{TA})⁻¹B`.

use nalgebra::{Complex, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::model::{HillNonlinearity, LinearPlant};

/// Desired 1-cycle parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSpec {
    /// Impulse weight λ (µg), nonnegative.
    pub lambda: f64,
    /// Inter-impulse interval T (min), positive.
    pub period: f64,
}

impl CycleSpec {
    pub fn new(lambda: f64, period: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidParameter(format!("period must be > 0, got {period}")));
        }
        Ok(CycleSpec { lambda, period })
    }
}

/// States of the unique 1-cycle for a given `(λ, T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    /// `X = x(t_n⁻)`, the state an instant before each firing.
    pub pre_jump: Vector3<f64>,
    /// `X⁺ = X + λB`, the state an instant after.
    pub post_jump: Vector3<f64>,
    /// `ȳ₀ = C·X`, the concentration sampled at firings (equal on both
    /// sides of the jump since `C·B = 0`).
    pub ybar0: f64,
}

/// `I − e^{TA}` is unit lower triangular up to the diagonal `1 − e^{−a_iT}`,
/// so the resolvent solve is three forward substitutions.
fn solve_lower_triangular(m: &Matrix3<f64>, rhs: &Vector3<f64>) -> Vector3<f64> {
    let x1 = rhs[0] / m[(0, 0)];
    let x2 = (rhs[1] - m[(1, 0)] * x1) / m[(1, 1)];
    let x3 = (rhs[2] - m[(2, 0)] * x1 - m[(2, 1)] * x2) / m[(2, 2)];
    Vector3::new(x1, x2, x3)
}

/// Post- and pre-jump states of the 1-cycle.
pub fn fixed_point(plant: &LinearPlant, spec: &CycleSpec) -> Result<FixedPoint> {
    let e = plant.mat_exp(spec.period)?;
    let resolvent = Matrix3::identity() - e;
    let post_jump = solve_lower_triangular(&resolvent, &(plant.b() * spec.lambda));
    let pre_jump = e * post_jump;
    Ok(FixedPoint { pre_jump, post_jump, ybar0: pre_jump[2] })
}

/// Output kernel `ξ_T(τ) = C·e^{τA}(I − e^{TA})⁻¹B` on `0 ≤ τ ≤ T`.
pub fn xi(plant: &LinearPlant, period: f64, tau: f64) -> Result<f64> {
    if !(period > 0.0) {
        return Err(Error::InvalidParameter(format!("period must be > 0, got {period}")));
    }
    if !(0.0..=period).contains(&tau) {
        return Err(Error::OutOfRange(format!("tau = {tau} outside [0, {period}]")));
    }
    let w = unit_post_jump(plant, period)?;
    Ok((plant.mat_exp(tau)? * w)[2])
}

/// `(I − e^{TA})⁻¹B`: the post-jump state of the unit-dose cycle.
fn unit_post_jump(plant: &LinearPlant, period: f64) -> Result<Vector3<f64>> {
    let e = plant.mat_exp(period)?;
    Ok(solve_lower_triangular(&(Matrix3::identity() - e), plant.b()))
}

/// Extrema of `ξ_T` over one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiExtrema {
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
}

/// Grid resolution for bracketing the critical points of `ξ_T`.
const XI_GRID: usize = 1024;

/// Bisection width (in τ, minutes) for refining a critical point.
const XI_BISECT_TOL: f64 = 1e-12;

/// Global extrema of the output kernel on `[0, T]`.
///
/// `ξ_T` is a three-term exponential sum, so `ξ_T′` has at most two interior
/// roots; a 1024-point sign scan of the exact derivative
/// `ξ′(τ) = g2·u2(τ) − a3·u3(τ)` (with `u = e^{τA}(I−e^{TA})⁻¹B`, the third
/// row of `A` applied to the flow) brackets each root, bisection refines it,
/// and boundary values complete the candidate set.
pub fn xi_extrema(plant: &LinearPlant, period: f64) -> Result<XiExtrema> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::InvalidParameter(format!("period must be > 0, got {period}")));
    }
    let w = unit_post_jump(plant, period)?;
    let a3 = plant.rates()[2];
    let g2 = plant.g2();
    let flow = |tau: f64| -> Result<Vector3<f64>> { Ok(plant.mat_exp(tau)? * w) };
    let deriv = |u: &Vector3<f64>| g2 * u[1] - a3 * u[2];

    let mut candidates = vec![0.0, period];
    let h = period / XI_GRID as f64;
    let mut prev = deriv(&flow(0.0)?);
    for i in 1..=XI_GRID {
        let tau = i as f64 * h;
        let cur = deriv(&flow(tau)?);
        if prev == 0.0 {
            candidates.push((i - 1) as f64 * h);
        } else if prev.signum() != cur.signum() && cur != 0.0 {
            let (mut lo, mut hi) = ((i - 1) as f64 * h, tau);
            let mut dlo = prev;
            while hi - lo > XI_BISECT_TOL {
                let mid = 0.5 * (lo + hi);
                let dmid = deriv(&flow(mid)?);
                if dmid == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if dlo.signum() == dmid.signum() {
                    lo = mid;
                    dlo = dmid;
                } else {
                    hi = mid;
                }
            }
            candidates.push(0.5 * (lo + hi));
        }
        prev = cur;
    }

    let mut ext = XiExtrema { min: f64::INFINITY, argmin: 0.0, max: f64::NEG_INFINITY, argmax: 0.0 };
    for tau in candidates {
        let val = flow(tau)?[2];
        if val < ext.min {
            ext.min = val;
            ext.argmin = tau;
        }
        if val > ext.max {
            ext.max = val;
            ext.argmax = tau;
        }
    }
    Ok(ext)
}

/// Jacobian of the impulse-to-impulse map at the 1-cycle:
/// `Q′(X) = e^{TA} + K·C` with `K = J·F′(ȳ₀) + D·Φ′(ȳ₀)`, `J = e^{TA}B`,
/// `D = A·X` (pre-jump `X`).
pub fn jacobian(
    plant: &LinearPlant,
    spec: &CycleSpec,
    f_slope: f64,
    phi_slope: f64,
) -> Result<Matrix3<f64>> {
    let e = plant.mat_exp(spec.period)?;
    let fp = fixed_point(plant, spec)?;
    let j = e * plant.b();
    let d = plant.a_matrix() * fp.pre_jump;
    let k = j * f_slope + d * phi_slope;
    Ok(e + k * plant.c())
}

/// Schur test: all eigenvalue moduli strictly below one.
/// Returns the verdict and the spectral radius; modulus exactly one counts
/// as unstable.
pub fn is_schur(m: &Matrix3<f64>) -> (bool, f64) {
    let radius = spectrum(m).iter().map(|e| e.norm()).fold(0.0, f64::max);
    (radius < 1.0, radius)
}

/// Eigenvalues of a real 3×3 matrix. Bounded QR iteration first (backward
/// stable, exact on repeated eigenvalues); if it fails to converge, the
/// roots of the characteristic cubic in closed form. Either way the call
/// terminates — the unbounded iteration behind nalgebra's own
/// `complex_eigenvalues` can stall on degenerate inputs.
pub fn spectrum(m: &Matrix3<f64>) -> [Complex<f64>; 3] {
    if let Some(schur) = nalgebra::linalg::Schur::try_new(*m, f64::EPSILON, 256) {
        let ev = schur.complex_eigenvalues();
        return [ev[0], ev[1], ev[2]];
    }
    let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
    let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
        + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)];
    solve_cubic(-tr, minors, -m.determinant())
}

/// Roots of the monic real cubic `x³ + px² + qx + r`.
fn solve_cubic(p: f64, q: f64, r: f64) -> [Complex<f64>; 3] {
    // Depress with x = t − p/3: t³ + at + b.
    let shift = p / 3.0;
    let a = q - p * p / 3.0;
    let b = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
    let half_b = b / 2.0;
    let disc = half_b * half_b + a * a * a / 27.0;
    let roots = if disc > 0.0 {
        // One real root (Cardano), a conjugate pair.
        let s = disc.sqrt();
        let u = (-half_b + s).cbrt();
        let v = (-half_b - s).cbrt();
        let re = -(u + v) / 2.0;
        let im = 3.0_f64.sqrt() / 2.0 * (u - v);
        [Complex::new(u + v, 0.0), Complex::new(re, im), Complex::new(re, -im)]
    } else {
        // Three real roots (trigonometric form). disc ≤ 0 forces a ≤ 0;
        // a = 0 is then the triple root t = 0.
        let rho = (-a / 3.0).max(0.0).sqrt();
        if rho == 0.0 {
            [Complex::new(0.0, 0.0); 3]
        } else {
            let theta = (-half_b / (rho * rho * rho)).clamp(-1.0, 1.0).acos() / 3.0;
            let third = std::f64::consts::TAU / 3.0;
            [0, 1, 2]
                .map(|k| Complex::new(2.0 * rho * (theta - third * k as f64).cos(), 0.0))
        }
    };
    roots.map(|t| t - Complex::new(shift, 0.0))
}

/// Attained output extremes of a 1-cycle, in both concentration and effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputRange {
    /// Smallest concentration `ȳ` over one period and where it occurs.
    pub ybar_min: f64,
    pub argmin_tau: f64,
    /// Largest concentration `ȳ` over one period and where it occurs.
    pub ybar_max: f64,
    pub argmax_tau: f64,
    /// Effect bounds; `φ` decreasing flips the order: `y_max = φ(ȳ_min)`.
    pub y_min: f64,
    pub y_max: f64,
}

/// Min/max of `ȳ(t) = λ·ξ_T(τ)` and `y(t) = φ(ȳ(t))` over one period.
pub fn output_range(
    plant: &LinearPlant,
    hill: &HillNonlinearity,
    spec: &CycleSpec,
) -> Result<OutputRange> {
    let ext = xi_extrema(plant, spec.period)?;
    let ybar_min = spec.lambda * ext.min;
    let ybar_max = spec.lambda * ext.max;
    Ok(OutputRange {
        ybar_min,
        argmin_tau: ext.argmin,
        ybar_max,
        argmax_tau: ext.argmax,
        y_min: hill.hill(ybar_max)?,
        y_max: hill.hill(ybar_min)?,
    })
}

/// Full local picture of one designed cycle: states, output range, Jacobian
/// spectrum, stability verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSolution {
    pub spec: CycleSpec,
    pub fixed_point: FixedPoint,
    pub output: OutputRange,
    pub jacobian: Matrix3<f64>,
    pub eigenvalues: [Complex<f64>; 3],
    pub schur_stable: bool,
    pub spectral_radius: f64,
}

impl CycleSolution {
    pub fn solve(
        plant: &LinearPlant,
        hill: &HillNonlinearity,
        spec: &CycleSpec,
        f_slope: f64,
        phi_slope: f64,
    ) -> Result<Self> {
        let fp = fixed_point(plant, spec)?;
        let output = output_range(plant, hill, spec)?;
        let jac = jacobian(plant, spec, f_slope, phi_slope)?;
        let eigenvalues = spectrum(&jac);
        let (schur_stable, spectral_radius) = is_schur(&jac);
        Ok(CycleSolution {
            spec: *spec,
            fixed_point: fp,
            output,
            jacobian: jac,
            eigenvalues,
            schur_stable,
            spectral_radius,
        })
    }
}
