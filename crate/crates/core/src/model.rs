//! Plant construction: a three-compartment linear block with a static Hill
//! output nonlinearity (positive Wiener model), plus its exact matrix
//! exponential.
//!
//! The linear block realizes the transfer function
//! `g1·g2 / ((s+a1)(s+a2)(s+a3))` in lower-triangular state-space form
//!
//! ```text
//!     A = [ -a1   0    0  ]        B = (1, 0, 0)ᵀ
//!         [  g1  -a2   0  ]        C = (0, 0, 1)
//!         [  0    g2  -a3 ]
//! ```
//!
//! with `a_i = v_i·α` and input gains constrained by
//! `g1·g2 = v1·v2·v3·α³`, so the DC gain is exactly 1. Only the product
//! `g1·g2` is physical: the similarity `diag(1, s, 1)` trades `g1` against
//! `g2` while preserving every input-output quantity. `C·B = 0`, so a dose
//! impulse never moves the measured output instantaneously.

use nalgebra::{Matrix3, RowVector3, Vector3};

use crate::error::{Error, Result};

/// Upper limit of the patient-specific rate scale (1/min).
pub const ALPHA_MAX: f64 = 0.1;

/// Relative mismatch tolerated between `g1·g2` and `v1·v2·v3·α³`.
pub const G_PRODUCT_TOL: f64 = 1e-12;

/// Below `min|a_i − a_j| = DEGENERATE_GAP · max(a_i)` the closed-form
/// exponential cancels catastrophically; scaling-and-squaring takes over.
pub const DEGENERATE_GAP: f64 = 1e-8;

/// Series truncation tolerance for the scaling-and-squaring fallback.
pub const SERIES_TOL: f64 = 1e-13;

/// Rule for splitting the constrained product `g1·g2` between the two gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GSplit {
    /// `g1 = v1·α`, `g2 = v2·v3·α²`.
    Default,
    /// Explicit gains; the product must still equal `v1·v2·v3·α³`.
    Explicit { g1: f64, g2: f64 },
}

/// Patient parameters of the linear block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    /// Patient-specific rate scale, `0 < α ≤ 0.1` (1/min).
    pub alpha: f64,
    /// Fixed positive, pairwise-distinct rate multipliers.
    pub v: [f64; 3],
    /// Gain split rule (see [`GSplit`]).
    pub g_split: GSplit,
}

impl PlantParams {
    /// Nominal population values: `α = 0.0374`, `v = (1, 4, 10)`.
    pub fn nominal() -> Self {
        PlantParams { alpha: 0.0374, v: [1.0, 4.0, 10.0], g_split: GSplit::Default }
    }

    pub fn with_alpha(alpha: f64) -> Self {
        PlantParams { alpha, ..Self::nominal() }
    }
}

/// The realized linear block. Immutable; all methods are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPlant {
    a_mat: Matrix3<f64>,
    b: Vector3<f64>,
    c: RowVector3<f64>,
    rates: [f64; 3],
    g1: f64,
    g2: f64,
}

/// `build_plant(params)`: validate and realize the state-space form.
pub fn build_plant(params: &PlantParams) -> Result<LinearPlant> {
    let PlantParams { alpha, v, g_split } = *params;
    if !(alpha > 0.0 && alpha <= ALPHA_MAX) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, {ALPHA_MAX}], got {alpha}"
        )));
    }
    if v.iter().any(|&vi| !(vi > 0.0) || !vi.is_finite()) {
        return Err(Error::InvalidParameter(format!("v must be positive, got {v:?}")));
    }
    let rates = [v[0] * alpha, v[1] * alpha, v[2] * alpha];
    let product = v[0] * v[1] * v[2] * alpha.powi(3);
    let (g1, g2) = match g_split {
        GSplit::Default => (v[0] * alpha, v[1] * v[2] * alpha * alpha),
        GSplit::Explicit { g1, g2 } => {
            if !(g1 > 0.0 && g2 > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "gains must be positive, got g1={g1}, g2={g2}"
                )));
            }
            if (g1 * g2 - product).abs() > G_PRODUCT_TOL * product {
                return Err(Error::InvalidParameter(format!(
                    "g1*g2 = {} must equal v1*v2*v3*alpha^3 = {product}",
                    g1 * g2
                )));
            }
            (g1, g2)
        }
    };
    LinearPlant::from_rates(rates, g1, g2)
}

impl LinearPlant {
    /// Construct directly from rates and gains.
    ///
    /// Enforces positivity and pairwise-distinct rates but not the clinical
    /// `α` cap, which belongs to [`PlantParams`]; parameter sweeps may
    /// explore rate scales beyond it.
    pub fn from_rates(rates: [f64; 3], g1: f64, g2: f64) -> Result<Self> {
        if rates.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidParameter(format!("rates must be positive, got {rates:?}")));
        }
        if !(g1 > 0.0 && g2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gains must be positive, got g1={g1}, g2={g2}"
            )));
        }
        if rates[0] == rates[1] || rates[0] == rates[2] || rates[1] == rates[2] {
            return Err(Error::DegenerateSpectrum(format!("rates must be distinct, got {rates:?}")));
        }
        let [a1, a2, a3] = rates;
        let a_mat = Matrix3::new(-a1, 0.0, 0.0, g1, -a2, 0.0, 0.0, g2, -a3);
        Ok(LinearPlant {
            a_mat,
            b: Vector3::new(1.0, 0.0, 0.0),
            c: RowVector3::new(0.0, 0.0, 1.0),
            rates,
            g1,
            g2,
        })
    }

    pub fn a_matrix(&self) -> &Matrix3<f64> {
        &self.a_mat
    }

    pub fn b(&self) -> &Vector3<f64> {
        &self.b
    }

    pub fn c(&self) -> &RowVector3<f64> {
        &self.c
    }

    /// Eigenvalue magnitudes `(a1, a2, a3)`.
    pub fn rates(&self) -> [f64; 3] {
        self.rates
    }

    pub fn g1(&self) -> f64 {
        self.g1
    }

    pub fn g2(&self) -> f64 {
        self.g2
    }

    /// `e^{tA}` for `t ≥ 0`, exact to rounding.
    ///
    /// Distinct eigenvalues admit the divided-difference closed form; when
    /// two rates nearly coincide the form cancels catastrophically and
    /// scaling-and-squaring takes over. Either way the result is clamped
    /// entrywise at zero: `A` is Metzler, so the true exponential is
    /// nonnegative and any negative entry is rounding noise.
    pub fn mat_exp(&self, t: f64) -> Result<Matrix3<f64>> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")));
        }
        let [a1, a2, a3] = self.rates;
        let gap = (a1 - a2).abs().min((a1 - a3).abs()).min((a2 - a3).abs());
        let mut e = if gap < DEGENERATE_GAP * a1.max(a2).max(a3) {
            series_exp(&(self.a_mat * t))
        } else {
            let (e1, e2, e3) = ((-a1 * t).exp(), (-a2 * t).exp(), (-a3 * t).exp());
            let m21 = self.g1 * (e1 - e2) / (a2 - a1);
            let m32 = self.g2 * (e2 - e3) / (a3 - a2);
            let m31 = self.g1 * self.g2
                * (e1 / ((a2 - a1) * (a3 - a1))
                    + e2 / ((a1 - a2) * (a3 - a2))
                    + e3 / ((a1 - a3) * (a2 - a3)));
            Matrix3::new(e1, 0.0, 0.0, m21, e2, 0.0, m31, m32, e3)
        };
        e.iter_mut().for_each(|x| *x = x.max(0.0));
        Ok(e)
    }
}

/// Scaling-and-squaring with a Taylor series truncated at `SERIES_TOL`.
fn series_exp(m: &Matrix3<f64>) -> Matrix3<f64> {
    let norm = m.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = m / 2f64.powi(squarings as i32);
    let mut sum = Matrix3::<f64>::identity();
    let mut term = Matrix3::<f64>::identity();
    for k in 1..200 {
        term = term * scaled / k as f64;
        sum += term;
        if term.iter().map(|x| x.abs()).fold(0.0, f64::max) < SERIES_TOL {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Static output nonlinearity `φ(ȳ) = 100·c50^γ / (c50^γ + ȳ^γ)`:
/// effect in percent as a strictly decreasing map of concentration,
/// `φ(0) = 100`, `φ(c50) = 50`, `φ(∞) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillNonlinearity {
    /// Concentration at half effect (µg/ml), positive.
    pub c50: f64,
    /// Hill slope, `0 < γ ≤ 10`.
    pub gamma: f64,
}

/// Largest admissible Hill exponent.
pub const GAMMA_MAX: f64 = 10.0;

impl HillNonlinearity {
    pub fn new(c50: f64, gamma: f64) -> Result<Self> {
        if !(c50 > 0.0) || !c50.is_finite() {
            return Err(Error::InvalidParameter(format!("c50 must be positive, got {c50}")));
        }
        if !(gamma > 0.0 && gamma <= GAMMA_MAX) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in (0, {GAMMA_MAX}], got {gamma}"
            )));
        }
        Ok(HillNonlinearity { c50, gamma })
    }

    /// Nominal identified values: `c50 = 3.2425`, `γ = 2.6677`.
    pub fn nominal() -> Self {
        HillNonlinearity { c50: 3.2425, gamma: 2.6677 }
    }

    /// `φ(ȳ)` for `ȳ ≥ 0`.
    pub fn hill(&self, ybar: f64) -> Result<f64> {
        if !(ybar >= 0.0) || !ybar.is_finite() {
            return Err(Error::InvalidParameter(format!("ybar must be >= 0, got {ybar}")));
        }
        let cg = self.c50.powf(self.gamma);
        Ok(100.0 * cg / (cg + ybar.powf(self.gamma)))
    }

    /// Closed-form inverse `φ⁻¹(y) = c50·(100/y − 1)^{1/γ}` on `0 < y < 100`.
    pub fn hill_inv(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y < 100.0) {
            return Err(Error::OutOfRange(format!("effect must lie in (0, 100), got {y}")));
        }
        Ok(self.c50 * (100.0 / y - 1.0).powf(1.0 / self.gamma))
    }

    /// `φ′(ȳ) = −γ·100·c50^γ·ȳ^{γ−1} / (c50^γ + ȳ^γ)²`, negative for `ȳ > 0`.
    pub fn hill_deriv(&self, ybar: f64) -> Result<f64> {
        if !ybar.is_finite() || ybar < 0.0 {
            return Err(Error::InvalidParameter(format!("ybar must be >= 0, got {ybar}")));
        }
        if ybar == 0.0 && self.gamma < 1.0 {
            // ȳ^{γ−1} → ∞ as ȳ → 0⁺ when γ < 1.
            return Err(Error::Singularity(
                "hill derivative unbounded at ybar = 0 for gamma < 1".into(),
            ));
        }
        let cg = self.c50.powf(self.gamma);
        let yg = ybar.powf(self.gamma);
        Ok(-self.gamma * 100.0 * cg * ybar.powf(self.gamma - 1.0) / (cg + yg).powi(2))
    }
}
