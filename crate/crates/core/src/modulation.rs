//! Saturated piecewise-affine dose/period modulation composed with the Hill
//! output map.
//!
//! The controller observes `ȳ` only through the measured effect
//! `y = φ(ȳ)` and fires impulses with
//!
//! ```text
//!     dose      F(ȳ) = clamp(k4·φ(ȳ) + k3,  F₁, F₂)      (µg)
//!     interval  Φ(ȳ) = clamp(k2·φ(ȳ) + k1,  Φ₁, Φ₂)      (min)
//! ```
//!
//! With `k4 ≥ 0`, `k2 ≤ 0` and `φ` strictly decreasing, `F` is
//! non-increasing and `Φ` non-decreasing in `ȳ`: more drug, sooner, when
//! the effect wears off.

use crate::error::{Error, Result};
use crate::model::HillNonlinearity;

/// Saturation box for the modulation maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationBounds {
    /// Smallest admissible inter-dose interval Φ₁ (min), strictly positive.
    pub phi_lo: f64,
    /// Largest admissible inter-dose interval Φ₂ (min).
    pub phi_hi: f64,
    /// Smallest admissible dose F₁ (µg). Zero means a dose may be skipped.
    pub f_lo: f64,
    /// Largest admissible dose F₂ (µg).
    pub f_hi: f64,
}

impl SaturationBounds {
    /// Clinically-motivated defaults: interval 10–40 min, dose 0–500 µg.
    pub fn default_clinical() -> Self {
        SaturationBounds { phi_lo: 10.0, phi_hi: 40.0, f_lo: 0.0, f_hi: 500.0 }
    }
}

/// Complete modulation description: affine coefficients, saturation box,
/// and the Hill map the affine part is composed with.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationConfig {
    /// Period intercept (min).
    pub k1: f64,
    /// Period slope per percent effect, `k2 ≤ 0`.
    pub k2: f64,
    /// Dose intercept (µg).
    pub k3: f64,
    /// Dose slope per percent effect, `k4 ≥ 0`.
    pub k4: f64,
    pub bounds: SaturationBounds,
    pub hill: HillNonlinearity,
}

/// One structural defect found by [`ModulationConfig::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

impl ModulationConfig {
    /// Checked constructor; rejects any configuration `validate` flags.
    pub fn new(
        k1: f64,
        k2: f64,
        k3: f64,
        k4: f64,
        bounds: SaturationBounds,
        hill: HillNonlinearity,
    ) -> Result<Self> {
        let cfg = ModulationConfig { k1, k2, k3, k4, bounds, hill };
        match cfg.validate().into_iter().next() {
            None => Ok(cfg),
            Some(v) => Err(Error::InvalidParameter(v.to_string())),
        }
    }

    /// Structural checks; returns every violation instead of failing fast.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let b = &self.bounds;
        if !(b.phi_lo > 0.0) {
            out.push(Violation {
                field: "bounds.phi_lo",
                message: format!("inter-dose interval bound must be positive, got {}", b.phi_lo),
            });
        }
        if b.phi_lo > b.phi_hi {
            out.push(Violation { field: "bounds.phi", message: "period bounds inverted".into() });
        }
        if !(b.f_lo >= 0.0) {
            out.push(Violation {
                field: "bounds.f_lo",
                message: format!("dose bound must be nonnegative, got {}", b.f_lo),
            });
        }
        if b.f_lo > b.f_hi {
            out.push(Violation { field: "bounds.f", message: "dose bounds inverted".into() });
        }
        if self.k2 > 0.0 {
            out.push(Violation {
                field: "k2",
                message: "period must be non-decreasing in ybar (k2 <= 0)".into(),
            });
        }
        if self.k4 < 0.0 {
            out.push(Violation {
                field: "k4",
                message: "dose must be non-increasing in ybar (k4 >= 0)".into(),
            });
        }
        for (field, v) in
            [("k1", self.k1), ("k2", self.k2), ("k3", self.k3), ("k4", self.k4)]
        {
            if !v.is_finite() {
                out.push(Violation { field, message: format!("must be finite, got {v}") });
            }
        }
        out
    }

    /// `Φ(ȳ)`: the next inter-dose interval, always within `[Φ₁, Φ₂]`.
    pub fn eval_period(&self, ybar: f64) -> Result<f64> {
        let y = self.hill.hill(ybar)?;
        Ok(clamp(self.k2 * y + self.k1, self.bounds.phi_lo, self.bounds.phi_hi))
    }

    /// `F(ȳ)`: the next dose, always within `[F₁, F₂]`.
    pub fn eval_dose(&self, ybar: f64) -> Result<f64> {
        let y = self.hill.hill(ybar)?;
        Ok(clamp(self.k4 * y + self.k3, self.bounds.f_lo, self.bounds.f_hi))
    }

    /// True when neither map is clamped at `ybar` — the affine segment is
    /// the active branch and local slopes are meaningful.
    pub fn unsaturated_at(&self, ybar: f64) -> Result<bool> {
        let y = self.hill.hill(ybar)?;
        let raw_t = self.k2 * y + self.k1;
        let raw_f = self.k4 * y + self.k3;
        Ok(raw_t > self.bounds.phi_lo
            && raw_t < self.bounds.phi_hi
            && raw_f > self.bounds.f_lo
            && raw_f < self.bounds.f_hi)
    }

    /// Local slopes `(F′(ȳ), Φ′(ȳ))` by the chain rule; zero where clamped.
    pub fn slopes_at(&self, ybar: f64) -> Result<(f64, f64)> {
        let y = self.hill.hill(ybar)?;
        let dphi = self.hill.hill_deriv(ybar)?;
        let raw_t = self.k2 * y + self.k1;
        let raw_f = self.k4 * y + self.k3;
        let f_slope = if raw_f > self.bounds.f_lo && raw_f < self.bounds.f_hi {
            self.k4 * dphi
        } else {
            0.0
        };
        let phi_slope = if raw_t > self.bounds.phi_lo && raw_t < self.bounds.phi_hi {
            self.k2 * dphi
        } else {
            0.0
        };
        Ok((f_slope, phi_slope))
    }

    /// Constant open-loop regimen: dose `λ` every `T` minutes. The
    /// saturation box is widened around the constants so the regimen never
    /// sits on a clamp border (a zero dose is the one unavoidable exception).
    pub fn constant(lambda: f64, period: f64, hill: HillNonlinearity) -> Result<Self> {
        let bounds = SaturationBounds {
            phi_lo: period / 2.0,
            phi_hi: period * 2.0,
            f_lo: 0.0,
            f_hi: 2.0 * lambda + 1.0,
        };
        ModulationConfig::new(period, 0.0, lambda, 0.0, bounds, hill)
    }
}
