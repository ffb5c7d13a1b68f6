#![allow(dead_code)]

use impulse_dose_core::cycle::CycleSpec;
use impulse_dose_core::design::{synthesize, DesignRequest, DesignResult};
use impulse_dose_core::model::{build_plant, HillNonlinearity, LinearPlant, PlantParams};
use impulse_dose_core::modulation::SaturationBounds;

/// Nominal 1-cycle parameters: dose 300 µg every 20 min.
pub const LAMBDA: f64 = 300.0;
pub const PERIOD: f64 = 20.0;

/// Designed local feedback slopes at the operating point.
pub const F_SLOPE: f64 = -0.15;
pub const PHI_SLOPE: f64 = 0.29;

/// Pre-jump fixed point of the nominal cycle (default gain split).
pub const X_PRE: [f64; 3] = [269.597430920153, 84.58193228346, 13.624940024233];
pub const YBAR0: f64 = 13.624940024232682;

/// Modulation coefficients the nominal design must produce.
pub const K1: f64 = 21.513304929121425;
pub const K2: f64 = -0.7119461732338956;
pub const K3: f64 = 299.2172560711441;
pub const K4: f64 = 0.3682480206382219;

/// Output kernel extrema of the nominal cycle.
pub const XI_AT_0: f64 = 0.04541646674744227;
pub const XI_MIN: f64 = 0.045012946545148404;
pub const XI_MIN_TAU: f64 = 0.7169; // interior minimum shortly after firing
pub const XI_MAX: f64 = 0.05343156020143143;
pub const XI_MAX_TAU: f64 = 9.9168;

/// Closed-loop Jacobian spectrum at the nominal design (all real).
pub const EIGS: [f64; 3] = [0.22884876512086255, 0.1862558923485086, 0.0002813210389509174];

pub fn nominal_plant() -> LinearPlant {
    build_plant(&PlantParams::nominal()).unwrap()
}

pub fn nominal_hill() -> HillNonlinearity {
    HillNonlinearity::nominal()
}

pub fn nominal_spec() -> CycleSpec {
    CycleSpec::new(LAMBDA, PERIOD).unwrap()
}

pub fn nominal_request() -> DesignRequest {
    DesignRequest {
        spec: nominal_spec(),
        f_slope: F_SLOPE,
        phi_slope: PHI_SLOPE,
        bounds: SaturationBounds::default_clinical(),
        plant: PlantParams::nominal(),
        hill: nominal_hill(),
    }
}

pub fn nominal_design() -> DesignResult {
    synthesize(&nominal_request()).unwrap()
}
