//! Physical constants and unit conversions.

use std::f64::consts::PI;

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier wavelength used for all pm <-> rad/s conversions [m].
pub const CARRIER_WAVELENGTH: f64 = 1550e-9;

pub const PICOSECOND: f64 = 1e-12;
pub const FEMTOSECOND: f64 = 1e-15;

/// FWHM = `FWHM_PER_SIGMA` * sigma for a Gaussian.
pub fn fwhm_per_sigma() -> f64 {
    2.0 * (2.0 * std::f64::consts::LN_2).sqrt()
}

/// Wavelength interval at the 1550 nm carrier to angular-frequency interval.
pub fn pm_to_angular(delta_lambda_pm: f64) -> f64 {
    let delta_nu = SPEED_OF_LIGHT * delta_lambda_pm * 1e-12 / (CARRIER_WAVELENGTH * CARRIER_WAVELENGTH);
    2.0 * PI * delta_nu
}

pub fn angular_to_pm(delta_omega: f64) -> f64 {
    let delta_nu = delta_omega / (2.0 * PI);
    delta_nu * CARRIER_WAVELENGTH * CARRIER_WAVELENGTH / SPEED_OF_LIGHT * 1e12
}

pub fn ps(value: f64) -> f64 {
    value * PICOSECOND
}

pub fn to_ps(seconds: f64) -> f64 {
    seconds / PICOSECOND
}

/// sin(x)/x with sinc(0) = 1.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Decibel loss to linear transmission.
pub fn db_to_transmission(loss_db: f64) -> f64 {
    if loss_db.is_infinite() {
        0.0
    } else {
        10f64.powf(-loss_db / 10.0)
    }
}
