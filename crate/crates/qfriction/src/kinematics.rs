//! Trajectory bookkeeping and Doppler algebra.
//!
//! The atom moves with speed `v` at an angle `theta` to the surface normal:
//! `theta = pi/2` (or `3 pi/2`) is parallel motion, `theta = pi` is motion
//! toward the plane, `theta = 0` is motion away from it. The instantaneous
//! height is `z_A(t) = z0 + v t cos(theta)`.
//!
//! The two halves of the pipeline use different sign conventions for the
//! complex Doppler-shifted frequency; they are deliberately kept as two
//! separate functions ([`doppler_markov`], [`doppler_perturbative`]) and no
//! cross-convention identity is assumed anywhere.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Instantaneous kinematic state of the atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionState {
    /// Speed [m/s], >= 0.
    pub speed: f64,
    /// Angle between velocity and surface normal [rad], in [0, 2 pi).
    pub theta: f64,
    /// Initial height above the surface [m], > 0.
    pub z0: f64,
    /// Time since the boost [s], >= 0.
    pub time: f64,
}

impl MotionState {
    pub fn new(speed: f64, theta: f64, z0: f64, time: f64) -> Result<Self> {
        if !(speed.is_finite() && theta.is_finite() && z0.is_finite() && time.is_finite()) {
            return Err(Error::NonFinite("motion state"));
        }
        if speed < 0.0 {
            return Err(Error::InvalidParameter {
                name: "speed",
                reason: format!("must be >= 0, got {speed}"),
            });
        }
        // theta is never normalized silently: angular-symmetry claims are
        // part of the test surface.
        if !(0.0..TAU).contains(&theta) {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: format!("must lie in [0, 2 pi), got {theta}"),
            });
        }
        if z0 <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "z0",
                reason: format!("must be > 0, got {z0}"),
            });
        }
        if time < 0.0 {
            return Err(Error::InvalidParameter {
                name: "time",
                reason: format!("must be >= 0, got {time}"),
            });
        }
        let s = Self {
            speed,
            theta,
            z0,
            time,
        };
        s.height()?;
        Ok(s)
    }

    /// Static state at height z0.
    pub fn at_rest(z0: f64) -> Result<Self> {
        Self::new(0.0, 0.0, z0, 0.0)
    }

    /// Instantaneous height z_A(t) = z0 + v t cos(theta).
    pub fn height(&self) -> Result<f64> {
        let z = self.z0 + self.speed * self.time * self.theta.cos();
        if z <= 0.0 {
            return Err(Error::SurfaceContact { z });
        }
        Ok(z)
    }

    /// Same state at a different time.
    pub fn at_time(&self, time: f64) -> Result<Self> {
        Self::new(self.speed, self.theta, self.z0, time)
    }

    /// Same state at a different speed.
    pub fn at_speed(&self, speed: f64) -> Result<Self> {
        Self::new(speed, self.theta, self.z0, self.time)
    }

    /// Convergence guard for every force/rate evaluation: v < z_A(t) omega10.
    pub fn is_valid_for(&self, omega10: f64) -> bool {
        match self.height() {
            Ok(z) => self.speed < z * omega10,
            Err(_) => false,
        }
    }
}

/// Complex Doppler-shifted frequency, master-equation convention:
/// omega' = omega + v k (sin(theta) cos(phi) - i cos(theta)).
pub fn doppler_markov(omega: f64, v: f64, theta: f64, phi: f64, k_par: f64) -> Complex64 {
    debug_assert!(k_par >= 0.0);
    Complex64::new(
        omega + v * k_par * theta.sin() * phi.cos(),
        -v * k_par * theta.cos(),
    )
}

/// Complex Doppler-shifted frequency, perturbation-theory convention:
/// omega' = omega - v k cos(phi) sin(theta) + i v k cos(theta).
pub fn doppler_perturbative(omega: f64, v: f64, theta: f64, phi: f64, k_par: f64) -> Complex64 {
    debug_assert!(k_par >= 0.0);
    Complex64::new(
        omega - v * k_par * phi.cos() * theta.sin(),
        v * k_par * theta.cos(),
    )
}

/// Dimensionless expansion variables: s = k z_A(t) and
/// y = v / (z_A(t) * omega_total), where `omega_total` is the sum of the
/// transition frequency and the field frequency. `y < 1` marks the
/// adiabatic regime.
pub fn dimensionless(state: &MotionState, omega_total: f64, k_par: f64) -> Result<(f64, f64)> {
    if omega_total <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "omega_total",
            reason: format!("must be > 0, got {omega_total}"),
        });
    }
    let z = state.height()?;
    Ok((k_par * z, state.speed / (z * omega_total)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn height_static_and_parallel() {
        let s = MotionState::new(0.0, 0.0, 1e-8, 1e-9).unwrap();
        assert_eq!(s.height().unwrap(), 1e-8);
        let p = MotionState::new(500.0, FRAC_PI_2, 1e-8, 1e-9).unwrap();
        assert_relative_eq!(p.height().unwrap(), 1e-8, max_relative = 1e-12);
    }

    #[test]
    fn height_approaching() {
        // v = 100 m/s toward the plane from 10 nm for 50 ps -> 5 nm.
        let s = MotionState::new(100.0, PI, 10e-9, 50e-12).unwrap();
        assert_relative_eq!(s.height().unwrap(), 5e-9, max_relative = 1e-9);
    }

    #[test]
    fn surface_contact_is_an_error() {
        assert!(MotionState::new(100.0, PI, 10e-9, 101e-12).is_err());
    }

    #[test]
    fn theta_out_of_range_rejected() {
        assert!(MotionState::new(1.0, -0.1, 1e-9, 0.0).is_err());
        assert!(MotionState::new(1.0, TAU, 1e-9, 0.0).is_err());
    }

    #[test]
    fn doppler_markov_cases() {
        let w = doppler_markov(1e13, 0.0, 1.0, 2.0, 1e8);
        assert_eq!(w, Complex64::new(1e13, 0.0));
        // Parallel motion, phi = 0: purely real shift.
        let w = doppler_markov(1e13, 100.0, FRAC_PI_2, 0.0, 1e8);
        assert_relative_eq!(w.re, 1e13 + 100.0 * 1e8, max_relative = 1e-12);
        assert_abs_diff_eq!(w.im, 0.0, epsilon = 1e-3);
        // Motion toward the plane: purely imaginary shift, +i v k.
        let w = doppler_markov(1e13, 100.0, PI, 1.23, 1e8);
        assert_relative_eq!(w.re, 1e13, max_relative = 1e-10);
        assert_relative_eq!(w.im, 100.0 * 1e8, max_relative = 1e-12);
    }

    #[test]
    fn doppler_perturbative_cases() {
        let w = doppler_perturbative(1e13, 0.0, 1.0, 2.0, 1e8);
        assert_eq!(w, Complex64::new(1e13, 0.0));
        // theta = 0: omega + i v k.
        let w = doppler_perturbative(1e13, 100.0, 0.0, 0.7, 1e8);
        assert_relative_eq!(w.re, 1e13, max_relative = 1e-10);
        assert_relative_eq!(w.im, 100.0 * 1e8, max_relative = 1e-12);
        // theta = pi/2, phi = pi: omega + v k.
        let w = doppler_perturbative(1e13, 100.0, FRAC_PI_2, PI, 1e8);
        assert_relative_eq!(w.re, 1e13 + 100.0 * 1e8, max_relative = 1e-12);
        assert_abs_diff_eq!(w.im, 0.0, epsilon = 1e-3);
    }

    #[test]
    fn dimensionless_variables() {
        let s = MotionState::new(0.0, 0.0, 1e-9, 0.0).unwrap();
        let (sv, y) = dimensionless(&s, 1e13, 1.0 / 1e-9).unwrap();
        assert_relative_eq!(sv, 1.0, max_relative = 1e-12);
        assert_eq!(y, 0.0);
        // v = 1e3 m/s, z = 1 nm, omega_total = 1e13 -> y = 0.1.
        let s = MotionState::new(1e3, FRAC_PI_2, 1e-9, 0.0).unwrap();
        let (_, y) = dimensionless(&s, 1e13, 1.0).unwrap();
        assert_relative_eq!(y, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn validity_guard() {
        let s = MotionState::new(1e3, PI, 1e-9, 0.0).unwrap();
        assert!(s.is_valid_for(1e13)); // v = 0.1 z omega10
        assert!(!s.is_valid_for(1e11)); // v = 10 z omega10
    }
}
