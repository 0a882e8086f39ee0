//! Dielectric response of the half-space: Drude-Lorentz permittivity on the
//! real and imaginary frequency axes and the non-retarded p-polarized
//! reflection coefficient r_p = (eps - 1)/(eps + 1).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drude-Lorentz material parameters. All frequencies are angular (rad/s).
///
/// eps(omega) = 1 + omega_p^2 / (omega_r^2 - omega^2 - i gamma omega)
///
/// A pure Drude metal is the `omega_r = 0` special case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel {
    pub name: String,
    /// Plasma frequency [rad/s], > 0.
    pub omega_p: f64,
    /// Resonance frequency [rad/s], >= 0 (0 for pure Drude).
    pub omega_r: f64,
    /// Damping rate [rad/s], > 0.
    pub gamma: f64,
}

impl MaterialModel {
    pub fn new(name: &str, omega_p: f64, omega_r: f64, gamma: f64) -> Result<Self> {
        if !(omega_p.is_finite() && omega_r.is_finite() && gamma.is_finite()) {
            return Err(Error::NonFinite("material parameters"));
        }
        if omega_p <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "omega_p",
                reason: format!("must be > 0, got {omega_p}"),
            });
        }
        if gamma <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("must be > 0, got {gamma}"),
            });
        }
        if omega_r < 0.0 {
            return Err(Error::InvalidParameter {
                name: "omega_r",
                reason: format!("must be >= 0, got {omega_r}"),
            });
        }
        Ok(Self {
            name: name.to_string(),
            omega_p,
            omega_r,
            gamma,
        })
    }

    /// Drude metal preset with gold-like plasma frequency and damping.
    pub fn drude_gold() -> Self {
        Self::new("drude-gold", 1.37e16, 0.0, 5.3e13).unwrap()
    }

    /// Lorentz dielectric preset with a finite resonance frequency.
    pub fn lorentz_dielectric() -> Self {
        Self::new("lorentz-dielectric", 1.0e16, 8.0e15, 1.0e14).unwrap()
    }

    /// Looks up a named preset.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "drude-gold" => Some(Self::drude_gold()),
            "lorentz-dielectric" => Some(Self::lorentz_dielectric()),
            _ => None,
        }
    }

    /// Names of the built-in presets.
    pub fn preset_names() -> &'static [&'static str] {
        &["drude-gold", "lorentz-dielectric"]
    }

    /// Loads a material from a key-value config file with keys
    /// `name`, `omega_p`, `omega_r`, `gamma` (frequencies in rad/s).
    pub fn from_config_str(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            name: String,
            omega_p: f64,
            #[serde(default)]
            omega_r: f64,
            gamma: f64,
        }
        let raw: Raw = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        Self::new(&raw.name, raw.omega_p, raw.omega_r, raw.gamma)
    }

    pub fn from_config_file(path: &std::path::Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_config_str(&s)
    }

    /// Permittivity at a complex angular frequency.
    ///
    /// For a Drude metal (`omega_r = 0`) the origin is a pole and is
    /// reported as [`Error::StaticPole`] instead of returning infinity.
    pub fn permittivity(&self, omega: Complex64) -> Result<Complex64> {
        if !omega.re.is_finite() || !omega.im.is_finite() {
            return Err(Error::NonFinite("frequency"));
        }
        let denom = Complex64::new(self.omega_r * self.omega_r, 0.0)
            - omega * omega
            - Complex64::new(0.0, self.gamma) * omega;
        if denom.norm() == 0.0 {
            return Err(Error::StaticPole);
        }
        Ok(Complex64::new(1.0, 0.0) + self.omega_p * self.omega_p / denom)
    }

    /// Permittivity on the positive imaginary axis, eps(i xi). Real and > 1
    /// for all xi > 0.
    pub fn permittivity_imag_axis(&self, xi: f64) -> f64 {
        debug_assert!(xi > 0.0);
        let denom = self.omega_r * self.omega_r + xi * xi + self.gamma * xi;
        1.0 + self.omega_p * self.omega_p / denom
    }

    /// Non-retarded p-polarized reflection coefficient (eps-1)/(eps+1)
    /// at a complex angular frequency.
    pub fn reflection_p(&self, omega: Complex64) -> Result<Complex64> {
        let eps = self.permittivity(omega)?;
        let denom = eps + 1.0;
        if denom.norm() == 0.0 {
            return Err(Error::ReflectionPole);
        }
        Ok((eps - 1.0) / denom)
    }

    /// r_p(i xi) on the positive imaginary axis: real, in (0, 1), and
    /// monotonically decreasing in xi.
    pub fn reflection_p_imag_axis(&self, xi: f64) -> f64 {
        // chi = eps - 1 computed directly; the r = chi/(chi + 2) form keeps
        // full precision when chi drops below machine epsilon at large xi.
        let chi = self.omega_p * self.omega_p
            / (self.omega_r * self.omega_r + xi * xi + self.gamma * xi);
        chi / (chi + 2.0)
    }

    /// Im r_p at a positive real frequency (>= 0 by passivity).
    pub fn im_reflection_p(&self, omega: f64) -> f64 {
        self.reflection_p(Complex64::new(omega, 0.0))
            .map(|r| r.im)
            .unwrap_or(0.0)
    }
}

/// A sampled value of the reflection coefficient at one complex frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionSample {
    /// Complex angular frequency [rad/s].
    pub frequency: Complex64,
    /// Complex reflection amplitude (dimensionless).
    pub value: Complex64,
}

impl MaterialModel {
    pub fn sample_reflection(&self, omega: Complex64) -> Result<ReflectionSample> {
        Ok(ReflectionSample {
            frequency: omega,
            value: self.reflection_p(omega)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn static_pole_is_reported_for_drude() {
        let m = MaterialModel::drude_gold();
        assert!(matches!(
            m.permittivity(Complex64::new(0.0, 0.0)),
            Err(Error::StaticPole)
        ));
        // Lorentz model is finite at omega = 0.
        let l = MaterialModel::lorentz_dielectric();
        let eps = l.permittivity(Complex64::new(0.0, 0.0)).unwrap();
        assert!(eps.re > 1.0 && eps.im == 0.0);
    }

    #[test]
    fn high_frequency_transparency() {
        let m = MaterialModel::drude_gold();
        let eps = m.permittivity_imag_axis(1e22);
        assert_relative_eq!(eps, 1.0, max_relative = 1e-10);
        let r = m.reflection_p_imag_axis(1e22);
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-11);
    }

    #[test]
    fn drude_imag_axis_value_at_plasma_frequency() {
        // eps(i omega_p) = 1 + 1/(1 + gamma/omega_p) for omega_r = 0,
        // checked against an independent symbolic evaluation.
        let m = MaterialModel::drude_gold();
        let expected = 1.0 + 1.0 / (1.0 + m.gamma / m.omega_p);
        assert_relative_eq!(
            m.permittivity_imag_axis(m.omega_p),
            expected,
            max_relative = 1e-14
        );
    }

    #[test]
    fn imag_axis_permittivity_is_real_via_complex_path() {
        for m in [
            MaterialModel::drude_gold(),
            MaterialModel::lorentz_dielectric(),
        ] {
            for &xi in &[1e12, 1e14, 1e16, 1e18] {
                let eps = m.permittivity(Complex64::new(0.0, xi)).unwrap();
                assert_abs_diff_eq!(eps.im, 0.0, epsilon = 1e-16 * eps.re.abs());
                assert!(eps.re > 1.0);
                assert_relative_eq!(eps.re, m.permittivity_imag_axis(xi), max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn perfect_conductor_limit() {
        // Huge plasma frequency: eps -> large, r_p -> 1.
        let m = MaterialModel::new("pc", 1e20, 0.0, 1e10).unwrap();
        let r = m.reflection_p_imag_axis(1e13);
        assert_relative_eq!(r, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn passivity_on_real_axis() {
        // Im r_p(omega) > 0 for omega > 0, dense sampling of the closed form.
        for m in [
            MaterialModel::drude_gold(),
            MaterialModel::lorentz_dielectric(),
        ] {
            for i in 0..2000 {
                let omega = 1e11 * 1.02f64.powi(i);
                if omega > 1e19 {
                    break;
                }
                assert!(
                    m.im_reflection_p(omega) > 0.0,
                    "Im r_p <= 0 at omega = {omega} for {}",
                    m.name
                );
            }
        }
    }

    #[test]
    fn schwartz_reflection() {
        // r_p(-omega*) = r_p(omega)* in the upper half-plane.
        let m = MaterialModel::drude_gold();
        for &(re, im) in &[(1e15, 1e13), (3e15, 2e14), (1e13, 1e15), (2e16, 1e12)] {
            let w = Complex64::new(re, im);
            let lhs = m.reflection_p(-w.conj()).unwrap();
            let rhs = m.reflection_p(w).unwrap().conj();
            assert_relative_eq!(lhs.re, rhs.re, max_relative = 1e-12);
            assert_relative_eq!(lhs.im, rhs.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn imag_axis_reflection_monotone_decreasing() {
        for m in [
            MaterialModel::drude_gold(),
            MaterialModel::lorentz_dielectric(),
        ] {
            let mut prev = f64::INFINITY;
            for i in 0..600 {
                let xi = 1e12 * 1.05f64.powi(i);
                let r = m.reflection_p_imag_axis(xi);
                assert!(r > 0.0 && r < 1.0);
                assert!(r < prev, "r_p(i xi) not decreasing at xi = {xi}");
                prev = r;
            }
        }
    }

    #[test]
    fn config_round_trip() {
        let s = "name = \"custom\"\nomega_p = 1.2e16\nomega_r = 4.0e15\ngamma = 2.0e13\n";
        let m = MaterialModel::from_config_str(s).unwrap();
        assert_eq!(m.name, "custom");
        assert_eq!(m.omega_p, 1.2e16);
        assert_eq!(m.omega_r, 4.0e15);
        assert_eq!(m.gamma, 2.0e13);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(MaterialModel::new("bad", -1.0, 0.0, 1.0).is_err());
        assert!(MaterialModel::new("bad", 1.0, 0.0, 0.0).is_err());
        assert!(MaterialModel::new("bad", 1.0, -2.0, 1.0).is_err());
        assert!(MaterialModel::new("bad", f64::NAN, 0.0, 1.0).is_err());
    }
}
