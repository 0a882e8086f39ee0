//! Shared numerical integration engine: adaptive Gauss-Kronrod 7-15
//! quadrature on finite and semi-infinite domains, nested 2D integrals,
//! and the closed-form azimuthal averages of the dipole contraction.
//!
//! Every result carries an error estimate from the embedded Gauss/Kronrod
//! pair; a result whose estimate exceeds the requested tolerance after the
//! subdivision budget is exhausted is flagged, never silently returned as
//! converged. Integrands are only ever evaluated at interior points.

use std::cell::Cell;

use num_complex::Complex64;

use crate::markov::DipoleConfig;

/// Domain transform for semi-infinite integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mapping {
    /// x = -scale * ln(1 - u): suited to exponentially decaying tails.
    ExpDecay,
    /// x = scale * u / (1 - u): suited to algebraic (>= 1/x^2) tails.
    RationalTail,
}

/// Tolerances and limits for one integration call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    /// Absolute tolerance floor; convergence requires
    /// error <= max(rel_tol * |value|, abs_tol).
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub mapping: Mapping,
    /// Characteristic scale of the semi-infinite transform. Callers set it
    /// to the frequency scale that dominates the integrand (e.g. omega10).
    pub scale: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_subdivisions: 400,
            mapping: Mapping::RationalTail,
            scale: 1.0,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        assert!(
            rel_tol > f64::EPSILON * 100.0,
            "rel_tol must exceed 100 * machine epsilon"
        );
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        assert!(scale > 0.0);
        self.scale = scale;
        self
    }

    pub fn with_mapping(mut self, mapping: Mapping) -> Self {
        self.mapping = mapping;
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    fn tolerance_for(&self, value_norm: f64) -> f64 {
        f64::max(self.rel_tol * value_norm, self.abs_tol)
    }

    /// Whether an error estimate satisfies this spec for the given value.
    /// Used to judge convergence of assembled results, where prefactors and
    /// cancellations change the relative scale seen by the inner
    /// quadratures.
    pub fn meets(&self, value: f64, error: f64) -> bool {
        error <= self.tolerance_for(value.abs())
    }
}

/// Outcome of a real-valued integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Outcome of a complex-valued integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexIntegralResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Value types the adaptive engine can accumulate.
pub trait IntegrandValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn norm(self) -> f64;
}

impl IntegrandValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn sub(self, other: Self) -> Self {
        self - other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl IntegrandValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn sub(self, other: Self) -> Self {
        self - other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
}

// Gauss-Kronrod 7-15 abscissae (positive half) and weights, QUADPACK values.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

fn gk15<V: IntegrandValue>(f: &mut impl FnMut(f64) -> V, a: f64, b: f64) -> (V, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut kronrod = fc.scale(WGK[7]);
    let mut gauss = fc.scale(WG[3]);
    let mut res_abs = fc.norm() * WGK[7];

    let mut samples = [V::zero(); 15];
    samples[7] = fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        samples[j] = f1;
        samples[14 - j] = f2;
        let sum = f1.add(f2);
        kronrod = kronrod.add(sum.scale(WGK[j]));
        res_abs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            gauss = gauss.add(sum.scale(WG[j / 2]));
        }
    }

    let mean = kronrod.scale(0.5);
    let mut res_asc = (fc.sub(mean)).norm() * WGK[7];
    for j in 0..7 {
        res_asc +=
            WGK[j] * ((samples[j].sub(mean)).norm() + (samples[14 - j].sub(mean)).norm());
    }

    let value = kronrod.scale(half);
    let raw_err = (kronrod.sub(gauss)).norm() * half.abs();
    res_abs *= half.abs();
    res_asc *= half.abs();

    // QUADPACK-style error rescaling from the embedded pair difference.
    let mut err = raw_err;
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

fn adaptive<V: IntegrandValue>(
    mut f: impl FnMut(f64) -> V,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> (V, f64, usize, bool) {
    let mut evaluations = 15usize;
    let (v0, e0) = gk15(&mut f, a, b);
    let mut segments = vec![Segment {
        a,
        b,
        value: v0,
        error: e0,
    }];

    for _ in 0..spec.max_subdivisions {
        let total: V = segments
            .iter()
            .fold(V::zero(), |acc, s| acc.add(s.value));
        let total_err: f64 = segments.iter().map(|s| s.error).sum();
        if total_err <= spec.tolerance_for(total.norm()) {
            return (total, total_err, evaluations, true);
        }
        // Split the segment with the largest error estimate.
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty segment list");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval no longer splittable in floating point; keep as is.
            segments.push(seg);
            break;
        }
        let (vl, el) = gk15(&mut f, seg.a, mid);
        let (vr, er) = gk15(&mut f, mid, seg.b);
        evaluations += 30;
        segments.push(Segment {
            a: seg.a,
            b: mid,
            value: vl,
            error: el,
        });
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: vr,
            error: er,
        });
    }

    let total: V = segments
        .iter()
        .fold(V::zero(), |acc, s| acc.add(s.value));
    let total_err: f64 = segments.iter().map(|s| s.error).sum();
    let converged = total_err <= spec.tolerance_for(total.norm());
    (total, total_err, evaluations, converged)
}

fn mapped_point(u: f64, scale: f64, mapping: Mapping) -> (f64, f64) {
    let one_minus = 1.0 - u;
    match mapping {
        Mapping::RationalTail => (scale * u / one_minus, scale / (one_minus * one_minus)),
        Mapping::ExpDecay => (-scale * one_minus.ln(), scale / one_minus),
    }
}

/// Adaptive integral over a finite interval.
pub fn integrate_finite(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> IntegralResult {
    let (value, error_estimate, evaluations, converged) = adaptive(&f, a, b, spec);
    IntegralResult {
        value,
        error_estimate,
        evaluations,
        converged,
    }
}

/// Adaptive integral over (0, infinity) via the configured domain mapping.
pub fn integrate_semi_infinite(f: impl Fn(f64) -> f64, spec: &QuadratureSpec) -> IntegralResult {
    let g = |u: f64| {
        let (x, jac) = mapped_point(u, spec.scale, spec.mapping);
        f(x) * jac
    };
    let (value, error_estimate, evaluations, converged) = adaptive(&g, 0.0, 1.0, spec);
    IntegralResult {
        value,
        error_estimate,
        evaluations,
        converged,
    }
}

/// Complex-valued counterpart of [`integrate_finite`].
pub fn integrate_finite_complex(
    f: impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> ComplexIntegralResult {
    let (value, error_estimate, evaluations, converged) = adaptive(&f, a, b, spec);
    ComplexIntegralResult {
        value,
        error_estimate,
        evaluations,
        converged,
    }
}

/// Complex-valued counterpart of [`integrate_semi_infinite`].
pub fn integrate_semi_infinite_complex(
    f: impl Fn(f64) -> Complex64,
    spec: &QuadratureSpec,
) -> ComplexIntegralResult {
    let g = |u: f64| {
        let (x, jac) = mapped_point(u, spec.scale, spec.mapping);
        f(x) * jac
    };
    let (value, error_estimate, evaluations, converged) = adaptive(&g, 0.0, 1.0, spec);
    ComplexIntegralResult {
        value,
        error_estimate,
        evaluations,
        converged,
    }
}

/// Nested adaptive integral of `f(x, y)` over (0, inf) x (0, inf).
///
/// With `symmetric` set, `f` must satisfy f(x, y) = f(y, x); the integral is
/// then computed as twice the half-domain y < x contribution, which also
/// keeps the inner integration away from the (0, 0) corner.
pub fn integrate_2d(
    f: impl Fn(f64, f64) -> f64,
    spec: &QuadratureSpec,
    symmetric: bool,
) -> IntegralResult {
    let inner_spec = QuadratureSpec {
        rel_tol: (spec.rel_tol * 0.1).max(f64::EPSILON * 200.0),
        ..*spec
    };
    let inner_evals = Cell::new(0usize);
    let inner_failures = Cell::new(0usize);
    let inner_err_accum = Cell::new(0.0f64);

    let outer = |x: f64| -> f64 {
        let r = if symmetric {
            integrate_finite(|y| f(x, y), 0.0, x, &inner_spec)
        } else {
            integrate_semi_infinite(|y| f(x, y), &inner_spec)
        };
        inner_evals.set(inner_evals.get() + r.evaluations);
        inner_err_accum.set(inner_err_accum.get().max(r.error_estimate));
        if !r.converged {
            inner_failures.set(inner_failures.get() + 1);
        }
        r.value
    };

    let mut result = integrate_semi_infinite(outer, spec);
    if symmetric {
        result.value *= 2.0;
        result.error_estimate *= 2.0;
    }
    result.evaluations += inner_evals.get();
    result.converged = result.converged && inner_failures.get() == 0;
    result
}

/// Azimuthal weight functions for [`phi_average`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiWeight {
    One,
    CosPhi,
    CosSqPhi,
    Sin2Phi,
}

/// Closed-form azimuthal average (1/2 pi) * Int_0^{2 pi} w(phi) f(phi) dphi
/// of the dipole contraction f(phi) with the planar scattering kernel,
/// normalized to the squared dipole moment.
///
/// For a real unit dipole direction u the contraction is
/// f(phi) = (u_x cos phi + u_y sin phi)^2 + u_z^2; the isotropic
/// configuration sums the three basis directions, giving f = 2.
pub fn phi_average(weight: PhiWeight, dipole: &DipoleConfig) -> f64 {
    let (a0, a2, b2) = dipole.contraction_harmonics();
    match weight {
        PhiWeight::One => a0,
        PhiWeight::CosPhi => 0.0,
        PhiWeight::CosSqPhi => 0.5 * a0 + 0.25 * a2,
        PhiWeight::Sin2Phi => 0.5 * b2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default().with_scale(1.0)
    }

    #[test]
    fn gamma_integral() {
        // Int_0^inf e^{-2s} s^3 ds = 3/8.
        let r = integrate_semi_infinite(|s| (-2.0 * s).exp() * s.powi(3), &spec());
        assert!(r.converged);
        assert_relative_eq!(r.value, 3.0 / 8.0, max_relative = 1e-10);
        assert!(r.error_estimate <= 1e-9 * r.value.abs() + 1e-300);
    }

    #[test]
    fn balanced_kernel_vanishes() {
        // Int_0^inf (a^2 - 3 xi^2)/(a^2 + xi^2)^3 dxi = 0 for any a > 0.
        for &a in &[0.5, 1.0, 7.0] {
            let s = spec().with_scale(a).with_abs_tol(1e-12 / a.powi(3));
            let r = integrate_semi_infinite(
                |xi| (a * a - 3.0 * xi * xi) / (a * a + xi * xi).powi(3),
                &s,
            );
            assert!(r.converged);
            assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-11 / a.powi(3));
        }
    }

    #[test]
    fn arctan_integral() {
        // Int_0^inf a/(a^2 + xi^2) dxi = pi/2.
        for &a in &[0.1, 1.0, 42.0] {
            let r = integrate_semi_infinite(|xi| a / (a * a + xi * xi), &spec().with_scale(a));
            assert!(r.converged);
            assert_relative_eq!(r.value, PI / 2.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn exp_decay_mapping() {
        let s = spec().with_mapping(Mapping::ExpDecay).with_scale(0.5);
        let r = integrate_semi_infinite(|x| (-2.0 * x).exp() * x.powi(3), &s);
        assert!(r.converged);
        assert_relative_eq!(r.value, 3.0 / 8.0, max_relative = 1e-10);
    }

    #[test]
    fn two_dimensional_exponential() {
        let r = integrate_2d(|x, y| (-x - y).exp(), &spec(), false);
        assert!(r.converged);
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn symmetric_2d_matches_full() {
        let f = |x: f64, y: f64| (-x - y).exp() * (1.0 + x * y / (1.0 + x * x + y * y));
        let full = integrate_2d(f, &spec(), false);
        let half = integrate_2d(f, &spec(), true);
        assert!(full.converged && half.converged);
        assert_relative_eq!(full.value, half.value, max_relative = 1e-7);
    }

    #[test]
    fn complex_integral() {
        // Int_0^inf e^{-x} (cos x + i sin x) dx = (1 + i)/2.
        let r = integrate_semi_infinite_complex(
            |x| Complex64::new((-x).exp() * x.cos(), (-x).exp() * x.sin()),
            &spec(),
        );
        assert!(r.converged);
        assert_relative_eq!(r.value.re, 0.5, max_relative = 1e-9);
        assert_relative_eq!(r.value.im, 0.5, max_relative = 1e-9);
    }

    #[test]
    fn non_convergence_is_flagged() {
        // Too small a subdivision budget for a nasty integrand.
        let s = QuadratureSpec {
            rel_tol: 1e-12,
            max_subdivisions: 2,
            ..spec()
        };
        let r = integrate_finite(|x| (1000.0 * x).sin() / (1e-4 + x * x), 0.0, 1.0, &s);
        assert!(!r.converged);
        assert!(r.error_estimate > 0.0);
    }

    #[test]
    fn doubling_subdivisions_stays_within_error_estimate() {
        let f = |x: f64| (-x).exp() / (1.0 + x * x).sqrt();
        let base = integrate_semi_infinite(f, &spec());
        let doubled_spec = spec().with_max_subdivisions(800);
        let doubled = integrate_semi_infinite(f, &doubled_spec);
        assert!(base.converged);
        assert!((base.value - doubled.value).abs() <= base.error_estimate.max(1e-15));
    }

    #[test]
    fn phi_average_isotropic() {
        let iso = DipoleConfig::Isotropic;
        assert_relative_eq!(phi_average(PhiWeight::One, &iso), 2.0);
        assert_eq!(phi_average(PhiWeight::CosPhi, &iso), 0.0);
        assert_relative_eq!(phi_average(PhiWeight::CosSqPhi, &iso), 1.0);
        assert_eq!(phi_average(PhiWeight::Sin2Phi, &iso), 0.0);
    }

    #[test]
    fn phi_average_z_dipole() {
        let z = DipoleConfig::vector(0.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(phi_average(PhiWeight::One, &z), 1.0);
        assert_eq!(phi_average(PhiWeight::CosSqPhi, &z), 0.5);
    }

    #[test]
    fn phi_average_matches_numeric_quadrature() {
        // Numeric phi-quadrature oracle for the closed forms.
        let configs = [
            DipoleConfig::Isotropic,
            DipoleConfig::vector(1.0, 0.0, 0.0).unwrap(),
            DipoleConfig::vector(0.0, 1.0, 0.0).unwrap(),
            DipoleConfig::vector(0.0, 0.0, 1.0).unwrap(),
            DipoleConfig::vector(1.0, 2.0, 3.0).unwrap(),
        ];
        let weights = [
            PhiWeight::One,
            PhiWeight::CosPhi,
            PhiWeight::CosSqPhi,
            PhiWeight::Sin2Phi,
        ];
        for config in &configs {
            for &w in &weights {
                let wf = move |phi: f64| match w {
                    PhiWeight::One => 1.0,
                    PhiWeight::CosPhi => phi.cos(),
                    PhiWeight::CosSqPhi => phi.cos().powi(2),
                    PhiWeight::Sin2Phi => (2.0 * phi).sin(),
                };
                let numeric = integrate_finite(
                    |phi| wf(phi) * config.contraction(phi),
                    0.0,
                    2.0 * PI,
                    &spec(),
                )
                .value
                    / (2.0 * PI);
                let closed = phi_average(w, config);
                assert_abs_diff_eq!(numeric, closed, epsilon = 1e-10);
            }
        }
    }
}
