//! Time-dependent perturbation-theory pipeline: plasmon-mode transition
//! amplitudes in the interaction picture, ground-state shift and excitation
//! rate, and the force on the atom through fourth order in the dipole
//! coupling.
//!
//! This pipeline is kept fully independent of the master-equation route in
//! [`crate::markov`]: it has its own Doppler convention
//! ([`crate::kinematics::doppler_perturbative`]) and its own integrand code,
//! so agreement between the two is a meaningful cross-check rather than a
//! tautology. The amplitudes live at the initial height z0; the forces at
//! the instantaneous height z_A(t).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::constants::{EPS0, HBAR};
use crate::error::Result;
use crate::kinematics::{doppler_perturbative, MotionState};
use crate::markov::{real_axis_scale, AtomParams};
use crate::material::MaterialModel;
use crate::quadrature::{
    integrate_2d, integrate_finite, integrate_finite_complex, integrate_semi_infinite,
    integrate_semi_infinite_complex, IntegralResult, Mapping, QuadratureSpec,
};

/// One evanescent surface mode, kappa = (k, phi, omega).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlasmonMode {
    /// Lateral wavenumber [1/m], > 0.
    pub k_par: f64,
    /// Azimuth of the lateral wavevector [rad].
    pub phi: f64,
    /// Mode frequency [rad/s], > 0.
    pub omega: f64,
}

/// Squared modulus of the plasmon amplitude,
/// |psi|^2 = hbar Im r_p(omega) / (8 pi^3 eps0 k).
pub fn amplitude_sq(mat: &MaterialModel, mode: &PlasmonMode) -> f64 {
    debug_assert!(mode.k_par > 0.0);
    HBAR * mat.im_reflection_p(mode.omega) / (8.0 * PI.powi(3) * EPS0 * mode.k_par)
}

/// (exp(x t) - 1)/x with a series guard near x t = 0.
fn expm1_over(x: Complex64, t: f64) -> Complex64 {
    let xt = x * t;
    if xt.norm() < 1e-6 {
        // t (1 + xt/2 + xt^2/6), accurate to ~1e-19 relative here.
        t * (Complex64::new(1.0, 0.0) + xt * 0.5 + xt * xt / 6.0)
    } else {
        (xt.exp() - 1.0) / x
    }
}

/// First-order one-photon amplitude for excited basis direction `eta`
/// (0 = x, 1 = y, 2 = z) and the given mode, with the atom starting over
/// the lateral origin. Dimension: the amplitude density in kappa-space,
/// [m s^(1/2)] up to the mode normalization.
pub fn amp_c11(
    atom: &AtomParams,
    mat: &MaterialModel,
    z0: f64,
    v: f64,
    theta: f64,
    time: f64,
    eta: usize,
    mode: &PlasmonMode,
) -> Complex64 {
    let k = mode.k_par;
    // K = (k cos phi, k sin phi, i k); the amplitude carries (eta . K)*.
    let eta_k_conj = match eta {
        0 => Complex64::new(k * mode.phi.cos(), 0.0),
        1 => Complex64::new(k * mode.phi.sin(), 0.0),
        2 => Complex64::new(0.0, -k),
        _ => panic!("eta must be 0, 1 or 2"),
    };
    let psi_conj = amplitude_sq(mat, mode).sqrt();
    let omega_p = doppler_perturbative(mode.omega, v, theta, mode.phi, k);
    let denom = omega_p + atom.omega10;
    let phase = Complex64::new(0.0, 1.0) * denom;
    Complex64::new(0.0, atom.dipole) * eta_k_conj * psi_conj * (-k * z0).exp()
        * expm1_over(phase, time)
        / (HBAR)
}

/// Total one-photon population Sum_eta Int d^3 kappa |c_1^(1)|^2
/// (dimensionless). Used for the unitarity cross-check against the real
/// part of [`amp_c02`].
pub fn norm_c11_total(
    atom: &AtomParams,
    mat: &MaterialModel,
    z0: f64,
    v: f64,
    theta: f64,
    time: f64,
    spec: &QuadratureSpec,
) -> IntegralResult {
    let d2 = atom.dipole * atom.dipole;
    let w10 = atom.omega10;
    let prefactor = d2 / (4.0 * PI.powi(3) * HBAR * EPS0);
    let k_spec = spec
        .with_mapping(Mapping::ExpDecay)
        .with_scale(1.0 / (2.0 * z0));
    let w_spec = spec.with_scale(real_axis_scale(atom, mat));

    let outer = integrate_semi_infinite(
        |omega| {
            let im_r = mat.im_reflection_p(omega);
            let phi_int = integrate_finite(
                |phi| {
                    integrate_semi_infinite(
                        |k| {
                            let wp = doppler_perturbative(omega, v, theta, phi, k);
                            let x = Complex64::new(0.0, 1.0) * (wp + w10);
                            let win = expm1_over(x, time).norm_sqr();
                            k * k * (-2.0 * k * z0).exp() * win
                        },
                        &k_spec,
                    )
                    .value
                },
                0.0,
                2.0 * PI,
                spec,
            );
            im_r * phi_int.value
        },
        &w_spec,
    );

    IntegralResult {
        value: prefactor * outer.value,
        error_estimate: prefactor * outer.error_estimate,
        evaluations: outer.evaluations,
        converged: outer.converged,
    }
}

/// Bessel function of the first kind by its power series; adequate for the
/// moderate arguments (|x| <~ 15) the azimuthal sums produce.
fn bessel_j(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    // (x/2)^n / n!
    let mut lead = 1.0;
    for j in 1..=n {
        lead *= half / j as f64;
    }
    let mut term = lead;
    let mut sum = term;
    let q = -half * half;
    for m in 1..60 {
        term *= q / (m as f64 * (m + n) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Geometric-pole decomposition of 1 / (a - b cos(phi)): returns
/// (s, r) with s = sqrt(a^2 - b^2) (branch near a) and r = (a - s)/b,
/// so that 1/(a - b cos phi) = (1/s) sum_n r^|n| e^{i n phi}.
fn azimuthal_pole(a: Complex64, b: f64) -> (Complex64, Complex64) {
    let mut s = (a * a - b * b).sqrt();
    if (s - a).norm() > (s + a).norm() {
        s = -s;
    }
    (s, (a - s) / b)
}

/// sum_n eps_n i^n J_n(beta) r^n with eps_0 = 1, eps_n = 2; equals 1 at
/// beta = 0. Gives Int e^{i beta cos phi}/(a - b cos phi) dphi = 2 pi/s
/// times this sum.
fn azimuthal_osc_sum(r: Complex64, beta: f64) -> Complex64 {
    let mut sum = Complex64::new(bessel_j(0, beta), 0.0);
    let mut rn = Complex64::new(1.0, 0.0);
    let i_unit = Complex64::new(0.0, 1.0);
    let mut i_pow = Complex64::new(1.0, 0.0);
    for n in 1..64u32 {
        rn *= r;
        i_pow *= i_unit;
        let term = 2.0 * bessel_j(n, beta) * i_pow * rn;
        sum += term;
        if term.norm() < 1e-15 * sum.norm().max(1e-300) {
            break;
        }
    }
    sum
}

/// Same series with the (n + a/s) weight:
/// Int e^{i beta cos phi}/(a - b cos phi)^2 dphi = (2 pi/s^2) times this.
fn azimuthal_osc_sum_sq(r: Complex64, a_over_s: Complex64, beta: f64) -> Complex64 {
    let mut sum = Complex64::new(bessel_j(0, beta), 0.0) * a_over_s;
    let mut rn = Complex64::new(1.0, 0.0);
    let i_unit = Complex64::new(0.0, 1.0);
    let mut i_pow = Complex64::new(1.0, 0.0);
    for n in 1..64u32 {
        rn *= r;
        i_pow *= i_unit;
        let term = 2.0 * bessel_j(n, beta) * i_pow * rn * (a_over_s + n as f64);
        sum += term;
        if term.norm() < 1e-15 * sum.norm().max(1e-300) {
            break;
        }
    }
    sum
}

/// e^{damp} (e^{x t} - 1)/x without overflow: the drift exponent d t can
/// exceed 700 on its own while d t + damp stays negative for any physical
/// trajectory, so the damping must ride inside the exponentials.
fn expm1_over_damped(x: Complex64, time: f64, damp: f64) -> Complex64 {
    if (x.re * time).abs() < 500.0 {
        damp.exp() * expm1_over(x, time)
    } else {
        ((x * time + damp).exp() - damp.exp()) / x
    }
}

/// Closed-form azimuthal integral of the damped finite-time window,
///
///   e^{damp} Int_0^{2 pi} dphi [ W1 - W2(phi) ] / (a - b cos phi),
///
/// where u = a - b cos phi is the Doppler-shifted total frequency,
/// W1 = (e^{d t}-1)/d and W2 = (e^{(d - i u) t}-1)/(d - i u), and
/// damp = -2 k z0 is the evanescent weight of the mode. Evaluated via the
/// Bessel / geometric-pole series; falls back to direct quadrature when
/// the pole expansion stops converging (Cherenkov-grazing wave vectors).
fn c02_phi_integral(
    a: Complex64,
    b: f64,
    d: f64,
    time: f64,
    damp: f64,
    spec: &QuadratureSpec,
) -> Complex64 {
    let i_unit = Complex64::new(0.0, 1.0);
    let w1 = expm1_over_damped(Complex64::new(d, 0.0), time, damp);
    if b == 0.0 {
        let w2 = expm1_over_damped(Complex64::new(d, 0.0) - i_unit * a, time, damp);
        return 2.0 * PI * (w1 - w2) / a;
    }
    let (s, r) = azimuthal_pole(a, b);
    if r.norm() > 0.5 {
        // Exponentially suppressed corner of the k integral; resolve the
        // near-pole azimuthal structure directly.
        return integrate_finite_complex(
            |phi| {
                let u = a - b * phi.cos();
                let w2 = expm1_over_damped(Complex64::new(d, 0.0) - i_unit * u, time, damp);
                (w1 - w2) / u
            },
            0.0,
            2.0 * PI,
            spec,
        )
        .value;
    }
    let beta = b * time;
    let t1 = w1 * 2.0 * PI / s;
    // e^{(d - i a) t + damp}, the scalar part of the oscillating
    // exponential with the mode weight folded in.
    let e_osc = ((Complex64::new(d, 0.0) - i_unit * a) * time + damp).exp();
    let e_damp = damp.exp();
    let t2 = if d.abs() * time > 1e-4 {
        // Partial fractions 1/((d - i u) u) = (1/d)[1/u + i/(d - i u)].
        let int_u = e_osc * (2.0 * PI / s) * azimuthal_osc_sum(r, beta);
        let const_u = e_damp * 2.0 * PI / s;
        let a2 = a + i_unit * d;
        let (s2, r2) = azimuthal_pole(a2, b);
        let int_du = e_osc * i_unit * (2.0 * PI / s2) * azimuthal_osc_sum(r2, beta);
        let const_du = e_damp * i_unit * 2.0 * PI / s2;
        ((int_u - const_u) + i_unit * (int_du - const_du)) / d
    } else {
        // Small-drift branch: 1/(d - i u) -> i/u in the denominators while
        // the exact scalar e^{d t} stays in the exponential; the neglected
        // piece is O(d / u), far below O(d t).
        let q_beta = (2.0 * PI / (s * s)) * azimuthal_osc_sum_sq(r, a / s, beta);
        let q_zero = e_damp * 2.0 * PI * a / (s * s * s);
        i_unit * (e_osc * q_beta - q_zero)
    };
    t1 - t2
}

/// Second-order vacuum-persistence amplitude c_0^(2)(t): the (omega, k)
/// integral with the finite-time window and the azimuthal direction summed
/// in closed form. At small k v t the amplitude grows linearly,
/// c_0^(2) ~ -(i t / hbar) dE_g - t Gamma_g / 2.
pub fn amp_c02(
    atom: &AtomParams,
    mat: &MaterialModel,
    z0: f64,
    v: f64,
    theta: f64,
    time: f64,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    let d2 = atom.dipole * atom.dipole;
    let w10 = atom.omega10;
    let (sin_t, cos_t) = theta.sin_cos();
    let k_spec = spec
        .with_mapping(Mapping::ExpDecay)
        .with_scale(1.0 / (2.0 * z0));
    // The outer integrand oscillates at period 2 pi / time in omega; give
    // the subdivision budget room to resolve it.
    let w_spec = spec
        .with_scale(real_axis_scale(atom, mat))
        .with_max_subdivisions(spec.max_subdivisions.max(4000));

    let outer = integrate_semi_infinite_complex(
        |omega| {
            let im_r = mat.im_reflection_p(omega);
            let k_int = integrate_semi_infinite_complex(
                |k| {
                    // u = a - b cos(phi) reproduces omega10 + omega'
                    // across the azimuth; d is the height-drift rate.
                    let a = Complex64::new(w10 + omega, v * k * cos_t);
                    let b = v * k * sin_t;
                    let d = -2.0 * k * v * cos_t;
                    k * k * c02_phi_integral(a, b, d, time, -2.0 * k * z0, spec)
                },
                &k_spec,
            );
            k_int.value * im_r
        },
        &w_spec,
    );

    // The vacuum amplitude shrinks and rotates clockwise (negative shift),
    // so the overall prefactor is +i d^2/(4 pi^3 hbar eps0).
    Ok(Complex64::new(0.0, d2 / (4.0 * PI.powi(3) * HBAR * EPS0)) * outer.value)
}

/// Recovers the complex decay slope lambda = -i dE_g / hbar - Gamma_g / 2
/// of the vacuum amplitude from finite-time samples of [`amp_c02`].
///
/// Two systematic contaminations are removed:
/// - The finite-time window rings at the tone omega10 + omega_s, where
///   omega_s is the surface-resonance frequency with eps(omega_s) = -1.
///   Each sample is averaged with a partner half a tone period later,
///   cancelling the oscillation to leading order.
/// - The trajectory drift: along z(t) = z0 + v t cos(theta) the shift
///   scales as 1/z^3 and the rate as 1/z^4, so the secular real and
///   imaginary parts follow C + lambda h_p(t) with
///   h_p(t) = int_0^t (z0 / z(t'))^p dt' known in closed form (p = 4 for
///   the real part, p = 3 for the imaginary part). Two-parameter
///   least-squares fits in the bases {1, h_p(t)} absorb the drift at all
///   orders instead of truncating a Taylor series.
///
/// `window = (t0, t1)` should satisfy v t1 / z0 <~ 0.2 and
/// (omega10 + omega_s) t0 >> 1 for percent-level recovery.
pub fn amplitude_slope(
    atom: &AtomParams,
    mat: &MaterialModel,
    z0: f64,
    v: f64,
    theta: f64,
    window: (f64, f64),
    n_pairs: usize,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    assert!(n_pairs >= 2, "need at least two sample pairs");
    let omega_s = (mat.omega_r * mat.omega_r + 0.5 * mat.omega_p * mat.omega_p).sqrt();
    let half_period = PI / (atom.omega10 + omega_s);
    let (t0, t1) = window;
    let cos_t = if crate::markov::is_parallel(theta) {
        0.0
    } else {
        theta.cos()
    };
    // int_0^t (1 + v cos_t t'/z0)^-p dt' in closed form.
    let drift = |t: f64, p: i32| -> f64 {
        let u = v * cos_t * t / z0;
        if u.abs() < 1e-9 {
            t * (1.0 - 0.5 * p as f64 * u)
        } else {
            let q = (p - 1) as f64;
            z0 / (q * v * cos_t) * (1.0 - (1.0 + u).powi(-(p - 1)))
        }
    };

    let mut h3 = Vec::with_capacity(n_pairs);
    let mut h4 = Vec::with_capacity(n_pairs);
    let mut cs = Vec::with_capacity(n_pairs);
    for i in 0..n_pairs {
        let t = t0 + (t1 - t0) * i as f64 / (n_pairs as f64 - 1.0);
        let c_a = amp_c02(atom, mat, z0, v, theta, t, spec)?;
        let c_b = amp_c02(atom, mat, z0, v, theta, t + half_period, spec)?;
        h3.push(0.5 * (drift(t, 3) + drift(t + half_period, 3)));
        h4.push(0.5 * (drift(t, 4) + drift(t + half_period, 4)));
        cs.push(0.5 * (c_a + c_b));
    }

    let slope = |hs: &[f64], ys: &[f64]| -> f64 {
        let n = hs.len() as f64;
        let h_mean = hs.iter().sum::<f64>() / n;
        let y_mean = ys.iter().sum::<f64>() / n;
        let mut num = 0.0;
        let mut den = 0.0;
        for (h, y) in hs.iter().zip(ys) {
            num += (y - y_mean) * (h - h_mean);
            den += (h - h_mean) * (h - h_mean);
        }
        num / den
    };
    let res: Vec<f64> = cs.iter().map(|c| c.re).collect();
    let ims: Vec<f64> = cs.iter().map(|c| c.im).collect();
    Ok(Complex64::new(slope(&h4, &res), slope(&h3, &ims)))
}

/// Ground-state energy shift [J] and excitation rate [1/s] in closed form,
/// evaluated at the initial height z0 (the amplitudes never see the
/// instantaneous height).
///
/// The rate carries the overall cos(theta): it is identically zero for
/// parallel motion in this pipeline, not merely exponentially small.
pub fn shift_rate_ground(
    atom: &AtomParams,
    mat: &MaterialModel,
    z0: f64,
    v: f64,
    theta: f64,
    spec: &QuadratureSpec,
) -> (IntegralResult, IntegralResult) {
    let d2 = atom.dipole * atom.dipole;
    let w10 = atom.omega10;
    // The rate carries an overall cos(theta); pin the parallel direction to
    // an exact zero instead of the rounded cos(pi/2).
    let cos_t = if crate::markov::is_parallel(theta) {
        0.0
    } else {
        theta.cos()
    };
    let cos2t = (2.0 * theta).cos();
    let w_spec = spec.with_scale(real_axis_scale(atom, mat));

    let shift_pref = -d2 / (8.0 * PI * PI * EPS0 * z0.powi(3));
    let vel_corr = 0.75 * v * v * (1.0 + 3.0 * cos2t) / (z0 * z0);
    let shift = integrate_semi_infinite(
        |w| {
            let den = w + w10;
            mat.im_reflection_p(w) / den * (1.0 - vel_corr / (den * den))
        },
        &w_spec,
    );
    let shift = IntegralResult {
        value: shift_pref * shift.value,
        error_estimate: shift_pref.abs() * shift.error_estimate,
        converged: shift.converged
            || spec.meets(shift_pref * shift.value, shift_pref.abs() * shift.error_estimate),
        ..shift
    };

    let rate_pref = -3.0 * d2 * v * cos_t / (8.0 * PI * PI * HBAR * EPS0 * z0.powi(4));
    let rate = integrate_semi_infinite(
        |w| mat.im_reflection_p(w) / (w + w10).powi(2),
        &w_spec,
    );
    let rate = IntegralResult {
        value: rate_pref * rate.value,
        error_estimate: rate_pref.abs() * rate.error_estimate,
        converged: rate.converged
            || spec.meets(rate_pref * rate.value, rate_pref.abs() * rate.error_estimate),
        ..rate
    };

    (shift, rate)
}

/// Second-order force without any velocity expansion: the full
/// (omega, phi, s) integral in the dimensionless variables
/// s = k z_A(t), y = v / (z_A(t) (omega10 + omega)). [N]
pub fn force_2_full(
    atom: &AtomParams,
    mat: &MaterialModel,
    state: &MotionState,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let z = state.height()?;
    let d2 = atom.dipole * atom.dipole;
    let w10 = atom.omega10;
    let v = state.speed;
    let sin_t = state.theta.sin();
    let cos_t = if crate::markov::is_parallel(state.theta) {
        0.0
    } else {
        state.theta.cos()
    };
    let prefactor = -d2 * cos_t / (2.0 * PI.powi(3) * EPS0 * z.powi(4));
    let w_spec = spec.with_scale(real_axis_scale(atom, mat));
    let s_spec = spec.with_mapping(Mapping::ExpDecay).with_scale(0.5);

    let outer = integrate_semi_infinite(
        |omega| {
            let y = v / (z * (w10 + omega));
            let im_r = mat.im_reflection_p(omega) / (w10 + omega);
            let phi_int = integrate_finite(
                |phi| {
                    let cp = phi.cos();
                    integrate_semi_infinite(
                        |s| {
                            let lateral = 1.0 - y * s * cp * sin_t;
                            let vertical = y * s * cos_t;
                            s.powi(3) * (-2.0 * s).exp() * (1.0 - 2.0 * y * s * cp * sin_t)
                                / (lateral * lateral + vertical * vertical)
                        },
                        &s_spec,
                    )
                    .value
                },
                0.0,
                2.0 * PI,
                spec,
            );
            im_r * phi_int.value
        },
        &w_spec,
    );

    Ok(IntegralResult {
        value: prefactor * outer.value,
        error_estimate: prefactor.abs() * outer.error_estimate,
        evaluations: outer.evaluations,
        converged: outer.converged
            || spec.meets(prefactor * outer.value, prefactor.abs() * outer.error_estimate),
    })
}

/// Second-order Casimir-Polder projection onto the direction of motion,
/// independent re-implementation of the closed form with both frequency
/// routes. [N]
pub fn cp_force_2(
    atom: &AtomParams,
    mat: &MaterialModel,
    state: &MotionState,
    imag_axis: bool,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let z = state.height()?;
    let d2 = atom.dipole * atom.dipole;
    let w10 = atom.omega10;
    // Overall cos(theta): parallel motion is an exact zero.
    let cos_t = if crate::markov::is_parallel(state.theta) {
        0.0
    } else {
        state.theta.cos()
    };
    let prefactor = -3.0 * d2 * cos_t / (8.0 * PI * PI * EPS0 * z.powi(4));
    let j = if imag_axis {
        integrate_semi_infinite(
            |xi| w10 * mat.reflection_p_imag_axis(xi) / (w10 * w10 + xi * xi),
            &spec.with_scale(w10),
        )
    } else {
        integrate_semi_infinite(
            |w| mat.im_reflection_p(w) / (w10 + w),
            &spec.with_scale(real_axis_scale(atom, mat)),
        )
    };
    Ok(IntegralResult {
        value: prefactor * j.value,
        error_estimate: prefactor.abs() * j.error_estimate,
        converged: j.converged
            || spec.meets(prefactor * j.value, prefactor.abs() * j.error_estimate),
        ..j
    })
}

/// Second-order friction force, quadratic in velocity; zero for parallel
/// motion by the overall cos(theta). [N]
pub fn friction_force_2(
    atom: &AtomParams,
    mat: &MaterialModel,
    state: &MotionState,
    imag_axis: bool,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let z = state.height()?;
    let d2 = atom.dipole * atom.dipole;
    let w10 = atom.omega10;
    let v = state.speed;
    let cos_t = if crate::markov::is_parallel(state.theta) {
        0.0
    } else {
        state.theta.cos()
    };
    let prefactor = 15.0 * d2 * v * v * cos_t * (1.0 + cos_t * cos_t)
        / (16.0 * PI * PI * EPS0 * z.powi(6));
    let j = if imag_axis {
        integrate_semi_infinite(
            |xi| {
                w10 * (w10 * w10 - 3.0 * xi * xi) * mat.reflection_p_imag_axis(xi)
                    / (w10 * w10 + xi * xi).powi(3)
            },
            &spec.with_scale(w10),
        )
    } else {
        integrate_semi_infinite(
            |w| mat.im_reflection_p(w) / (w10 + w).powi(3),
            &spec.with_scale(real_axis_scale(atom, mat)),
        )
    };
    Ok(IntegralResult {
        value: prefactor * j.value,
        error_estimate: prefactor.abs() * j.error_estimate,
        converged: j.converged
            || spec.meets(prefactor * j.value, prefactor.abs() * j.error_estimate),
        ..j
    })
}

/// Fourth-order force contributions that go through the vacuum sector:
/// (ground-state-depletion term, Casimir-Polder correction, friction
/// correction), all in [N].
///
/// The depletion term is explicitly time-dependent (it multiplies the
/// elapsed time) and is reported separately rather than folded into a
/// "total" that would hide the secular growth.
pub fn force_4_vacuum(
    atom: &AtomParams,
    mat: &MaterialModel,
    state: &MotionState,
    spec: &QuadratureSpec,
) -> Result<(f64, IntegralResult, IntegralResult)> {
    let z = state.height()?;
    let d2 = atom.dipole * atom.dipole;
    let w10 = atom.omega10;
    let v = state.speed;
    let cos_t = if crate::markov::is_parallel(state.theta) {
        0.0
    } else {
        state.theta.cos()
    };
    let w_spec = spec.with_scale(real_axis_scale(atom, mat));

    let (shift, rate) = shift_rate_ground(atom, mat, state.z0, v, state.theta, spec);
    let gamma_g = rate.value;
    // Velocity-independent part of the shift.
    let (shift0, _) = shift_rate_ground(atom, mat, state.z0, 0.0, state.theta, spec);
    let _ = shift;

    let f2 = cp_force_2(atom, mat, state, true, spec)?.value
        + friction_force_2(atom, mat, state, true, spec)?.value;
    let loss = -gamma_g * state.time * f2;

    let j2 = integrate_semi_infinite(
        |w| mat.im_reflection_p(w) / (w10 + w).powi(2),
        &w_spec,
    );
    let cp4_pref = 3.0 * d2 * shift0.value * cos_t / (8.0 * PI * PI * HBAR * EPS0 * z.powi(4));
    let cp4 = IntegralResult {
        value: cp4_pref * j2.value,
        error_estimate: cp4_pref.abs() * j2.error_estimate,
        converged: j2.converged
            || spec.meets(cp4_pref * j2.value, cp4_pref.abs() * j2.error_estimate),
        ..j2
    };

    let j3 = integrate_semi_infinite(
        |w| mat.im_reflection_p(w) / (w10 + w).powi(3),
        &w_spec,
    );
    let fr4_pref = -3.0 * d2 * gamma_g * v * (1.0 + cos_t * cos_t)
        / (8.0 * PI * PI * HBAR * EPS0 * z.powi(5));
    let fr4 = IntegralResult {
        value: fr4_pref * j3.value,
        error_estimate: fr4_pref.abs() * j3.error_estimate,
        converged: j3.converged
            || spec.meets(fr4_pref * j3.value, fr4_pref.abs() * j3.error_estimate),
        ..j3
    };

    Ok((loss, cp4, fr4))
}

/// Fourth-order two-photon force at zeroth order in velocity: the
/// double-frequency integral
///
///   -(3 d^4 / (128 pi^3 hbar eps0)) (cos theta / z^7)
///     Int Im r(w1) Im r(w2) (2 w10 + w1 + w2)^2
///         / ((w1 + w2) (w10 + w1)^2 (w10 + w2)^2)
///
/// computed over the symmetric half-domain, which keeps the quadrature
/// away from the integrable 1/(w1 + w2) corner. [N]
pub fn sigma4_0(
    atom: &AtomParams,
    mat: &MaterialModel,
    state: &MotionState,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let z = state.height()?;
    let d4 = (atom.dipole * atom.dipole).powi(2);
    let w10 = atom.omega10;
    let cos_t = state.theta.cos();
    let prefactor = -3.0 * d4 * cos_t / (128.0 * PI.powi(3) * HBAR * EPS0 * z.powi(7));
    if crate::markov::is_parallel(state.theta) {
        return Ok(IntegralResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    let w_spec = spec.with_scale(real_axis_scale(atom, mat));
    let j = integrate_2d(
        |w1, w2| {
            let sum = w1 + w2;
            let num = 2.0 * w10 + sum;
            mat.im_reflection_p(w1) * mat.im_reflection_p(w2) * num * num
                / (sum * (w10 + w1).powi(2) * (w10 + w2).powi(2))
        },
        &w_spec,
        true,
    );
    Ok(IntegralResult {
        value: prefactor * j.value,
        error_estimate: prefactor.abs() * j.error_estimate,
        converged: j.converged
            || spec.meets(prefactor * j.value, prefactor.abs() * j.error_estimate),
        ..j
    })
}
