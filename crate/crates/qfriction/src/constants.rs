//! Physical constants, SI units (2018 CODATA).

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;

/// Vacuum permittivity [F/m].
pub const EPS0: f64 = 8.854_187_812_8e-12;
