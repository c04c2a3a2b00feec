//! Complex special functions underpinning the closed-form fields: the Faddeeva
//! function w(z) = e^{-z^2} erfc(-iz), its derivatives, and the fixed branch of
//! sqrt(it) used by every caller.

use errorfunctions::ComplexErrorFunctions;
use num_complex::Complex64;

use crate::error::{Result, SolverError};

pub const SQRT_PI: f64 = 1.772_453_850_905_516_1;
pub const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// w(z) = e^{-z^2} erfc(-iz), accurate to ~1e-13 relative over the plane.
///
/// In the lower half-plane w grows like 2 e^{-z^2}; inputs for which that
/// factor exceeds the f64 range are rejected instead of returning infinities.
pub fn faddeeva(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(SolverError::Domain(format!("faddeeva: non-finite argument {z}")));
    }
    if z.im < 0.0 {
        // |e^{-z^2}| = e^{-Re(z^2)}
        let growth = -(z.re * z.re - z.im * z.im);
        if growth > 708.0 {
            return Err(SolverError::Overflow(format!(
                "faddeeva: e^(-z^2) exceeds f64 range at z = {z}"
            )));
        }
    }
    Ok(z.w())
}

/// The global branch sqrt(it) = sqrt(t) e^{i pi/4}, t > 0.
pub fn sqrt_it(t: f64) -> Result<Complex64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(SolverError::Domain(format!("sqrt_it: t > 0 required, got {t}")));
    }
    Ok(Complex64::from_polar(t.sqrt(), std::f64::consts::FRAC_PI_4))
}

/// Scaled derivatives W_j(z) = (-1)^j d^j w / dz^j for j = 0..=n, from the
/// recurrence W_{j+1} = 2 z W_j - 2 j W_{j-1} seeded by W_1 = 2 z w - 2i/sqrt(pi).
pub fn faddeeva_derivatives(z: Complex64, n: usize) -> Result<Vec<Complex64>> {
    let w0 = faddeeva(z)?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(w0);
    if n == 0 {
        return Ok(out);
    }
    let w1 = 2.0 * z * w0 - Complex64::new(0.0, 2.0 * INV_SQRT_PI);
    out.push(w1);
    for j in 1..n {
        let next = 2.0 * z * out[j] - 2.0 * (j as f64) * out[j - 1];
        out.push(next);
    }
    Ok(out)
}

/// erfc on the complex plane (delegates to the same Faddeeva backend).
pub fn erfc_complex(z: Complex64) -> Complex64 {
    z.erfc()
}
