//! Gamma function and reciprocals on the real line.
//!
//! The double-precision path is the Lanczos expansion from statrs
//! (© 2016 Michael Ma, MIT license), itself derived from "An Analysis of
//! the Lanczos Gamma Approximation", Glendon Ralph Pugh, 2004, p. 116.
//! The high-accuracy path routes through the double-double Stirling
//! series in [`crate::dd`] and rounds once at the end.

use crate::dd;

use super::MlError;

/// Lanczos polynomial coefficients, g = 10.900511.
const GAMMA_DK: &[f64] = &[
    2.4857408913875355e-5,
    1.0514237858172197,
    -3.4568709722201625,
    4.512277094668948,
    -2.9828522532357664,
    1.056397115771267,
    -1.9542877319164587e-1,
    1.709705434044412e-2,
    -5.719261174043057e-4,
    4.633994733599057e-6,
    -2.7199490848860772e-9,
];

const GAMMA_R: f64 = 10.900511;
const TWO_SQRT_E_OVER_PI: f64 = 1.8603827342052657;
const LN_2_SQRT_E_OVER_PI: f64 = 0.6207822376352452;

/// Fast Γ(x), good to ~1e-15 relative error; poles return ±inf.
pub(crate) fn gamma_fast(x: f64) -> f64 {
    if x < 0.5 {
        let s = GAMMA_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(GAMMA_DK[0], |s, t| s + t.1 / (t.0 as f64 - x));

        std::f64::consts::PI
            / ((std::f64::consts::PI * x).sin()
                * s
                * TWO_SQRT_E_OVER_PI
                * ((0.5 - x + GAMMA_R) / std::f64::consts::E).powf(0.5 - x))
    } else {
        let s = GAMMA_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(GAMMA_DK[0], |s, t| s + t.1 / (x + t.0 as f64 - 1.0));

        s * TWO_SQRT_E_OVER_PI * ((x - 0.5 + GAMMA_R) / std::f64::consts::E).powf(x - 0.5)
    }
}

/// ln Γ(x) for x > 0, good to ~1e-15 relative error.
pub(crate) fn ln_gamma_fast(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let s = GAMMA_DK
        .iter()
        .enumerate()
        .skip(1)
        .fold(GAMMA_DK[0], |s, t| s + t.1 / (x + t.0 as f64 - 1.0));
    s.ln() + LN_2_SQRT_E_OVER_PI + (x - 0.5) * ((x - 0.5 + GAMMA_R) / std::f64::consts::E).ln()
}

/// 1/Γ(x), entire: returns 0 at the poles x = 0, -1, -2, ...
pub(crate) fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x == 1.0 || x == 2.0 {
        return 1.0;
    }
    if x < 0.5 {
        // Reflection: 1/Γ(x) = Γ(1-x) sin(πx)/π. The sine is evaluated at
        // the reduced argument to keep accuracy for very negative x.
        let n = x.floor();
        let r = x - n; // r in [0, 1)
        let sin_pix = if (n as i64) % 2 == 0 {
            (std::f64::consts::PI * r).sin()
        } else {
            -(std::f64::consts::PI * r).sin()
        };
        gamma_fast(1.0 - x) * sin_pix / std::f64::consts::PI
    } else {
        1.0 / gamma_fast(x)
    }
}

/// Γ(x) via the extended-precision Stirling path, correctly rounded to f64
/// for x in (0, 170]. Errors at non-positive integer poles.
pub fn gamma(x: f64) -> Result<f64, MlError> {
    if !x.is_finite() {
        return Err(MlError::GammaPole { x });
    }
    if x <= 0.0 && x == x.floor() {
        return Err(MlError::GammaPole { x });
    }
    if x > 0.0 && x <= 170.0 {
        Ok(dd::gamma_dd(dd::Dd::from_f64(x)).to_f64())
    } else {
        Ok(gamma_fast(x))
    }
}
