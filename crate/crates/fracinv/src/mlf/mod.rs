//! Mittag-Leffler functions E_{α,β}(z) on the real line and the decay /
//! kernel functions built from them.
//!
//! E_{α,β}(z) = Σ_{k>=0} z^k / Γ(αk + β).
//!
//! Four evaluation schemes are combined, each with an internal error
//! estimate: the power series in double precision, the algebraic (plus,
//! for α >= 1, exponentially damped oscillatory) asymptotic expansion for
//! large negative arguments, a real-line integral representation of
//! inverse-Laplace type for the intermediate band, and a double-double
//! power series as the fallback of last resort. A scheme's value is used
//! only when its own error estimate clears the accuracy target.

mod gamma;

pub use gamma::gamma;

use crate::dd::{self, Dd};
use crate::quad;
use gamma::{ln_gamma_fast, recip_gamma};

use thiserror::Error;

/// Relative accuracy target for [`mittag_leffler`].
const TARGET: f64 = 1e-11;

const MAX_SERIES_TERMS: usize = 2000;

#[derive(Debug, Error)]
pub enum MlError {
    #[error("gamma pole at x = {x} (non-positive integer)")]
    GammaPole { x: f64 },
    #[error("invalid Mittag-Leffler parameters: alpha = {alpha}, beta = {beta} (need 0 < alpha <= 2, beta finite)")]
    InvalidParams { alpha: f64, beta: f64 },
    #[error("no evaluation scheme met its error target for alpha = {alpha}, beta = {beta}, z = {z}")]
    NonConvergence { alpha: f64, beta: f64, z: f64 },
    #[error("argument t = {t} outside the kernel domain t > 0")]
    KernelDomain { t: f64 },
}

/// Order pair (α, β) of E_{α,β}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MlParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, MlError> {
        if !(alpha > 0.0 && alpha <= 2.0) || !beta.is_finite() {
            return Err(MlError::InvalidParams { alpha, beta });
        }
        Ok(MlParams { alpha, beta })
    }
}

/// E_{α,β}(z) with relative error <= 1e-10 on the supported domain
/// (0 < α <= 2, z in [-1e6, 10] and far beyond for α < 1).
pub fn mittag_leffler(params: MlParams, z: f64) -> Result<f64, MlError> {
    eval(params.alpha, params.beta, z)
}

/// E_{α,1}(-λ t^α): the modal decay factor of the homogeneous problem.
pub fn ml_decay(alpha: f64, lambda: f64, t: f64) -> Result<f64, MlError> {
    debug_assert!(lambda >= 0.0 && t >= 0.0);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MlError::InvalidParams { alpha, beta: 1.0 });
    }
    eval(alpha, 1.0, -lambda * t.powf(alpha))
}

/// Duhamel kernel K_λ(t) = t^{α-1} E_{α,α}(-λ t^α), positive with an
/// integrable t^{α-1} singularity at the origin.
pub fn ml_kernel(alpha: f64, lambda: f64, t: f64) -> Result<f64, MlError> {
    debug_assert!(lambda >= 0.0);
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(MlError::InvalidParams { alpha, beta: alpha });
    }
    if t <= 0.0 {
        return Err(MlError::KernelDomain { t });
    }
    Ok(t.powf(alpha - 1.0) * eval(alpha, alpha, -lambda * t.powf(alpha))?)
}

/// ∫_0^t K_λ(s) ds = t^α E_{α,α+1}(-λ t^α); equals (1 - E_{α,1}(-λt^α))/λ
/// for λ > 0.
pub fn ml_kernel_primitive(alpha: f64, lambda: f64, t: f64) -> Result<f64, MlError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    if t < 0.0 {
        return Err(MlError::KernelDomain { t });
    }
    Ok(t.powf(alpha) * eval(alpha, alpha + 1.0, -lambda * t.powf(alpha))?)
}

/// ∫_0^t ∫_0^s K_λ(r) dr ds = t^{α+1} E_{α,α+2}(-λ t^α).
pub fn ml_kernel_double_primitive(alpha: f64, lambda: f64, t: f64) -> Result<f64, MlError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    if t < 0.0 {
        return Err(MlError::KernelDomain { t });
    }
    Ok(t.powf(alpha + 1.0) * eval(alpha, alpha + 2.0, -lambda * t.powf(alpha))?)
}

pub(crate) fn eval(alpha: f64, beta: f64, z: f64) -> Result<f64, MlError> {
    if !(alpha > 0.0 && alpha <= 2.0) || !beta.is_finite() || !z.is_finite() {
        return Err(MlError::InvalidParams { alpha, beta });
    }
    if alpha == 1.0 && beta == 1.0 {
        return Ok(z.exp());
    }
    if z == 0.0 {
        return Ok(recip_gamma(beta));
    }

    if let Some(v) = taylor(alpha, beta, z) {
        return Ok(v);
    }
    if z < 0.0 {
        if let Some(v) = asymptotic_negative(alpha, beta, -z) {
            return Ok(v);
        }
        if alpha <= 0.98 && beta > 0.0 {
            if let Some(v) = laplace_contour(alpha, beta, z) {
                return Ok(v);
            }
        }
        if beta > 0.0 {
            if let Some(v) = dd_series(alpha, beta, z) {
                return Ok(v);
            }
        }
    } else if let Some(v) = taylor_log_space(alpha, beta, z) {
        return Ok(v);
    }
    Err(MlError::NonConvergence { alpha, beta, z })
}

/// Whether an estimated absolute error is acceptable for a value of the
/// given magnitude. For α > 1 the function oscillates through zeros on the
/// negative axis, so an absolute floor scaled to the summand size applies.
fn accept(err_abs: f64, value: f64, scale: f64, alpha: f64) -> bool {
    if err_abs <= TARGET * value.abs() {
        return true;
    }
    alpha > 1.0 && err_abs <= 1e-13 * scale.max(1.0)
}

/// Power series in f64, with a cancellation-aware error estimate.
fn taylor(alpha: f64, beta: f64, z: f64) -> Option<f64> {
    let mut sum = 0.0f64;
    let mut sum_abs = 0.0f64;
    let mut z_pow = 1.0f64;
    let mut prev = f64::INFINITY;
    let mut converged = false;
    let mut tail = 0.0f64;

    for k in 0..MAX_SERIES_TERMS {
        let arg = alpha * k as f64 + beta;
        let term = z_pow * recip_gamma(arg);
        sum += term;
        sum_abs += term.abs();
        if k > 3 && term != 0.0 && term.abs() <= f64::EPSILON * sum.abs() && term.abs() <= prev {
            tail = term.abs();
            converged = true;
            break;
        }
        if term != 0.0 {
            prev = term.abs();
        }
        z_pow *= z;
        if !z_pow.is_finite() || z_pow.abs() > 1e290 {
            if z > 0.0 && sum > 1e290 {
                return Some(f64::INFINITY);
            }
            return None;
        }
    }
    if !converged {
        return None;
    }
    // 1e-13 covers the rounding of the gamma argument αk + β plus the
    // summation itself; the truncated tail enters at twice its last term.
    let err = 1e-13 * sum_abs + 2.0 * tail;
    accept(err, sum, sum_abs, alpha).then_some(sum)
}

/// Power series with log-space terms, for large positive z where z^k
/// overflows long before the sum does.
fn taylor_log_space(alpha: f64, beta: f64, z: f64) -> Option<f64> {
    debug_assert!(z > 0.0);
    let ln_z = z.ln();
    let mut sum = 0.0f64;
    let mut peaked = false;
    let mut prev = f64::NEG_INFINITY;
    for k in 0..50_000 {
        let arg = alpha * k as f64 + beta;
        if arg < 0.5 {
            // Finitely many low-k terms can sit left of the gamma poles.
            sum += z.powi(k) * recip_gamma(arg);
            continue;
        }
        let ln_term = k as f64 * ln_z - ln_gamma_fast(arg);
        let term = ln_term.exp();
        sum += term;
        if sum > 1e305 {
            return Some(f64::INFINITY);
        }
        if ln_term < prev {
            peaked = true;
        }
        if peaked && term <= f64::EPSILON * sum {
            return Some(sum);
        }
        prev = ln_term;
    }
    None
}

/// Asymptotic expansion on the negative axis, z = -x with x large:
/// the algebraic series Σ (-1)^{k+1} x^{-k}/Γ(β - αk), plus for α >= 1
/// the contribution of the exponential branches z^{1/α} e^{±iπ/α}.
fn asymptotic_negative(alpha: f64, beta: f64, x: f64) -> Option<f64> {
    debug_assert!(x > 0.0);
    if x <= 1.0 {
        return None;
    }

    let mut sum = 0.0f64;
    let mut sum_abs = 0.0f64;
    let mut x_pow = 1.0 / x;
    let mut min_term = f64::INFINITY;
    let mut truncation = f64::INFINITY;
    let mut pole_run = 0usize;
    let mut small_run = 0usize;
    for k in 1..=200 {
        let arg = beta - alpha * k as f64;
        let t = x_pow * recip_gamma(arg);
        let mag = t.abs();
        x_pow /= x;
        // 1/Γ vanishes at the non-positive integers; terms landing within
        // rounding distance of one carry no information about the tail.
        // They are added (they are genuinely negligible below the
        // divergence onset) but excluded from the stopping logic. Only an
        // unbroken run of them (integer α and β) ends the series exactly.
        if arg <= 0.5 && (arg - arg.round()).abs() < 1e-8 {
            sum += if k % 2 == 1 { t } else { -t };
            pole_run += 1;
            if pole_run >= 4 && k > 2 {
                truncation = 0.0;
                break;
            }
            continue;
        }
        pole_run = 0;
        if mag > min_term && k > 2 {
            // Divergent tail reached; the first omitted term bounds the error.
            truncation = mag;
            break;
        }
        sum += if k % 2 == 1 { t } else { -t };
        sum_abs += mag;
        min_term = min_term.min(mag);
        if mag <= 1e-18 * sum.abs().max(1e-300) && k > 1 {
            small_run += 1;
            if small_run >= 2 {
                truncation = mag;
                break;
            }
        } else {
            small_run = 0;
        }
    }
    if !truncation.is_finite() {
        return None;
    }

    let mut scale = sum_abs;
    let mut value = sum;
    if alpha >= 1.0 {
        let root = x.powf(1.0 / alpha);
        let angle = std::f64::consts::PI / alpha;
        let damping = (root * angle.cos()).exp();
        let weight = if alpha > 1.0 { 2.0 / alpha } else { 1.0 };
        let phase = root * angle.sin() + (1.0 - beta) * angle;
        let osc = weight * x.powf((1.0 - beta) / alpha) * damping * phase.cos();
        value += osc;
        scale += osc.abs();
    }

    let err = truncation + 1e-14 * scale;
    accept(err, value, scale, alpha).then_some(value)
}

/// Integral representation for 0 < α < 1 and z < 0 (inverse-Laplace type,
/// after Gorenflo-Loutchko-Luchko):
///
///   E_{α,β}(z) = ∫_0^∞ K(χ) dχ,
///   K(χ) = χ^{(1-β)/α} e^{-χ^{1/α}} [χ sin(π(1-β)) - z sin(π(1-β+α))]
///          / (απ (χ² - 2χz cos(πα) + z²)),
///
/// valid as written for β <= 1; larger β is reduced with
/// E_{α,b+α}(z) = (E_{α,b}(z) - 1/Γ(b)) / z and unwound afterwards.
fn laplace_contour(alpha: f64, beta: f64, z: f64) -> Option<f64> {
    debug_assert!(z < 0.0 && alpha > 0.0 && alpha < 1.0 && beta > 0.0);

    let reductions = if beta > 1.0 {
        ((beta - 1.0) / alpha).ceil() as usize
    } else {
        0
    };
    let beta0 = beta - reductions as f64 * alpha;

    let pi = std::f64::consts::PI;
    let s1 = (pi * (1.0 - beta0)).sin();
    let s2 = (pi * (1.0 - beta0 + alpha)).sin();
    let cos_pa = (pi * alpha).cos();
    let exponent = (1.0 - beta0) / alpha;

    let integrand = |chi: f64| -> f64 {
        if chi <= 0.0 {
            return 0.0;
        }
        // Bounded below by z² sin²(πα) > 0.
        let denom = chi * chi - 2.0 * chi * z * cos_pa + z * z;
        chi.powf(exponent) * (-chi.powf(1.0 / alpha)).exp() * (chi * s1 - z * s2)
            / (alpha * pi * denom)
    };

    let chi_max = (45.0f64.powf(alpha)).max(2.0 * z.abs() + 10.0);
    let (mut value, quad_err) = quad::integrate(&integrand, 0.0, chi_max, 1e-300, 1e-13);

    let mut err = quad_err + 1e-14 * value.abs();
    for i in 0..reductions {
        let b = beta0 + i as f64 * alpha;
        value = (value - recip_gamma(b)) / z;
        err = err / z.abs() + 1e-15 * (recip_gamma(b).abs() + value.abs());
    }
    accept(err, value, value.abs(), alpha).then_some(value)
}

/// Extended-precision power series: the fallback when double precision
/// loses the sum to cancellation. Needs β > 0 (the double-double gamma
/// path is positive-only).
fn dd_series(alpha: f64, beta: f64, z: f64) -> Option<f64> {
    let zd = Dd::from_f64(z);
    let alpha_d = Dd::from_f64(alpha);
    let beta_d = Dd::from_f64(beta);
    let mut sum = Dd::ZERO;
    let mut sum_abs = 0.0f64;
    let mut z_pow = Dd::ONE;
    let mut tail = 0.0f64;
    let mut converged = false;

    for k in 0..1500 {
        let arg = alpha_d.scale(k as f64).add(beta_d);
        let term = z_pow.mul(dd::recip_gamma_dd(arg));
        sum = sum.add(term);
        sum_abs += term.hi.abs();
        if k > 5 && term.hi.abs() <= 1e-33 * sum.hi.abs().max(1e-300) {
            tail = term.hi.abs();
            converged = true;
            break;
        }
        z_pow = z_pow.mul(zd);
        if !z_pow.hi.is_finite() || z_pow.hi.abs() > 1e290 {
            return None;
        }
    }
    if !converged {
        return None;
    }
    let value = sum.to_f64();
    let err = 5e-31 * sum_abs + 2.0 * tail;
    accept(err, value, sum_abs, alpha).then_some(value)
}
