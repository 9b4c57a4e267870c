//! Reconstruction of the time factor f(t) from a single-point trace.
//!
//! Both reconstructions march the same modal Volterra systems as the
//! forward solvers, but with f unknown: at each node the diagonal
//! product-integration weight makes the step equation scalar in f̂(t_k)
//! (linear for the source problem, resolved by a small fixed point for
//! the potential problem). The governing identities are
//!
//!   source:    f(t) R(x0,t)        = ∂_t^α u(x0,t) + 𝒜u(x0,t)
//!   potential: f(t) q(x0,t)v(x0,t) = -(∂_t^α v(x0,t) + 𝒜v(x0,t))
//!
//! and the pointwise lower bounds |R(x0,·)| >= δ resp. |q v̂| >= δ keep
//! the division well posed; crossing the floor raises [`InverseError::FloorViolation`]
//! at the first offending node.
//!
//! The module also houses the Gronwall-lemma verifiers used as oracles by
//! the stability test machinery, and the empirical stability ratio.

use crate::fracops::{
    caputo_l1, lp_norm, presmooth, singular_convolution, FracOpsError, TimeGrid, Trace,
};
use crate::forward::{
    kernel_weights, KernelWeights, PotentialProblem, SolveError, SourceProblem,
};
use crate::mlf::{self, MlError};
use crate::spectral::{project, EigenBasis, SpectralError};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum InverseError {
    #[error("floor violated at node {node} (t = {time}): |denominator| = {value:e} < delta = {delta:e}")]
    FloorViolation {
        node: usize,
        time: f64,
        value: f64,
        delta: f64,
    },
    #[error("ill-posed step at node {node}: scalar coefficient {coefficient:e}")]
    IllPosedStep { node: usize, coefficient: f64 },
    #[error("inner iteration failed at node {node}: residual {residual:e} after {iterations} iterations")]
    InnerIteration {
        node: usize,
        residual: f64,
        iterations: usize,
    },
    #[error("invalid reconstruction config: {what}")]
    ConfigInvalid { what: String },
    #[error("observation traces coincide; the ratio is undefined (f1 = f2)")]
    TracesCoincide,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    FracOps(#[from] FracOpsError),
    #[error(transparent)]
    Ml(#[from] MlError),
}

/// Settings shared by both reconstructions.
#[derive(Clone, Debug)]
pub struct ReconstructionConfig {
    /// Observation floor δ of the identifiability conditions.
    pub delta: f64,
    /// Observation point.
    pub x0: f64,
    /// Smoothing exponent γ in (1/4, 1); recorded with the run, the
    /// marches themselves do not depend on it.
    pub gamma: f64,
    /// Moving-average half width applied to raw data before the Caputo
    /// derivative (0 = off).
    pub presmooth_half_width: usize,
    /// Per-step fixed point budget for the potential march.
    pub max_inner_iters: usize,
    pub inner_tol: f64,
    /// When true the data trace already is ∂_t^α u(x0, ·); when false it
    /// is u(x0, ·) and the Caputo trace is formed by the L1 scheme after
    /// optional presmoothing.
    pub data_is_caputo: bool,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            delta: 0.1,
            x0: 0.5,
            gamma: 0.5,
            presmooth_half_width: 0,
            max_inner_iters: 50,
            inner_tol: 1e-10,
            data_is_caputo: false,
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self, length: f64) -> Result<(), InverseError> {
        if !(self.delta > 0.0) {
            return Err(InverseError::ConfigInvalid {
                what: format!("delta = {} must be positive", self.delta),
            });
        }
        if !(0.0..=length).contains(&self.x0) {
            return Err(InverseError::ConfigInvalid {
                what: format!("x0 = {} outside [0, {length}]", self.x0),
            });
        }
        if !(self.gamma > 0.25 && self.gamma < 1.0) {
            return Err(InverseError::ConfigInvalid {
                what: format!("gamma = {} outside (0.25, 1)", self.gamma),
            });
        }
        Ok(())
    }
}

/// Per-node reconstruction diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct StepDiagnostic {
    pub inner_iterations: usize,
    /// |denominator| of the step equation.
    pub floor_value: f64,
    /// Whether the degenerate-step fallback (explicit lagging) fired.
    pub lagged: bool,
}

pub struct ReconstructionResult {
    pub f_hat: Trace,
    /// Defect of the governing identity at each node.
    pub residual_trace: Trace,
    /// min over nodes of |denominator|.
    pub floor_margin: f64,
    pub diagnostics: Vec<StepDiagnostic>,
}

fn caputo_data(
    data: &Trace,
    cfg: &ReconstructionConfig,
) -> Result<Trace, InverseError> {
    if cfg.data_is_caputo {
        Ok(data.clone())
    } else {
        let smoothed = presmooth(data, cfg.presmooth_half_width)?;
        Ok(caputo_l1(&smoothed))
    }
}

/// Recover f(t) for the source problem from the trace at x0. `prob.f` is
/// ignored; everything else must describe the data-generating setup.
pub fn reconstruct_source_f(
    data: &Trace,
    prob: &SourceProblem,
    basis: &EigenBasis,
    cfg: &ReconstructionConfig,
) -> Result<ReconstructionResult, InverseError> {
    cfg.validate(prob.mesh.length())?;
    let grid = data.grid();
    let n = grid.n_steps();
    let nx = prob.mesh.n_nodes();

    // The floor |R(x0, t_k)| >= δ is a precondition on the given data.
    let r_at_x0: Vec<f64> = (0..=n)
        .map(|k| prob.source_profile.at(prob.mesh, cfg.x0, k))
        .collect::<Result<_, _>>()?;
    for (k, r) in r_at_x0.iter().enumerate() {
        if r.abs() < cfg.delta {
            return Err(InverseError::FloorViolation {
                node: k,
                time: grid.node(k),
                value: r.abs(),
                delta: cfg.delta,
            });
        }
    }

    let dtrace = caputo_data(data, cfg)?;
    let d = dtrace.values();

    let n_modes = basis.n_modes();
    let r_cols: Vec<Vec<f64>> = (0..=n)
        .map(|k| project(&prob.source_profile.column(k, nx), basis))
        .collect();
    let phi_at: Vec<f64> = (0..n_modes)
        .map(|m| basis.phi_at(m, cfg.x0))
        .collect::<Result<_, _>>()?;
    let lam: Vec<f64> = (0..n_modes).map(|m| basis.lambda_elliptic(m)).collect();
    let weights: Vec<KernelWeights> = (0..n_modes)
        .map(|m| kernel_weights(prob.alpha, lam[m], grid))
        .collect::<Result<_, _>>()?;

    let mut f_hat = vec![0.0; n + 1];
    let mut residual = vec![0.0; n + 1];
    let mut diagnostics = Vec::with_capacity(n + 1);
    diagnostics.push(StepDiagnostic {
        inner_iterations: 0,
        floor_value: r_at_x0[0].abs(),
        lagged: false,
    });
    // g[j][m] = f̂_j R_m(t_j)
    let mut g = vec![vec![0.0; n_modes]; n + 1];
    let scale = r_at_x0
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(d.iter().fold(0.0, |m: f64, v| m.max(v.abs())));

    for k in 1..=n {
        let mut hist = 0.0;
        let mut implicit = 0.0;
        for m in 0..n_modes {
            let w = &weights[m];
            let mut h = 0.0;
            for j in 0..k {
                let idx = k - j - 1;
                h += g[j][m] * w.left[idx];
                if j + 1 < k {
                    h += g[j + 1][m] * w.right[idx];
                }
            }
            hist += lam[m] * h * phi_at[m];
            // Coefficient of f̂_k inside 𝒜û(x0, t_k).
            let mut c = w.right[0] * r_cols[k][m];
            if k == 1 {
                // f̂_0 := f̂_1 (the first interval sees a constant f̂).
                c += w.left[0] * r_cols[0][m];
            }
            implicit += lam[m] * c * phi_at[m];
        }

        let den = r_at_x0[k] - implicit;
        let lagged = den.abs() < 1e-14 * scale.max(1.0);
        let fk = if lagged {
            // Degenerate scalar step: fall back to explicit lagging.
            
            f_hat[k - 1]
        } else {
            (d[k] + hist) / den
        };
        f_hat[k] = fk;
        if k == 1 {
            f_hat[0] = fk;
            for m in 0..n_modes {
                g[0][m] = fk * r_cols[0][m];
            }
        }
        for m in 0..n_modes {
            g[k][m] = fk * r_cols[k][m];
        }
        // Identity defect at this node.
        residual[k] = fk * r_at_x0[k] - d[k] - (hist + implicit * fk);
        diagnostics.push(StepDiagnostic {
            inner_iterations: 1,
            floor_value: r_at_x0[k].abs(),
            lagged,
        });
    }

    let floor_margin = r_at_x0.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    Ok(ReconstructionResult {
        f_hat: Trace::new(grid, f_hat)?,
        residual_trace: Trace::new(grid, residual)?,
        floor_margin,
        diagnostics,
    })
}

/// Recover f(t) for the potential problem from the trace at x0. `prob.f`
/// is ignored. The floor |q(x0,t) v̂(x0,t)| >= δ is enforced against the
/// reconstructed solution as the march advances.
pub fn reconstruct_potential_f(
    data: &Trace,
    prob: &PotentialProblem,
    basis: &EigenBasis,
    cfg: &ReconstructionConfig,
) -> Result<ReconstructionResult, InverseError> {
    cfg.validate(prob.mesh.length())?;
    let grid = data.grid();
    let n = grid.n_steps();
    let nx = prob.mesh.n_nodes();
    let n_modes = basis.n_modes();

    let dtrace = caputo_data(data, cfg)?;
    let d = dtrace.values();

    let q_at_x0: Vec<f64> = (0..=n)
        .map(|k| prob.coupling.at(prob.mesh, cfg.x0, k))
        .collect::<Result<_, _>>()?;
    let v0_at_x0 = crate::spectral::interpolate(prob.mesh, &prob.initial, cfg.x0)?;
    let c0 = project(&prob.initial, basis);
    let phi_at: Vec<f64> = (0..n_modes)
        .map(|m| basis.phi_at(m, cfg.x0))
        .collect::<Result<_, _>>()?;
    let lam: Vec<f64> = (0..n_modes).map(|m| basis.lambda_elliptic(m)).collect();
    let weights: Vec<KernelWeights> = (0..n_modes)
        .map(|m| kernel_weights(prob.alpha, lam[m], grid))
        .collect::<Result<_, _>>()?;

    let coupling_apply = |k: usize, coeffs: &[f64]| -> Vec<f64> {
        let q_col = prob.coupling.column(k, nx);
        let nodal = crate::spectral::synthesize_nodal(coeffs, basis);
        let prod: Vec<f64> = nodal.iter().zip(&q_col).map(|(a, b)| a * b).collect();
        project(&prod, basis)
    };
    let qv0: Vec<Vec<f64>> = (0..=n).map(|k| coupling_apply(k, &c0)).collect();

    // Floor at t_0 against the initial data itself.
    let floor0 = (q_at_x0[0] * v0_at_x0).abs();
    if floor0 < cfg.delta {
        return Err(InverseError::FloorViolation {
            node: 0,
            time: 0.0,
            value: floor0,
            delta: cfg.delta,
        });
    }

    let mut f_hat = vec![0.0; n + 1];
    let mut residual = vec![0.0; n + 1];
    let mut floor_margin = floor0;
    let mut diagnostics = Vec::with_capacity(n + 1);
    diagnostics.push(StepDiagnostic {
        inner_iterations: 0,
        floor_value: floor0,
        lagged: false,
    });

    let mut g = vec![vec![0.0; n_modes]; n + 1];
    let mut w_modal = vec![vec![0.0; n_modes]; n + 1];
    let w_scale = c0.iter().fold(1e-12f64, |m, v| m.max(v.abs()));

    for k in 1..=n {
        let hist: Vec<f64> = (0..n_modes)
            .map(|m| {
                let w = &weights[m];
                let mut h = 0.0;
                for j in 0..k {
                    let idx = k - j - 1;
                    h += g[j][m] * w.left[idx];
                    if j + 1 < k {
                        h += g[j + 1][m] * w.right[idx];
                    }
                }
                h
            })
            .collect();

        let mut fk = f_hat[k - 1];
        let mut w_k = w_modal[k - 1].clone();
        let mut outer_res = f64::INFINITY;
        let mut outer_iters = 0usize;
        let mut floor_k = 0.0;
        for outer in 0..cfg.max_inner_iters {
            outer_iters = outer + 1;
            // Inner fixed point for w(t_k) at frozen f̂_k.
            let mut inner_res = f64::INFINITY;
            for _ in 0..50 {
                let qw = coupling_apply(k, &w_k);
                let mut next = vec![0.0; n_modes];
                for m in 0..n_modes {
                    let gk = -lam[m] * c0[m] - fk * (qv0[k][m] + qw[m]);
                    let mut val = hist[m] + weights[m].right[0] * gk;
                    if k == 1 {
                        // f̂_0 := f̂_1: the left weight of the first
                        // interval also carries the unknown factor.
                        let g0 = -lam[m] * c0[m] - fk * qv0[0][m];
                        val += weights[m].left[0] * (g0 - g[0][m]);
                    }
                    next[m] = val;
                }
                inner_res = next
                    .iter()
                    .zip(&w_k)
                    .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
                w_k = next;
                if inner_res <= 1e-13 * w_scale {
                    break;
                }
            }
            if inner_res > 1e-9 * w_scale {
                return Err(InverseError::InnerIteration {
                    node: k,
                    residual: inner_res,
                    iterations: 50,
                });
            }

            let v_at: f64 = v0_at_x0
                + w_k
                    .iter()
                    .zip(&phi_at)
                    .map(|(w, p)| w * p)
                    .sum::<f64>();
            floor_k = (q_at_x0[k] * v_at).abs();
            if floor_k < cfg.delta {
                return Err(InverseError::FloorViolation {
                    node: k,
                    time: grid.node(k),
                    value: floor_k,
                    delta: cfg.delta,
                });
            }
            let av_at: f64 = w_k
                .iter()
                .zip(&c0)
                .zip(phi_at.iter().zip(&lam))
                .map(|((w, c), (p, l))| l * (w + c) * p)
                .sum();
            let f_next = -(d[k] + av_at) / (q_at_x0[k] * v_at);
            outer_res = (f_next - fk).abs();
            fk = f_next;
            if outer_res <= cfg.inner_tol * fk.abs().max(1.0) {
                break;
            }
        }
        if outer_res > 100.0 * cfg.inner_tol * fk.abs().max(1.0) {
            return Err(InverseError::InnerIteration {
                node: k,
                residual: outer_res,
                iterations: outer_iters,
            });
        }

        f_hat[k] = fk;
        if k == 1 {
            f_hat[0] = fk;
            for m in 0..n_modes {
                g[0][m] = -lam[m] * c0[m] - fk * qv0[0][m];
            }
        }
        let qw = coupling_apply(k, &w_k);
        for m in 0..n_modes {
            g[k][m] = -lam[m] * c0[m] - fk * (qv0[k][m] + qw[m]);
        }
        w_modal[k] = w_k.clone();

        let v_at: f64 = v0_at_x0
            + w_k
                .iter()
                .zip(&phi_at)
                .map(|(w, p)| w * p)
                .sum::<f64>();
        let av_at: f64 = w_k
            .iter()
            .zip(&c0)
            .zip(phi_at.iter().zip(&lam))
            .map(|((w, c), (p, l))| l * (w + c) * p)
            .sum();
        residual[k] = fk * q_at_x0[k] * v_at + d[k] + av_at;
        floor_margin = floor_margin.min(floor_k);
        diagnostics.push(StepDiagnostic {
            inner_iterations: outer_iters,
            floor_value: floor_k,
            lagged: false,
        });
    }

    Ok(ReconstructionResult {
        f_hat: Trace::new(grid, f_hat)?,
        residual_trace: Trace::new(grid, residual)?,
        floor_margin,
        diagnostics,
    })
}

/// Outcome of a Gronwall-style verification.
#[derive(Clone, Copy, Debug)]
pub struct GronwallReport {
    pub hypothesis_holds: bool,
    pub conclusion_holds: bool,
    /// min over nodes of (conclusion rhs - lhs); +inf when trivial.
    pub margin: f64,
    pub falsified_node: Option<usize>,
}

/// Verifier for the weakly singular Gronwall lemma: if
/// u <= C d + C ∫ (t-s)^{α-1} u ds at every node, then
/// u <= C d + C* ∫ (t-s)^{α-1} d ds, with the closure constant
/// C* = Σ_{m>=1} C^{m+1} Γ(α)^m T^{(m-1)α} / Γ(mα) obtained by iterating
/// the hypothesis and composing the kernels through the Beta identity.
pub fn verify_gronwall_weak(u: &Trace, d: &Trace, c: f64, alpha: f64) -> GronwallReport {
    debug_assert!(c > 0.0 && alpha > 0.0 && alpha < 1.0);
    let conv_u = singular_convolution(alpha, u).expect("alpha in (0,1)");
    let conv_d = singular_convolution(alpha, d).expect("alpha in (0,1)");
    let n = u.grid().n_steps();
    let scale = u.max_abs().max(d.max_abs()).max(1e-300);
    let slack = 1e-12 * scale;

    let mut hypothesis_holds = true;
    for k in 0..=n {
        if u.values()[k] > c * d.values()[k] + c * conv_u.values()[k] + slack {
            hypothesis_holds = false;
            break;
        }
    }

    let c_star = gronwall_closure_constant(c, alpha, u.grid().t_final());
    let mut margin = f64::INFINITY;
    let mut falsified = None;
    for k in 0..=n {
        let rhs = c * d.values()[k] + c_star * conv_d.values()[k];
        let gap = rhs - u.values()[k];
        if gap < margin {
            margin = gap;
        }
        if gap < -slack && falsified.is_none() {
            falsified = Some(k);
        }
    }
    GronwallReport {
        hypothesis_holds,
        conclusion_holds: falsified.is_none(),
        margin,
        falsified_node: falsified,
    }
}

/// Σ_{m>=1} C^{m+1} Γ(α)^m T^{(m-1)α} / Γ(mα).
pub fn gronwall_closure_constant(c: f64, alpha: f64, t_final: f64) -> f64 {
    let g_alpha = mlf::gamma(alpha).expect("alpha > 0");
    let mut total = 0.0;
    let mut m = 1usize;
    loop {
        let gamma_m = mlf::gamma(m as f64 * alpha).expect("mα > 0");
        let term = c.powi(m as i32 + 1) * g_alpha.powi(m as i32)
            * t_final.powf((m as f64 - 1.0) * alpha)
            / gamma_m;
        total += term;
        m += 1;
        if term < 1e-16 * total || m > 400 {
            break;
        }
    }
    total
}

/// Verifier output of the L^p Gronwall lemma.
#[derive(Clone, Copy, Debug)]
pub struct LpGronwallReport {
    pub hypothesis_holds: bool,
    /// The empirical constant ‖f‖_p / ‖u‖_p.
    pub ratio: f64,
}

/// Empirical check of the L^p Gronwall lemma: under
/// f <= u + ∫ (t-s)^{μ-1} f R ds (nodewise, nonnegative data, p >= 2,
/// μ > 2/p), the ratio ‖f‖_p/‖u‖_p is the candidate constant; families of
/// such instances must keep it bounded.
pub fn verify_lp_gronwall(
    f: &Trace,
    u: &Trace,
    r: &Trace,
    p: f64,
    mu: f64,
) -> Result<LpGronwallReport, InverseError> {
    if !(p >= 2.0) || !(mu > 2.0 / p) {
        return Err(InverseError::ConfigInvalid {
            what: format!("need p >= 2 and mu > 2/p, got p = {p}, mu = {mu}"),
        });
    }
    let fr = Trace::new(
        f.grid(),
        f.values()
            .iter()
            .zip(r.values())
            .map(|(a, b)| a * b)
            .collect(),
    )?;
    let conv = singular_convolution(mu, &fr)?;
    let scale = f.max_abs().max(u.max_abs()).max(1e-300);
    let slack = 1e-12 * scale;
    let hypothesis_holds = f
        .values()
        .iter()
        .zip(u.values())
        .zip(conv.values())
        .all(|((fv, uv), cv)| *fv <= uv + cv + slack);
    let nf = lp_norm(f, p);
    let nu = lp_norm(u, p);
    let ratio = if nu == 0.0 {
        if nf == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        nf / nu
    };
    Ok(LpGronwallReport {
        hypothesis_holds,
        ratio,
    })
}

/// Verifier for the Mittag-Leffler Gronwall lemma: under
/// f <= a + b ∫ (t-s)^{μ-1} f ds, assert f(t) <= a E_{μ,1}(b Γ(μ) t^μ)
/// nodewise. Returns the hypothesis check and the worst margin.
pub fn verify_ml_gronwall(
    f: &Trace,
    a: f64,
    b: f64,
    mu: f64,
) -> Result<GronwallReport, InverseError> {
    let conv = singular_convolution(mu, f)?;
    let scale = f.max_abs().max(a.abs()).max(1e-300);
    let slack = 1e-12 * scale;
    let hypothesis_holds = f
        .values()
        .iter()
        .zip(conv.values())
        .all(|(fv, cv)| *fv <= a + b * cv + slack);

    let g_mu = mlf::gamma(mu)?;
    let mut margin = f64::INFINITY;
    let mut falsified = None;
    for (k, t) in f.grid().nodes().enumerate() {
        let bound = a * mlf::mittag_leffler(
            mlf::MlParams::new(mu, 1.0)?,
            b * g_mu * t.powf(mu),
        )?;
        let gap = bound - f.values()[k];
        if gap < margin {
            margin = gap;
        }
        if gap < -slack && falsified.is_none() {
            falsified = Some(k);
        }
    }
    Ok(GronwallReport {
        hypothesis_holds,
        conclusion_holds: falsified.is_none(),
        margin,
        falsified_node: falsified,
    })
}

/// Discrete solution of the Volterra equality f = a + b ∫ (t-s)^{μ-1} f,
/// by forward substitution through the product-integration weights: the
/// equality case of the Mittag-Leffler Gronwall bound.
pub fn solve_volterra_equality(a: f64, b: f64, mu: f64, grid: TimeGrid) -> Trace {
    let n = grid.n_steps();
    let dt = grid.dt();
    let mut f = vec![0.0; n + 1];
    f[0] = a;
    // Interval weights for the kernel (t-s)^{μ-1} against hat functions.
    let weights: Vec<(f64, f64)> = (0..n)
        .map(|m| crate::fracops::singular_convolution_weights(mu, dt, m))
        .collect();
    for k in 1..=n {
        let mut hist = 0.0;
        for j in 0..k {
            let (left, right) = weights[k - j - 1];
            hist += f[j] * left;
            if j + 1 < k {
                hist += f[j + 1] * right;
            }
        }
        let diag = weights[0].1;
        f[k] = (a + b * hist) / (1.0 - b * diag);
    }
    Trace::new(grid, f).expect("length by construction")
}

/// Norm selector for [`stability_ratio`].
#[derive(Clone, Copy, Debug)]
pub enum StabilityNorm {
    Lp(f64),
    LInf,
}

/// ‖f1 - f2‖ / ‖∂_t^α trace_1 - ∂_t^α trace_2‖ in the requested norm:
/// the empirical surrogate for the stability constants.
pub fn stability_ratio(
    f1: &Trace,
    f2: &Trace,
    dtrace1: &Trace,
    dtrace2: &Trace,
    norm: StabilityNorm,
) -> Result<f64, InverseError> {
    let p = match norm {
        StabilityNorm::Lp(p) => p,
        StabilityNorm::LInf => f64::INFINITY,
    };
    let df = Trace::new(
        f1.grid(),
        f1.values()
            .iter()
            .zip(f2.values())
            .map(|(a, b)| a - b)
            .collect(),
    )?;
    let dd = Trace::new(
        dtrace1.grid(),
        dtrace1
            .values()
            .iter()
            .zip(dtrace2.values())
            .map(|(a, b)| a - b)
            .collect(),
    )?;
    let den = lp_norm(&dd, p);
    let scale = dtrace1.max_abs().max(dtrace2.max_abs()).max(1e-300);
    if den <= 1e-14 * scale {
        return Err(InverseError::TracesCoincide);
    }
    Ok(lp_norm(&df, p) / den)
}
