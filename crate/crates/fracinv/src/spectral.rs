//! Spatial discretization of the elliptic operator 𝒜 = -(a(x) u')' on
//! (0, L) with the σ-interpolated boundary condition
//! (1-σ)u + σ a u' ν = 0, and the eigenbasis of the shifted operator
//! A = 𝒜 + 1 that drives the spectral solvers.
//!
//! The scheme is finite-volume on a uniform grid with a(x) sampled at
//! cell midpoints and a lumped (trapezoid) mass matrix, so the discrete
//! operator is symmetric in the mesh-weighted inner product
//! ⟨u, v⟩ = Σ w_j h u_j v_j. σ = 0 eliminates the boundary unknown;
//! σ > 0 folds the flux condition a u' ν = -((1-σ)/σ) u into the
//! boundary diagonal, which keeps the matrix symmetric for every σ.

use crate::fracops::TimeGrid;
use crate::mlf::{self, MlError};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("invalid mesh: L = {length}, n_cells = {n_cells} (need L > 0, n_cells >= 4)")]
    InvalidMesh { length: f64, n_cells: usize },
    #[error("sigma = {sigma} outside [0, 1]")]
    InvalidSigma { sigma: f64 },
    #[error("ellipticity violated: min a(x) = {min_a} <= 0")]
    Ellipticity { min_a: f64 },
    #[error("requested {requested} modes but the operator has dimension {dim}")]
    TooManyModes { requested: usize, dim: usize },
    #[error("eigensolver failed: {what}")]
    Eigensolver { what: String },
    #[error("x0 = {x0} outside [0, {length}]")]
    OutOfDomain { x0: f64, length: f64 },
    #[error(transparent)]
    Ml(#[from] MlError),
}

/// Uniform grid on (0, L) with n_cells cells and n_cells + 1 nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialMesh {
    length: f64,
    n_cells: usize,
}

impl SpatialMesh {
    pub fn new(length: f64, n_cells: usize) -> Result<Self, SpectralError> {
        if !(length > 0.0) || n_cells < 4 {
            return Err(SpectralError::InvalidMesh { length, n_cells });
        }
        Ok(SpatialMesh { length, n_cells })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn h(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(|j| self.node(j))
    }

    /// Trapezoid quadrature weight of node j (including the h factor).
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.n_cells {
            0.5 * self.h()
        } else {
            self.h()
        }
    }

    /// Mesh-weighted inner product of two nodal vectors.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.n_nodes());
        debug_assert_eq!(v.len(), self.n_nodes());
        u.iter()
            .zip(v)
            .enumerate()
            .map(|(j, (a, b))| self.weight(j) * a * b)
            .sum()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }
}

/// Endpoint values of σ: 0 is Dirichlet, 1 the conormal (Neumann-type)
/// condition, anything between is Robin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySpec {
    pub sigma_left: f64,
    pub sigma_right: f64,
}

impl BoundarySpec {
    pub fn new(sigma_left: f64, sigma_right: f64) -> Result<Self, SpectralError> {
        for sigma in [sigma_left, sigma_right] {
            if !(0.0..=1.0).contains(&sigma) {
                return Err(SpectralError::InvalidSigma { sigma });
            }
        }
        Ok(BoundarySpec {
            sigma_left,
            sigma_right,
        })
    }

    pub fn dirichlet() -> Self {
        BoundarySpec {
            sigma_left: 0.0,
            sigma_right: 0.0,
        }
    }

    pub fn neumann() -> Self {
        BoundarySpec {
            sigma_left: 1.0,
            sigma_right: 1.0,
        }
    }
}

/// Symmetric tridiagonal discretization of A = 𝒜 + 1 in generalized form
/// S u = λ̃ M u (for the 𝒜 part), with Dirichlet unknowns eliminated.
#[derive(Clone, Debug)]
pub struct TridiagOperator {
    mesh: SpatialMesh,
    boundary: BoundarySpec,
    /// First full-grid node carried as an unknown (1 when the left end is
    /// Dirichlet, else 0).
    offset: usize,
    /// Stiffness diagonal and off-diagonal over the active nodes.
    stiff_diag: Vec<f64>,
    stiff_off: Vec<f64>,
    /// Lumped mass diagonal over the active nodes.
    mass: Vec<f64>,
    /// a(x) at cell midpoints.
    a_mid: Vec<f64>,
}

impl TridiagOperator {
    pub fn mesh(&self) -> SpatialMesh {
        self.mesh
    }

    pub fn boundary(&self) -> BoundarySpec {
        self.boundary
    }

    pub fn dim(&self) -> usize {
        self.stiff_diag.len()
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn a_mid(&self) -> &[f64] {
        &self.a_mid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn stiffness(&self) -> (&[f64], &[f64]) {
        (&self.stiff_diag, &self.stiff_off)
    }

    /// Row i of A = 𝒜 + 1 in operator form M^{-1} S + I, as the triple
    /// (sub, diag, super) acting on active-node values.
    pub fn operator_row(&self, i: usize) -> (f64, f64, f64) {
        let m = self.mass[i];
        let sub = if i > 0 { self.stiff_off[i - 1] / m } else { 0.0 };
        let sup = if i + 1 < self.dim() {
            self.stiff_off[i] / m
        } else {
            0.0
        };
        (sub, self.stiff_diag[i] / m + 1.0, sup)
    }

    /// Row sums of the 𝒜 part (zero for pure Neumann where constants are
    /// in the kernel).
    pub fn elliptic_row_sum(&self, i: usize) -> f64 {
        let mut acc = self.stiff_diag[i];
        if i > 0 {
            acc += self.stiff_off[i - 1];
        }
        if i + 1 < self.dim() {
            acc += self.stiff_off[i];
        }
        acc
    }

    /// Apply the 𝒜 part (no +1 shift) to a full-grid nodal vector,
    /// returning a full-grid vector that is zero at eliminated nodes.
    pub fn apply_elliptic(&self, values: &[f64]) -> Vec<f64> {
        debug_assert_eq!(values.len(), self.mesh.n_nodes());
        let n = self.dim();
        let mut out = vec![0.0; self.mesh.n_nodes()];
        for i in 0..n {
            let j = i + self.offset;
            let mut acc = self.stiff_diag[i] * values[j];
            if j > 0 && i > 0 {
                acc += self.stiff_off[i - 1] * values[j - 1];
            }
            if i + 1 < n {
                acc += self.stiff_off[i] * values[j + 1];
            }
            out[j] = acc / self.mass[i];
        }
        out
    }

    fn active_to_full(&self, active: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.mesh.n_nodes()];
        full[self.offset..self.offset + active.len()].copy_from_slice(active);
        full
    }

    /// Symmetric reduction C = M^{-1/2} S M^{-1/2} as (diag, off).
    fn symmetric_form(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let d: Vec<f64> = (0..n).map(|i| self.stiff_diag[i] / self.mass[i]).collect();
        let e: Vec<f64> = (0..n - 1)
            .map(|i| self.stiff_off[i] / (self.mass[i] * self.mass[i + 1]).sqrt())
            .collect();
        (d, e)
    }
}

/// Assemble A = 𝒜 + 1 for the diffusion coefficient `a`, which must be
/// uniformly positive (ellipticity).
pub fn assemble_operator(
    mesh: SpatialMesh,
    a: &dyn Fn(f64) -> f64,
    boundary: BoundarySpec,
) -> Result<TridiagOperator, SpectralError> {
    let n_cells = mesh.n_cells();
    let h = mesh.h();
    let a_mid: Vec<f64> = (0..n_cells).map(|j| a((j as f64 + 0.5) * h)).collect();
    let min_a = a_mid.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_a > 0.0) {
        return Err(SpectralError::Ellipticity { min_a });
    }

    let dirichlet_left = boundary.sigma_left == 0.0;
    let dirichlet_right = boundary.sigma_right == 0.0;
    let offset = usize::from(dirichlet_left);
    let last = if dirichlet_right { n_cells - 1 } else { n_cells };
    let dim = last + 1 - offset;
    if dim < 3 {
        return Err(SpectralError::InvalidMesh {
            length: mesh.length(),
            n_cells,
        });
    }

    let mut stiff_diag = vec![0.0; dim];
    let mut stiff_off = vec![0.0; dim - 1];
    let mut mass = vec![0.0; dim];

    for i in 0..dim {
        let j = i + offset;
        let left = if j > 0 { a_mid[j - 1] / h } else { 0.0 };
        let right = if j < n_cells { a_mid[j] / h } else { 0.0 };
        stiff_diag[i] = left + right;
        mass[i] = mesh.weight(j);
        if i + 1 < dim {
            stiff_off[i] = -a_mid[j] / h;
        }
    }
    if !dirichlet_left && boundary.sigma_left < 1.0 {
        stiff_diag[0] += (1.0 - boundary.sigma_left) / boundary.sigma_left;
    }
    if !dirichlet_right && boundary.sigma_right < 1.0 {
        stiff_diag[dim - 1] += (1.0 - boundary.sigma_right) / boundary.sigma_right;
    }

    Ok(TridiagOperator {
        mesh,
        boundary,
        offset,
        stiff_diag,
        stiff_off,
        mass,
        a_mid,
    })
}

/// The lowest eigenpairs of A = 𝒜 + 1, orthonormal in the mesh-weighted
/// inner product. λ_1 >= 1 always, since the 𝒜 form is nonnegative for
/// every σ in [0, 1].
#[derive(Clone, Debug)]
pub struct EigenBasis {
    mesh: SpatialMesh,
    boundary: BoundarySpec,
    /// Eigenvalues of A = 𝒜 + 1, strictly increasing.
    lambdas: Vec<f64>,
    /// Full-grid eigenvectors (zero at eliminated Dirichlet nodes).
    phis: Vec<Vec<f64>>,
}

impl EigenBasis {
    pub fn mesh(&self) -> SpatialMesh {
        self.mesh
    }

    pub fn boundary(&self) -> BoundarySpec {
        self.boundary
    }

    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Eigenvalue of the unshifted 𝒜 for mode n.
    pub fn lambda_elliptic(&self, n: usize) -> f64 {
        self.lambdas[n] - 1.0
    }

    pub fn phi(&self, n: usize) -> &[f64] {
        &self.phis[n]
    }

    /// Mode n evaluated at x0 by piecewise-linear interpolation.
    pub fn phi_at(&self, n: usize, x0: f64) -> Result<f64, SpectralError> {
        interpolate(self.mesh, &self.phis[n], x0)
    }
}

/// Piecewise-linear evaluation of a nodal vector at x0 in [0, L].
pub fn interpolate(mesh: SpatialMesh, values: &[f64], x0: f64) -> Result<f64, SpectralError> {
    if !(0.0..=mesh.length() * (1.0 + 1e-12)).contains(&x0) {
        return Err(SpectralError::OutOfDomain {
            x0,
            length: mesh.length(),
        });
    }
    let h = mesh.h();
    let j = ((x0 / h).floor() as usize).min(mesh.n_cells() - 1);
    let theta = (x0 - mesh.node(j)) / h;
    Ok(values[j] * (1.0 - theta) + values[j + 1] * theta)
}

/// Count eigenvalues of the symmetric tridiagonal (d, e) strictly below
/// `x` via the Sturm sequence of the shifted LDLᵀ factorization.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let denom = if q.abs() < 1e-300 {
            if q >= 0.0 {
                1e-300
            } else {
                -1e-300
            }
        } else {
            q
        };
        q = (d[i] - x) - e[i - 1] * e[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solve (T - shift·I) y = b for symmetric tridiagonal T by Gaussian
/// elimination with partial pivoting (the system is near-singular by
/// construction during inverse iteration).
fn solve_shifted(d: &[f64], e: &[f64], shift: f64, b: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut main: Vec<f64> = d.iter().map(|v| v - shift).collect();
    let mut upper = e.to_vec();
    upper.push(0.0);
    let mut upper2 = vec![0.0; n];
    let mut lower = e.to_vec();
    let mut rhs = b.to_vec();

    for i in 0..n - 1 {
        if lower[i].abs() > main[i].abs() {
            // Swap rows i and i+1. Row i holds (main, upper, upper2),
            // row i+1 starts as (lower, main, upper).
            std::mem::swap(&mut main[i], &mut lower[i]);
            let (a, b) = upper.split_at_mut(i + 1);
            std::mem::swap(&mut a[i], &mut main[i + 1]);
            std::mem::swap(&mut upper2[i], &mut b[0]);
            rhs.swap(i, i + 1);
        }
        if main[i] == 0.0 {
            main[i] = 1e-300;
        }
        let factor = lower[i] / main[i];
        main[i + 1] -= factor * upper[i];
        upper[i + 1] -= factor * upper2[i];
        rhs[i + 1] -= factor * rhs[i];
    }
    if main[n - 1] == 0.0 {
        main[n - 1] = 1e-300;
    }

    let mut y = vec![0.0; n];
    y[n - 1] = rhs[n - 1] / main[n - 1];
    if n >= 2 {
        y[n - 2] = (rhs[n - 2] - upper[n - 2] * y[n - 1]) / main[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        y[i] = (rhs[i] - upper[i] * y[i + 1] - upper2[i] * y[i + 2]) / main[i];
    }
    y
}

/// Compute the lowest `n_modes` eigenpairs of the assembled operator by
/// Sturm bisection plus inverse iteration. Residuals are required to
/// satisfy ‖Aφ - λφ‖ <= 1e-9 λ and pairwise orthonormality defects
/// <= 1e-10.
pub fn eigenbasis(op: &TridiagOperator, n_modes: usize) -> Result<EigenBasis, SpectralError> {
    let dim = op.dim();
    if n_modes == 0 || n_modes > dim {
        return Err(SpectralError::TooManyModes {
            requested: n_modes,
            dim,
        });
    }
    let (d, e) = op.symmetric_form();

    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..dim {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 }
            + if i + 1 < dim { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    lo -= 1.0;
    hi += 1.0;
    let norm_c = hi.abs().max(lo.abs());

    let mut lambdas = Vec::with_capacity(n_modes);
    let mut phis = Vec::with_capacity(n_modes);

    for k in 0..n_modes {
        let mut a = lo;
        let mut b = hi;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if (b - a) <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
            if sturm_count(&d, &e, mid) <= k {
                a = mid;
            } else {
                b = mid;
            }
        }
        let ev = 0.5 * (a + b);

        // Inverse iteration at a slightly displaced shift.
        let shift = ev + norm_c * 1e-13;
        let lambda_a = ev + 1.0;
        let target = 1e-10 * lambda_a.abs().max(1.0);
        let mut y: Vec<f64> = (0..dim)
            .map(|i| if i % 2 == 0 { 1.0 } else { 0.5 })
            .collect();
        let mut residual = f64::INFINITY;
        for _ in 0..8 {
            let z = solve_shifted(&d, &e, shift, &y);
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(SpectralError::Eigensolver {
                    what: format!("inverse iteration broke down at mode {k}"),
                });
            }
            y = z.iter().map(|v| v / norm).collect();
            residual = tridiag_residual(&d, &e, ev, &y);
            if residual <= target {
                break;
            }
        }
        if residual > 1e-9 * lambda_a.abs().max(1.0) {
            return Err(SpectralError::Eigensolver {
                what: format!("mode {k}: residual {residual:e} exceeds 1e-9 λ"),
            });
        }

        // Deterministic sign: first significant component positive.
        let max_abs = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lead = y
            .iter()
            .find(|v| v.abs() >= 0.5 * max_abs)
            .copied()
            .unwrap_or(1.0);
        if lead < 0.0 {
            for v in y.iter_mut() {
                *v = -*v;
            }
        }

        // Undo the mass scaling: φ = M^{-1/2} y is mesh-orthonormal
        // because y is ℓ²-normalized.
        let active: Vec<f64> = y
            .iter()
            .enumerate()
            .map(|(i, v)| v / op.mass[i].sqrt())
            .collect();
        lambdas.push(lambda_a);
        phis.push(op.active_to_full(&active));
    }

    for i in 0..n_modes {
        for j in i..n_modes {
            let want = if i == j { 1.0 } else { 0.0 };
            let got = op.mesh.inner(&phis[i], &phis[j]);
            if (got - want).abs() > 1e-10 {
                return Err(SpectralError::Eigensolver {
                    what: format!("orthonormality defect ⟨φ_{i}, φ_{j}⟩ = {got:e}"),
                });
            }
        }
    }
    for w in lambdas.windows(2) {
        if w[1] <= w[0] {
            return Err(SpectralError::Eigensolver {
                what: format!("eigenvalues not strictly increasing: {} then {}", w[0], w[1]),
            });
        }
    }

    Ok(EigenBasis {
        mesh: op.mesh,
        boundary: op.boundary,
        lambdas,
        phis,
    })
}

fn tridiag_residual(d: &[f64], e: &[f64], ev: f64, y: &[f64]) -> f64 {
    let n = d.len();
    let mut acc = 0.0f64;
    for i in 0..n {
        let mut r = (d[i] - ev) * y[i];
        if i > 0 {
            r += e[i - 1] * y[i - 1];
        }
        if i + 1 < n {
            r += e[i] * y[i + 1];
        }
        acc += r * r;
    }
    acc.sqrt()
}

/// Modal coefficients (h, φ_n) of a full-grid nodal vector.
pub fn project(values: &[f64], basis: &EigenBasis) -> Vec<f64> {
    (0..basis.n_modes())
        .map(|n| basis.mesh.inner(values, &basis.phis[n]))
        .collect()
}

/// Relative energy outside the span of the basis: ‖h - Π_N h‖ / ‖h‖.
pub fn spectral_tail(values: &[f64], basis: &EigenBasis) -> f64 {
    let norm = basis.mesh.norm(values);
    if norm == 0.0 {
        return 0.0;
    }
    let coeffs = project(values, basis);
    let recon = synthesize_nodal(&coeffs, basis);
    let mut acc = 0.0;
    for (j, (v, r)) in values.iter().zip(&recon).enumerate() {
        let diff = v - r;
        acc += basis.mesh.weight(j) * diff * diff;
    }
    acc.sqrt() / norm
}

/// Coefficient-wise multiplication by λ_n^γ (the spectral fractional
/// power A^γ; γ - 1 < 0 is allowed).
pub fn apply_frac_power(basis: &EigenBasis, gamma: f64, coeffs: &[f64]) -> Vec<f64> {
    debug_assert_eq!(coeffs.len(), basis.n_modes());
    coeffs
        .iter()
        .zip(basis.lambdas())
        .map(|(c, l)| l.powf(gamma) * c)
        .collect()
}

/// Modal action c_n ↦ λ_n^γ K_{λ_n}(t) c_n of A^γ composed with the
/// Duhamel kernel; the operator norm is max_n λ_n^γ K_{λ_n}(t).
pub fn duhamel_kernel_apply(
    basis: &EigenBasis,
    alpha: f64,
    gamma: f64,
    t: f64,
    coeffs: &[f64],
) -> Result<Vec<f64>, SpectralError> {
    debug_assert_eq!(coeffs.len(), basis.n_modes());
    coeffs
        .iter()
        .zip(basis.lambdas())
        .map(|(c, l)| Ok(l.powf(gamma) * mlf::ml_kernel(alpha, *l, t)? * c))
        .collect()
}

/// Σ c_n φ_n on the full grid.
pub fn synthesize_nodal(coeffs: &[f64], basis: &EigenBasis) -> Vec<f64> {
    let mut out = vec![0.0; basis.mesh.n_nodes()];
    for (c, phi) in coeffs.iter().zip(&basis.phis) {
        for (o, p) in out.iter_mut().zip(phi) {
            *o += c * p;
        }
    }
    out
}

/// Σ c_n φ_n(x0) with piecewise-linear interpolation between nodes.
pub fn synthesize(coeffs: &[f64], basis: &EigenBasis, x0: f64) -> Result<f64, SpectralError> {
    let nodal = synthesize_nodal(coeffs, basis);
    interpolate(basis.mesh, &nodal, x0)
}

/// Space-time solution array: one spatial snapshot per time node, with
/// optional modal coefficients per time node.
#[derive(Clone, Debug)]
pub struct Field {
    mesh: SpatialMesh,
    grid: TimeGrid,
    snapshots: Vec<Vec<f64>>,
    modal: Option<Vec<Vec<f64>>>,
}

impl Field {
    pub fn new(mesh: SpatialMesh, grid: TimeGrid, snapshots: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(snapshots.len(), grid.n_nodes());
        debug_assert!(snapshots.iter().all(|s| s.len() == mesh.n_nodes()));
        Field {
            mesh,
            grid,
            snapshots,
            modal: None,
        }
    }

    pub fn with_modal(mut self, modal: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(modal.len(), self.grid.n_nodes());
        self.modal = Some(modal);
        self
    }

    pub fn mesh(&self) -> SpatialMesh {
        self.mesh
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn snapshot(&self, k: usize) -> &[f64] {
        &self.snapshots[k]
    }

    pub fn snapshots(&self) -> &[Vec<f64>] {
        &self.snapshots
    }

    pub fn modal(&self) -> Option<&[Vec<f64>]> {
        self.modal.as_deref()
    }

    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.snapshots[k][j]
    }

    /// Largest pointwise defect between the stored snapshots and the
    /// synthesis of the stored modal coefficients.
    pub fn synthesis_defect(&self, basis: &EigenBasis) -> Option<f64> {
        let modal = self.modal.as_ref()?;
        let mut worst = 0.0f64;
        for (snap, coeffs) in self.snapshots.iter().zip(modal) {
            let recon = synthesize_nodal(coeffs, basis);
            for (a, b) in snap.iter().zip(&recon) {
                worst = worst.max((a - b).abs());
            }
        }
        Some(worst)
    }

    pub fn max_abs(&self) -> f64 {
        self.snapshots
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}
