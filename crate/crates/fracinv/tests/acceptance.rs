//! Acceptance suite: every verification target runs here at its stated
//! tolerance and prints one pass/fail line. Baseline-regression constants
//! were recorded on the first green run and are asserted thereafter.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

use fracinv::forward::{
    elliptic_observe, observe, picard_potential_iterates, picard_source_iterates, solve_l1,
    solve_potential_spectral, solve_source_spectral, Coefficient, L1Problem, PotentialProblem,
    SeparableTerm, SourceProblem, SpaceTimeFn,
};
use fracinv::fracops::{TimeGrid, Trace};
use fracinv::harness::{self, parse_config, RunError};
use fracinv::inverse::{
    solve_volterra_equality, stability_ratio, verify_gronwall_weak, verify_lp_gronwall,
    verify_ml_gronwall, InverseError, StabilityNorm,
};
use fracinv::mlf::{gamma, mittag_leffler, ml_kernel, MlParams};
use fracinv::spectral::{assemble_operator, eigenbasis, BoundarySpec, EigenBasis, SpatialMesh};

use std::path::Path;
use std::sync::Arc;

const ALPHA: f64 = 0.5;

fn pass(criterion: u32, what: &str) {
    println!("acceptance criterion {criterion}: PASS ({what})");
}

fn configs_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn rng(seed: u64) -> impl FnMut() -> f64 {
    let mut state = seed.max(1);
    move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn one() -> Coefficient {
    Arc::new(|_| 1.0)
}

fn dirichlet_basis(n_cells: usize, n_modes: usize) -> (SpatialMesh, EigenBasis) {
    let mesh = SpatialMesh::new(1.0, n_cells).unwrap();
    let op = assemble_operator(mesh, &|_| 1.0, BoundarySpec::dirichlet()).unwrap();
    (mesh, eigenbasis(&op, n_modes).unwrap())
}

/// Criterion 1: Mittag-Leffler identities at machine-level tolerances.
#[test]
fn criterion_01_mittag_leffler_identities() {
    // E_{1,1} = exp and E_{2,1}(-x²) = cos x on 200-point grids of [-5, 5].
    for i in 0..200 {
        let x = -5.0 + 10.0 * i as f64 / 199.0;
        let e = mittag_leffler(MlParams::new(1.0, 1.0).unwrap(), x).unwrap();
        assert!((e - x.exp()).abs() <= 1e-12 * x.exp().max(1.0), "exp at {x}");
        let c = mittag_leffler(MlParams::new(2.0, 1.0).unwrap(), -x * x).unwrap();
        assert!((c - x.cos()).abs() <= 1e-12, "cos at {x}: {c} vs {}", x.cos());
    }
    // Recurrence E_{α,β}(z) = 1/Γ(β) + z E_{α,α+β}(z) on 100 random triples.
    let mut next = rng(0xACCEEDED);
    for _ in 0..100 {
        let alpha = 0.05 + 0.9 * next();
        let beta = alpha + (2.0 - alpha) * next();
        let z = -50.0 + 51.0 * next();
        let lhs = mittag_leffler(MlParams::new(alpha, beta).unwrap(), z).unwrap();
        let rhs = 1.0 / gamma(beta).unwrap()
            + z * mittag_leffler(MlParams::new(alpha, alpha + beta).unwrap(), z).unwrap();
        assert!(
            ((lhs - rhs) / lhs.abs().max(1e-30)).abs() <= 1e-9,
            "recurrence at ({alpha}, {beta}, {z})"
        );
    }
    // E_{1/2,1}(-1) = exp(1) erfc(1).
    let v = mittag_leffler(MlParams::new(0.5, 1.0).unwrap(), -1.0).unwrap();
    let want = 0.427_583_576_155_807_f64; // exp(1)·erfc(1)
    assert!((v - want).abs() <= 1e-10 * want);
    pass(1, "exp/cos reductions, recurrence, erfc closed form");
}

/// Criterion 2: Solution-operator smoothing law: the log-log slope of
/// sup_λ λ^γ K_λ(t) over t in [1e-3, 1] equals α(1-γ) - 1 within ±0.05.
#[test]
fn criterion_02_smoothing_exponent_law() {
    // λ scan covers the operator family down to λ = 0 (the γ = 0 sup sits
    // at the bottom of the spectrum) and up to 1e6.
    let mut lambdas: Vec<f64> = vec![0.0];
    let mut l = 1e-2f64;
    while l <= 1e6 {
        lambdas.push(l);
        l *= 1.35;
    }
    for gamma_exp in [0.0, 0.25, 0.5] {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..=40 {
            let t = 10f64.powf(-3.0 + 3.0 * i as f64 / 40.0);
            let sup = lambdas
                .iter()
                .map(|l| l.powf(gamma_exp) * ml_kernel(ALPHA, *l, t).unwrap())
                .fold(0.0f64, f64::max);
            xs.push(t.ln());
            ys.push(sup.ln());
        }
        let slope = fit_slope(&xs, &ys);
        let want = ALPHA * (1.0 - gamma_exp) - 1.0;
        assert!(
            (slope - want).abs() <= 0.05,
            "γ = {gamma_exp}: slope {slope} vs {want}"
        );
    }
    pass(2, "fitted slopes match α(1-γ)-1 for γ in {0, 0.25, 0.5}");
}

/// Criterion 3: L1 scheme temporal order on the manufactured solution
/// u* = t² sin(πx): observed order 2 - α = 1.5 ± 0.2.
#[test]
fn criterion_03_l1_temporal_order() {
    let n_cells = 64;
    let mesh = SpatialMesh::new(1.0, n_cells).unwrap();
    let op = assemble_operator(mesh, &|_| 1.0, BoundarySpec::dirichlet()).unwrap();
    let sine: Vec<f64> = mesh.nodes().map(|x| (std::f64::consts::PI * x).sin()).collect();
    let a_sine = op.apply_elliptic(&sine);
    let caputo_t2 = |t: f64| 2.0 * t.powf(1.5) / gamma(2.5).unwrap();

    let sizes = [128usize, 256, 512, 1024];
    let mut errors = Vec::new();
    for &n_steps in &sizes {
        let grid = TimeGrid::new(1.0, n_steps, ALPHA).unwrap();
        // Source built against the discrete operator, so the error is
        // purely temporal: F = ∂_t^α(t²) sin(πx) + t² 𝒜_h sin(πx).
        let profile = SpaceTimeFn::SeparableSum(vec![
            SeparableTerm {
                profile: sine.clone(),
                signal: grid.nodes().map(caputo_t2).collect(),
            },
            SeparableTerm {
                profile: a_sine.clone(),
                signal: grid.nodes().map(|t| t * t).collect(),
            },
        ]);
        let prob = SourceProblem {
            mesh,
            boundary: BoundarySpec::dirichlet(),
            diffusion: one(),
            alpha: ALPHA,
            f: Trace::from_fn(grid, |_| 1.0),
            source_profile: profile,
            lp_exponent: f64::INFINITY,
        };
        let field = solve_l1(&L1Problem::Source(&prob), grid).unwrap();
        let mut worst = 0.0f64;
        for (j, s) in sine.iter().enumerate() {
            worst = worst.max((field.at(j, n_steps) - s).abs());
        }
        errors.push(worst);
    }
    let xs: Vec<f64> = sizes.iter().map(|n| -(*n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let order = fit_slope(&xs, &ys);
    assert!(
        (order - 1.5).abs() <= 0.2,
        "observed order {order}, errors {errors:?}"
    );
    pass(3, "manufactured-solution temporal order 1.5 ± 0.2");
}

/// Criterion 4: Cross-solver oracle at (n_steps, n_cells, n_modes) = (2048, 256, 64)
/// plus Picard contraction of both fixed-point maps.
#[test]
fn criterion_04_cross_solver_and_picard() {
    let (mesh, basis) = dirichlet_basis(256, 64);
    let grid = TimeGrid::new(1.0, 2048, ALPHA).unwrap();
    let two_pi = 2.0 * std::f64::consts::PI;
    let family: [(&str, Box<dyn Fn(f64) -> f64>); 3] = [
        ("linear", Box::new(|t| t)),
        ("sine", Box::new(move |t| (two_pi * t).sin())),
        ("mixed", Box::new(move |t| t + 0.5 * (two_pi * t).sin())),
    ];
    for (name, f) in &family {
        let prob = SourceProblem {
            mesh,
            boundary: BoundarySpec::dirichlet(),
            diffusion: one(),
            alpha: ALPHA,
            f: Trace::from_fn(grid, f),
            source_profile: SpaceTimeFn::stationary(basis.phi(0).to_vec(), grid.n_nodes()),
            lp_exponent: f64::INFINITY,
        };
        let spec = solve_source_spectral(&prob, grid, &basis).unwrap();
        let l1 = solve_l1(&L1Problem::Source(&prob), grid).unwrap();
        let scale = spec.field.max_abs();
        let mut worst = 0.0f64;
        for k in 0..=2048 {
            for j in 0..=256 {
                worst = worst.max((spec.field.at(j, k) - l1.at(j, k)).abs());
            }
        }
        assert!(
            worst <= 0.01 * scale,
            "{name}: relative L∞ gap {}",
            worst / scale
        );
    }

    // Picard iterates of both maps: convergence within 60 sweeps with
    // monotone residuals past iterate 2.
    let (mesh_s, basis_s) = dirichlet_basis(64, 16);
    let grid_s = TimeGrid::new(1.0, 256, ALPHA).unwrap();
    let prob = SourceProblem {
        mesh: mesh_s,
        boundary: BoundarySpec::dirichlet(),
        diffusion: one(),
        alpha: ALPHA,
        f: Trace::from_fn(grid_s, |t| 1.0 + 0.5 * (6.0 * t).sin()),
        source_profile: SpaceTimeFn::stationary(basis_s.phi(0).to_vec(), grid_s.n_nodes()),
        lp_exponent: f64::INFINITY,
    };
    let (_, residuals) = picard_source_iterates(&prob, grid_s, &basis_s, 60, 1e-10).unwrap();
    assert!(residuals.len() <= 60);
    for w in residuals.windows(2).skip(1) {
        assert!(w[1] < w[0], "source residuals not monotone: {residuals:?}");
    }

    let pot = PotentialProblem {
        mesh: mesh_s,
        boundary: BoundarySpec::dirichlet(),
        diffusion: one(),
        alpha: ALPHA,
        f: Trace::from_fn(grid_s, |_| 1.0),
        coupling: SpaceTimeFn::separable(
            mesh_s.nodes().map(|x| 1.0 + 0.3 * x * (1.0 - x)).collect(),
            grid_s.nodes().map(|t| (-t).exp()).collect(),
        ),
        initial: basis_s.phi(0).to_vec(),
    };
    let (_, residuals) = picard_potential_iterates(&pot, grid_s, &basis_s, 60, 1e-10).unwrap();
    assert!(residuals.len() <= 60);
    for w in residuals.windows(2).skip(1) {
        assert!(w[1] < w[0], "potential residuals not monotone: {residuals:?}");
    }
    pass(4, "≤1% cross-solver agreement; both Picard maps contract in ≤60 sweeps");
}

/// Criterion 5: source-problem round trip through the shipped config: fine-grid L1
/// data, relative L² error ≤ 2% for f* in {1, t, sin(2πt/T)}.
#[test]
fn criterion_05_source_roundtrip() {
    let cfg = parse_config(&configs_dir().join("source_roundtrip.cfg")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = harness::run(&cfg, dir.path()).unwrap();
    assert_eq!(summary.rows.len(), 4);
    for row in &summary.rows {
        assert_eq!(row.status, "ok", "row {}: {}", row.index, row.status);
        assert!(
            row.err_l2_rel <= 0.02,
            "f* = {}: relative L² error {}",
            row.axes[0].1,
            row.err_l2_rel
        );
    }
    pass(5, "source reconstructions within 2% relative L²");
}

/// Criterion 6: potential-problem round trip through the shipped config (≤ 5% on the
/// floor window) plus the degenerate floor instance.
#[test]
fn criterion_06_potential_roundtrip_and_floor() {
    let cfg = parse_config(&configs_dir().join("potential_roundtrip.cfg")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = harness::run(&cfg, dir.path()).unwrap();
    assert_eq!(summary.rows.len(), 4);
    for row in &summary.rows {
        assert_eq!(row.status, "ok", "row {}: {}", row.index, row.status);
        assert!(
            row.err_l2_rel <= 0.05,
            "axes {:?}: relative L² error {}",
            row.axes,
            row.err_l2_rel
        );
        assert!(row.floor_margin >= 0.1);
    }

    // Degenerate instance: q(x0, t) = 1 - 2t/T crosses the floor; the
    // reconstruction must stop at the first sub-δ node, which is
    // predicted by the forward solution within one node.
    let cfg = parse_config(&configs_dir().join("potential_floor_degenerate.cfg")).unwrap();
    let inst = harness::build_instance(&cfg).unwrap();
    let prob = harness::build_potential_problem(&cfg, &inst, inst.grid).unwrap();
    let fwd = solve_potential_spectral(&prob, inst.grid, &inst.basis).unwrap();
    let v_trace = observe(&fwd.field, cfg.x0).unwrap();
    let predicted = (0..=inst.grid.n_steps())
        .find(|&k| {
            let q = prob.coupling.at(inst.mesh, cfg.x0, k).unwrap();
            (q * v_trace.values()[k]).abs() < cfg.delta
        })
        .expect("the instance is constructed to cross the floor");
    let data = harness::generate_data(&cfg, &inst).unwrap();
    match harness::invert(&cfg, &inst, &data) {
        Err(RunError::Inverse(InverseError::FloorViolation { node, .. })) => {
            assert!(
                node.abs_diff(predicted) <= 1,
                "violation at node {node}, predicted {predicted}"
            );
        }
        Err(other) => panic!("expected FloorViolation, got {other}"),
        Ok(_) => panic!("degenerate instance must violate the floor"),
    }
    pass(6, "potential reconstructions within 5%; floor violation at the crossing node");
}

/// Criterion 7: Lipschitz-stability regression: bounded, refinement-stable
/// empirical ratios. Baselines recorded on the first green run.
#[test]
fn criterion_07_stability_regression() {
    // ---- Source family (one-sided estimate) ----
    let source_family = |n_steps: usize| -> f64 {
        let (mesh, basis) = dirichlet_basis(96, 24);
        let grid = TimeGrid::new(1.0, n_steps, ALPHA).unwrap();
        let mut next = rng(0x57AB1E);
        let mut max_ratio = 0.0f64;
        for _ in 0..20 {
            let mut make_f = || {
                let (a, b, c) = (next() - 0.5, next() - 0.5, next() - 0.5);
                let two_pi = 2.0 * std::f64::consts::PI;
                Trace::from_fn(grid, move |t| {
                    1.0 + a * t + b * (two_pi * t).sin() + c * (std::f64::consts::PI * t).cos()
                })
            };
            let f1 = make_f();
            let f2 = make_f();
            let solve = |f: &Trace| {
                let prob = SourceProblem {
                    mesh,
                    boundary: BoundarySpec::dirichlet(),
                    diffusion: one(),
                    alpha: ALPHA,
                    f: f.clone(),
                    source_profile: SpaceTimeFn::stationary(
                        basis.phi(0).to_vec(),
                        grid.n_nodes(),
                    ),
                    lp_exponent: 20.0,
                };
                let rep = solve_source_spectral(&prob, grid, &basis).unwrap();
                // Exact Caputo trace through the identity: f R(x0) - 𝒜u(x0).
                let au = elliptic_observe(&rep.field, &basis, 0.5).unwrap();
                let r0 = prob.source_profile.at(mesh, 0.5, 0).unwrap();
                Trace::new(
                    grid,
                    f.values()
                        .iter()
                        .zip(au.values())
                        .map(|(fv, av)| fv * r0 - av)
                        .collect(),
                )
                .unwrap()
            };
            let d1 = solve(&f1);
            let d2 = solve(&f2);
            let ratio = stability_ratio(&f1, &f2, &d1, &d2, StabilityNorm::Lp(20.0)).unwrap();
            assert!(ratio.is_finite() && ratio > 0.0);
            max_ratio = max_ratio.max(ratio);
        }
        max_ratio
    };
    let coarse = source_family(256);
    let refined = source_family(512);
    assert!(
        refined <= 2.0 * coarse && coarse <= 2.0 * refined,
        "source ratios unstable under refinement: {coarse} vs {refined}"
    );
    // Baseline from the first green run.
    const SOURCE_BASELINE: f64 = 3.791326506066;
    if SOURCE_BASELINE.is_finite() {
        assert!(
            (SOURCE_BASELINE / 1.25..=1.25 * SOURCE_BASELINE).contains(&coarse),
            "source baseline drift: {coarse} vs {SOURCE_BASELINE}"
        );
    } else {
        println!("criterion 7 baseline (source, max ratio at n=256): {coarse:.12e}");
    }

    // ---- Potential family (two-sided estimate, ‖f‖_∞ ≤ M = 2) ----
    let potential_family = |n_steps: usize| -> (f64, f64) {
        let mesh = SpatialMesh::new(1.0, 64).unwrap();
        let op = assemble_operator(mesh, &|_| 1.0, BoundarySpec::neumann()).unwrap();
        let basis = eigenbasis(&op, 12).unwrap();
        let grid = TimeGrid::new(1.0, n_steps, ALPHA).unwrap();
        let mut next = rng(0xB07D);
        let mut max_ratio = 0.0f64;
        let mut max_recip = 0.0f64;
        for _ in 0..20 {
            let mut make_f = || {
                let (a, b) = (next() - 0.5, next() - 0.5);
                let two_pi = 2.0 * std::f64::consts::PI;
                // ‖f‖_∞ ≤ M = 2 by construction.
                Trace::from_fn(grid, move |t| {
                    1.0 + a * t / 2.0 + 0.5 * b * (two_pi * t).sin()
                })
            };
            let f1 = make_f();
            let f2 = make_f();
            let solve = |f: &Trace| {
                let prob = PotentialProblem {
                    mesh,
                    boundary: BoundarySpec::neumann(),
                    diffusion: one(),
                    alpha: ALPHA,
                    f: f.clone(),
                    coupling: SpaceTimeFn::stationary(vec![1.0; mesh.n_nodes()], grid.n_nodes()),
                    initial: vec![1.0; mesh.n_nodes()],
                };
                let rep = solve_potential_spectral(&prob, grid, &basis).unwrap();
                let au = elliptic_observe(&rep.field, &basis, 0.5).unwrap();
                let v = observe(&rep.field, 0.5).unwrap();
                // ∂_t^α v(x0,·) = -(𝒜v + f q v)(x0,·), q ≡ 1.
                Trace::new(
                    grid,
                    au.values()
                        .iter()
                        .zip(v.values())
                        .zip(f.values())
                        .map(|((av, vv), fv)| -(av + fv * vv))
                        .collect(),
                )
                .unwrap()
            };
            let d1 = solve(&f1);
            let d2 = solve(&f2);
            let ratio = stability_ratio(&f1, &f2, &d1, &d2, StabilityNorm::LInf).unwrap();
            assert!(ratio.is_finite() && ratio > 0.0, "ratio {ratio}");
            max_ratio = max_ratio.max(ratio);
            max_recip = max_recip.max(1.0 / ratio);
        }
        (max_ratio, max_recip)
    };
    let (r_coarse, rec_coarse) = potential_family(256);
    let (r_fine, rec_fine) = potential_family(512);
    assert!(
        r_fine <= 2.0 * r_coarse && r_coarse <= 2.0 * r_fine,
        "potential ratio unstable: {r_coarse} vs {r_fine}"
    );
    assert!(
        rec_fine <= 2.0 * rec_coarse && rec_coarse <= 2.0 * rec_fine,
        "potential reciprocal unstable: {rec_coarse} vs {rec_fine}"
    );
    const POTENTIAL_BASELINE: (f64, f64) = (4.579931701876, 4.451747511273e-1);
    if POTENTIAL_BASELINE.0.is_finite() {
        assert!(r_coarse <= 1.25 * POTENTIAL_BASELINE.0);
        assert!(rec_coarse <= 1.25 * POTENTIAL_BASELINE.1);
    } else {
        println!(
            "criterion 7 baseline (potential, max ratio / max reciprocal at n=256): {r_coarse:.12e} {rec_coarse:.12e}"
        );
    }
    pass(7, "stability ratios finite, refinement-stable, within baselines");
}

/// Criterion 8: Gronwall verifiers: 500 hypothesis-satisfying instances per lemma
/// with zero conclusion violations; Volterra equality cases meet the
/// Mittag-Leffler bound within 1e-6.
#[test]
fn criterion_08_gronwall_verifiers() {
    let grid = TimeGrid::new(1.0, 128, ALPHA).unwrap();
    let weights: Vec<(f64, f64)> = (0..128)
        .map(|m| fracinv::fracops::singular_convolution_weights(ALPHA, grid.dt(), m))
        .collect();

    // Weakly singular kernel variant.
    let mut next = rng(0x6A0511);
    for case in 0..500 {
        let c = 0.2 + 2.0 * next();
        let d = Trace::new(grid, (0..=128).map(|_| next()).collect()).unwrap();
        let mut u = vec![0.0; 129];
        u[0] = next() * c * d.values()[0];
        for k in 1..=128 {
            let mut hist = 0.0;
            for j in 0..k {
                let (l, r) = weights[k - j - 1];
                hist += u[j] * l;
                if j + 1 < k {
                    hist += u[j + 1] * r;
                }
            }
            let theta = next();
            u[k] = theta * c * (d.values()[k] + hist) / (1.0 - theta * c * weights[0].1).max(0.1);
        }
        let u = Trace::new(grid, u).unwrap();
        let rep = verify_gronwall_weak(&u, &d, c, ALPHA);
        assert!(rep.hypothesis_holds, "case {case}");
        assert!(
            rep.conclusion_holds,
            "case {case}: falsified at {:?}",
            rep.falsified_node
        );
    }

    // L^p lemma: hypothesis-exact families keep the empirical constant
    // bounded (recorded on the first green run).
    let mut next = rng(0x109A11);
    let mut max_ratio = 0.0f64;
    for case in 0..500 {
        let (p, mu) = [(4.0, 0.6), (8.0, 0.3), (f64::INFINITY, 0.5)][case % 3];
        let r = Trace::new(grid, (0..=128).map(|_| 0.5 * next()).collect()).unwrap();
        let u = Trace::new(grid, (0..=128).map(|_| 0.05 + next()).collect()).unwrap();
        let w: Vec<(f64, f64)> = (0..128)
            .map(|m| fracinv::fracops::singular_convolution_weights(mu, grid.dt(), m))
            .collect();
        let mut f = vec![0.0; 129];
        f[0] = next() * u.values()[0];
        for k in 1..=128 {
            let mut hist = 0.0;
            for j in 0..k {
                let (l, rr) = w[k - j - 1];
                hist += f[j] * r.values()[j] * l;
                if j + 1 < k {
                    hist += f[j + 1] * r.values()[j + 1] * rr;
                }
            }
            let theta = next();
            let denom = (1.0 - theta * r.values()[k] * w[0].1).max(0.5);
            f[k] = theta * (u.values()[k] + hist) / denom;
        }
        let f = Trace::new(grid, f).unwrap();
        let rep = verify_lp_gronwall(&f, &u, &r, p, mu).unwrap();
        assert!(rep.hypothesis_holds, "case {case}");
        assert!(rep.ratio.is_finite(), "case {case}");
        max_ratio = max_ratio.max(rep.ratio);
    }
    const LP_BASELINE: f64 = 1.405071510655;
    if LP_BASELINE.is_finite() {
        assert!(max_ratio <= 1.5 * LP_BASELINE, "{max_ratio} vs {LP_BASELINE}");
    } else {
        println!("criterion 8 baseline (max L^p ratio): {max_ratio:.12e}");
    }

    // Mittag-Leffler lemma: equality cases within 1e-6, subsolutions never
    // falsified.
    let fine = TimeGrid::new(1.0, 1024, ALPHA).unwrap();
    for (a, b, mu) in [(1.0, 0.5, 0.75), (2.0, 1.0, 0.5), (0.7, 0.3, 0.6)] {
        let eq = solve_volterra_equality(a, b, mu, fine);
        let rep = verify_ml_gronwall(&eq, a, b, mu).unwrap();
        assert!(rep.hypothesis_holds);
        assert!(rep.margin >= -1e-6, "(a={a}, b={b}, mu={mu}): {:e}", rep.margin);
    }
    let mut next = rng(0x500);
    for case in 0..500 {
        let a = 0.5 + next();
        let b = 0.1 + next();
        let mu = 0.3 + 0.6 * next();
        let w: Vec<(f64, f64)> = (0..128)
            .map(|m| fracinv::fracops::singular_convolution_weights(mu, grid.dt(), m))
            .collect();
        let mut f = vec![0.0; 129];
        f[0] = next() * a;
        for k in 1..=128 {
            let mut hist = 0.0;
            for j in 0..k {
                let (l, r) = w[k - j - 1];
                hist += f[j] * l;
                if j + 1 < k {
                    hist += f[j + 1] * r;
                }
            }
            let theta = next();
            f[k] = theta * (a + b * hist) / (1.0 - theta * b * w[0].1).max(0.5);
        }
        let f = Trace::new(grid, f).unwrap();
        let rep = verify_ml_gronwall(&f, a, b, mu).unwrap();
        assert!(rep.hypothesis_holds && rep.conclusion_holds, "case {case}");
    }
    pass(8, "zero conclusion violations across 1500 instances; equality cases within 1e-6");
}

/// Criterion 9: Noise response: source-reconstruction error vs noise amplitude has
/// log-log slope ≤ 1.15.
#[test]
fn criterion_09_noise_response() {
    let cfg = parse_config(&configs_dir().join("noise_response.cfg")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = harness::run(&cfg, dir.path()).unwrap();
    assert_eq!(summary.rows.len(), 3);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in &summary.rows {
        assert_eq!(row.status, "ok");
        let eps: f64 = row.axes[0].1.parse().unwrap();
        xs.push(eps.ln());
        ys.push(row.err_l2_rel.ln());
    }
    let slope = fit_slope(&xs, &ys);
    assert!(
        slope <= 1.15,
        "noise-response slope {slope} (errors {ys:?})"
    );
    pass(9, "error growth at most linear in the noise level");
}

/// Criterion 10: Determinism: identical config and seed produce byte-identical
/// sweep tables.
#[test]
fn criterion_10_determinism() {
    let cfg = parse_config(&configs_dir().join("determinism.cfg")).unwrap();
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let s1 = harness::run(&cfg, d1.path()).unwrap();
    let s2 = harness::run(&cfg, d2.path()).unwrap();
    let b1 = std::fs::read(&s1.sweep_csv).unwrap();
    let b2 = std::fs::read(&s2.sweep_csv).unwrap();
    assert!(!b1.is_empty());
    assert_eq!(b1, b2, "sweep.csv bytes differ between identical runs");
    pass(10, "byte-identical sweep.csv across reruns");
}
