//! Experiment harness: flat key = value configs with section headers, a
//! named generator registry, deterministic noise injection, and sweep
//! orchestration with fixed-order CSV emission.

pub mod generators;

use crate::forward::{
    observe, solve_l1, solve_potential_spectral, solve_source_spectral, L1Problem,
    PotentialProblem, SolveReport, SourceProblem,
};
use crate::fracops::{lp_norm, TimeGrid, Trace};
use crate::inverse::{
    reconstruct_potential_f, reconstruct_source_f, InverseError, ReconstructionConfig,
    ReconstructionResult,
};
use crate::spectral::{assemble_operator, eigenbasis, BoundarySpec, EigenBasis, SpatialMesh};

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {what}")]
    Parse { line: usize, what: String },
    #[error("invalid config:\n  {}", violations.join("\n  "))]
    Validation { violations: Vec<String> },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
    #[error(transparent)]
    Solve(#[from] crate::forward::SolveError),
    #[error(transparent)]
    Inverse(#[from] InverseError),
    #[error(transparent)]
    FracOps(#[from] crate::fracops::FracOpsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Source,
    Potential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    /// Solve and emit the field and trace.
    Forward,
    /// Generate data, invert, and report reconstruction errors.
    Roundtrip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataMode {
    /// Raw trace u(x0, ·) from the L1 solver on a 4x finer time grid,
    /// restricted to the working grid (the inverse-crime guard); the
    /// reconstruction differentiates it. The realistic modality.
    FineL1x4,
    /// Identity modality: the Caputo trace ∂_t^α u(x0, ·) obtained
    /// from the fine L1 field through the governing identity, restricted
    /// to the working grid.
    FineL1x4Caputo,
    /// Raw trace from the spectral solver on the working grid.
    SameGridSpectral,
}

/// A fully parsed and validated experiment description.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: ProblemKind,
    pub alpha: f64,
    pub t_final: f64,
    pub n_steps: usize,
    pub length: f64,
    pub n_cells: usize,
    pub n_modes: usize,
    pub sigma_left: f64,
    pub sigma_right: f64,
    pub diffusion: String,
    pub f_star: String,
    pub source_x: String,
    pub source_t: String,
    pub coupling: String,
    pub v0: String,
    pub x0: f64,
    pub delta: f64,
    pub gamma: f64,
    pub p_exponent: f64,
    pub task: Task,
    pub data_mode: DataMode,
    pub noise_level: f64,
    pub seed: u64,
    pub presmooth_half_width: usize,
    /// Sweep axes in declaration order: (field name, values).
    pub sweep: Vec<(String, Vec<String>)>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ProblemKind::Source,
            alpha: 0.5,
            t_final: 1.0,
            n_steps: 256,
            length: 1.0,
            n_cells: 64,
            n_modes: 64,
            sigma_left: 0.0,
            sigma_right: 0.0,
            diffusion: "one".into(),
            f_star: "one".into(),
            source_x: "phi:1".into(),
            source_t: "const".into(),
            coupling: "one".into(),
            v0: "phi:1".into(),
            x0: 0.5,
            delta: 0.1,
            gamma: 0.5,
            p_exponent: f64::INFINITY,
            task: Task::Roundtrip,
            data_mode: DataMode::FineL1x4,
            noise_level: 0.0,
            seed: 42,
            presmooth_half_width: 0,
            sweep: Vec::new(),
            out_dir: None,
        }
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut section = String::new();
    let mut violations = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(ConfigError::Parse {
                line: line_no,
                what: "unterminated section header".into(),
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Parse {
            line: line_no,
            what: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();

        if section == "sweep" {
            // `|` separates values whose generator arguments themselves
            // contain commas (e.g. bump_decay:0.3,1).
            let sep = if value.contains('|') { '|' } else { ',' };
            let values: Vec<String> = value
                .split(sep)
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect();
            if values.is_empty() {
                violations.push(format!("line {line_no}: sweep axis `{key}` has no values"));
            } else if !is_sweepable(key) {
                violations.push(format!("line {line_no}: `{key}` is not a sweepable field"));
            } else {
                cfg.sweep.push((key.to_string(), values));
            }
            continue;
        }
        if section == "output" {
            match key {
                "dir" => cfg.out_dir = Some(PathBuf::from(value)),
                _ => violations.push(format!("line {line_no}: unknown output key `{key}`")),
            }
            continue;
        }
        if let Err(what) = apply_field(&mut cfg, key, value) {
            violations.push(format!("line {line_no}: {what}"));
        }
    }

    violations.extend(validate(&cfg));
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Validation { violations })
    }
}

fn is_sweepable(key: &str) -> bool {
    matches!(
        key,
        "alpha"
            | "t_final"
            | "n_steps"
            | "n_cells"
            | "n_modes"
            | "sigma_left"
            | "sigma_right"
            | "x0"
            | "delta"
            | "gamma"
            | "noise_level"
            | "seed"
            | "presmooth_half_width"
            | "f_star"
            | "diffusion"
            | "source_x"
            | "source_t"
            | "coupling"
            | "v0"
    )
}

fn apply_field(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), String> {
    fn num(key: &str, value: &str) -> Result<f64, String> {
        if value == "inf" || value == "infinity" {
            return Ok(f64::INFINITY);
        }
        value
            .parse()
            .map_err(|_| format!("`{key}` expects a number, got `{value}`"))
    }
    fn int(key: &str, value: &str) -> Result<usize, String> {
        value
            .parse()
            .map_err(|_| format!("`{key}` expects an integer, got `{value}`"))
    }
    match key {
        "kind" => {
            cfg.kind = match value {
                "source" => ProblemKind::Source,
                "potential" => ProblemKind::Potential,
                _ => return Err(format!("`kind` must be source|potential, got `{value}`")),
            }
        }
        "alpha" => cfg.alpha = num(key, value)?,
        "t_final" => cfg.t_final = num(key, value)?,
        "n_steps" => cfg.n_steps = int(key, value)?,
        "length" => cfg.length = num(key, value)?,
        "n_cells" => cfg.n_cells = int(key, value)?,
        "n_modes" => cfg.n_modes = int(key, value)?,
        "sigma_left" => cfg.sigma_left = num(key, value)?,
        "sigma_right" => cfg.sigma_right = num(key, value)?,
        "diffusion" => cfg.diffusion = value.to_string(),
        "f_star" => cfg.f_star = value.to_string(),
        "source_x" => cfg.source_x = value.to_string(),
        "source_t" => cfg.source_t = value.to_string(),
        "coupling" => cfg.coupling = value.to_string(),
        "v0" => cfg.v0 = value.to_string(),
        "x0" => cfg.x0 = num(key, value)?,
        "delta" => cfg.delta = num(key, value)?,
        "gamma" => cfg.gamma = num(key, value)?,
        "p_exponent" => cfg.p_exponent = num(key, value)?,
        "task" => {
            cfg.task = match value {
                "forward" => Task::Forward,
                "roundtrip" => Task::Roundtrip,
                _ => return Err(format!("`task` must be forward|roundtrip, got `{value}`")),
            }
        }
        "data_mode" => {
            cfg.data_mode = match value {
                "fine_l1x4" => DataMode::FineL1x4,
                "fine_l1x4_caputo" => DataMode::FineL1x4Caputo,
                "same_grid_spectral" => DataMode::SameGridSpectral,
                _ => {
                    return Err(format!(
                        "`data_mode` must be fine_l1x4|fine_l1x4_caputo|same_grid_spectral, got `{value}`"
                    ))
                }
            }
        }
        "noise_level" => cfg.noise_level = num(key, value)?,
        "seed" => {
            cfg.seed = value
                .parse()
                .map_err(|_| format!("`seed` expects an integer, got `{value}`"))?
        }
        "presmooth_half_width" => cfg.presmooth_half_width = int(key, value)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    let mut v = Vec::new();
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        v.push(format!("alpha = {} outside (0, 1)", cfg.alpha));
    }
    if !(cfg.t_final > 0.0) {
        v.push(format!("t_final = {} must be positive", cfg.t_final));
    }
    if cfg.n_steps < 2 {
        v.push(format!("n_steps = {} must be at least 2", cfg.n_steps));
    }
    if !(cfg.length > 0.0) {
        v.push(format!("length = {} must be positive", cfg.length));
    }
    if cfg.n_cells < 4 {
        v.push(format!("n_cells = {} must be at least 4", cfg.n_cells));
    }
    if cfg.n_modes == 0 {
        v.push("n_modes must be positive".into());
    }
    for (name, sigma) in [("sigma_left", cfg.sigma_left), ("sigma_right", cfg.sigma_right)] {
        if !(0.0..=1.0).contains(&sigma) {
            v.push(format!("{name} = {sigma} outside [0, 1]"));
        }
    }
    if !(0.0..=cfg.length).contains(&cfg.x0) {
        v.push(format!("x0 = {} outside [0, {}]", cfg.x0, cfg.length));
    }
    if !(cfg.delta > 0.0) {
        v.push(format!("delta = {} must be positive", cfg.delta));
    }
    if !(cfg.gamma > 0.25 && cfg.gamma < 1.0) {
        v.push(format!("gamma = {} outside (0.25, 1)", cfg.gamma));
    }
    if cfg.noise_level < 0.0 {
        v.push(format!("noise_level = {} must be nonnegative", cfg.noise_level));
    }
    v
}

/// Additive uniform noise of amplitude level·‖trace‖_∞, deterministic per
/// seed; level 0 is the identity.
pub fn make_noise(trace: &Trace, level: f64, seed: u64) -> Trace {
    debug_assert!(level >= 0.0);
    if level == 0.0 {
        return trace.clone();
    }
    let amp = level * trace.max_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = trace
        .values()
        .iter()
        .map(|v| v + rng.gen_range(-amp..=amp))
        .collect();
    Trace::new(trace.grid(), values).expect("same grid")
}

/// 17-significant-digit float formatting: stable for byte-identical CSV.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Everything the solvers need, materialized from a config.
pub struct Instance {
    pub mesh: SpatialMesh,
    pub grid: TimeGrid,
    pub basis: EigenBasis,
    pub boundary: BoundarySpec,
}

pub fn build_instance(cfg: &ExperimentConfig) -> Result<Instance, RunError> {
    let mesh = SpatialMesh::new(cfg.length, cfg.n_cells)?;
    let boundary = BoundarySpec::new(cfg.sigma_left, cfg.sigma_right)?;
    let diffusion = generators::diffusion(&cfg.diffusion, cfg.length)?;
    let op = assemble_operator(mesh, &*diffusion, boundary)?;
    let n_modes = cfg.n_modes.min(op.dim().saturating_sub(2)).max(1);
    let basis = eigenbasis(&op, n_modes)?;
    let grid = TimeGrid::new(cfg.t_final, cfg.n_steps, cfg.alpha)?;
    Ok(Instance {
        mesh,
        grid,
        basis,
        boundary,
    })
}

pub fn build_source_problem(
    cfg: &ExperimentConfig,
    inst: &Instance,
    grid: TimeGrid,
) -> Result<SourceProblem, RunError> {
    let profile = generators::spatial_profile(&cfg.source_x, inst.mesh, &inst.basis)?;
    let signal = generators::time_signal(&cfg.source_t, grid)?;
    Ok(SourceProblem {
        mesh: inst.mesh,
        boundary: inst.boundary,
        diffusion: generators::diffusion(&cfg.diffusion, cfg.length)?,
        alpha: cfg.alpha,
        f: generators::f_star(&cfg.f_star, grid)?,
        source_profile: crate::forward::SpaceTimeFn::separable(profile, signal),
        lp_exponent: cfg.p_exponent,
    })
}

pub fn build_potential_problem(
    cfg: &ExperimentConfig,
    inst: &Instance,
    grid: TimeGrid,
) -> Result<PotentialProblem, RunError> {
    Ok(PotentialProblem {
        mesh: inst.mesh,
        boundary: inst.boundary,
        diffusion: generators::diffusion(&cfg.diffusion, cfg.length)?,
        alpha: cfg.alpha,
        f: generators::f_star(&cfg.f_star, grid)?,
        coupling: generators::coupling(&cfg.coupling, inst.mesh, grid)?,
        initial: generators::spatial_profile(&cfg.v0, inst.mesh, &inst.basis)?,
    })
}

pub fn recon_config(cfg: &ExperimentConfig) -> ReconstructionConfig {
    ReconstructionConfig {
        delta: cfg.delta,
        x0: cfg.x0,
        gamma: cfg.gamma,
        presmooth_half_width: cfg.presmooth_half_width,
        max_inner_iters: 50,
        inner_tol: 1e-10,
        data_is_caputo: cfg.data_mode == DataMode::FineL1x4Caputo,
    }
}

/// Synthetic observation data per the configured inverse-crime policy.
pub fn generate_data(cfg: &ExperimentConfig, inst: &Instance) -> Result<Trace, RunError> {
    match cfg.data_mode {
        DataMode::FineL1x4 => {
            let fine = inst.grid.refined(4);
            let field = match cfg.kind {
                ProblemKind::Source => {
                    let prob = build_source_problem(cfg, inst, fine)?;
                    solve_l1(&L1Problem::Source(&prob), fine)?
                }
                ProblemKind::Potential => {
                    let prob = build_potential_problem(cfg, inst, fine)?;
                    solve_l1(&L1Problem::Potential(&prob), fine)?
                }
            };
            Ok(observe(&field, cfg.x0)?.restrict(4)?)
        }
        DataMode::FineL1x4Caputo => {
            // ∂_t^α u(x0, ·) on the fine grid through the equation the
            // field satisfies, then restricted: keeps the independent
            // solver and grid while avoiding discrete differentiation of
            // the t^α startup layer.
            let fine = inst.grid.refined(4);
            let diffusion = generators::diffusion(&cfg.diffusion, cfg.length)?;
            let op = assemble_operator(inst.mesh, &*diffusion, inst.boundary)?;
            let trace = match cfg.kind {
                ProblemKind::Source => {
                    let prob = build_source_problem(cfg, inst, fine)?;
                    let field = solve_l1(&L1Problem::Source(&prob), fine)?;
                    let values: Vec<f64> = (0..fine.n_nodes())
                        .map(|k| {
                            let au = op.apply_elliptic(field.snapshot(k));
                            let au_x0 =
                                crate::spectral::interpolate(inst.mesh, &au, cfg.x0)?;
                            let r = prob.source_profile.at(inst.mesh, cfg.x0, k)?;
                            Ok(prob.f.values()[k] * r - au_x0)
                        })
                        .collect::<Result<_, crate::spectral::SpectralError>>()?;
                    Trace::new(fine, values)?
                }
                ProblemKind::Potential => {
                    let prob = build_potential_problem(cfg, inst, fine)?;
                    let field = solve_l1(&L1Problem::Potential(&prob), fine)?;
                    let values: Vec<f64> = (0..fine.n_nodes())
                        .map(|k| {
                            let au = op.apply_elliptic(field.snapshot(k));
                            let au_x0 =
                                crate::spectral::interpolate(inst.mesh, &au, cfg.x0)?;
                            let v_x0 = crate::spectral::interpolate(
                                inst.mesh,
                                field.snapshot(k),
                                cfg.x0,
                            )?;
                            let q = prob.coupling.at(inst.mesh, cfg.x0, k)?;
                            Ok(-(au_x0 + prob.f.values()[k] * q * v_x0))
                        })
                        .collect::<Result<_, crate::spectral::SpectralError>>()?;
                    Trace::new(fine, values)?
                }
            };
            Ok(trace.restrict(4)?)
        }
        DataMode::SameGridSpectral => {
            let report = solve_forward(cfg, inst)?;
            Ok(observe(&report.field, cfg.x0)?)
        }
    }
}

pub fn solve_forward(cfg: &ExperimentConfig, inst: &Instance) -> Result<SolveReport, RunError> {
    Ok(match cfg.kind {
        ProblemKind::Source => {
            let prob = build_source_problem(cfg, inst, inst.grid)?;
            solve_source_spectral(&prob, inst.grid, &inst.basis)?
        }
        ProblemKind::Potential => {
            let prob = build_potential_problem(cfg, inst, inst.grid)?;
            solve_potential_spectral(&prob, inst.grid, &inst.basis)?
        }
    })
}

pub fn invert(
    cfg: &ExperimentConfig,
    inst: &Instance,
    data: &Trace,
) -> Result<ReconstructionResult, RunError> {
    let rc = recon_config(cfg);
    Ok(match cfg.kind {
        ProblemKind::Source => {
            let prob = build_source_problem(cfg, inst, inst.grid)?;
            reconstruct_source_f(data, &prob, &inst.basis, &rc)?
        }
        ProblemKind::Potential => {
            let prob = build_potential_problem(cfg, inst, inst.grid)?;
            reconstruct_potential_f(data, &prob, &inst.basis, &rc)?
        }
    })
}

/// One sweep-point outcome with the fixed CSV schema.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub index: usize,
    pub axes: Vec<(String, String)>,
    pub err_l2_rel: f64,
    pub err_linf_rel: f64,
    pub floor_margin: f64,
    pub spectral_tail: f64,
    pub picard_iterations: usize,
    pub status: String,
}

pub struct RunSummary {
    pub rows: Vec<SweepRow>,
    pub sweep_csv: PathBuf,
}

fn cartesian(axes: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    let mut points: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (name, values) in axes {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for point in &points {
            for value in values {
                let mut p = point.clone();
                p.push((name.clone(), value.clone()));
                next.push(p);
            }
        }
        points = next;
    }
    points
}

/// Execute the config: one run directory per sweep point plus a top-level
/// sweep.csv. Deterministic given the seed; a failing point is recorded
/// in its row and never aborts the remaining points.
pub fn run(cfg: &ExperimentConfig, out_root: &Path) -> Result<RunSummary, RunError> {
    fs::create_dir_all(out_root)?;
    let points = cartesian(&cfg.sweep);
    let mut rows = Vec::with_capacity(points.len());

    for (index, overrides) in points.iter().enumerate() {
        let mut point_cfg = cfg.clone();
        let mut bad = Vec::new();
        for (key, value) in overrides {
            if let Err(what) = apply_field(&mut point_cfg, key, value) {
                bad.push(what);
            }
        }
        bad.extend(validate(&point_cfg));
        // Decorrelate noise across sweep points, deterministically.
        point_cfg.seed = point_cfg.seed.wrapping_add(index as u64);

        let dir = out_root.join(format!("run_{index:04}"));
        fs::create_dir_all(&dir)?;

        let row = if bad.is_empty() {
            match run_point(&point_cfg, &dir) {
                Ok(mut row) => {
                    row.index = index;
                    row.axes = overrides.clone();
                    row
                }
                Err(err) => SweepRow {
                    index,
                    axes: overrides.clone(),
                    err_l2_rel: f64::NAN,
                    err_linf_rel: f64::NAN,
                    floor_margin: f64::NAN,
                    spectral_tail: f64::NAN,
                    picard_iterations: 0,
                    status: sanitize_status(&format!("error: {err}")),
                },
            }
        } else {
            SweepRow {
                index,
                axes: overrides.clone(),
                err_l2_rel: f64::NAN,
                err_linf_rel: f64::NAN,
                floor_margin: f64::NAN,
                spectral_tail: f64::NAN,
                picard_iterations: 0,
                status: sanitize_status(&format!("invalid: {}", bad.join("; "))),
            }
        };
        rows.push(row);
    }

    let sweep_csv = out_root.join("sweep.csv");
    let mut text = String::new();
    let axis_names: Vec<&str> = cfg.sweep.iter().map(|(n, _)| n.as_str()).collect();
    write!(text, "index").unwrap();
    for name in &axis_names {
        write!(text, ",{name}").unwrap();
    }
    writeln!(
        text,
        ",err_l2_rel,err_linf_rel,floor_margin,spectral_tail,picard_iterations,status"
    )
    .unwrap();
    for row in &rows {
        write!(text, "{}", row.index).unwrap();
        for (_, value) in &row.axes {
            write!(text, ",{}", value.replace(',', ";")).unwrap();
        }
        writeln!(
            text,
            ",{},{},{},{},{},{}",
            fmt_float(row.err_l2_rel),
            fmt_float(row.err_linf_rel),
            fmt_float(row.floor_margin),
            fmt_float(row.spectral_tail),
            row.picard_iterations,
            row.status
        )
        .unwrap();
    }
    fs::write(&sweep_csv, text)?;
    Ok(RunSummary { rows, sweep_csv })
}

fn sanitize_status(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

fn run_point(cfg: &ExperimentConfig, dir: &Path) -> Result<SweepRow, RunError> {
    let inst = build_instance(cfg)?;
    match cfg.task {
        Task::Forward => {
            let report = solve_forward(cfg, &inst)?;
            write_field_csv(&dir.join("field.csv"), &report)?;
            let trace = observe(&report.field, cfg.x0)?;
            write_trace_csv(&dir.join("trace.csv"), &trace, "t,u_x0")?;
            write_report(
                &dir.join("report.txt"),
                &[
                    ("picard_iterations", report.picard_iterations.to_string()),
                    ("spectral_tail", fmt_float(report.spectral_tail)),
                    (
                        "contraction_residuals",
                        report
                            .contraction_residuals
                            .iter()
                            .map(|r| fmt_float(*r))
                            .collect::<Vec<_>>()
                            .join(";"),
                    ),
                ],
            )?;
            Ok(SweepRow {
                index: 0,
                axes: Vec::new(),
                err_l2_rel: f64::NAN,
                err_linf_rel: f64::NAN,
                floor_margin: f64::NAN,
                spectral_tail: report.spectral_tail,
                picard_iterations: report.picard_iterations,
                status: "ok".into(),
            })
        }
        Task::Roundtrip => {
            let clean = generate_data(cfg, &inst)?;
            let data = make_noise(&clean, cfg.noise_level, cfg.seed);
            write_trace_csv(&dir.join("trace.csv"), &data, "t,u_x0")?;
            let recon = invert(cfg, &inst, &data)?;
            write_trace_csv(&dir.join("f_hat.csv"), &recon.f_hat, "t,f")?;
            write_trace_csv(&dir.join("residual.csv"), &recon.residual_trace, "t,residual")?;

            let truth = generators::f_star(&cfg.f_star, inst.grid)?;
            let diff = Trace::new(
                inst.grid,
                recon
                    .f_hat
                    .values()
                    .iter()
                    .zip(truth.values())
                    .map(|(a, b)| a - b)
                    .collect(),
            )?;
            let l2_ref = lp_norm(&truth, 2.0).max(1e-300);
            let linf_ref = truth.max_abs().max(1e-300);
            let err_l2_rel = lp_norm(&diff, 2.0) / l2_ref;
            let err_linf_rel = diff.max_abs() / linf_ref;
            write_report(
                &dir.join("report.txt"),
                &[
                    ("err_l2_rel", fmt_float(err_l2_rel)),
                    ("err_linf_rel", fmt_float(err_linf_rel)),
                    ("floor_margin", fmt_float(recon.floor_margin)),
                    (
                        "max_inner_iterations",
                        recon
                            .diagnostics
                            .iter()
                            .map(|d| d.inner_iterations)
                            .max()
                            .unwrap_or(0)
                            .to_string(),
                    ),
                ],
            )?;
            Ok(SweepRow {
                index: 0,
                axes: Vec::new(),
                err_l2_rel,
                err_linf_rel,
                floor_margin: recon.floor_margin,
                spectral_tail: f64::NAN,
                picard_iterations: recon
                    .diagnostics
                    .iter()
                    .map(|d| d.inner_iterations)
                    .max()
                    .unwrap_or(0),
                status: "ok".into(),
            })
        }
    }
}

pub fn write_trace_csv(path: &Path, trace: &Trace, header: &str) -> Result<(), RunError> {
    let mut text = String::with_capacity(trace.values().len() * 44);
    writeln!(text, "{header}").unwrap();
    for (t, v) in trace.grid().nodes().zip(trace.values()) {
        writeln!(text, "{},{}", fmt_float(t), fmt_float(*v)).unwrap();
    }
    fs::write(path, text)?;
    Ok(())
}

/// field.csv: one row per spatial node, one column per time node.
pub fn write_field_csv(path: &Path, report: &SolveReport) -> Result<(), RunError> {
    let field = &report.field;
    let mut text = String::new();
    for j in 0..field.mesh().n_nodes() {
        let mut first = true;
        for k in 0..field.grid().n_nodes() {
            if !first {
                text.push(',');
            }
            text.push_str(&fmt_float(field.at(j, k)));
            first = false;
        }
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_report(path: &Path, entries: &[(&str, String)]) -> Result<(), RunError> {
    let mut file = fs::File::create(path)?;
    for (key, value) in entries {
        writeln!(file, "{key} = {value}")?;
    }
    Ok(())
}

/// Read a `t,value` CSV (as produced by [`write_trace_csv`]) onto a grid.
pub fn read_trace_csv(path: &Path, grid: TimeGrid) -> Result<Trace, RunError> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.chars().next().is_some_and(|c| c.is_alphabetic()) {
            continue;
        }
        let mut parts = line.split(',');
        let _t = parts.next();
        if let Some(v) = parts.next() {
            values.push(v.trim().parse::<f64>().map_err(|e| {
                RunError::Config(ConfigError::Parse {
                    line: 0,
                    what: format!("bad float `{v}`: {e}"),
                })
            })?);
        }
    }
    Ok(Trace::new(grid, values)?)
}
