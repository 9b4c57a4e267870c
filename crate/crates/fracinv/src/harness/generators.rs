//! Named generator registry for experiment ingredients. Every test
//! function is a named closure with explicit parameters, so the
//! provenance of any run is auditable from its config alone.

use crate::forward::{Coefficient, SpaceTimeFn};
use crate::fracops::{TimeGrid, Trace};
use crate::spectral::{EigenBasis, SpatialMesh};

use std::sync::Arc;

use super::ConfigError;

fn parse_args(spec: &str) -> (String, Vec<f64>) {
    match spec.split_once(':') {
        None => (spec.trim().to_string(), Vec::new()),
        Some((name, rest)) => {
            let args = rest
                .split(',')
                .filter_map(|a| a.trim().parse::<f64>().ok())
                .collect();
            (name.trim().to_string(), args)
        }
    }
}

fn unknown(kind: &str, spec: &str) -> ConfigError {
    ConfigError::Validation {
        violations: vec![format!("unknown {kind} generator `{spec}`")],
    }
}

/// Diffusion coefficients a(x): `one`, `affine:c0,c1`, `bump:amp`.
pub fn diffusion(spec: &str, length: f64) -> Result<Coefficient, ConfigError> {
    let (name, args) = parse_args(spec);
    Ok(match name.as_str() {
        "one" => Arc::new(|_| 1.0),
        "affine" => {
            let c0 = args.first().copied().unwrap_or(1.0);
            let c1 = args.get(1).copied().unwrap_or(0.5);
            Arc::new(move |x| c0 + c1 * x)
        }
        "bump" => {
            let amp = args.first().copied().unwrap_or(0.5);
            let l = length;
            Arc::new(move |x| 1.0 + amp * x * (l - x) / (l * l))
        }
        _ => return Err(unknown("diffusion", spec)),
    })
}

/// Time factors f*(t): `zero`, `one`, `linear`, `sine`, `smooth_step`,
/// `one_plus_half_ramp`, `const:c`.
pub fn f_star(spec: &str, grid: TimeGrid) -> Result<Trace, ConfigError> {
    let (name, args) = parse_args(spec);
    let t_final = grid.t_final();
    let f: Box<dyn Fn(f64) -> f64> = match name.as_str() {
        "zero" => Box::new(|_| 0.0),
        "one" => Box::new(|_| 1.0),
        "linear" => Box::new(|t| t),
        "sine" => Box::new(move |t| (2.0 * std::f64::consts::PI * t / t_final).sin()),
        "smooth_step" => {
            // Mollified step at T/2 with width T/20.
            Box::new(move |t| 0.5 * (1.0 + ((t - 0.5 * t_final) / (0.05 * t_final)).tanh()))
        }
        "one_plus_half_ramp" => Box::new(move |t| 1.0 + t / (2.0 * t_final)),
        "const" => {
            let c = args.first().copied().unwrap_or(1.0);
            Box::new(move |_| c)
        }
        _ => return Err(unknown("f_star", spec)),
    };
    Ok(Trace::from_fn(grid, f))
}

/// Spatial profiles: `phi:n` (n-th discrete eigenfunction, 1-based),
/// `sine:n`, `bump`, `cos:n`, `poly_robin`, `const:c`.
pub fn spatial_profile(
    spec: &str,
    mesh: SpatialMesh,
    basis: &EigenBasis,
) -> Result<Vec<f64>, ConfigError> {
    let (name, args) = parse_args(spec);
    let l = mesh.length();
    Ok(match name.as_str() {
        "phi" => {
            let n = args.first().copied().unwrap_or(1.0) as usize;
            if n == 0 || n > basis.n_modes() {
                return Err(ConfigError::Validation {
                    violations: vec![format!(
                        "phi:{n} out of range (basis has {} modes)",
                        basis.n_modes()
                    )],
                });
            }
            basis.phi(n - 1).to_vec()
        }
        "sine" => {
            let n = args.first().copied().unwrap_or(1.0);
            mesh.nodes()
                .map(|x| (n * std::f64::consts::PI * x / l).sin())
                .collect()
        }
        "cos" => {
            let n = args.first().copied().unwrap_or(1.0);
            mesh.nodes()
                .map(|x| (n * std::f64::consts::PI * x / l).cos())
                .collect()
        }
        "bump" => mesh.nodes().map(|x| 4.0 * x * (l - x) / (l * l)).collect(),
        "poly_robin" => mesh.nodes().map(|x| 1.0 + x - x * x).collect(),
        "const" => {
            let c = args.first().copied().unwrap_or(1.0);
            vec![c; mesh.n_nodes()]
        }
        _ => return Err(unknown("spatial profile", spec)),
    })
}

/// Time signals for separable space-time data: `const`, `decay:rate`,
/// `ramp_down` (1 - 2t/T).
pub fn time_signal(spec: &str, grid: TimeGrid) -> Result<Vec<f64>, ConfigError> {
    let (name, args) = parse_args(spec);
    let t_final = grid.t_final();
    Ok(match name.as_str() {
        "const" => vec![1.0; grid.n_nodes()],
        "decay" => {
            let rate = args.first().copied().unwrap_or(1.0);
            grid.nodes().map(|t| (-rate * t).exp()).collect()
        }
        "ramp_down" => grid.nodes().map(|t| 1.0 - 2.0 * t / t_final).collect(),
        _ => return Err(unknown("time signal", spec)),
    })
}

/// Coupling coefficients q(x, t): `one`, `const:c`, `bump_decay:amp,rate`
/// (1 + amp·x(L-x)e^{-rate t}), `decay:rate`.
pub fn coupling(
    spec: &str,
    mesh: SpatialMesh,
    grid: TimeGrid,
) -> Result<SpaceTimeFn, ConfigError> {
    let (name, args) = parse_args(spec);
    let l = mesh.length();
    let nx = mesh.n_nodes();
    let nt = grid.n_nodes();
    Ok(match name.as_str() {
        "one" => SpaceTimeFn::stationary(vec![1.0; nx], nt),
        "const" => {
            let c = args.first().copied().unwrap_or(1.0);
            SpaceTimeFn::stationary(vec![c; nx], nt)
        }
        "bump_decay" => {
            let amp = args.first().copied().unwrap_or(0.3);
            let rate = args.get(1).copied().unwrap_or(1.0);
            let profile: Vec<f64> = mesh.nodes().map(|x| amp * x * (l - x)).collect();
            let signal: Vec<f64> = grid.nodes().map(|t| (-rate * t).exp()).collect();
            SpaceTimeFn::SeparableSum(vec![
                crate::forward::SeparableTerm {
                    profile: vec![1.0; nx],
                    signal: vec![1.0; nt],
                },
                crate::forward::SeparableTerm { profile, signal },
            ])
        }
        "bump2_decay" => {
            // Zero endpoint slope: conormal boundaries require
            // a ∂_x q = 0 at the ends.
            let amp = args.first().copied().unwrap_or(0.3);
            let rate = args.get(1).copied().unwrap_or(1.0);
            let norm = 16.0 / (l * l * l * l);
            let profile: Vec<f64> = mesh
                .nodes()
                .map(|x| amp * norm * (x * (l - x)).powi(2))
                .collect();
            let signal: Vec<f64> = grid.nodes().map(|t| (-rate * t).exp()).collect();
            SpaceTimeFn::SeparableSum(vec![
                crate::forward::SeparableTerm {
                    profile: vec![1.0; nx],
                    signal: vec![1.0; nt],
                },
                crate::forward::SeparableTerm { profile, signal },
            ])
        }
        "decay" => {
            let rate = args.first().copied().unwrap_or(1.0);
            let signal: Vec<f64> = grid.nodes().map(|t| (-rate * t).exp()).collect();
            SpaceTimeFn::separable(vec![1.0; nx], signal)
        }
        "ramp_down" => {
            let signal: Vec<f64> = grid.nodes().map(|t| 1.0 - 2.0 * t / grid.t_final()).collect();
            SpaceTimeFn::separable(vec![1.0; nx], signal)
        }
        _ => return Err(unknown("coupling", spec)),
    })
}
