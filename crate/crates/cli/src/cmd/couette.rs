use crate::args::{CouetteArgs, Emit};
use crate::error::{validation, CliError, CliResult};
use crate::formats::{encode_matrices, OperatorHeader, LAYOUT};
use crate::output::{Artifact, Format, RunOutput, Table};
use crate::sweep::{frequencies, parse_pair};
use oscillotex_core::couette::{fd_traction, operator_from_midpoints, stack_solve, LayerStack, OperatorMatrices};
use oscillotex_core::oned_solvers::Grid1D;
use oscillotex_core::C64;
use rayon::prelude::*;
use serde::Serialize;

pub fn parse_layers(s: &str) -> CliResult<Vec<(f64, f64)>> {
    s.split(',')
        .map(|item| {
            let pair = item.replacen(':', ",", 1);
            parse_pair(&pair)
                .map_err(|_| CliError::Validation(format!("layer {item:?} is not of the form thickness:phase")))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CouetteParams {
    pub layers: Vec<(f64, f64)>,
    pub mu0: f64,
    pub rho: f64,
    pub omegas: Vec<f64>,
    pub uw: f64,
    pub grid_n: usize,
    pub emit: Emit,
}

impl CouetteParams {
    pub fn resolve(a: &CouetteArgs) -> CliResult<Self> {
        let layers = parse_layers(a.layers.as_deref().unwrap_or("1:0"))?;
        let p = CouetteParams {
            layers,
            mu0: a.mu0.unwrap_or(1.0),
            rho: a.rho.unwrap_or(1.0),
            omegas: frequencies(a.omega, a.omega_sweep.as_deref(), 1.0)?,
            uw: a.uw.unwrap_or(1.0),
            grid_n: a.grid_n.unwrap_or(512),
            emit: a.emit.unwrap_or(Emit::Traction),
        };
        if p.emit == Emit::Operator && p.omegas.len() != 1 {
            return validation("operator export takes a single --omega");
        }
        if !(p.uw != 0.0) {
            return validation("--uw must be nonzero");
        }
        for w in &p.omegas {
            p.stack(*w)?;
        }
        Grid1D::new(1.0, p.grid_n)?;
        Ok(p)
    }

    pub fn stack(&self, omega: f64) -> CliResult<LayerStack> {
        Ok(LayerStack::from_phases(self.mu0, &self.layers, self.rho, omega, C64::new(self.uw, 0.0))?)
    }
}

pub fn layered_operator(stack: &LayerStack, grid_n: usize) -> CliResult<OperatorMatrices> {
    let grid = Grid1D::new(stack.height(), grid_n)?;
    let mu: Vec<C64> = grid.midpoints().into_iter().map(|y| stack.mu_at(y)).collect();
    Ok(operator_from_midpoints(&mu, grid, stack.rho, stack.omega))
}

pub fn run(p: &CouetteParams, format: Format) -> CliResult<RunOutput> {
    let scenario = serde_json::to_value(p).expect("params serialize");
    let mut warnings = Vec::new();
    let artifacts = match p.emit {
        Emit::Traction => {
            let rows = p
                .omegas
                .par_iter()
                .map(|&w| {
                    let s = p.stack(w)?;
                    let sol = stack_solve(&s)?;
                    let fd = fd_traction(&s, p.grid_n)?;
                    Ok((w, sol, fd))
                })
                .collect::<CliResult<Vec<_>>>()?;
            let mut t = Table::new(&[
                "omega",
                "re_tau_bottom",
                "im_tau_bottom",
                "re_tau_top",
                "im_tau_top",
                "re_tau_fd",
                "im_tau_fd",
                "fd_snap_distance",
            ]);
            for (w, sol, fd) in rows {
                if fd.snap_distance > 0.0 && !warnings.iter().any(|m: &String| m.starts_with("fd")) {
                    warnings.push(format!(
                        "fd cross-check: interfaces lie up to {:e} from a node; refine --grid-n",
                        fd.snap_distance
                    ));
                }
                t.push_f(&[
                    w,
                    sol.tau_bottom.re,
                    sol.tau_bottom.im,
                    sol.tau_top.re,
                    sol.tau_top.im,
                    fd.tau_bottom.re,
                    fd.tau_bottom.im,
                    fd.snap_distance,
                ]);
            }
            vec![Artifact::table("traction", &t, format)]
        }
        Emit::Profile => {
            let rows = p
                .omegas
                .par_iter()
                .map(|&w| {
                    let s = p.stack(w)?;
                    let sol = stack_solve(&s)?;
                    let hgt = s.height();
                    let ys: Vec<f64> = (0..=p.grid_n)
                        .map(|i| if i == p.grid_n { hgt } else { hgt * i as f64 / p.grid_n as f64 })
                        .collect();
                    Ok((w, sol.profile(&s, &ys)?))
                })
                .collect::<CliResult<Vec<_>>>()?;
            let mut t = Table::new(&["omega", "y", "re_u", "im_u", "re_tau", "im_tau"]);
            for (w, states) in rows {
                for s in states {
                    t.push_f(&[w, s.y, s.u.re, s.u.im, s.tau.re, s.tau.im]);
                }
            }
            vec![Artifact::table("profile", &t, format)]
        }
        Emit::Operator => {
            let w = p.omegas[0];
            let s = p.stack(w)?;
            let ops = layered_operator(&s, p.grid_n)?;
            let (matrices, payload) = encode_matrices(&[("a_phi", &ops.a_phi), ("l", &ops.l)]);
            let header = OperatorHeader {
                schema_version: 1,
                layout: LAYOUT.into(),
                data: "operator.bin".into(),
                matrices,
                h: ops.h,
                height: ops.grid.height,
                grid_n: ops.grid.n,
                rho: p.rho,
                omega: w,
                layers: p.layers.clone(),
                mu0: Some(p.mu0),
            };
            vec![
                Artifact {
                    name: "operator.bin".into(),
                    bytes: payload,
                },
                Artifact::json("operator.json", &header)?,
            ]
        }
    };
    Ok(RunOutput {
        kind: "couette",
        scenario,
        artifacts,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_syntax() {
        assert_eq!(parse_layers("0.5:0,0.5:0.6").unwrap(), vec![(0.5, 0.0), (0.5, 0.6)]);
        assert_eq!(parse_layers("1:-0.2").unwrap(), vec![(1.0, -0.2)]);
        assert!(parse_layers("0.5").is_err());
        assert!(parse_layers("0.5:0:1").is_err());
    }
}
