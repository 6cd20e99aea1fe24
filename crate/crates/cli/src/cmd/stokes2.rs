use crate::args::{ChiKind, Stokes2Args};
use crate::error::CliResult;
use crate::output::{Artifact, Format, RunOutput, Table};
use crate::sweep::frequencies;
use oscillotex_core::stokes2::{solve, zw1_perturbative, HalfSpaceSetup};
use oscillotex_core::viscosity::Chi;
use oscillotex_core::C64;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Stokes2Params {
    pub mu0: f64,
    pub phi0: f64,
    pub rho: f64,
    pub omegas: Vec<f64>,
    pub eps: f64,
    pub chi: Chi,
    pub grid_n: usize,
}

impl Stokes2Params {
    pub fn resolve(a: &Stokes2Args) -> CliResult<Self> {
        let ell = a.ell.unwrap_or(0.2);
        let chi = match a.chi.unwrap_or(ChiKind::Tophat) {
            ChiKind::Tophat => Chi::TopHat { ell },
            ChiKind::Ramp => Chi::Ramp { ell },
            ChiKind::Exp => Chi::Exp { ell },
        };
        chi.validate()?;
        let p = Stokes2Params {
            mu0: a.mu0.unwrap_or(1.0),
            phi0: a.phi0.unwrap_or(0.0),
            rho: a.rho.unwrap_or(1.0),
            omegas: frequencies(a.omega, a.omega_sweep.as_deref(), 1.0)?,
            eps: a.eps.unwrap_or(0.0),
            chi,
            grid_n: a.grid_n.unwrap_or(512),
        };
        for s in p.setups() {
            s.validate()?;
        }
        Ok(p)
    }

    pub fn setups(&self) -> Vec<HalfSpaceSetup> {
        self.omegas
            .iter()
            .map(|&w| HalfSpaceSetup {
                mu0: self.mu0,
                phi0: self.phi0,
                rho: self.rho,
                omega: w,
                u_w: C64::new(1.0, 0.0),
                eps: self.eps,
                chi: self.chi.clone(),
                grid_n: self.grid_n,
            })
            .collect()
    }
}

pub const IMPEDANCE_COLUMNS: [&str; 7] = ["omega", "re_z", "im_z", "abs_z", "arg_z", "re_zw1", "im_zw1"];

pub fn run(p: &Stokes2Params, format: Format) -> CliResult<RunOutput> {
    let results = p
        .setups()
        .par_iter()
        .map(|s| {
            let sol = solve(s)?;
            let z1 = zw1_perturbative(s)?;
            Ok((s.omega, sol, z1))
        })
        .collect::<oscillotex_core::Result<Vec<_>>>()?;
    let mut imp = Table::new(&IMPEDANCE_COLUMNS);
    let mut prof = Table::new(&["omega", "y", "re_u", "im_u"]);
    for (w, sol, z1) in &results {
        let z = sol.impedance;
        imp.push_f(&[*w, z.re, z.im, z.norm(), z.arg(), z1.re, z1.im]);
        let g = sol.solution.problem.grid;
        for (i, u) in sol.solution.u.iter().enumerate() {
            prof.push_f(&[*w, g.node(i), u.re, u.im]);
        }
    }
    Ok(RunOutput {
        kind: "stokes2",
        scenario: serde_json::to_value(p).expect("params serialize"),
        artifacts: vec![Artifact::table("impedance", &imp, format), Artifact::table("profile", &prof, format)],
        warnings: Vec::new(),
    })
}
