use crate::args::{FamilyKind, ToeplitzArgs};
use crate::error::{validation, CliResult};
use crate::output::{Artifact, Cell, Format, RunOutput, Table};
use crate::sweep::frequencies;
use oscillotex_core::diagnostics::{signature_record, unwrap_signatures, wall_traction_modes, WallSide, SIGNATURE_COLUMNS};
use oscillotex_core::oned_solvers::Grid1D;
use oscillotex_core::toeplitz::{
    assemble_blocks, decoupled_solve, smallness_certificate, solve_direct, solve_neumann, stability_with,
    BlockSystemSpec, SmallnessCertificate, SolveMethod, StabilityConstants,
};
use oscillotex_core::viscosity::{SpanwiseFamily, SpanwiseTexture};
use oscillotex_core::C64;
use rayon::prelude::*;
use serde::Serialize;

pub fn parse_method(s: &str) -> CliResult<SolveMethod> {
    let s = s.trim();
    if s == "direct" {
        return Ok(SolveMethod::Direct);
    }
    if let Some(n) = s.strip_prefix("neumann:") {
        if let Ok(order) = n.parse::<usize>() {
            return Ok(SolveMethod::Neumann { order });
        }
    }
    validation(format!("method must be direct or neumann:N, got {s:?}"))
}

#[derive(Debug, Clone, Serialize)]
pub struct ToeplitzParams {
    pub family: SpanwiseFamily,
    pub modes_m: usize,
    pub lz: f64,
    pub omegas: Vec<f64>,
    pub grid_n: usize,
    pub method: SolveMethod,
    pub mu0: f64,
    pub phi0: f64,
    pub rho: f64,
    pub height: f64,
    pub transfer: bool,
}

impl ToeplitzParams {
    pub fn resolve(a: &ToeplitzArgs) -> CliResult<Self> {
        let eps = a.eps.unwrap_or(0.0);
        let m0 = a.m0.unwrap_or(1);
        let family = match a.family.unwrap_or(FamilyKind::Cosine) {
            FamilyKind::Onesided => SpanwiseFamily::OneSided { eps, m0 },
            FamilyKind::Cosine => SpanwiseFamily::Cosine { eps, m0 },
            FamilyKind::Phaseonly => SpanwiseFamily::PhaseOnly {
                eps,
                m0,
                band: a.band_n.unwrap_or(4),
            },
        };
        let p = ToeplitzParams {
            family,
            modes_m: a.modes_m.unwrap_or(8),
            lz: a.lz.unwrap_or(2.0 * std::f64::consts::PI),
            omegas: frequencies(a.omega, a.omega_sweep.as_deref(), 1.0)?,
            grid_n: a.grid_n.unwrap_or(200),
            method: parse_method(a.method.as_deref().unwrap_or("direct"))?,
            mu0: a.mu0.unwrap_or(1.0),
            phi0: a.phi0.unwrap_or(0.0),
            rho: a.rho.unwrap_or(1.0),
            height: a.height.unwrap_or(1.0),
            transfer: !a.no_transfer.unwrap_or(false),
        };
        for &w in &p.omegas {
            p.spec(w)?.validate()?;
        }
        Ok(p)
    }

    pub fn spec(&self, omega: f64) -> CliResult<BlockSystemSpec> {
        let grid = Grid1D::new(self.height, self.grid_n)?;
        let baseline = vec![C64::from_polar(self.mu0, self.phi0); self.grid_n + 1];
        Ok(BlockSystemSpec {
            m_max: self.modes_m,
            grid,
            texture: SpanwiseTexture::new(baseline, self.family, self.lz)?,
            rho: self.rho,
            omega,
            forcing: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RemainderEntry {
    pub order: usize,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateEntry {
    pub omega: f64,
    #[serde(flatten)]
    pub certificate: SmallnessCertificate,
    /// Energy norm of the decoupled solution W = D⁻¹F.
    pub w_energy_norm: f64,
    /// Empty when the certificate does not converge.
    pub remainder_bounds: Vec<RemainderEntry>,
    pub stability: StabilityConstants,
    pub method: SolveMethod,
    pub residual: f64,
}

pub const MODE_COLUMNS: [&str; 7] = ["omega", "m", "kappa", "norm_l2", "norm_energy", "re_flux", "im_flux"];

struct PerOmega {
    modes: Vec<Vec<Cell>>,
    cert: CertificateEntry,
    sig: oscillotex_core::diagnostics::SignatureRecord,
}

fn one(p: &ToeplitzParams, omega: f64) -> CliResult<PerOmega> {
    let spec = p.spec(omega)?;
    let sys = assemble_blocks(&spec)?;
    let f = spec.forcing_blocks();
    let cert = smallness_certificate(&sys);
    let sol = match p.method {
        SolveMethod::Direct => solve_direct(&sys, &f)?,
        SolveMethod::Neumann { order } => solve_neumann(&sys, &f, order)?,
    };
    let w = decoupled_solve(&sys.diag_factors()?, &f)?;
    let w_norm = sys.energy_norm(&w);
    let orders: Vec<usize> = match p.method {
        SolveMethod::Neumann { order } => vec![order],
        SolveMethod::Direct => (1..=4).collect(),
    };
    let remainder_bounds = if cert.converges {
        orders
            .into_iter()
            .map(|order| RemainderEntry {
                order,
                bound: cert.remainder_bound(order, w_norm),
            })
            .collect()
    } else {
        Vec::new()
    };
    let flux = wall_traction_modes(&sol, &spec.texture, WallSide::Bottom);
    let mm = p.modes_m as i64;
    let modes = (-mm..=mm)
        .map(|m| {
            let j = (m + mm) as usize;
            vec![
                Cell::F(omega),
                Cell::I(m),
                Cell::F(sol.kappas[j]),
                Cell::F(sol.l2_mode_norm(m)),
                Cell::F(sol.energy_mode_norm(m)),
                Cell::F(flux[j].re),
                Cell::F(flux[j].im),
            ]
        })
        .collect();
    let sig = signature_record(&spec, p.transfer)?;
    Ok(PerOmega {
        modes,
        cert: CertificateEntry {
            omega,
            stability: stability_with(&sys, &cert),
            certificate: cert,
            w_energy_norm: w_norm,
            remainder_bounds,
            method: p.method,
            residual: sol.residual,
        },
        sig,
    })
}

pub fn run(p: &ToeplitzParams, format: Format) -> CliResult<RunOutput> {
    let results = p.omegas.par_iter().map(|&w| one(p, w)).collect::<CliResult<Vec<_>>>()?;
    let mut modes = Table::new(&MODE_COLUMNS);
    let mut certs = Vec::with_capacity(results.len());
    let mut sigs = Vec::with_capacity(results.len());
    for r in results {
        for row in r.modes {
            modes.push(row);
        }
        certs.push(r.cert);
        sigs.push(r.sig);
    }
    unwrap_signatures(&mut sigs);
    let mut sig = Table::new(&SIGNATURE_COLUMNS);
    for s in &sigs {
        sig.push_f(&s.values());
    }
    Ok(RunOutput {
        kind: "toeplitz",
        scenario: serde_json::to_value(p).expect("params serialize"),
        artifacts: vec![
            Artifact::table("modes", &modes, format),
            Artifact::json("certificate.json", &certs)?,
            Artifact::table("signature", &sig, format),
        ],
        warnings: Vec::new(),
    })
}
