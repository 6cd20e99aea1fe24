use crate::args::{CornerArgs, MatrixName, NumrangeArgs, OperatorSourceArgs, PseudoArgs};
use crate::cmd::couette::{layered_operator, parse_layers};
use crate::error::{validation, CliError, CliResult};
use crate::formats::read_operator;
use crate::output::{Artifact, Format, RunOutput, Table};
use crate::sweep::{parse_list, parse_pair, Spacing};
use oscillotex_core::couette::LayerStack;
use oscillotex_core::diagnostics::{
    corner_functionals, nonnormality_metric, numerical_range_sample, pseudospectrum_grid, resolvent_gain,
    OperatorHandle, ProbeCheck, SectorReport, DEFAULT_ANGLES,
};
use oscillotex_core::C64;
use rayon::prelude::*;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSource {
    File { path: PathBuf, sha256: String },
    Layers { layers: Vec<(f64, f64)>, mu0: f64, rho: f64, omega: f64, grid_n: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorSpec {
    pub source: OperatorSource,
    pub matrix: MatrixName,
}

fn matrix_key(m: MatrixName) -> &'static str {
    match m {
        MatrixName::APhi => "a_phi",
        MatrixName::L => "l",
    }
}

impl OperatorSpec {
    pub fn resolve(a: &OperatorSourceArgs) -> CliResult<Self> {
        let matrix = a.matrix.unwrap_or(MatrixName::APhi);
        let source = match (&a.operator, &a.layers) {
            (Some(_), Some(_)) => return validation("give either --operator or --layers"),
            (Some(path), None) => {
                // hashing the header keeps the scenario hash tied to the file contents
                let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                OperatorSource::File {
                    path: path.clone(),
                    sha256: crate::output::sha256_hex(&bytes),
                }
            }
            (None, layers) => OperatorSource::Layers {
                layers: parse_layers(layers.as_deref().unwrap_or("0.5:0,0.5:0.6"))?,
                mu0: a.mu0.unwrap_or(1.0),
                rho: a.rho.unwrap_or(1.0),
                omega: a.omega.unwrap_or(1.0),
                grid_n: a.grid_n.unwrap_or(64),
            },
        };
        let s = OperatorSpec { source, matrix };
        if let OperatorSource::Layers { .. } = s.source {
            s.build()?;
        }
        Ok(s)
    }

    pub fn build(&self) -> CliResult<OperatorHandle> {
        let key = matrix_key(self.matrix);
        match &self.source {
            OperatorSource::File { path, .. } => {
                let (h, m) = read_operator(path, key)?;
                Ok(OperatorHandle::uniform(m, h.h, format!("{}:{key}", path.display())))
            }
            OperatorSource::Layers {
                layers,
                mu0,
                rho,
                omega,
                grid_n,
            } => {
                let stack = LayerStack::from_phases(*mu0, layers, *rho, *omega, C64::new(1.0, 0.0))?;
                let ops = layered_operator(&stack, *grid_n)?;
                let m = match self.matrix {
                    MatrixName::APhi => ops.a_phi,
                    MatrixName::L => ops.l,
                };
                Ok(OperatorHandle::uniform(m, ops.h, format!("layers:{key}")))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PseudoParams {
    pub operator: OperatorSpec,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl PseudoParams {
    pub fn resolve(a: &PseudoArgs) -> CliResult<Self> {
        Ok(PseudoParams {
            operator: OperatorSpec::resolve(&a.source)?,
            re: parse_list(a.re.as_deref().unwrap_or("0:100:21"), Spacing::Linear)?,
            im: parse_list(a.im.as_deref().unwrap_or("-50:50:21"), Spacing::Linear)?,
        })
    }
}

pub fn run_pseudo(p: &PseudoParams, format: Format) -> CliResult<RunOutput> {
    let op = p.operator.build()?;
    // one row of constant Im λ per task; rows concatenate in input order
    let rows = p
        .im
        .par_iter()
        .map(|&y| pseudospectrum_grid(&op, &p.re, &[y]))
        .collect::<oscillotex_core::Result<Vec<_>>>()?;
    let mut t = Table::new(&["re_lambda", "im_lambda", "sigma_min"]);
    for pt in rows.into_iter().flatten() {
        t.push_f(&[pt.re_lambda, pt.im_lambda, pt.sigma_min]);
    }
    Ok(RunOutput {
        kind: "diag-pseudo",
        scenario: serde_json::to_value(p).expect("params serialize"),
        artifacts: vec![Artifact::table("pseudospectrum", &t, format)],
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NumrangeParams {
    pub operator: OperatorSpec,
    pub angles: usize,
    pub tan_bound: Option<f64>,
    pub probes: usize,
    pub probe_gap: f64,
}

impl NumrangeParams {
    pub fn resolve(a: &NumrangeArgs) -> CliResult<Self> {
        let p = NumrangeParams {
            operator: OperatorSpec::resolve(&a.source)?,
            angles: a.angles.unwrap_or(DEFAULT_ANGLES),
            tan_bound: a.tan_bound,
            probes: a.probes.unwrap_or(5),
            probe_gap: a.probe_gap.unwrap_or(0.05),
        };
        if p.angles < 8 {
            return validation("--angles must be at least 8");
        }
        if !(p.probe_gap > 0.0) {
            return validation("--probe-gap must be positive");
        }
        if p.tan_bound.is_some_and(|t| !(t >= 0.0)) {
            return validation("--tan-bound must be nonnegative");
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NumrangeSummary {
    pub label: String,
    pub dim: usize,
    pub delta_nn: f64,
    pub resolvent_gain: f64,
    pub sector: Option<SectorReport>,
    pub probes: Vec<ProbeCheck>,
}

pub fn run_numrange(p: &NumrangeParams, format: Format) -> CliResult<RunOutput> {
    let op = p.operator.build()?;
    let nr = numerical_range_sample(&op, p.angles)?;
    let extent = nr.points.iter().map(|s| s.support.abs()).fold(0.0, f64::max);
    let lambdas = nr.exterior_probes(p.probes, p.probe_gap * extent.max(f64::MIN_POSITIVE));
    let probes: Vec<ProbeCheck> = lambdas.par_iter().map(|&l| nr.probe(&op, l)).collect();
    let mut t = Table::new(&["theta", "support", "re_point", "im_point"]);
    for s in &nr.points {
        t.push_f(&[s.theta, s.support, s.point.re, s.point.im]);
    }
    let mut warnings = Vec::new();
    let sector = p.tan_bound.map(|tb| nr.sector_report(tb, 1e-10 * extent.max(1.0)));
    if sector.as_ref().is_some_and(|s| !s.pass) {
        warnings.push("sampled numerical range leaves the requested sector".into());
    }
    if probes.iter().any(|c| !c.pass) {
        warnings.push("a resolvent probe exceeds 1/dist".into());
    }
    let summary = NumrangeSummary {
        label: op.label.clone(),
        dim: op.dim(),
        delta_nn: nonnormality_metric(&op),
        resolvent_gain: resolvent_gain(&op).value,
        sector,
        probes,
    };
    Ok(RunOutput {
        kind: "diag-numrange",
        scenario: serde_json::to_value(p).expect("params serialize"),
        artifacts: vec![
            Artifact::table("numrange", &t, format),
            Artifact::json("numrange_summary.json", &summary)?,
        ],
        warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CornerParams {
    pub field: PathBuf,
    pub field_sha256: String,
    pub center: (f64, f64),
    pub radii: Vec<f64>,
}

impl CornerParams {
    pub fn resolve(a: &CornerArgs) -> CliResult<Self> {
        let Some(field) = a.field.clone() else {
            return validation("diag corner needs --field");
        };
        let bytes = std::fs::read(&field).map_err(|e| CliError::Io(format!("{}: {e}", field.display())))?;
        Ok(CornerParams {
            field_sha256: crate::output::sha256_hex(&bytes),
            field,
            center: parse_pair(a.center.as_deref().unwrap_or("0,0"))?,
            radii: parse_list(a.radii.as_deref().unwrap_or("0.1:1:10"), Spacing::Linear)?,
        })
    }
}

pub fn run_corner(p: &CornerParams, format: Format) -> CliResult<RunOutput> {
    let field = crate::formats::read_field(&p.field)?;
    let c = corner_functionals(&field, p.center, &p.radii)?;
    let mut t = Table::new(&["r", "strain", "enstrophy", "overlap"]);
    for i in 0..c.radii.len() {
        t.push_f(&[c.radii[i], c.strain[i], c.enstrophy[i], c.overlap[i]]);
    }
    let warnings = if c.clipped {
        vec!["corner: some discs extend beyond the grid and were clipped".into()]
    } else {
        Vec::new()
    };
    Ok(RunOutput {
        kind: "diag-corner",
        scenario: serde_json::to_value(p).expect("params serialize"),
        artifacts: vec![Artifact::table("corner", &t, format)],
        warnings,
    })
}
