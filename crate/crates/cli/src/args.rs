//! Command-line arguments. Every parameter is optional so a config file can
//! supply it; the same structs deserialize from the file's sections.

use crate::output::Format;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "oscillotex", version, about = "Oscillatory shear with textured complex viscosity")]
pub struct Cli {
    /// TOML or JSON scenario file (schema_version = 1).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for outputs and the run manifest [default: out].
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for sweeps; 0 means all logical cores. OSCILLOTEX_THREADS overrides.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Table format [default: csv].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Oscillating wall under a half-space with a near-wall phase defect.
    Stokes2(Stokes2Args),
    /// Layered Couette cell solved by transfer matrices.
    Couette(CouetteArgs),
    /// Spanwise mode-coupled channel system.
    Toeplitz(ToeplitzArgs),
    /// Operator and field diagnostics.
    Diag {
        #[command(subcommand)]
        which: DiagCommand,
    },
    /// Run the built-in acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum DiagCommand {
    /// σ_min(A − λ) on a grid of λ.
    Pseudo(PseudoArgs),
    /// Numerical range boundary, sector and resolvent probes.
    Numrange(NumrangeArgs),
    /// Corner-local strain, enstrophy and overlap of an ingested 2D field.
    Corner(CornerArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ChiKind {
    Tophat,
    Ramp,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Onesided,
    Cosine,
    Phaseonly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Traction,
    Profile,
    Operator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum MatrixName {
    /// −(μ* u′)′ alone.
    #[value(name = "a_phi")]
    #[serde(rename = "a_phi")]
    APhi,
    /// A_φ + iωρ.
    #[value(name = "l")]
    #[serde(rename = "l")]
    L,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SuiteArg {
    #[default]
    Quick,
    Full,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct Stokes2Args {
    /// Baseline viscosity modulus.
    #[arg(long)]
    pub mu0: Option<f64>,
    /// Constant baseline phase.
    #[arg(long)]
    pub phi0: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    /// `lo:hi:n` (geometric) or `w1,w2,...`.
    #[arg(long, allow_hyphen_values = true)]
    pub omega_sweep: Option<String>,
    /// Defect phase amplitude.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_enum)]
    pub chi: Option<ChiKind>,
    #[arg(long)]
    pub ell: Option<f64>,
    #[arg(long)]
    pub grid_n: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct CouetteArgs {
    /// `Δ:φ,Δ:φ,...` from the stationary wall up.
    #[arg(long, allow_hyphen_values = true)]
    pub layers: Option<String>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega_sweep: Option<String>,
    /// Moving-wall velocity amplitude.
    #[arg(long)]
    pub uw: Option<f64>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long, value_enum)]
    pub emit: Option<Emit>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct ToeplitzArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub m0: Option<i64>,
    /// Retained harmonics of the phase-only texture.
    #[arg(long)]
    pub band_n: Option<usize>,
    /// Mode truncation M (modes −M..M).
    #[arg(long)]
    pub modes_m: Option<usize>,
    #[arg(long)]
    pub lz: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega_sweep: Option<String>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// `direct` or `neumann:N`.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub phi0: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Channel height.
    #[arg(long)]
    pub height: Option<f64>,
    /// Skip the transfer norms T± in the signature.
    #[arg(long, num_args = 0, default_missing_value = "true")]
    pub no_transfer: Option<bool>,
}

/// Where a diagnostic takes its operator from.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorSourceArgs {
    /// Header of an operator exported by `couette --emit operator`.
    #[arg(long)]
    pub operator: Option<PathBuf>,
    /// Matrix to analyse.
    #[arg(long, value_enum)]
    pub matrix: Option<MatrixName>,
    /// Build a layered operator directly, `Δ:φ,...`.
    #[arg(long, allow_hyphen_values = true)]
    pub layers: Option<String>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub grid_n: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct PseudoArgs {
    #[command(flatten)]
    pub source: OperatorSourceArgs,
    /// Real parts, `lo:hi:n` or a list.
    #[arg(long, allow_hyphen_values = true)]
    pub re: Option<String>,
    /// Imaginary parts, `lo:hi:n` or a list.
    #[arg(long, allow_hyphen_values = true)]
    pub im: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct NumrangeArgs {
    #[command(flatten)]
    pub source: OperatorSourceArgs,
    #[arg(long)]
    pub angles: Option<usize>,
    /// Check |Im z| ≤ tan_bound·Re z on the sampled boundary.
    #[arg(long)]
    pub tan_bound: Option<f64>,
    /// Exterior resolvent probes.
    #[arg(long)]
    pub probes: Option<usize>,
    /// Distance of the probes beyond the outer polygon, relative to its extent.
    #[arg(long)]
    pub probe_gap: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct CornerArgs {
    /// Field header (JSON) with a binary sidecar.
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
    /// `r1,r2,...` ascending, or `lo:hi:n`.
    #[arg(long, allow_hyphen_values = true)]
    pub radii: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(value_enum, default_value_t = SuiteArg::Quick)]
    pub suite: SuiteArg,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    pub criterion: Vec<u8>,
    #[arg(long, hide = true)]
    pub mutate_bessel: bool,
}

/// Field-wise `self.or(base)`; the frequency pair is taken as a unit.
pub trait Overlay {
    fn overlay(self, base: Self) -> Self;
}

macro_rules! overlay {
    ($t:ty { $($f:ident),* }) => {
        impl Overlay for $t {
            fn overlay(self, base: Self) -> Self {
                Self { $($f: self.$f.or(base.$f)),* }
            }
        }
    };
    ($t:ty { $($f:ident),* } freq) => {
        impl Overlay for $t {
            fn overlay(self, base: Self) -> Self {
                let (omega, omega_sweep) = if self.omega.is_some() || self.omega_sweep.is_some() {
                    (self.omega, self.omega_sweep)
                } else {
                    (base.omega, base.omega_sweep)
                };
                Self { omega, omega_sweep, $($f: self.$f.or(base.$f)),* }
            }
        }
    };
}

overlay!(Stokes2Args { mu0, phi0, rho, eps, chi, ell, grid_n } freq);
overlay!(CouetteArgs { layers, mu0, rho, uw, grid_n, emit } freq);
overlay!(ToeplitzArgs { family, eps, m0, band_n, modes_m, lz, grid_n, method, mu0, phi0, rho, height, no_transfer } freq);
overlay!(OperatorSourceArgs { operator, matrix, layers, mu0, rho, omega, grid_n });
overlay!(CornerArgs { field, center, radii });

impl Overlay for PseudoArgs {
    fn overlay(self, base: Self) -> Self {
        PseudoArgs {
            source: self.source.overlay(base.source),
            re: self.re.or(base.re),
            im: self.im.or(base.im),
        }
    }
}

impl Overlay for NumrangeArgs {
    fn overlay(self, base: Self) -> Self {
        NumrangeArgs {
            source: self.source.overlay(base.source),
            angles: self.angles.or(base.angles),
            tan_bound: self.tan_bound.or(base.tan_bound),
            probes: self.probes.or(base.probes),
            probe_gap: self.probe_gap.or(base.probe_gap),
        }
    }
}
