//! Scenario files: TOML, or JSON when the extension is `.json`.

use crate::args::{CornerArgs, CouetteArgs, NumrangeArgs, PseudoArgs, Stokes2Args, ToeplitzArgs};
use crate::error::{validation, CliError, CliResult};
use crate::output::Format;
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagConfig {
    pub pseudo: PseudoArgs,
    pub numrange: NumrangeArgs,
    pub corner: CornerArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub stokes2: Stokes2Args,
    #[serde(default)]
    pub couette: CouetteArgs,
    #[serde(default)]
    pub toeplitz: ToeplitzArgs,
    #[serde(default)]
    pub diag: DiagConfig,
}

impl ConfigFile {
    pub fn parse(text: &str, json: bool) -> CliResult<Self> {
        let c: ConfigFile = if json {
            serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?
        } else {
            toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?
        };
        if c.schema_version != SCHEMA_VERSION {
            return validation(format!(
                "config schema_version {} is not supported (expected {SCHEMA_VERSION})",
                c.schema_version
            ));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut c = Self::parse(&text, json)?;
        // relative paths inside the file resolve against its directory
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        rebase(&mut c.out_dir);
        rebase(&mut c.diag.pseudo.source.operator);
        rebase(&mut c.diag.numrange.source.operator);
        rebase(&mut c.diag.corner.field);
        Ok(c)
    }
}
