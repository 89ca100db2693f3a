//! Strict TOML configuration schemas, one per subcommand.
//!
//! Every table rejects unknown keys, so a typo is a config error instead of
//! a silently ignored knob. A config may pin the command it belongs to via
//! the top-level `command` key; a mismatch with the invoked subcommand is
//! rejected before any work starts.

use std::path::Path;

use parobs::core_grid::StripQuadrature;
use parobs::error::{Error, Result};
use parobs::expr::parse_field;
use parobs::obstacle_solver::{ExactProfile, FileSource, SolveConfig, SourceSpec};
use parobs::singular::SingularPolynomial;
use parobs::{core_grid::ScalarField, report::CsvDoc};
use serde::de::DeserializeOwned;
use serde::Deserialize;

pub const DEFAULT_SEED: u64 = 0x5EED;

/// Reads and parses one strict TOML file.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| {
        let flat = e.to_string().replace('\n', "; ");
        Error::Config(format!("{}: {flat}", path.display()))
    })
}

/// Rejects a config whose `command` key names a different subcommand.
pub fn check_command(declared: &Option<String>, invoked: &str) -> Result<()> {
    match declared {
        Some(c) if c != invoked => Err(Error::Config(format!(
            "config declares command `{c}` but `{invoked}` was invoked"
        ))),
        _ => Ok(()),
    }
}

/// A scalar field from a config: an inline expression string, a field file,
/// or a named exact profile.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Expression(String),
    Structured(StructuredField),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuredField {
    #[serde(default)]
    pub file: Option<String>,
    #[serde(default)]
    pub format: Option<String>,
    /// `zero`, `regular`, or `singular`.
    #[serde(default)]
    pub profile: Option<String>,
    /// Half-space direction for the regular profile (normalized here).
    #[serde(default)]
    pub direction: Option<Vec<f64>>,
    /// Row-major quadratic coefficient matrix for the singular profile.
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    /// Time slope for the singular profile; defaults to `tr Q - 1`.
    #[serde(default)]
    pub m: Option<f64>,
}

impl FieldSpec {
    pub fn resolve(&self, dim: usize, base_dir: &Path) -> Result<ScalarField> {
        match self {
            FieldSpec::Expression(text) => parse_field(text, dim),
            FieldSpec::Structured(s) => s.resolve(dim, base_dir),
        }
    }

    /// One-line description echoed into output headers.
    pub fn describe(&self) -> String {
        match self {
            FieldSpec::Expression(text) => format!("expr:{text}"),
            FieldSpec::Structured(s) => {
                if let Some(file) = &s.file {
                    format!("file:{file}")
                } else {
                    format!("profile:{}", s.profile.as_deref().unwrap_or("?"))
                }
            }
        }
    }
}

impl StructuredField {
    fn resolve(&self, dim: usize, base_dir: &Path) -> Result<ScalarField> {
        match (&self.file, &self.profile) {
            (Some(_), Some(_)) | (None, None) => Err(Error::Config(
                "a structured field needs exactly one of `file` or `profile`".into(),
            )),
            (Some(file), None) => {
                if self.direction.is_some() || self.q.is_some() || self.m.is_some() {
                    return Err(Error::Config(
                        "`direction`, `q`, `m` only apply to profile fields".into(),
                    ));
                }
                SourceSpec::File(FileSource {
                    file: file.clone(),
                    format: self.format.clone(),
                })
                .resolve(dim, base_dir)
            }
            (None, Some(profile)) => {
                if self.format.is_some() {
                    return Err(Error::Config("`format` only applies to file fields".into()));
                }
                match profile.as_str() {
                    "zero" => {
                        self.forbid_profile_extras("zero")?;
                        Ok(ScalarField::constant(dim, 0.0))
                    }
                    "regular" => {
                        if self.q.is_some() || self.m.is_some() {
                            return Err(Error::Config(
                                "`q`, `m` do not apply to the regular profile".into(),
                            ));
                        }
                        let e1: Vec<f64> = (0..dim).map(|a| if a == 0 { 1.0 } else { 0.0 }).collect();
                        let dir = self.direction.clone().unwrap_or(e1);
                        if dir.len() != dim {
                            return Err(Error::Config(format!(
                                "direction has {} entries, dimension is {dim}",
                                dir.len()
                            )));
                        }
                        Ok(ExactProfile::regular(&dir)?.field())
                    }
                    "singular" => {
                        if self.direction.is_some() {
                            return Err(Error::Config(
                                "`direction` does not apply to the singular profile".into(),
                            ));
                        }
                        let q = self.q.as_ref().ok_or_else(|| {
                            Error::Config("the singular profile needs `q` (row-major)".into())
                        })?;
                        if q.len() != dim * dim {
                            return Err(Error::Config(format!(
                                "q has {} entries, expected {}",
                                q.len(),
                                dim * dim
                            )));
                        }
                        let trace: f64 = (0..dim).map(|i| q[i * dim + i]).sum();
                        let m = self.m.unwrap_or(trace - 1.0);
                        Ok(SingularPolynomial::from_rows(dim, q, m)?.field())
                    }
                    other => Err(Error::Config(format!(
                        "unknown profile `{other}` (expected zero, regular, singular)"
                    ))),
                }
            }
        }
    }

    fn forbid_profile_extras(&self, name: &str) -> Result<()> {
        if self.direction.is_some() || self.q.is_some() || self.m.is_some() {
            return Err(Error::Config(format!(
                "the {name} profile takes no `direction`, `q`, or `m`"
            )));
        }
        Ok(())
    }
}

/// Strip-quadrature knobs; absent keys fall back to the library defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub h: Option<f64>,
    pub r_trunc_factor: Option<f64>,
    pub r_trunc_min: Option<f64>,
    pub band_ratio: Option<f64>,
    pub delta_min_factor: Option<f64>,
    pub t_floor_abs: Option<f64>,
    pub band_panels: Option<usize>,
}

impl QuadratureConfig {
    pub fn build(&self) -> StripQuadrature {
        let d = StripQuadrature::default();
        StripQuadrature {
            h: self.h.unwrap_or(d.h),
            r_trunc_factor: self.r_trunc_factor.unwrap_or(d.r_trunc_factor),
            r_trunc_min: self.r_trunc_min.unwrap_or(d.r_trunc_min),
            band_ratio: self.band_ratio.unwrap_or(d.band_ratio),
            delta_min_factor: self.delta_min_factor.unwrap_or(d.delta_min_factor),
            t_floor_abs: self.t_floor_abs.unwrap_or(d.t_floor_abs),
            band_panels: self.band_panels.unwrap_or(d.band_panels),
        }
    }
}

/// Echoes the effective quadrature into an output header.
pub fn echo_quadrature(doc: &mut CsvDoc, q: &StripQuadrature) {
    doc.param("h", q.h);
    doc.param("r_trunc_factor", q.r_trunc_factor);
    doc.param("r_trunc_min", q.r_trunc_min);
    doc.param("band_ratio", q.band_ratio);
    doc.param("delta_min_factor", q.delta_min_factor);
    doc.param("t_floor_abs", q.t_floor_abs);
    doc.param("band_panels", q.band_panels);
}

pub fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveFile {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub problem: SolveConfig,
    #[serde(default)]
    pub output: SolveOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveOutput {
    /// Positivity tolerance for free-boundary extraction; defaults to `h²`.
    pub u_tol: Option<f64>,
    /// Solution encoding: `json` (default) or `text`.
    pub format: Option<String>,
    /// Growth-curve radii; when present a growth diagnostic is emitted.
    pub growth_radii: Option<Vec<f64>>,
    pub growth_center: Option<Vec<f64>>,
    pub growth_t0: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeissFile {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub dimension: usize,
    pub field: FieldSpec,
    /// Heat residual `Δu - ∂_t u`; derived discretely when absent.
    #[serde(default)]
    pub heat: Option<FieldSpec>,
    pub radii: Vec<f64>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    pub nodes_per_interval: Option<usize>,
    pub floor_fraction: Option<f64>,
    pub discretization_coefficient: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyFile {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub dimension: usize,
    pub field: FieldSpec,
    /// Forcing value at the vertex; defaults to 1.
    pub f0: Option<f64>,
    /// Vertex location; defaults to the space-time origin.
    pub x0: Option<Vec<f64>>,
    pub t0: Option<f64>,
    pub radii: Vec<f64>,
    pub gap_tol: Option<f64>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularFile {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub dimension: usize,
    pub field: FieldSpec,
    /// Forcing entering the frequency budget; exact forcing when absent.
    #[serde(default)]
    pub forcing: Option<FieldSpec>,
    pub f0: Option<f64>,
    /// Frequency-scan ladder.
    pub radii: Vec<f64>,
    /// Radii at which to project onto the singular cone.
    #[serde(default)]
    pub projection_radii: Vec<f64>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    pub nodes_per_interval: Option<usize>,
    pub floor_fraction: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusFile {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub dimension: usize,
    pub field: FieldSpec,
    /// Reference value `f₀`; defaults to `f(0, 0)`.
    pub f0: Option<f64>,
    /// Deviation exponent; defaults to 2.
    pub p: Option<f64>,
    pub radii: Vec<f64>,
    /// `strip`, `cylinder`, or `both` (default).
    pub geometry: Option<String>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    pub cylinder_h: Option<f64>,
    pub cylinder_tau: Option<f64>,
    #[serde(default)]
    pub dini: Option<DiniConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiniConfig {
    /// Upper limit; defaults to the largest scan radius.
    pub r_max: Option<f64>,
    /// `single` (default) or `double`.
    pub depth: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhitneyFile {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub max_depth: Option<u32>,
    /// Extension / verification sample count.
    pub samples: Option<usize>,
    /// Bounding box with integral corners; defaults to the integral hull of
    /// the jet points, padded by one unit.
    #[serde(rename = "box")]
    pub bounds: Option<BoxConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
}

/// Config for commands that take no parameters beyond `command` and `seed`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BareFile {
    pub command: Option<String>,
    pub seed: Option<u64>,
}
