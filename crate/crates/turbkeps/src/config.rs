//! Run configuration: a strict TOML document mapped onto [`RunConfig`].
//!
//! Every key has a documented default; unknown keys are errors. The
//! defaults give a drag-free admissible model on the unit torus with
//! resolution 16, regularization level 8 and 16 modes per family.
//!
//! `parse_config` composed with `serialize_config` is the identity on valid
//! run configurations; file-based initial data is resolved at parse time,
//! so serialization emits the equivalent inline form.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audit::SweepAxis;
use crate::domain::{DomainSpec, Grid, GridMode};
use crate::error::{ConfigError, ModelError, SolverError};
use crate::io::{read_field_csv, FieldContainer};
use crate::model::ModelParameters;
use crate::solver::{
    Forcing, InitialData, IntegratorConfig, PositivityPolicy, RunConfig, TkeInit, VelocityInit,
};

/// Parse result: the run description plus the optional sweep request and
/// any non-fatal warnings (currently only admissibility overrides).
#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub run: RunConfig<f64>,
    pub sweep: Option<SweepRequest>,
    pub warnings: Vec<String>,
}

/// Refinement study requested by a `[sweep]` section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRequest {
    pub axis: SweepAxis,
    pub levels: Vec<usize>,
}

/// Top-level TOML document. All sections are optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigDocument {
    pub model: ModelSection,
    pub domain: DomainSection,
    pub truncation: TruncationSection,
    pub integrator: IntegratorSection,
    pub output: OutputSection,
    pub initial: InitialSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub dimension: u32,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub zeta: f64,
    pub theta: f64,
    pub viscosity_scale: f64,
    pub diffusion_scale: f64,
    pub production_scale: f64,
    pub dissipation_scale: f64,
    pub darcy: f64,
    pub forchheimer: f64,
    pub tke_floor: f64,
    pub t_final: f64,
    pub forcing: ForcingSpec,
    pub override_admissibility: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            dimension: 2,
            alpha: 2.0,
            beta: 1.0,
            gamma: 0.3,
            eta: 0.0,
            zeta: 0.0,
            theta: 0.0,
            viscosity_scale: 1.0,
            diffusion_scale: 1.0,
            production_scale: 1.0,
            dissipation_scale: 1.0,
            darcy: 0.0,
            forchheimer: 0.0,
            tke_floor: 1e-8,
            t_final: 1.0,
            forcing: ForcingSpec::Named("zero".into()),
            override_admissibility: false,
        }
    }
}

/// Body force: the string `"zero"`, `{ constant = [gx, gy] }`, or
/// `{ mode = i, amplitude = a }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ForcingSpec {
    Named(String),
    Constant { constant: [f64; 2] },
    SingleMode { mode: usize, amplitude: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSection {
    /// `"torus"` or `"box"`.
    pub mode: String,
    pub extent: [f64; 2],
    pub resolution: u32,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            mode: "torus".into(),
            extent: [1.0, 1.0],
            resolution: 16,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationSection {
    /// Regularization level: truncation height, cutoff level and smoothing
    /// sharpness move together.
    pub level: u32,
    pub velocity_modes: usize,
    pub scalar_modes: usize,
}

impl Default for TruncationSection {
    fn default() -> Self {
        TruncationSection {
            level: 8,
            velocity_modes: 16,
            scalar_modes: 16,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_dt: f64,
    /// 0 asks the integrator to choose the first step itself.
    pub dt_init: f64,
    /// `"monitor"` or `"floor"`.
    pub positivity: String,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection {
            rel_tol: 1e-7,
            abs_tol: 1e-10,
            max_dt: 0.05,
            dt_init: 0.0,
            positivity: "monitor".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Explicit sample times, merged with the generated ones.
    pub sample_times: Vec<f64>,
    /// Uniform samples across `[0, t_final]` including both endpoints;
    /// 0 disables.
    pub sample_count: u32,
    /// Adds `t_final / 2^m` for `m = 1..=12`, the points the small-time
    /// attainment audit reads.
    pub geometric_samples: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            sample_times: Vec::new(),
            sample_count: 9,
            geometric_samples: true,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub velocity: VelocitySpec,
    pub tke: TkeSpec,
}

/// Initial mean flow: `"zero"`, mode coefficients, nodal values, a
/// two-component field container, or a pair of `x,y,value` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VelocitySpec {
    Named(String),
    Coefficients { coefficients: Vec<f64> },
    Nodal { nodal_x: Vec<f64>, nodal_y: Vec<f64> },
    File { file: String },
    Csv { csv_x: String, csv_y: String },
}

impl Default for VelocitySpec {
    fn default() -> Self {
        VelocitySpec::Named("zero".into())
    }
}

/// Initial turbulent energy: a constant, mode coefficients, nodal values,
/// or a one-component field container / `x,y,value` table (by extension).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TkeSpec {
    Constant(f64),
    Coefficients { coefficients: Vec<f64> },
    Nodal { nodal: Vec<f64> },
    File { file: String },
}

impl Default for TkeSpec {
    fn default() -> Self {
        TkeSpec::Constant(1.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `"regularization"`, `"velocity-modes"` or `"scalar-modes"`.
    pub axis: String,
    pub levels: Vec<usize>,
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn from_solver(e: SolverError) -> ConfigError {
    match e {
        SolverError::Model(m) => ConfigError::Model(m),
        SolverError::Setup(s) => ConfigError::Setup(s),
        SolverError::Config(msg) => ConfigError::Invalid(msg),
        other => ConfigError::Invalid(other.to_string()),
    }
}

fn io_invalid(e: crate::error::IoError) -> ConfigError {
    ConfigError::Invalid(e.to_string())
}

/// Resolves a document into a validated run description.
///
/// `base_dir` anchors relative paths of file-based initial data.
pub fn document_to_config(
    doc: &ConfigDocument,
    base_dir: &Path,
) -> Result<ParsedConfig, ConfigError> {
    let m = &doc.model;
    let params = ModelParameters {
        d: m.dimension,
        alpha: m.alpha,
        beta: m.beta,
        gamma: m.gamma,
        eta: m.eta,
        zeta: m.zeta,
        theta: m.theta,
        c_t: m.viscosity_scale,
        c_d: m.diffusion_scale,
        c_p: m.production_scale,
        c_eps: m.dissipation_scale,
        c_da: m.darcy,
        c_fo: m.forchheimer,
        c0: m.tke_floor,
        t_final: m.t_final,
    };

    let mode = match doc.domain.mode.as_str() {
        "torus" => GridMode::PeriodicTorus2D,
        "box" => GridMode::DirichletBox2D,
        other => return Err(invalid(format!("domain.mode must be \"torus\" or \"box\", got \"{other}\""))),
    };
    let spec = DomainSpec {
        mode,
        extent: doc.domain.extent,
        grid_n: doc.domain.resolution,
    };

    let forcing = match &m.forcing {
        ForcingSpec::Named(name) if name == "zero" => Forcing::Zero,
        ForcingSpec::Named(other) => {
            return Err(invalid(format!(
                "model.forcing must be \"zero\", {{ constant = [gx, gy] }} or {{ mode = i, amplitude = a }}, got \"{other}\""
            )));
        }
        ForcingSpec::Constant { constant } => Forcing::Constant(*constant),
        ForcingSpec::SingleMode { mode, amplitude } => Forcing::SingleMode {
            index: *mode,
            amplitude: *amplitude,
        },
    };

    let positivity = match doc.integrator.positivity.as_str() {
        "monitor" => PositivityPolicy::Monitor,
        "floor" => PositivityPolicy::Floor,
        other => {
            return Err(invalid(format!(
                "integrator.positivity must be \"monitor\" or \"floor\", got \"{other}\""
            )));
        }
    };

    let velocity = resolve_velocity(&doc.initial.velocity, &spec, base_dir)?;
    let tke = resolve_tke(&doc.initial.tke, &spec, base_dir)?;

    let mut sample_times = doc.output.sample_times.clone();
    let t_final = params.t_final;
    if doc.output.sample_count > 0 {
        let count = doc.output.sample_count as usize;
        if count == 1 {
            sample_times.push(t_final);
        } else {
            for i in 0..count {
                sample_times.push(t_final * i as f64 / (count - 1) as f64);
            }
        }
    }
    if doc.output.geometric_samples {
        // matches the lookup arithmetic of the attainment audit bit for bit
        for m in 1..=12u32 {
            sample_times.push(t_final / f64::powi(2.0, m as i32));
        }
    }
    sample_times.sort_by(|a, b| a.partial_cmp(b).expect("finite sample times"));
    sample_times.dedup();

    let run = RunConfig {
        params,
        spec,
        level: doc.truncation.level,
        n_velocity: doc.truncation.velocity_modes,
        n_scalar: doc.truncation.scalar_modes,
        forcing,
        integrator: IntegratorConfig {
            rel_tol: doc.integrator.rel_tol,
            abs_tol: doc.integrator.abs_tol,
            max_dt: doc.integrator.max_dt,
            dt_init: doc.integrator.dt_init,
        },
        initial: InitialData { velocity, tke },
        sample_times,
        positivity,
        override_admissibility: m.override_admissibility,
    };
    run.validate().map_err(from_solver)?;

    let mut warnings = Vec::new();
    let admissibility = run.admissibility();
    if !admissibility.admissible {
        if run.override_admissibility {
            warnings.push(format!(
                "admissibility overridden: {}",
                admissibility.violations.join("; ")
            ));
        } else {
            let first = &admissibility.violations[0];
            let condition = first.split(' ').next().unwrap_or("admissibility").to_string();
            return Err(ConfigError::Model(ModelError::Inadmissible {
                condition,
                detail: admissibility.violations.join("; "),
            }));
        }
    }

    let sweep = match &doc.sweep {
        None => None,
        Some(s) => {
            let axis = match s.axis.as_str() {
                "regularization" => SweepAxis::Regularization,
                "velocity-modes" => SweepAxis::VelocityModes,
                "scalar-modes" => SweepAxis::ScalarModes,
                other => {
                    return Err(invalid(format!(
                        "sweep.axis must be \"regularization\", \"velocity-modes\" or \"scalar-modes\", got \"{other}\""
                    )));
                }
            };
            Some(SweepRequest {
                axis,
                levels: s.levels.clone(),
            })
        }
    };

    Ok(ParsedConfig { run, sweep, warnings })
}

fn resolve_velocity(
    spec_in: &VelocitySpec,
    spec: &DomainSpec<f64>,
    base_dir: &Path,
) -> Result<VelocityInit<f64>, ConfigError> {
    Ok(match spec_in {
        VelocitySpec::Named(name) if name == "zero" => VelocityInit::Zero,
        VelocitySpec::Named(other) => {
            return Err(invalid(format!(
                "initial.velocity must be \"zero\" or a table, got \"{other}\""
            )));
        }
        VelocitySpec::Coefficients { coefficients } => {
            VelocityInit::Coefficients(coefficients.clone())
        }
        VelocitySpec::Nodal { nodal_x, nodal_y } => VelocityInit::Nodal {
            x: nodal_x.clone(),
            y: nodal_y.clone(),
        },
        VelocitySpec::File { file } => {
            let path = anchored(base_dir, file);
            let c = FieldContainer::read(&path).map_err(io_invalid)?;
            if c.components != 2 || c.records.len() != 1 {
                return Err(invalid(format!(
                    "{}: initial velocity needs exactly one record with 2 components, found {} record(s) with {}",
                    path.display(),
                    c.records.len(),
                    c.components
                )));
            }
            let rec = &c.records[0];
            VelocityInit::Nodal {
                x: rec.fields[0].clone(),
                y: rec.fields[1].clone(),
            }
        }
        VelocitySpec::Csv { csv_x, csv_y } => {
            let grid = Grid::build(spec).map_err(ConfigError::Setup)?;
            let x = read_field_csv(&anchored(base_dir, csv_x), &grid).map_err(io_invalid)?;
            let y = read_field_csv(&anchored(base_dir, csv_y), &grid).map_err(io_invalid)?;
            VelocityInit::Nodal { x, y }
        }
    })
}

fn resolve_tke(
    spec_in: &TkeSpec,
    spec: &DomainSpec<f64>,
    base_dir: &Path,
) -> Result<TkeInit<f64>, ConfigError> {
    Ok(match spec_in {
        TkeSpec::Constant(c) => TkeInit::Constant(*c),
        TkeSpec::Coefficients { coefficients } => TkeInit::Coefficients(coefficients.clone()),
        TkeSpec::Nodal { nodal } => TkeInit::Nodal(nodal.clone()),
        TkeSpec::File { file } => {
            let path = anchored(base_dir, file);
            if path.extension().is_some_and(|e| e == "csv") {
                let grid = Grid::build(spec).map_err(ConfigError::Setup)?;
                TkeInit::Nodal(read_field_csv(&path, &grid).map_err(io_invalid)?)
            } else {
                let c = FieldContainer::read(&path).map_err(io_invalid)?;
                if c.components != 1 || c.records.len() != 1 {
                    return Err(invalid(format!(
                        "{}: initial turbulent energy needs exactly one record with 1 component, found {} record(s) with {}",
                        path.display(),
                        c.records.len(),
                        c.components
                    )));
                }
                TkeInit::Nodal(c.records[0].fields[0].clone())
            }
        }
    })
}

fn anchored(base_dir: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

/// Parses TOML text into a validated run description.
///
/// `base_dir` anchors relative paths of file-based initial data.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<ParsedConfig, ConfigError> {
    let doc: ConfigDocument = toml::from_str(text).map_err(|e| ConfigError::Syntax {
        path: "config".into(),
        detail: format!(" {e}"),
    })?;
    document_to_config(&doc, base_dir)
}

/// Reads and parses a configuration file into its document form, without
/// resolving or validating it.
pub fn load_document(path: &Path) -> Result<ConfigDocument, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Syntax {
        path: path.display().to_string(),
        detail: format!(" {e}"),
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::Syntax {
        path: path.display().to_string(),
        detail: format!("\n{e}"),
    })
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<ParsedConfig, ConfigError> {
    let doc = load_document(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    document_to_config(&doc, base)
}

/// Rebuilds a document from a run description. File-based initial data
/// comes back in the equivalent inline nodal form.
pub fn config_to_document(run: &RunConfig<f64>) -> ConfigDocument {
    let p = &run.params;
    ConfigDocument {
        model: ModelSection {
            dimension: p.d,
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
            eta: p.eta,
            zeta: p.zeta,
            theta: p.theta,
            viscosity_scale: p.c_t,
            diffusion_scale: p.c_d,
            production_scale: p.c_p,
            dissipation_scale: p.c_eps,
            darcy: p.c_da,
            forchheimer: p.c_fo,
            tke_floor: p.c0,
            t_final: p.t_final,
            forcing: match &run.forcing {
                Forcing::Zero => ForcingSpec::Named("zero".into()),
                Forcing::Constant(g) => ForcingSpec::Constant { constant: *g },
                Forcing::SingleMode { index, amplitude } => ForcingSpec::SingleMode {
                    mode: *index,
                    amplitude: *amplitude,
                },
            },
            override_admissibility: run.override_admissibility,
        },
        domain: DomainSection {
            mode: match run.spec.mode {
                GridMode::PeriodicTorus2D => "torus".into(),
                GridMode::DirichletBox2D => "box".into(),
            },
            extent: run.spec.extent,
            resolution: run.spec.grid_n,
        },
        truncation: TruncationSection {
            level: run.level,
            velocity_modes: run.n_velocity,
            scalar_modes: run.n_scalar,
        },
        integrator: IntegratorSection {
            rel_tol: run.integrator.rel_tol,
            abs_tol: run.integrator.abs_tol,
            max_dt: run.integrator.max_dt,
            dt_init: run.integrator.dt_init,
            positivity: match run.positivity {
                PositivityPolicy::Monitor => "monitor".into(),
                PositivityPolicy::Floor => "floor".into(),
            },
        },
        output: OutputSection {
            sample_times: run.sample_times.clone(),
            sample_count: 0,
            geometric_samples: false,
        },
        initial: InitialSection {
            velocity: match &run.initial.velocity {
                VelocityInit::Zero => VelocitySpec::Named("zero".into()),
                VelocityInit::Coefficients(c) => VelocitySpec::Coefficients {
                    coefficients: c.clone(),
                },
                VelocityInit::Nodal { x, y } => VelocitySpec::Nodal {
                    nodal_x: x.clone(),
                    nodal_y: y.clone(),
                },
            },
            tke: match &run.initial.tke {
                TkeInit::Constant(c) => TkeSpec::Constant(*c),
                TkeInit::Coefficients(c) => TkeSpec::Coefficients {
                    coefficients: c.clone(),
                },
                TkeInit::Nodal(v) => TkeSpec::Nodal { nodal: v.clone() },
            },
        },
        sweep: None,
    }
}

/// Serializes a run description to TOML text that parses back to it.
pub fn serialize_config(run: &RunConfig<f64>) -> String {
    toml::to_string(&config_to_document(run)).expect("document is always serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fmt::Write as _;

    fn parse(text: &str) -> Result<ParsedConfig, ConfigError> {
        parse_config(text, Path::new("."))
    }

    #[test]
    fn empty_text_yields_the_documented_defaults() {
        let parsed = parse("").unwrap();
        let run = &parsed.run;
        assert_eq!(run.params.d, 2);
        assert_eq!(run.spec.mode, GridMode::PeriodicTorus2D);
        assert_eq!(run.spec.grid_n, 16);
        assert_eq!(run.level, 8);
        assert_eq!(run.n_velocity, 16);
        assert_eq!(run.n_scalar, 16);
        assert_eq!(run.initial.velocity, VelocityInit::Zero);
        assert_eq!(run.initial.tke, TkeInit::Constant(1.0));
        assert_eq!(run.positivity, PositivityPolicy::Monitor);
        assert!(parsed.sweep.is_none());
        assert!(parsed.warnings.is_empty());
        // uniform 9 plus the geometric tail, 0 and t/8 shared
        assert_eq!(run.sample_times.len(), 9 + 12 - 3);
        assert_eq!(run.sample_times.first(), Some(&0.0));
        assert_eq!(run.sample_times.last(), Some(&1.0));
        assert!(run.sample_times.contains(&(1.0 / 4096.0)));
    }

    #[test]
    fn unknown_keys_and_syntax_errors_are_rejected() {
        let err = parse("[model]\nalpa = 2.0\n").unwrap_err();
        assert!(err.to_string().contains("alpa"), "{err}");

        let err = parse("[model\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ConfigError::Syntax { .. }));
        assert!(msg.contains("line 1"), "{msg}");

        let err = parse("[solver]\nx = 1\n").unwrap_err();
        assert!(err.to_string().contains("solver"), "{err}");
    }

    #[test]
    fn inadmissible_growth_is_rejected_naming_the_condition() {
        let text = "[model]\ndimension = 3\neta = 2.0\nzeta = 0.0\n";
        let err = parse(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Cond1"), "{msg}");
        assert!(msg.contains("zeta + 1 + 2/d = 1.666666666666666"), "{msg}");

        let with_override = format!("{text}override_admissibility = true\n");
        let parsed = parse(&with_override).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        assert!(parsed.warnings[0].contains("Cond1"));
        assert!(parsed.run.override_admissibility);
    }

    #[test]
    fn forcing_and_positivity_tables_map_onto_the_run() {
        let parsed = parse(
            "[model]\nforcing = { mode = 2, amplitude = 0.5 }\n\
             [integrator]\npositivity = \"floor\"\n",
        )
        .unwrap();
        assert_eq!(
            parsed.run.forcing,
            Forcing::SingleMode {
                index: 2,
                amplitude: 0.5
            }
        );
        assert_eq!(parsed.run.positivity, PositivityPolicy::Floor);

        let parsed = parse("[model]\nforcing = { constant = [0.25, -1.0] }\n").unwrap();
        assert_eq!(parsed.run.forcing, Forcing::Constant([0.25, -1.0]));

        let err = parse("[model]\nforcing = \"sinusoid\"\n").unwrap_err();
        assert!(err.to_string().contains("sinusoid"));
    }

    #[test]
    fn sweep_section_is_carried_through() {
        let parsed = parse("[sweep]\naxis = \"velocity-modes\"\nlevels = [8, 16, 32]\n").unwrap();
        assert_eq!(
            parsed.sweep,
            Some(SweepRequest {
                axis: SweepAxis::VelocityModes,
                levels: vec![8, 16, 32]
            })
        );

        let err = parse("[sweep]\naxis = \"grid\"\nlevels = [1, 2, 3]\n").unwrap_err();
        assert!(err.to_string().contains("grid"));
    }

    #[test]
    fn explicit_sampling_replaces_the_generated_grids() {
        let parsed = parse(
            "[output]\nsample_times = [0.5]\nsample_count = 0\ngeometric_samples = false\n",
        )
        .unwrap();
        assert_eq!(parsed.run.sample_times, vec![0.5]);
    }

    #[test]
    fn bad_sample_times_are_rejected() {
        let err = parse(
            "[output]\nsample_times = [2.0]\nsample_count = 0\ngeometric_samples = false\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("sample time"), "{err}");
    }

    #[test]
    fn parse_after_serialize_is_the_identity() {
        let mut parsed = parse(
            "[model]\nalpha = 2.5\nbeta = 0.7\ngamma = 0.1\nzeta = 0.4\ntheta = 0.2\n\
             forchheimer = 0.125\nt_final = 0.3\n\
             forcing = { mode = 1, amplitude = 0.1 }\n\
             [domain]\nresolution = 8\n\
             [truncation]\nlevel = 3\nvelocity_modes = 4\nscalar_modes = 5\n\
             [integrator]\nrel_tol = 1e-9\npositivity = \"floor\"\n\
             [output]\nsample_times = [0.1, 0.3]\nsample_count = 0\ngeometric_samples = false\n",
        )
        .unwrap();
        // exercise every initial-data shape that serialization can emit
        parsed.run.initial.velocity = VelocityInit::Coefficients(vec![0.1, -0.2, 0.3]);
        parsed.run.initial.tke = TkeInit::Nodal(vec![0.7; 64]);
        let text = serialize_config(&parsed.run);
        let back = parse(&text).unwrap();
        assert_eq!(back.run, parsed.run);

        parsed.run.initial.velocity = VelocityInit::Nodal {
            x: vec![0.015625; 64],
            y: vec![-3.0; 64],
        };
        parsed.run.initial.tke = TkeInit::Coefficients(vec![1.0, 0.1]);
        let back = parse(&serialize_config(&parsed.run)).unwrap();
        assert_eq!(back.run, parsed.run);
    }

    #[test]
    fn file_based_initial_data_resolves_relative_to_the_config() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("data");
        std::fs::create_dir(&sub).unwrap();

        let spec = DomainSpec {
            mode: GridMode::PeriodicTorus2D,
            extent: [1.0, 1.0],
            grid_n: 8,
        };
        let grid = Grid::<f64>::build(&spec).unwrap();
        let nodes = grid.node_count();

        let k0: Vec<f64> = (0..nodes).map(|q| 0.5 + 0.01 * q as f64).collect();
        crate::io::FieldContainer {
            dim: 2,
            grid_n: 8,
            extent: vec![1.0, 1.0],
            components: 1,
            records: vec![crate::io::FieldRecord {
                t: 0.0,
                fields: vec![k0.clone()],
            }],
        }
        .write(&sub.join("k0.tkef"))
        .unwrap();

        let mut csv = String::from("x,y,value\n");
        for q in 0..nodes {
            let [x, y] = grid.coord(q);
            let _ = writeln!(csv, "{x:e},{y:e},{:e}", 2.0 + (q % 7) as f64);
        }
        std::fs::write(sub.join("ux.csv"), &csv).unwrap();
        std::fs::write(sub.join("uy.csv"), &csv).unwrap();

        let cfg_path = dir.path().join("run.toml");
        std::fs::write(
            &cfg_path,
            "[domain]\nresolution = 8\n[initial]\n\
             velocity = { csv_x = \"data/ux.csv\", csv_y = \"data/uy.csv\" }\n\
             tke = { file = \"data/k0.tkef\" }\n",
        )
        .unwrap();
        let parsed = load_config(&cfg_path).unwrap();
        match &parsed.run.initial.tke {
            TkeInit::Nodal(v) => assert_eq!(*v, k0),
            other => panic!("expected nodal data, got {other:?}"),
        }
        match &parsed.run.initial.velocity {
            VelocityInit::Nodal { x, .. } => assert_eq!(x[3], 2.0 + 3.0),
            other => panic!("expected nodal data, got {other:?}"),
        }

        // a velocity container must carry exactly two components
        std::fs::write(
            &cfg_path,
            "[domain]\nresolution = 8\n[initial]\nvelocity = { file = \"data/k0.tkef\" }\n",
        )
        .unwrap();
        let err = load_config(&cfg_path).unwrap_err();
        assert!(err.to_string().contains("2 components"), "{err}");
    }
}
