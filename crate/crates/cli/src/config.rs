//! Run configuration: a sectioned TOML file with typed values.
//!
//! Parsing happens in two stages. The text is deserialized into the raw
//! section structs below, which reject unknown keys, and the raw values are
//! then checked as a whole so that every violated constraint is reported.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use gpheat::forward::{BoundaryControl, Geometry};
use gpheat::kernel::MemoryKernel;
use gpheat::laplace::{ContourSpec, FrequencyGrid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::io;

/// Bumped whenever a default below changes meaning or value.
pub const DEFAULTS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config {path}:\n  - {}", .problems.join("\n  - "))]
    Validation { path: String, problems: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Forward,
    Response,
    Invert,
    Uniqueness,
    NonSobolev,
    SpeedCheck,
    Validate,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Forward => "forward",
            Command::Response => "response",
            Command::Invert => "invert",
            Command::Uniqueness => "uniqueness",
            Command::NonSobolev => "nonsobolev",
            Command::SpeedCheck => "speedcheck",
            Command::Validate => "validate",
        };
        f.write_str(s)
    }
}

/// Default tolerances, one place for all of them.
///
/// | key | default | used by |
/// |-----|---------|---------|
/// | `k0` | 1e-12 | smallest `a^2` accepted by the admissibility check |
/// | `no_zeros` | 1e-12 | floor on `(1 + abs z) abs K(z)` on the frequency grid |
/// | `gate` | 1e-6 | relative error of `K` admitted from a truncated record |
/// | `kernel` | 1e-2 | kernel error below which reconstructed values are reliable |
/// | `newton` | 1e-12 | residual gate of the interval Newton solve |
/// | `speed` | 1e-6 | quiet-zone level relative to the sup of the control |
/// | `contour_rel` | 1e-6 | residue versus contour agreement in the modal demo |
/// | `rate_rel` | 5e-2 | fitted versus predicted modal growth rate |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub k0: f64,
    pub no_zeros: f64,
    pub gate: f64,
    pub kernel: f64,
    pub newton: f64,
    pub speed: f64,
    pub contour_rel: f64,
    pub rate_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            k0: 1e-12,
            no_zeros: 1e-12,
            gate: 1e-6,
            kernel: 1e-2,
            newton: 1e-12,
            speed: 1e-6,
            contour_rel: 1e-6,
            rate_rel: 5e-2,
        }
    }
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, f64); 8] {
        [
            ("k0", self.k0),
            ("no_zeros", self.no_zeros),
            ("gate", self.gate),
            ("kernel", self.kernel),
            ("newton", self.newton),
            ("speed", self.speed),
            ("contour_rel", self.contour_rel),
            ("rate_rel", self.rate_rel),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    /// constant | exponential | polynomial_half_square | dirac_delta |
    /// delayed_quadratic | sampled
    pub form: String,
    pub value: Option<f64>,
    pub decay: Option<f64>,
    pub onset: Option<f64>,
    pub scale: Option<f64>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    /// `inf` for the half-line.
    pub length: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self { length: f64::INFINITY }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSection {
    /// ramp | sampled
    pub form: String,
    pub file: Option<PathBuf>,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self { form: "ramp".into(), file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub horizon: f64,
    pub dt: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { horizon: 5.0, dt: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpaceSection {
    /// Number of cells; derived from `courant` when absent.
    pub nx: Option<usize>,
    pub x_max: Option<f64>,
    /// `a dt / dx` when `nx` is derived.
    pub courant: f64,
}

impl Default for SpaceSection {
    fn default() -> Self {
        Self { nx: None, x_max: None, courant: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencySection {
    /// real_geometric | points
    pub form: String,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `[re, im]` pairs for `form = "points"`.
    pub points: Vec<[f64; 2]>,
}

impl Default for FrequencySection {
    fn default() -> Self {
        Self { form: "real_geometric".into(), lo: 1.0, hi: 50.0, count: 20, points: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourSection {
    /// talbot | bromwich
    pub form: String,
    /// 48 for Talbot and 1000 for Bromwich when absent.
    pub nodes: Option<usize>,
    pub shift: f64,
    pub abscissa: f64,
    pub cutoff: f64,
}

impl Default for ContourSection {
    fn default() -> Self {
        Self { form: "talbot".into(), nodes: None, shift: 0.0, abscissa: 0.05, cutoff: 1000.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForwardSection {
    /// solver | contour
    pub method: String,
    /// Positions sampled by the contour method.
    pub positions: Vec<f64>,
    /// Keep every `stride`-th row and column of the solver field.
    pub stride: usize,
}

impl Default for ForwardSection {
    fn default() -> Self {
        Self { method: "solver".into(), positions: vec![0.5, 1.0, 2.0], stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResponseSection {
    /// contour | solver
    pub method: String,
}

impl Default for ResponseSection {
    fn default() -> Self {
        Self { method: "contour".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvertSection {
    /// finite | exact
    pub mode: String,
    /// Response record CSV; synthesized from `[kernel]` when absent.
    pub record: Option<PathBuf>,
    pub t_obs: Option<f64>,
    pub a: Option<f64>,
    /// Re-simulation step of the validation pass; 0 skips it.
    pub validation_dt: f64,
    /// Horizon of the reconstructed `k`.
    pub k_horizon: f64,
    pub k_dt: f64,
    /// Bromwich line of the finite-data reconstruction.
    pub line_abscissa: f64,
    pub line_cutoff: f64,
    pub line_nodes: usize,
}

impl Default for InvertSection {
    fn default() -> Self {
        Self {
            mode: "finite".into(),
            record: None,
            t_obs: None,
            a: None,
            validation_dt: 0.04,
            k_horizon: 5.0,
            k_dt: 0.05,
            line_abscissa: 0.05,
            line_cutoff: 1000.0,
            line_nodes: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UniquenessSection {
    /// The second kernel is `k + scale ((t - onset)^+)^2`.
    pub onset: f64,
    pub scale: f64,
}

impl Default for UniquenessSection {
    fn default() -> Self {
        Self { onset: 2.0, scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonSobolevSection {
    pub modes: Vec<u32>,
    /// `xi_n = n^{-power}`.
    pub power: f64,
    pub t_count: usize,
    pub n_max: Vec<u32>,
    pub t_eval: f64,
}

impl Default for NonSobolevSection {
    fn default() -> Self {
        Self { modes: vec![1, 4, 9, 16], power: 4.0, t_count: 401, n_max: vec![8, 16, 32], t_eval: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeedCheckSection {
    pub probes: Vec<f64>,
}

impl Default for SpeedCheckSection {
    fn default() -> Self {
        Self { probes: vec![0.5, 1.0, 2.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// The file as written, with defaults filled in for absent sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub kernel: Option<KernelSection>,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub space: SpaceSection,
    #[serde(default)]
    pub frequency: FrequencySection,
    #[serde(default)]
    pub contour: ContourSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub forward: ForwardSection,
    #[serde(default)]
    pub response: ResponseSection,
    #[serde(default)]
    pub invert: InvertSection,
    #[serde(default)]
    pub uniqueness: UniquenessSection,
    #[serde(default)]
    pub nonsobolev: NonSobolevSection,
    #[serde(default)]
    pub speedcheck: SpeedCheckSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMethod {
    Solver,
    Contour,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvertMode {
    Finite,
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub kernel: Option<MemoryKernel>,
    pub geometry: Geometry,
    pub control: BoundaryControl,
    pub dt: f64,
    pub horizon: f64,
    pub nx: Option<usize>,
    pub x_max: Option<f64>,
    pub courant: f64,
    pub grid: FrequencyGrid,
    pub contour: ContourSpec,
    pub tolerances: Tolerances,
    pub forward_method: ForwardMethod,
    pub positions: Vec<f64>,
    pub stride: usize,
    pub response_method: ForwardMethod,
    pub invert_mode: InvertMode,
    pub record: Option<PathBuf>,
    pub t_obs: Option<f64>,
    pub a_override: Option<f64>,
    pub validation_dt: Option<f64>,
    pub k_horizon: f64,
    pub k_dt: f64,
    pub line: ContourSpec,
    pub onset: f64,
    pub perturbation_scale: f64,
    pub modes: Vec<u32>,
    pub power: f64,
    pub t_count: usize,
    pub n_max: Vec<u32>,
    pub t_eval: f64,
    pub probes: Vec<f64>,
    pub output_dir: PathBuf,
    pub source: ConfigSource,
}

/// What the manifest needs to reproduce a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSource {
    pub path: PathBuf,
    pub sha256: String,
    pub resolved: RawConfig,
    /// Data files the config refers to.
    pub inputs: Vec<PathBuf>,
}

impl RunConfig {
    pub fn tolerance_table(&self) -> Vec<(&'static str, f64)> {
        self.tolerances.entries().to_vec()
    }

    pub fn kernel(&self) -> Option<&MemoryKernel> {
        self.kernel.as_ref()
    }
}

pub fn parse_config(path: &Path, command: Command, out_override: Option<&Path>) -> Result<RunConfig, ConfigError> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: display.clone(), source })?;
    let raw: RawConfig =
        toml::from_str(&text).map_err(|e| ConfigError::Parse { path: display.clone(), message: e.to_string() })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let sha256 = hex::encode(Sha256::digest(text.as_bytes()));
    validate(raw, command, &base, out_override)
        .map(|mut cfg| {
            cfg.source.path = path.to_path_buf();
            cfg.source.sha256 = sha256;
            cfg
        })
        .map_err(|problems| ConfigError::Validation { path: display, problems })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn positive(problems: &mut Vec<String>, key: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        problems.push(format!("{key} must be positive and finite, got {v}"));
    }
}

fn parse_kernel(section: &KernelSection, base: &Path, problems: &mut Vec<String>) -> Option<MemoryKernel> {
    let need = |problems: &mut Vec<String>, v: Option<f64>, key: &str| {
        if v.is_none() {
            problems.push(format!("kernel.{key} is required for form = \"{}\"", section.form));
        }
        v
    };
    let result = match section.form.as_str() {
        "constant" => need(problems, section.value, "value").map(MemoryKernel::constant),
        "exponential" => need(problems, section.decay, "decay").map(MemoryKernel::exponential),
        "polynomial_half_square" => Some(Ok(MemoryKernel::PolynomialHalfSquare)),
        "dirac_delta" => Some(Ok(MemoryKernel::DiracDelta)),
        "delayed_quadratic" => {
            let onset = need(problems, section.onset, "onset");
            let scale = need(problems, section.scale, "scale");
            onset.zip(scale).map(|(o, s)| MemoryKernel::delayed_quadratic(o, s))
        }
        "sampled" => match &section.file {
            None => {
                problems.push("kernel.file is required for form = \"sampled\"".into());
                None
            }
            Some(file) => {
                let path = resolve(base, file);
                if !path.is_file() {
                    problems.push(format!("kernel.file {} does not exist", path.display()));
                    None
                } else {
                    match io::read_two_column(&path, "t", "k") {
                        Ok(signal) => Some(Ok(MemoryKernel::Sampled(signal))),
                        Err(e) => {
                            problems.push(format!("kernel.file {}: {e}", path.display()));
                            None
                        }
                    }
                }
            }
        },
        other => {
            problems.push(format!(
                "kernel.form \"{other}\" is not one of constant, exponential, polynomial_half_square, dirac_delta, delayed_quadratic, sampled"
            ));
            None
        }
    };
    match result {
        Some(Ok(k)) => Some(k),
        Some(Err(e)) => {
            problems.push(format!("kernel: {e}"));
            None
        }
        None => None,
    }
}

fn parse_method(problems: &mut Vec<String>, key: &str, v: &str) -> ForwardMethod {
    match v {
        "solver" => ForwardMethod::Solver,
        "contour" => ForwardMethod::Contour,
        other => {
            problems.push(format!("{key} \"{other}\" is not one of solver, contour"));
            ForwardMethod::Solver
        }
    }
}

fn validate(raw: RawConfig, command: Command, base: &Path, out_override: Option<&Path>) -> Result<RunConfig, Vec<String>> {
    let mut problems = Vec::new();

    let kernel = match &raw.kernel {
        Some(section) => parse_kernel(section, base, &mut problems),
        None => None,
    };
    let needs_kernel = !(command == Command::NonSobolev || (command == Command::Invert && raw.invert.record.is_some()));
    if raw.kernel.is_none() && needs_kernel {
        problems.push(format!("[kernel] section is required for {command}"));
    }

    let geometry = if raw.geometry.length == f64::INFINITY {
        Geometry::SemiInfinite
    } else {
        match Geometry::interval(raw.geometry.length) {
            Ok(g) => g,
            Err(e) => {
                problems.push(format!("geometry.length: {e}"));
                Geometry::SemiInfinite
            }
        }
    };

    let control = match raw.control.form.as_str() {
        "ramp" => BoundaryControl::Ramp,
        "sampled" => match &raw.control.file {
            None => {
                problems.push("control.file is required for form = \"sampled\"".into());
                BoundaryControl::Ramp
            }
            Some(file) => {
                let path = resolve(base, file);
                if !path.is_file() {
                    problems.push(format!("control.file {} does not exist", path.display()));
                    BoundaryControl::Ramp
                } else {
                    match io::read_two_column(&path, "t", "f").map_err(|e| e.to_string()).and_then(|s| {
                        BoundaryControl::sampled(s).map_err(|e| e.to_string())
                    }) {
                        Ok(c) => c,
                        Err(e) => {
                            problems.push(format!("control.file {}: {e}", path.display()));
                            BoundaryControl::Ramp
                        }
                    }
                }
            }
        },
        other => {
            problems.push(format!("control.form \"{other}\" is not one of ramp, sampled"));
            BoundaryControl::Ramp
        }
    };

    positive(&mut problems, "time.dt", raw.time.dt);
    positive(&mut problems, "time.horizon", raw.time.horizon);
    if raw.time.dt > 0.0 && raw.time.horizon > 0.0 && raw.time.dt > raw.time.horizon {
        problems.push(format!("time.dt = {} exceeds time.horizon = {}", raw.time.dt, raw.time.horizon));
    }
    if let Some(nx) = raw.space.nx {
        if nx < 16 {
            problems.push(format!("space.nx must be at least 16, got {nx}"));
        }
    }
    if let Some(x) = raw.space.x_max {
        positive(&mut problems, "space.x_max", x);
    }
    if !(raw.space.courant > 0.0 && raw.space.courant <= 1.0) {
        problems.push(format!("space.courant must be in (0, 1], got {}", raw.space.courant));
    }

    let grid = match raw.frequency.form.as_str() {
        "real_geometric" => FrequencyGrid::real_geometric(raw.frequency.lo, raw.frequency.hi, raw.frequency.count)
            .map_err(|e| format!("frequency: {e}")),
        "points" => {
            let pts: Vec<Complex64> = raw.frequency.points.iter().map(|p| Complex64::new(p[0], p[1])).collect();
            let z_min = pts.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
            FrequencyGrid::new(pts, z_min).map_err(|e| format!("frequency.points: {e}"))
        }
        other => Err(format!("frequency.form \"{other}\" is not one of real_geometric, points")),
    };
    let grid = match grid {
        Ok(g) => Some(g),
        Err(e) => {
            problems.push(e);
            None
        }
    };

    let contour = match raw.contour.form.as_str() {
        "talbot" => ContourSpec::Talbot { nodes: raw.contour.nodes.unwrap_or(48), shift: raw.contour.shift },
        "bromwich" => ContourSpec::Bromwich {
            abscissa: raw.contour.abscissa,
            cutoff: raw.contour.cutoff,
            nodes: raw.contour.nodes.unwrap_or(1000),
        },
        other => {
            problems.push(format!("contour.form \"{other}\" is not one of talbot, bromwich"));
            ContourSpec::default()
        }
    };
    if let Err(e) = contour.validate() {
        problems.push(format!("contour: {e}"));
    }

    for (key, v) in raw.tolerances.entries() {
        positive(&mut problems, &format!("tolerances.{key}"), v);
    }

    let forward_method = parse_method(&mut problems, "forward.method", &raw.forward.method);
    if raw.forward.stride == 0 {
        problems.push("forward.stride must be at least 1".into());
    }
    if forward_method == ForwardMethod::Contour && raw.forward.positions.is_empty() {
        problems.push("forward.positions must be nonempty for method = \"contour\"".into());
    }
    for &x in &raw.forward.positions {
        if !(x >= 0.0 && x.is_finite()) {
            problems.push(format!("forward.positions entry {x} must be finite and >= 0"));
        }
    }
    let response_method = parse_method(&mut problems, "response.method", &raw.response.method);

    let invert_mode = match raw.invert.mode.as_str() {
        "finite" => InvertMode::Finite,
        "exact" => InvertMode::Exact,
        other => {
            problems.push(format!("invert.mode \"{other}\" is not one of finite, exact"));
            InvertMode::Finite
        }
    };
    let record = raw.invert.record.as_ref().map(|p| resolve(base, p));
    if let Some(p) = &record {
        if !p.is_file() {
            problems.push(format!("invert.record {} does not exist", p.display()));
        }
        if invert_mode == InvertMode::Exact {
            problems.push("invert.record cannot be used with mode = \"exact\"".into());
        }
    }
    if let Some(t) = raw.invert.t_obs {
        positive(&mut problems, "invert.t_obs", t);
    }
    if let Some(a) = raw.invert.a {
        positive(&mut problems, "invert.a", a);
    }
    if !(raw.invert.validation_dt >= 0.0 && raw.invert.validation_dt.is_finite()) {
        problems.push(format!("invert.validation_dt must be >= 0, got {}", raw.invert.validation_dt));
    }
    positive(&mut problems, "invert.k_horizon", raw.invert.k_horizon);
    positive(&mut problems, "invert.k_dt", raw.invert.k_dt);
    let line = ContourSpec::Bromwich {
        abscissa: raw.invert.line_abscissa,
        cutoff: raw.invert.line_cutoff,
        nodes: raw.invert.line_nodes,
    };
    if let Err(e) = line.validate() {
        problems.push(format!("invert line: {e}"));
    }

    positive(&mut problems, "uniqueness.onset", raw.uniqueness.onset);
    if !raw.uniqueness.scale.is_finite() {
        problems.push(format!("uniqueness.scale must be finite, got {}", raw.uniqueness.scale));
    }
    if command == Command::Uniqueness && raw.uniqueness.onset >= raw.time.horizon {
        problems.push(format!(
            "uniqueness.onset = {} must lie below time.horizon = {}",
            raw.uniqueness.onset, raw.time.horizon
        ));
    }

    if raw.nonsobolev.modes.is_empty() || raw.nonsobolev.modes.contains(&0) {
        problems.push("nonsobolev.modes must be nonempty positive integers".into());
    }
    if raw.nonsobolev.n_max.contains(&0) {
        problems.push("nonsobolev.n_max entries must be positive".into());
    }
    if !raw.nonsobolev.power.is_finite() {
        problems.push(format!("nonsobolev.power must be finite, got {}", raw.nonsobolev.power));
    }
    if raw.nonsobolev.t_count < 8 {
        problems.push(format!("nonsobolev.t_count must be at least 8, got {}", raw.nonsobolev.t_count));
    }
    positive(&mut problems, "nonsobolev.t_eval", raw.nonsobolev.t_eval);

    if raw.speedcheck.probes.is_empty() {
        problems.push("speedcheck.probes must be nonempty".into());
    }
    for &x in &raw.speedcheck.probes {
        positive(&mut problems, "speedcheck.probes entry", x);
    }

    if !problems.is_empty() {
        return Err(problems);
    }
    let inputs: Vec<PathBuf> = [raw.kernel.as_ref().and_then(|k| k.file.as_ref()), raw.control.file.as_ref()]
        .into_iter()
        .flatten()
        .map(|p| resolve(base, p))
        .chain(record.clone())
        .collect();
    let output_dir = match out_override {
        Some(p) => p.to_path_buf(),
        None => resolve(base, &raw.output.dir),
    };
    Ok(RunConfig {
        command,
        kernel,
        geometry,
        control,
        dt: raw.time.dt,
        horizon: raw.time.horizon,
        nx: raw.space.nx,
        x_max: raw.space.x_max,
        courant: raw.space.courant,
        grid: grid.expect("grid errors are reported above"),
        contour,
        tolerances: raw.tolerances,
        forward_method,
        positions: raw.forward.positions.clone(),
        stride: raw.forward.stride,
        response_method,
        invert_mode,
        record,
        t_obs: raw.invert.t_obs,
        a_override: raw.invert.a,
        validation_dt: (raw.invert.validation_dt > 0.0).then_some(raw.invert.validation_dt),
        k_horizon: raw.invert.k_horizon,
        k_dt: raw.invert.k_dt,
        line,
        onset: raw.uniqueness.onset,
        perturbation_scale: raw.uniqueness.scale,
        modes: raw.nonsobolev.modes.clone(),
        power: raw.nonsobolev.power,
        t_count: raw.nonsobolev.t_count,
        n_max: raw.nonsobolev.n_max.clone(),
        t_eval: raw.nonsobolev.t_eval,
        probes: raw.speedcheck.probes.clone(),
        output_dir,
        source: ConfigSource { path: PathBuf::new(), sha256: String::new(), resolved: raw, inputs },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("run.toml");
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn minimal_forward_config_gets_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "[kernel]\nform = \"constant\"\nvalue = 1.0\n[control]\nform = \"ramp\"\n[geometry]\nlength = inf\n[time]\nhorizon = 5.0\n",
        );
        let cfg = parse_config(&p, Command::Forward, None).unwrap();
        assert_eq!(cfg.kernel, Some(MemoryKernel::Constant(1.0)));
        assert_eq!(cfg.geometry, Geometry::SemiInfinite);
        assert_eq!(cfg.control, BoundaryControl::Ramp);
        assert_eq!(cfg.horizon, 5.0);
        assert_eq!(cfg.dt, TimeSection::default().dt);
        assert_eq!(cfg.tolerances, Tolerances::default());
        assert_eq!(cfg.contour, ContourSpec::default());
        assert_eq!(cfg.output_dir, dir.path().join("out"));
        assert_eq!(cfg.source.sha256.len(), 64);
    }

    #[test]
    fn missing_kernel_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "[kernel]\nform = \"sampled\"\nfile = \"nowhere.csv\"\n");
        match parse_config(&p, Command::Forward, None) {
            Err(ConfigError::Validation { problems, .. }) => {
                assert!(problems.iter().any(|m| m.contains("nowhere.csv")), "{problems:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn every_violation_is_listed() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "[kernel]\nform = \"constant\"\nvalue = 1.0\n[time]\ndt = -0.1\n[tolerances]\ngate = 0.0\n[space]\ncourant = 2.0\n",
        );
        match parse_config(&p, Command::Forward, None) {
            Err(ConfigError::Validation { problems, .. }) => {
                assert!(problems.iter().any(|m| m.starts_with("time.dt")), "{problems:?}");
                assert!(problems.iter().any(|m| m.starts_with("tolerances.gate")), "{problems:?}");
                assert!(problems.iter().any(|m| m.starts_with("space.courant")), "{problems:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "[kernel]\nform = \"constant\"\nvalue = 1.0\n[time]\nhorizn = 5.0\n");
        match parse_config(&p, Command::Forward, None) {
            Err(ConfigError::Parse { message, .. }) => assert!(message.contains("horizn"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn interval_and_talbot_shift() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "[kernel]\nform = \"exponential\"\ndecay = 1.0\n[geometry]\nlength = 2.0\n[contour]\nform = \"talbot\"\nnodes = 64\nshift = 1.0\n",
        );
        let cfg = parse_config(&p, Command::Response, None).unwrap();
        assert_eq!(cfg.geometry, Geometry::Interval(2.0));
        assert_eq!(cfg.contour, ContourSpec::Talbot { nodes: 64, shift: 1.0 });
    }
}
