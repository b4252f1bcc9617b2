//! Run configuration, the staged certification pipeline and report emission.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{parse_category, Builtin, CategoryValidation, FusionCategory};
use crate::lattice::{builtin_graph, parse_graph, BuiltinGraph, MirrorGraph, Violation};
use crate::linalg::{PsdCertificate, DEFAULT_DIM_CAP};
use crate::lwmodel::{algebra_residuals, build_operators, build_spaces, spectrum_summary, AlgebraResiduals, LWModel, SpectrumSummary};
use crate::rp::{RpVerdict, Sample, DEFAULT_BETAS};
use crate::suite::{all_passed, run_sft_suite, Fault, SuiteConfig, SuiteResult};

pub const SCHEMA_VERSION: u32 = 1;
/// Eigenvalues reported by `spectrum`.
pub const SPECTRUM_COUNT: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Builtin name (`vec_zn(2)`, `fibonacci`, `ising`) or a path to a category file.
    pub category: String,
    /// Builtin name (`theta_sphere`, `torus_ladder(w)`) or a path to a graph file.
    pub graph: String,
    pub lambda_p: f64,
    pub lambda_v: f64,
    pub betas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub dim_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            category: "vec_zn(2)".into(),
            graph: "theta_sphere".into(),
            lambda_p: 1.0,
            lambda_v: 1.0,
            betas: DEFAULT_BETAS.to_vec(),
            trials: 50,
            seed: 0,
            tolerance: 1e-9,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }
}

fn config_error(msg: String) -> Error {
    Error::InvalidArgument(format!("config: {msg}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0);
            Error::Parse { line, msg: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative category/graph paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for field in [&mut cfg.category, &mut cfg.graph] {
            let p = PathBuf::from(field.as_str());
            if p.is_relative() && base.join(&p).is_file() {
                *field = base.join(p).to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, x: f64| {
            if x >= 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(config_error(format!("{name} must be a finite real ≥ 0, got {x}")))
            }
        };
        nonneg("lambda_p", self.lambda_p)?;
        nonneg("lambda_v", self.lambda_v)?;
        for &b in &self.betas {
            nonneg("beta", b)?;
        }
        if self.betas.is_empty() {
            return Err(config_error("betas must not be empty".into()));
        }
        if self.trials == 0 {
            return Err(config_error("trials must be positive".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(config_error(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if self.dim_cap == 0 {
            return Err(config_error("dim_cap must be positive".into()));
        }
        Ok(())
    }
}

/// A builtin name or a file path.
pub fn load_category(spec: &str) -> Result<FusionCategory> {
    match spec.parse::<Builtin>() {
        Ok(b) => FusionCategory::builtin(b),
        Err(_) if Path::new(spec).is_file() => {
            let text = std::fs::read_to_string(spec).map_err(|e| Error::InvalidArgument(format!("{spec}: {e}")))?;
            parse_category(&text)
        }
        Err(e) => Err(e),
    }
}

pub fn load_graph(spec: &str) -> Result<MirrorGraph> {
    match spec.parse::<BuiltinGraph>() {
        Ok(b) => builtin_graph(b),
        Err(_) if Path::new(spec).is_file() => {
            let text = std::fs::read_to_string(spec).map_err(|e| Error::InvalidArgument(format!("{spec}: {e}")))?;
            parse_graph(&text)
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    RpCertified,
    RpRefuted,
    Inconclusive,
    /// A validation stage failed before certification was attempted.
    StageFailed,
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub name: String,
    pub vertices: usize,
    pub edges: usize,
    pub plaquettes: usize,
    pub euler_characteristic: i64,
    pub violations: Vec<Violation>,
}

impl GraphSummary {
    fn of(g: &MirrorGraph) -> Self {
        Self {
            name: g.name.clone(),
            vertices: g.num_vertices(),
            edges: g.num_edges(),
            plaquettes: g.num_plaquettes(),
            euler_characteristic: g.euler_characteristic(),
            violations: g.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorSummary {
    pub dim_full: usize,
    pub dim_minus: usize,
    pub dim_plus: usize,
    pub residuals: AlgebraResiduals,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionSummary {
    pub crossing_plaquettes: Vec<usize>,
    pub reconstruction: f64,
    pub tensor_form: f64,
    pub theta_symmetry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaEntry {
    pub plaquette: usize,
    pub label: String,
    /// Minimum eigenvalue of `𝔉ₛ(ιH_{p,j}ι†)`.
    pub min_eigenvalue: f64,
    /// Minimum eigenvalue of `𝔉ₛ(−ιH_{p,j}ι†)`.
    pub literal_sign_min_eigenvalue: f64,
    pub reconstruction_residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub seed: u64,
    pub min_real_part: f64,
    pub max_abs_imag: f64,
    pub refuted: bool,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: &'static str,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    pub stages: Vec<Stage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<CategoryValidation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operators: Option<OperatorSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lemma: Vec<LemmaEntry>,
    /// Certificate for `𝔉ₛ(−H₀) ⪰ 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_zero: Option<PsdCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thm2_verdict: Option<RpVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<SuiteResult>,
}

impl Report {
    fn new(command: &'static str, config: Option<RunConfig>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            verdict: Verdict::Inconclusive,
            config,
            stages: Vec::new(),
            category: None,
            graph: None,
            operators: None,
            spectrum: None,
            decomposition: None,
            lemma: Vec::new(),
            h_zero: None,
            thm2_verdict: None,
            oracle: None,
            suites: Vec::new(),
        }
    }

    /// Records a stage; returns whether it passed.
    fn stage(&mut self, name: &'static str, passed: bool, detail: impl Into<String>) -> bool {
        self.stages.push(Stage { name, passed, detail: detail.into() });
        if !passed {
            self.verdict = Verdict::StageFailed;
        }
        passed
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidArgument(format!("report serialisation: {e}")))
    }

    /// Exit status: 0 iff the command's success verdict was reached.
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::RpCertified | Verdict::Pass => 0,
            _ => 1,
        }
    }
}

/// Attaches the stage name to an error from inside a stage.
fn in_stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Structural(format!("stage `{name}`: {e}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckSftOptions {
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for CheckSftOptions {
    fn default() -> Self {
        Self { dims: vec![2, 3, 4], trials: 100, seed: 0, fault: None }
    }
}

pub fn cmd_check_sft(opts: &CheckSftOptions) -> Result<Report> {
    let cfg = SuiteConfig {
        dims: opts.dims.clone(),
        y_dims: if opts.dims.iter().all(|&d| d == 1) { vec![1] } else { (2..=6).collect() },
        trials: opts.trials,
        seed: opts.seed,
        fault: opts.fault,
    };
    let mut r = Report::new("check-sft", None);
    r.suites = run_sft_suite(&cfg)?;
    r.verdict = if all_passed(&r.suites) { Verdict::Pass } else { Verdict::Fail };
    Ok(r)
}

/// pentagon gate → graph validation → operator assembly → algebra checks →
/// mirror decomposition → per-plaquette loop certificates → Thm RP2 →
/// oracle cross-check.
pub fn cmd_certify(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let tol = cfg.tolerance;
    let mut r = Report::new("certify", Some(cfg.clone()));

    let cat = in_stage("category", load_category(&cfg.category))?;
    let v = cat.validate();
    let ok = v.passes(tol);
    r.category = Some(v);
    if !r.stage("category", ok, format!("{} rank {}", cat.name(), cat.rank())) {
        return Ok(r);
    }

    let g = in_stage("graph", load_graph(&cfg.graph))?;
    let summary = GraphSummary::of(&g);
    let ok = summary.violations.is_empty();
    r.graph = Some(summary);
    if !r.stage("graph", ok, g.name.clone()) {
        return Ok(r);
    }

    let model = in_stage("operators", LWModel::build(cat, g, cfg.lambda_p, cfg.lambda_v, cfg.dim_cap))?;
    let res = algebra_residuals(&model.ops);
    let ok = res.passes(tol, tol, tol);
    r.operators = Some(OperatorSummary {
        dim_full: model.spaces.dim_full(),
        dim_minus: model.spaces.dim_minus(),
        dim_plus: model.spaces.dim_plus(),
        residuals: res,
    });
    r.spectrum = Some(spectrum_summary(&model.ops.hamiltonian, SPECTRUM_COUNT));
    if !r.stage("operators", ok, "projection, hermiticity and commutator residuals") {
        return Ok(r);
    }

    let d = in_stage("decomposition", model.mirror_decompose())?;
    let ok = d.reconstruction < tol && d.structure.tensor_form < tol && d.structure.theta_symmetry < tol;
    r.decomposition = Some(DecompositionSummary {
        crossing_plaquettes: d.crossing.clone(),
        reconstruction: d.reconstruction,
        tensor_form: d.structure.tensor_form,
        theta_symmetry: d.structure.theta_symmetry,
    });
    if !r.stage("decomposition", ok, "K = H₋ + H₀ + H₊ + λI restricts to H") {
        return Ok(r);
    }

    for &p in &d.crossing {
        for j in model.cat.labels() {
            let c = in_stage("lemma", model.lemma_check(p, j))?;
            let passed = c.certificate.is_positive() && c.reconstruction_residual < tol;
            r.lemma.push(LemmaEntry {
                plaquette: p,
                label: model.cat.label_name(j).to_string(),
                min_eigenvalue: c.certificate.min_eigenvalue,
                literal_sign_min_eigenvalue: c.literal_sign.min_eigenvalue,
                reconstruction_residual: c.reconstruction_residual,
                passed,
            });
        }
    }
    let ok = r.lemma.iter().all(|l| l.passed);
    if !r.stage("lemma", ok, "SFT of every lifted loop term ι H_{p,j} ι† is PSD") {
        return Ok(r);
    }

    let (thm2, _) = in_stage("thm2", model.certify_thm2(&d, cfg.trials, cfg.seed))?;
    r.h_zero = thm2.certificate.clone();
    r.thm2_verdict = Some(thm2.verdict);
    let certified = thm2.verdict == RpVerdict::RpCertified;
    r.stage("thm2", certified, "𝔉ₛ(−H₀) ⪰ 0 with the structural conditions on H₊, H₋");

    let o = in_stage("oracle", model.rp_oracle(&cfg.betas, cfg.trials, cfg.seed))?;
    let refuted = o.verdict == RpVerdict::RpRefuted;
    r.oracle = Some(OracleSummary {
        seed: cfg.seed,
        min_real_part: o.min_real_part(),
        max_abs_imag: o.max_abs_imag(),
        refuted,
        samples: o.sampled_expectations,
    });
    r.stage("oracle", !refuted, "sampled reflected expectations of ι e^{−βH} ι†");

    r.verdict = if refuted {
        Verdict::RpRefuted
    } else if r.stages.iter().all(|s| s.passed) {
        Verdict::RpCertified
    } else {
        Verdict::Inconclusive
    };
    Ok(r)
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let mut r = Report::new("spectrum", Some(cfg.clone()));
    let cat = in_stage("category", load_category(&cfg.category))?;
    let g = in_stage("graph", load_graph(&cfg.graph))?;
    let spaces = in_stage("operators", build_spaces(&cat, &g, cfg.dim_cap))?;
    let ops = in_stage("operators", build_operators(&cat, &g, &spaces, cfg.lambda_p, cfg.lambda_v))?;
    r.operators = Some(OperatorSummary {
        dim_full: spaces.dim_full(),
        dim_minus: spaces.dim_minus(),
        dim_plus: spaces.dim_plus(),
        residuals: algebra_residuals(&ops),
    });
    r.spectrum = Some(spectrum_summary(&ops.hamiltonian, SPECTRUM_COUNT));
    r.verdict = Verdict::Pass;
    Ok(r)
}

pub fn cmd_validate_category(spec: &str, tolerance: f64) -> Result<Report> {
    let mut r = Report::new("validate-category", None);
    let cat = in_stage("category", load_category(spec))?;
    let v = cat.validate();
    let ok = v.passes(tolerance);
    r.category = Some(v);
    r.stage("category", ok, format!("{} rank {}", cat.name(), cat.rank()));
    r.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    Ok(r)
}

/// Graph files are validated on load, so a violating file is reported
/// through the stage rather than as an error.
pub fn cmd_validate_graph(spec: &str) -> Result<Report> {
    let mut r = Report::new("validate-graph", None);
    match load_graph(spec) {
        Ok(g) => {
            let s = GraphSummary::of(&g);
            let ok = s.violations.is_empty();
            r.stage("graph", ok, g.name.clone());
            r.graph = Some(s);
            r.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        }
        Err(Error::Graph(msg)) => {
            r.stage("graph", false, msg);
            r.verdict = Verdict::Fail;
        }
        Err(e) => return Err(e),
    }
    Ok(r)
}
