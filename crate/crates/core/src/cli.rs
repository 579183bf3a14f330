//! Command-line front end. Reports are pretty-printed JSON documents with
//! complex numbers as [re, im]; EP contours are whitespace-separated records.

use crate::error::Error;
use crate::exceptional::{self, ParamBox, ParamFamily, SingularPoint};
use crate::fermions::{self, ClassifyMode, FarImpurity, LocalityReport};
use crate::lattice::{LatticeSpec, ModelPreset};
use crate::linalg::{self, c, CMat, C64};
use crate::metric::{self, Positivity};
use crate::spectra::{self, InclusionRegion, PtClass};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::io::Write as _;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nhspec", version, about = "Spectral analysis of finite non-Hermitian lattice models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues, multiplicities and PT class.
    Spectrum(Common),
    /// Exceptional-point contour of a two-parameter family.
    EpContour(Common),
    /// Intertwining operator and positivity verdict.
    Metric(Common),
    /// Subsystems carrying extensively local observables.
    Locality(Common),
    /// Gershgorin and Brauer-Cassini inclusion regions.
    Inclusion(Common),
    /// Puiseux exponent of the eigenvalue splitting at a point.
    Puiseux(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Model document (JSON).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Named model: qubit, uniform-chain, three-site, nn-defect, ssh-edge, ring, far-impurity.
    #[arg(long)]
    pub preset: Option<String>,
    /// Preset and analysis parameters as key=value, values in JSON syntax.
    #[arg(long, num_args = 1.., value_name = "K=V")]
    pub params: Vec<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Compute(_) => EXIT_COMPUTE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Compute(m) => write!(f, "computation error: {m}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

/// Precondition violations are input errors; everything else is computational.
fn compute(e: Error) -> CliError {
    match e {
        Error::ParamViolation(_)
        | Error::DimensionMismatch(_)
        | Error::IndexOutOfRange(_)
        | Error::SizeLimit(_)
        | Error::BoundaryViolation
        | Error::PeriodicityViolation
        | Error::UnsupportedIndex(_) => CliError::Input(e.to_string()),
        _ => CliError::Compute(e.to_string()),
    }
}

/// Analysis parameters shared by the model document and `--params`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analysis {
    pub tol: Option<f64>,
    pub resolution: Option<usize>,
    pub seed: Option<u64>,
    /// Parameter box [x0, x1, y0, y1].
    #[serde(rename = "box")]
    pub bbox: Option<[f64; 4]>,
    /// Parameter point for `puiseux`.
    pub at: Option<[f64; 2]>,
    /// Direction for `puiseux`.
    pub dir: Option<[f64; 2]>,
    /// Metric parameter Z for the nearest-neighbour metric.
    pub z: Option<C64>,
    /// Eigenvalue weights of the general metric family.
    pub weights: Option<Vec<f64>>,
    pub mode: Option<ClassifyMode>,
    /// One-based subsystems for `locality`.
    pub subsystems: Option<Vec<Vec<usize>>>,
}

const ANALYSIS_KEYS: [&str; 10] = ["tol", "resolution", "seed", "box", "at", "dir", "z", "weights", "mode", "subsystems"];

/// The model document: a preset with parameters or an explicit matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub matrix: Option<LatticeSpec>,
    #[serde(default)]
    pub analysis: Analysis,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Preset(String, Map<String, Value>),
    Explicit(LatticeSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub source: Source,
    pub analysis: Analysis,
}

fn canonical(name: &str) -> String {
    match name.replace('-', "_").as_str() {
        "nn_defect" | "nearest_neighbour" => "nearest_neighbour_defect".into(),
        "ssh_edge" | "ssh" => "ssh_edge_defect".into(),
        "uniform" => "uniform_chain".into(),
        "3x3" => "three_site".into(),
        other => other.into(),
    }
}

fn parse_params(raw: &[String]) -> CliResult<Map<String, Value>> {
    let mut map = Map::new();
    for item in raw {
        let (k, v) = item.split_once('=').ok_or_else(|| input(format!("parameter {item:?} is not key=value")))?;
        let value: Value = serde_json::from_str(v).map_err(|e| input(format!("parameter {k}: {e}")))?;
        map.insert(k.trim().to_string(), value);
    }
    Ok(map)
}

fn merge_analysis(base: &mut Analysis, map: Map<String, Value>) -> CliResult<()> {
    let extra: Analysis = serde_json::from_value(Value::Object(map)).map_err(input)?;
    macro_rules! take {
        ($($f:ident),*) => { $( if extra.$f.is_some() { base.$f = extra.$f; } )* };
    }
    take!(tol, resolution, seed, bbox, at, dir, z, weights, mode, subsystems);
    Ok(())
}

/// Combines the model document, preset and flags. Flags override `--params`,
/// which override the document.
pub fn build_request(common: &Common) -> CliResult<Request> {
    let mut params = parse_params(&common.params)?;
    let mut analysis_map = Map::new();
    for key in ANALYSIS_KEYS {
        if let Some(v) = params.remove(key) {
            analysis_map.insert(key.to_string(), v);
        }
    }
    let (source, mut analysis) = match (&common.model, &common.preset) {
        (Some(_), Some(_)) => return Err(input("--model and --preset are exclusive")),
        (None, None) => return Err(input("one of --model or --preset is required")),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
            let file: ModelFile = serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
            let source = match (file.preset, file.matrix) {
                (Some(name), None) => {
                    let mut p = file.params;
                    p.extend(params);
                    Source::Preset(canonical(&name), p)
                }
                (None, Some(spec)) => {
                    if !file.params.is_empty() || !params.is_empty() {
                        return Err(input("an explicit matrix takes no model parameters"));
                    }
                    Source::Explicit(spec)
                }
                _ => return Err(input("model document needs exactly one of \"preset\" or \"matrix\"")),
            };
            (source, file.analysis)
        }
        (None, Some(name)) => (Source::Preset(canonical(name), params), Analysis::default()),
    };
    merge_analysis(&mut analysis, analysis_map)?;
    if common.tol.is_some() {
        analysis.tol = common.tol;
    }
    if common.resolution.is_some() {
        analysis.resolution = common.resolution;
    }
    if common.seed.is_some() {
        analysis.seed = common.seed;
    }
    if let Some(t) = analysis.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(input("tol must be positive"));
        }
    }
    if analysis.resolution == Some(0) {
        return Err(input("resolution must be positive"));
    }
    Ok(Request { source, analysis })
}

fn typed<T: for<'de> Deserialize<'de>>(name: &str, params: &Map<String, Value>) -> CliResult<T> {
    serde_json::from_value(Value::Object(params.clone())).map_err(|e| input(format!("preset {name}: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UniformParams {
    n: usize,
    #[serde(default = "one_usize")]
    m: usize,
    #[serde(default = "one_f64")]
    t: f64,
    #[serde(default)]
    delta: f64,
    #[serde(default)]
    gamma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ThreeSiteParams {
    #[serde(default)]
    delta: f64,
    #[serde(default)]
    gamma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NnParams {
    t: Vec<C64>,
    #[serde(default)]
    outer: Vec<f64>,
    #[serde(default)]
    delta: f64,
    #[serde(default)]
    gamma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SshParams {
    n: usize,
    t1: C64,
    t2: C64,
    #[serde(default)]
    t_l: C64,
    #[serde(default)]
    t_r: C64,
    #[serde(default)]
    delta: f64,
    #[serde(default)]
    gamma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QubitParams {
    #[serde(default)]
    omega: f64,
    #[serde(default = "one_f64")]
    t: f64,
}

fn one_usize() -> usize {
    1
}

fn one_f64() -> f64 {
    1.0
}

/// The matrix named by a request.
pub fn model_matrix(req: &Request) -> CliResult<CMat> {
    match &req.source {
        Source::Explicit(spec) => Ok(spec.matrix()),
        Source::Preset(name, params) if name == "far_impurity" => {
            let f: FarImpurity = typed(name, params)?;
            f.hamiltonian().map_err(input)
        }
        Source::Preset(..) => Ok(model_spec(req)?.matrix()),
    }
}

/// The lattice spec named by a request.
pub fn model_spec(req: &Request) -> CliResult<LatticeSpec> {
    let (name, params) = match &req.source {
        Source::Explicit(spec) => return Ok(spec.clone()),
        Source::Preset(name, params) => (name.as_str(), params),
    };
    let preset = match name {
        "uniform_chain" => {
            let p: UniformParams = typed(name, params)?;
            ModelPreset::UniformChain { n: p.n, m: p.m, t: p.t, z_m: c(p.delta, p.gamma), z_mbar: c(p.delta, -p.gamma) }
        }
        "three_site" => {
            let p: ThreeSiteParams = typed(name, params)?;
            ModelPreset::UniformChain { n: 3, m: 1, t: 1.0, z_m: c(p.delta, p.gamma), z_mbar: c(p.delta, -p.gamma) }
        }
        "nearest_neighbour_defect" => {
            let p: NnParams = typed(name, params)?;
            ModelPreset::NearestNeighbourDefect { n: p.t.len() + 1, t: p.t, delta: p.delta, gamma: p.gamma, outer: p.outer }
        }
        "ssh_edge_defect" => {
            let p: SshParams = typed(name, params)?;
            ModelPreset::SshEdgeDefect {
                n: p.n,
                t1: p.t1,
                t2: p.t2,
                t_l: p.t_l,
                t_r: p.t_r,
                z1: c(p.delta, p.gamma),
                zn: c(p.delta, -p.gamma),
            }
        }
        "qubit" => {
            let p: QubitParams = typed(name, params)?;
            ModelPreset::Qubit { omega: p.omega, t: p.t }
        }
        "ring" => {
            let mut tagged = params.clone();
            tagged.insert("preset".into(), Value::String("ring".into()));
            serde_json::from_value(Value::Object(tagged)).map_err(|e| input(format!("preset ring: {e}")))?
        }
        "far_impurity" => {
            let f: FarImpurity = typed(name, params)?;
            ModelPreset::UniformChain { n: f.n, m: 1, t: f.t, z_m: c(f.delta, f.gamma), z_mbar: c(f.delta, -f.gamma) }
        }
        other => return Err(input(format!("unknown preset {other:?}"))),
    };
    preset.expand().map_err(input)
}

fn param_box(req: &Request) -> CliResult<ParamBox> {
    match req.analysis.bbox {
        Some([x0, x1, y0, y1]) => ParamBox::new(x0, x1, y0, y1).map_err(input),
        None => Ok(ParamBox::square(3.0)),
    }
}

/// The two-parameter family named by a request. Defect families use
/// (Delta, gamma); the qubit uses (omega, t).
pub fn model_family(req: &Request) -> CliResult<ParamFamily> {
    let bbox = param_box(req)?;
    let (name, params) = match &req.source {
        Source::Explicit(_) => return Err(input("ep-contour and puiseux need a preset family")),
        Source::Preset(name, params) => (name.as_str(), params),
    };
    let fam = match name {
        "qubit" => {
            if !params.is_empty() {
                return Err(input("the qubit family takes no parameters"));
            }
            ParamFamily::qubit(bbox)
        }
        "uniform_chain" | "far_impurity" => {
            let p: UniformParams = typed(name, &without(params, &["delta", "gamma", "unit_circle"]))?;
            ParamFamily::uniform_chain(p.n, p.m, p.t, bbox)
        }
        "three_site" => ParamFamily::uniform_chain(3, 1, 1.0, bbox),
        "nearest_neighbour_defect" => {
            let p: NnParams = typed(name, &without(params, &["delta", "gamma"]))?;
            ParamFamily::nearest_neighbour(p.t, p.outer, bbox)
        }
        "ssh_edge_defect" => {
            let p: SshParams = typed(name, &without(params, &["delta", "gamma"]))?;
            ParamFamily::ssh_edge(p.n, p.t1, p.t2, p.t_l, p.t_r, bbox)
        }
        other => return Err(input(format!("preset {other:?} is not a two-parameter family"))),
    };
    fam.map_err(input)
}

fn without(params: &Map<String, Value>, keys: &[&str]) -> Map<String, Value> {
    params.iter().filter(|(k, _)| !keys.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect()
}

fn rows(m: &CMat) -> Vec<Vec<C64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRecord {
    pub value: C64,
    pub algebraic_mult: usize,
    pub geometric_mult: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDoc {
    pub n: usize,
    pub eigenvalues: Vec<EigenvalueRecord>,
    pub pt_class: PtClass,
    pub max_residual: f64,
}

pub fn cmd_spectrum(req: &Request) -> CliResult<SpectrumDoc> {
    let h = model_matrix(req)?;
    let rep = spectra::eig(&h, req.analysis.tol.unwrap_or(spectra::CLUSTER_TOL)).map_err(compute)?;
    let eigenvalues = rep
        .eigenvalues
        .iter()
        .map(|e| EigenvalueRecord { value: e.value, algebraic_mult: e.algebraic_mult, geometric_mult: e.geometric_mult })
        .collect();
    Ok(SpectrumDoc { n: h.nrows(), eigenvalues, pt_class: rep.pt_class, max_residual: rep.max_residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourDoc {
    pub family: String,
    pub bbox: ParamBox,
    pub resolution: usize,
    /// (x, y, |D|, segment id); touch points carry segment id -1.
    pub records: Vec<(f64, f64, f64, i64)>,
    pub singular_points: Vec<SingularPoint>,
    pub dropped: usize,
}

impl ContourDoc {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let b = self.bbox;
        let _ = writeln!(s, "# family {}", self.family);
        let _ = writeln!(s, "# box {} {} {} {}", b.x[0], b.x[1], b.y[0], b.y[1]);
        let _ = writeln!(s, "# resolution {}", self.resolution);
        let _ = writeln!(s, "# columns x y abs_d segment");
        for (x, y, d, seg) in &self.records {
            let _ = writeln!(s, "{x} {y} {d:e} {seg}");
        }
        s
    }

    pub fn render_singular(&self) -> String {
        serde_json::to_string_pretty(&self.singular_points).expect("serializable") + "\n"
    }

    /// Parses the output of `render` back into records.
    pub fn parse_records(text: &str) -> std::result::Result<Vec<(f64, f64, f64, i64)>, String> {
        text.lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| {
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() != 4 {
                    return Err(format!("bad record {l:?}"));
                }
                let num = |k: usize| f[k].parse::<f64>().map_err(|e| format!("{l:?}: {e}"));
                Ok((num(0)?, num(1)?, num(2)?, f[3].parse::<i64>().map_err(|e| format!("{l:?}: {e}"))?))
            })
            .collect()
    }
}

pub fn cmd_ep_contour(req: &Request) -> CliResult<ContourDoc> {
    let fam = model_family(req)?;
    let resolution = req.analysis.resolution.unwrap_or(exceptional::DEFAULT_RESOLUTION);
    let contour = exceptional::ep_locus(&fam, resolution).map_err(compute)?;
    let singular_points = exceptional::singular_points(&fam, &contour);
    let abs_d = |p: [f64; 2]| exceptional::discriminant_surface(&fam, p).map(|(re, im)| re.hypot(im)).unwrap_or(f64::NAN);
    let mut records = Vec::new();
    for (k, seg) in contour.segments.iter().enumerate() {
        records.extend(seg.iter().map(|&p| (p[0], p[1], abs_d(p), k as i64)));
    }
    records.extend(contour.touch_points.iter().map(|&p| (p[0], p[1], abs_d(p), -1)));
    Ok(ContourDoc { family: fam.label().to_string(), bbox: fam.bbox(), resolution, records, singular_points, dropped: contour.dropped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDoc {
    pub construction: String,
    pub n: usize,
    pub positivity: Positivity,
    pub min_eigenvalue: f64,
    pub hermiticity_residual: f64,
    pub intertwining_residual: f64,
    pub eta: Vec<Vec<C64>>,
}

/// nn-defect uses M(Z) (default Z = i gamma), far-impurity its closed-form
/// metric, and every other model the general family with unit weights.
pub fn cmd_metric(req: &Request) -> CliResult<MetricDoc> {
    let (construction, rep) = match &req.source {
        Source::Preset(name, params) if name == "nearest_neighbour_defect" => {
            let spec = model_spec(req)?;
            let p: NnParams = typed(name, params)?;
            let z = req.analysis.z.unwrap_or(c(0.0, p.gamma));
            ("nn_defect_metric", metric::nn_defect_metric(&spec, z).map_err(compute)?)
        }
        Source::Preset(name, params) if name == "far_impurity" => {
            let f: FarImpurity = typed(name, params)?;
            let h = f.hamiltonian().map_err(input)?;
            ("far_defect_metric", metric::IntertwinerReport::new(f.metric().map_err(compute)?, &h))
        }
        _ => {
            let h = model_matrix(req)?;
            let weights = req.analysis.weights.clone().unwrap_or_else(|| vec![1.0; h.nrows()]);
            ("general_metric_family", metric::general_metric_family(&h, &weights).map_err(compute)?)
        }
    };
    Ok(MetricDoc {
        construction: construction.into(),
        n: rep.eta.nrows(),
        positivity: rep.positivity,
        min_eigenvalue: rep.min_eigenvalue,
        hermiticity_residual: rep.hermiticity_residual,
        intertwining_residual: rep.intertwining_residual,
        eta: rows(&rep.eta),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityDoc {
    pub n: usize,
    pub mode: ClassifyMode,
    pub reports: Vec<LocalityReport>,
}

/// Far-impurity chains are classified by `mode`; any other model is
/// tested through the kernels of its metric (as in `cmd_metric`).
pub fn cmd_locality(req: &Request) -> CliResult<LocalityDoc> {
    let mode = req.analysis.mode.unwrap_or(ClassifyMode::RuleBased);
    if let Source::Preset(name, params) = &req.source {
        if name == "far_impurity" {
            let f: FarImpurity = typed(name, params)?;
            let subsets = match &req.analysis.subsystems {
                Some(s) => s.clone(),
                None => fermions::classify_subsystems(&f, mode).map_err(compute)?,
            };
            let reports = subsets
                .iter()
                .map(|a| fermions::locality_report(&f, a, mode))
                .collect::<crate::error::Result<_>>()
                .map_err(compute)?;
            return Ok(LocalityDoc { n: f.n, mode, reports });
        }
    }
    let m = cmd_metric(req)?;
    if m.positivity != Positivity::PositiveDefinite {
        return Err(CliError::Compute("locality needs a positive-definite metric".into()));
    }
    let n = m.n;
    let eta = CMat::from_fn(n, n, |i, j| m.eta[i][j]);
    let subsets = match &req.analysis.subsystems {
        Some(s) => s.clone(),
        None => {
            if n > fermions::MAX_ENUMERATION {
                return Err(input(format!("enumerating subsystems needs n <= {}", fermions::MAX_ENUMERATION)));
            }
            (1..(1u64 << n)).map(fermions::sites_of).collect()
        }
    };
    let mut reports = Vec::new();
    for a in subsets {
        let mut rep = fermions::local_kernel(&eta, &a).map_err(compute)?;
        rep.extensively_local = fermions::extensively_local(&eta, &a).map_err(compute)?;
        if req.analysis.subsystems.is_some() || rep.extensively_local {
            reports.push(rep);
        }
    }
    reports.sort_by(|a, b| a.subsystem.len().cmp(&b.subsystem.len()).then(a.subsystem.cmp(&b.subsystem)));
    Ok(LocalityDoc { n, mode: ClassifyMode::BruteForce, reports })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub cells: usize,
    pub touches_real_axis: bool,
    pub eigenvalue_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionDoc {
    pub eigenvalues: Vec<C64>,
    pub gershgorin: Vec<InclusionRegion>,
    pub brauer_cassini: Vec<InclusionRegion>,
    pub gershgorin_components: Vec<ComponentRecord>,
    pub all_contained: bool,
}

pub fn cmd_inclusion(req: &Request) -> CliResult<InclusionDoc> {
    let h = model_matrix(req)?;
    let mut eigenvalues = linalg::eigenvalues(&h).map_err(compute)?;
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let gershgorin = spectra::gershgorin(&h);
    let brauer_cassini = spectra::brauer_cassini(&h).map_err(compute)?;
    let slack = req.analysis.tol.unwrap_or(1e-9) * linalg::fro(&h).max(1.0);
    let all_contained = eigenvalues
        .iter()
        .all(|&w| spectra::union_contains(&gershgorin, w, slack) && spectra::union_contains(&brauer_cassini, w, slack));
    let resolution = req.analysis.resolution.unwrap_or(256);
    let gershgorin_components = spectra::union_components(&gershgorin, resolution)
        .iter()
        .map(|comp| ComponentRecord {
            cells: comp.cells.len(),
            touches_real_axis: comp.touches_real_axis,
            eigenvalue_count: eigenvalues.iter().filter(|&&w| comp.contains(w)).count(),
        })
        .collect();
    Ok(InclusionDoc { eigenvalues, gershgorin, brauer_cassini, gershgorin_components, all_contained })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuiseuxDoc {
    pub family: String,
    pub point: [f64; 2],
    pub direction: [f64; 2],
    pub exponent: u32,
    pub leading_coeff: f64,
    pub slope: f64,
}

/// Without `dir`, a direction is drawn from the seeded generator.
pub fn cmd_puiseux(req: &Request) -> CliResult<PuiseuxDoc> {
    let fam = model_family(req)?;
    let point = req.analysis.at.ok_or_else(|| input("puiseux needs at=[x, y]"))?;
    let direction = match req.analysis.dir {
        Some(d) => d,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(req.analysis.seed.unwrap_or(0));
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            [a.cos(), a.sin()]
        }
    };
    let fit = exceptional::puiseux_fit(&fam, point, direction).map_err(compute)?;
    Ok(PuiseuxDoc {
        family: fam.label().to_string(),
        point,
        direction,
        exponent: fit.exponent,
        leading_coeff: fit.leading_coeff,
        slope: fit.slope,
    })
}

fn json<T: Serialize>(doc: &T) -> String {
    serde_json::to_string_pretty(doc).expect("serializable") + "\n"
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Compute(format!("{}: {e}", path.display()))),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Compute(format!("stdout: {e}"))),
            _ => Ok(()),
        },
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".singular.json");
    PathBuf::from(s)
}

/// Runs one command and returns the primary output text plus warnings.
pub fn render(command: &Command) -> CliResult<(String, Option<String>, Vec<String>)> {
    let mut warnings = Vec::new();
    let (text, side) = match command {
        Command::Spectrum(c) => {
            let doc = cmd_spectrum(&build_request(c)?)?;
            if doc.max_residual > 1e-8 {
                warnings.push(format!("eigenvector residual {:e}", doc.max_residual));
            }
            (json(&doc), None)
        }
        Command::EpContour(c) => {
            let doc = cmd_ep_contour(&build_request(c)?)?;
            if doc.dropped > 0 {
                warnings.push(format!("{} contour crossings failed to refine", doc.dropped));
            }
            (doc.render(), Some(doc.render_singular()))
        }
        Command::Metric(c) => {
            let doc = cmd_metric(&build_request(c)?)?;
            if doc.intertwining_residual > 1e-8 {
                warnings.push(format!("intertwining residual {:e}", doc.intertwining_residual));
            }
            (json(&doc), None)
        }
        Command::Locality(c) => (json(&cmd_locality(&build_request(c)?)?), None),
        Command::Inclusion(c) => {
            let doc = cmd_inclusion(&build_request(c)?)?;
            if !doc.all_contained {
                warnings.push("an eigenvalue lies outside an inclusion union".into());
            }
            (json(&doc), None)
        }
        Command::Puiseux(c) => (json(&cmd_puiseux(&build_request(c)?)?), None),
    };
    Ok((text, side, warnings))
}

/// Entry point; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let common = match &cli.command {
        Command::Spectrum(c)
        | Command::EpContour(c)
        | Command::Metric(c)
        | Command::Locality(c)
        | Command::Inclusion(c)
        | Command::Puiseux(c) => c.clone(),
    };
    let result = render(&cli.command).and_then(|(text, side, warnings)| {
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        emit(common.out.as_deref(), &text)?;
        if let Some(side) = side {
            match common.out.as_deref() {
                Some(path) => emit(Some(&sidecar(path)), &side)?,
                None => emit(None, &format!("---\n{side}"))?,
            }
        }
        Ok(())
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
