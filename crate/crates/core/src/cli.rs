//! Scenario files, command execution and report output for the `holonomy` binary.

use crate::acceptance::{run_all, AcceptanceReport};
use crate::algebra::cached_basis;
use crate::error::HolonomyError;
use crate::hopf::{
    levay_loop_holonomy, levay_parallel_v, quaternionic_mz_intensity, su2_matrix, to_quaternionic,
};
use crate::interferometer::{coincidence_intensity, maximize, Group, MaxStatus};
use crate::linalg::{
    c, commutator_norm, max_abs, phase_identity_distance, unitarity_residual, CMatrix, CVector,
};
use crate::random::Sampler;
use crate::states::{
    bell_vector, density_to_stokes, matrix_from_rows, matrix_serde, schmidt_state, werner_state,
    DensityMatrix,
};
use crate::transport::{
    holonomy_from_loop, path_ordered_holonomy, transport_sequence, FourierTerm, SmoothLoop,
    TransportStep, UnitaryPath, DEFAULT_CLOSURE_TOL,
};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io;

pub const SCHEMA_VERSION: u32 = 1;
const DEFAULT_STEPS: usize = 100;
const DEFAULT_LEVAY_SAMPLES: usize = 100;

// ---------------------------------------------------------------------------
// Errors

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Schema,
    Numerical,
    Io,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl CliError {
    pub fn schema(field: &str, message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Schema,
            message: message.into(),
            field: Some(field.to_string()),
            line: None,
            column: None,
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Io,
            message: message.into(),
            field: None,
            line: None,
            column: None,
        }
    }

    fn from_holonomy(field: &str, e: HolonomyError) -> Self {
        CliError {
            kind: if e.is_numerical() {
                ErrorKind::Numerical
            } else {
                ErrorKind::Schema
            },
            message: e.to_string(),
            field: Some(field.to_string()),
            line: None,
            column: None,
        }
    }

    /// 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Numerical => 3,
            ErrorKind::Schema | ErrorKind::Io => 2,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: &'a CliError,
        }
        to_json(&Wrapper { error: self })
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)?;
        if let Some(field) = &self.field {
            write!(f, " (field `{field}`)")?;
        }
        Ok(())
    }
}

impl std::error::Error for CliError {}

trait Context<T> {
    fn at(self, field: &str) -> std::result::Result<T, CliError>;
}

impl<T> Context<T> for crate::error::Result<T> {
    fn at(self, field: &str) -> std::result::Result<T, CliError> {
        self.map_err(|e| CliError::from_holonomy(field, e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

// ---------------------------------------------------------------------------
// Scenario

type ComplexRows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// a|00⟩ + b|11⟩; b defaults to sqrt(1 − a²).
    Schmidt {
        a: f64,
        #[serde(default)]
        b: Option<f64>,
    },
    /// Werner state built on (|00⟩ + |11⟩)/√2.
    Werner { p: f64 },
    /// Pure product of two normalized vectors.
    Product { a: Vec<[f64; 2]>, b: Vec<[f64; 2]> },
    /// Explicit state vector or density matrix; needs `d_a` and `d_b`.
    Custom {
        #[serde(default)]
        psi: Option<Vec<[f64; 2]>>,
        #[serde(default)]
        rho: Option<ComplexRows>,
    },
    /// Seeded random state; needs `d_a` and `d_b`.
    Random {
        #[serde(default)]
        mixed: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Matrix(ComplexRows),
    /// Expansion coefficients over the generator basis.
    Coefficients(Vec<[f64; 2]>),
    /// exp(i Σ θ_j χ_j).
    ExpI(Vec<f64>),
    /// Haar sample from the named group.
    Random(Group),
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    Discrete(Vec<OperatorSpec>),
    Smooth(Vec<FourierTerm>),
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Writes (step, intensity, closure_residual) rows here.
    #[serde(default)]
    pub csv: Option<String>,
}

fn default_group() -> Group {
    Group::Unitary
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub state: StateSpec,
    #[serde(default)]
    pub d_a: Option<usize>,
    #[serde(default)]
    pub d_b: Option<usize>,
    #[serde(default = "default_group")]
    pub group: Group,
    #[serde(default)]
    pub u: Option<OperatorSpec>,
    #[serde(default)]
    pub v: Option<OperatorSpec>,
    #[serde(default)]
    pub path: Option<PathSpec>,
    #[serde(default)]
    pub loops: Vec<PathSpec>,
    #[serde(default)]
    pub n_steps: Option<usize>,
    /// Also integrate the connection along smooth loops.
    #[serde(default)]
    pub continuum: bool,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
}

impl Scenario {
    /// Minimal scenario used when only a seed is given.
    pub fn with_seed(seed: u64) -> Self {
        Scenario {
            schema_version: SCHEMA_VERSION,
            state: StateSpec::Schmidt { a: 0.8, b: None },
            d_a: None,
            d_b: None,
            group: Group::Unitary,
            u: None,
            v: None,
            path: None,
            loops: Vec::new(),
            n_steps: None,
            continuum: false,
            samples: None,
            seed,
            outputs: Outputs::default(),
        }
    }
}

/// Parses a scenario, reporting the offending field path and position.
pub fn parse_scenario(text: &str) -> CliResult<Scenario> {
    let mut de = serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError {
            kind: ErrorKind::Schema,
            message: inner.to_string(),
            field: (path != ".").then_some(path),
            line: Some(inner.line()),
            column: Some(inner.column()),
        }
    })?;
    if scenario.schema_version != SCHEMA_VERSION {
        return Err(CliError::schema(
            "schema_version",
            format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                scenario.schema_version
            ),
        ));
    }
    Ok(scenario)
}

fn vector_from_pairs(pairs: &[[f64; 2]]) -> CVector {
    CVector::from_iterator(pairs.len(), pairs.iter().map(|p| c(p[0], p[1])))
}

fn check_dims(sc: &Scenario, d_a: usize, d_b: usize) -> CliResult<()> {
    for (name, given, actual) in [("d_a", sc.d_a, d_a), ("d_b", sc.d_b, d_b)] {
        if let Some(g) = given {
            if g != actual {
                return Err(CliError::schema(
                    name,
                    format!("state has dimension {actual}, scenario says {g}"),
                ));
            }
        }
    }
    Ok(())
}

fn explicit_dims(sc: &Scenario) -> CliResult<(usize, usize)> {
    match (sc.d_a, sc.d_b) {
        (Some(a), Some(b)) if a >= 2 && b >= 2 => Ok((a, b)),
        (Some(_), Some(_)) => Err(CliError::schema("d_a", "dimensions must be at least 2")),
        _ => Err(CliError::schema("d_a", "this state kind needs d_a and d_b")),
    }
}

fn build_state(sc: &Scenario, sampler: &mut Sampler) -> CliResult<DensityMatrix> {
    let rho = match &sc.state {
        StateSpec::Schmidt { a, b } => {
            let b = b.unwrap_or_else(|| (1.0 - a * a).max(0.0).sqrt());
            schmidt_state(*a, b).at("state")?
        }
        StateSpec::Werner { p } => werner_state(*p, &bell_vector()).at("state.p")?,
        StateSpec::Product { a, b } => {
            let (va, vb) = (vector_from_pairs(a), vector_from_pairs(b));
            DensityMatrix::from_pure(&va.kronecker(&vb), va.len(), vb.len()).at("state")?
        }
        StateSpec::Custom { psi, rho } => {
            let (d_a, d_b) = explicit_dims(sc)?;
            match (psi, rho) {
                (Some(p), None) => {
                    DensityMatrix::from_pure(&vector_from_pairs(p), d_a, d_b).at("state.psi")?
                }
                (None, Some(r)) => {
                    let m = matrix_from_rows(r).map_err(|e| CliError::schema("state.rho", e))?;
                    DensityMatrix::new(m, d_a, d_b).at("state.rho")?
                }
                _ => {
                    return Err(CliError::schema(
                        "state",
                        "custom state needs exactly one of psi or rho",
                    ))
                }
            }
        }
        StateSpec::Random { mixed } => {
            let (d_a, d_b) = explicit_dims(sc)?;
            if *mixed {
                sampler.mixed_state(d_a, d_b)
            } else {
                sampler.pure_state(d_a, d_b)
            }
        }
    };
    check_dims(sc, rho.d_a(), rho.d_b())?;
    Ok(rho)
}

fn build_operator(
    spec: &OperatorSpec,
    dim: usize,
    field: &str,
    sampler: &mut Sampler,
) -> CliResult<CMatrix> {
    let basis = cached_basis(dim).at(field)?;
    let n = dim * dim;
    let op = match spec {
        OperatorSpec::Matrix(rows) => {
            matrix_from_rows(rows).map_err(|e| CliError::schema(field, e))?
        }
        OperatorSpec::Coefficients(pairs) => {
            if pairs.len() != n {
                return Err(CliError::schema(
                    field,
                    format!("expected {n} coefficients, found {}", pairs.len()),
                ));
            }
            basis.reconstruct(&vector_from_pairs(pairs))
        }
        OperatorSpec::ExpI(theta) => {
            if theta.len() != n {
                return Err(CliError::schema(
                    field,
                    format!("expected {n} angles, found {}", theta.len()),
                ));
            }
            basis.exp_i(theta)
        }
        OperatorSpec::Random(group) => group.sample(sampler, dim),
    };
    if op.nrows() != dim || op.ncols() != dim {
        return Err(CliError::schema(
            field,
            format!("expected a {dim}x{dim} operator"),
        ));
    }
    let res = unitarity_residual(&op);
    if res > 1e-10 {
        return Err(CliError::schema(
            field,
            format!("operator is not unitary (residual {res:.3e})"),
        ));
    }
    Ok(op)
}

fn build_path(
    spec: &PathSpec,
    dim: usize,
    field: &str,
    sampler: &mut Sampler,
) -> CliResult<UnitaryPath> {
    match spec {
        PathSpec::Discrete(ops) => {
            let steps = ops
                .iter()
                .enumerate()
                .map(|(i, op)| build_operator(op, dim, &format!("{field}.discrete[{i}]"), sampler))
                .collect::<CliResult<Vec<_>>>()?;
            Ok(UnitaryPath::Discrete(steps))
        }
        PathSpec::Smooth(terms) => Ok(UnitaryPath::Smooth(
            SmoothLoop::new(dim, terms.clone()).at(&format!("{field}.smooth"))?,
        )),
    }
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSummary {
    pub d_a: usize,
    pub d_b: usize,
    pub purity: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntensityReport {
    #[serde(with = "matrix_serde")]
    pub u: CMatrix,
    #[serde(with = "matrix_serde")]
    pub v: CMatrix,
    pub intensity: f64,
    pub stokes_intensity: f64,
    pub formula_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximizationReport {
    #[serde(with = "matrix_serde")]
    pub u: CMatrix,
    #[serde(with = "matrix_serde")]
    pub v: CMatrix,
    pub intensity: f64,
    pub lagrange_lambda: f64,
    pub lagrange_mu: Vec<f64>,
    pub residual: f64,
    pub status: MaxStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportReport {
    pub n_steps: usize,
    pub steps: Vec<TransportStep>,
    #[serde(with = "matrix_serde")]
    pub cumulative_u: CMatrix,
    #[serde(with = "matrix_serde")]
    pub cumulative_v: CMatrix,
    pub closure_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopHolonomy {
    pub index: usize,
    pub n_steps: usize,
    #[serde(with = "matrix_serde")]
    pub v: CMatrix,
    pub loop_closure_residual: f64,
    pub distance_from_identity: f64,
    pub distance_from_phase: f64,
    #[serde(skip_serializing_if = "Option::is_none", with = "optional_matrix")]
    pub path_ordered_v: Option<CMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_ordered_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorEntry {
    pub first: usize,
    pub second: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomyReport {
    pub loops: Vec<LoopHolonomy>,
    pub commutators: Vec<CommutatorEntry>,
    pub max_commutator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevayLoopComparison {
    pub n_steps: usize,
    #[serde(with = "matrix_serde")]
    pub levay_v: CMatrix,
    #[serde(with = "matrix_serde")]
    pub path_ordered_v: CMatrix,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevayReport {
    pub samples: usize,
    pub max_v_delta: f64,
    pub max_intensity_delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loop_comparison: Option<LevayLoopComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intensity: Option<IntensityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maximization: Option<MaximizationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transport: Option<TransportReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holonomy: Option<HolonomyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levay: Option<LevayReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selftest: Option<AcceptanceReport>,
    /// Only filled in on request, so that reports stay reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

mod optional_matrix {
    use crate::linalg::CMatrix;
    use crate::states::complex_rows;
    use serde::{Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<CMatrix>, serializer: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(complex_rows).serialize(serializer)
    }
}

impl RunReport {
    fn new(command: Command, seed: u64, rho: Option<&DensityMatrix>) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            command: command.name().to_string(),
            seed,
            state: rho.map(|r| StateSummary {
                d_a: r.d_a(),
                d_b: r.d_b(),
                purity: r.purity(),
                min_eigenvalue: r.min_eigenvalue(),
            }),
            intensity: None,
            maximization: None,
            transport: None,
            holonomy: None,
            levay: None,
            selftest: None,
            wall_clock_seconds: None,
        }
    }

    /// Rows (step, intensity, closure_residual) of a transport run.
    pub fn csv(&self) -> Option<String> {
        let t = self.transport.as_ref()?;
        let mut out = String::from("step,intensity,closure_residual\n");
        for (i, s) in t.steps.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e}",
                i + 1,
                s.intensity,
                s.closure_residual
            );
        }
        Some(out)
    }
}

// ---------------------------------------------------------------------------
// Output

/// Pretty JSON with every float written to 17 significant digits.
struct SignificantDigits<'a>(serde_json::ser::PrettyFormatter<'a>);

impl serde_json::ser::Formatter for SignificantDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{:.16e}", value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let fmt = SignificantDigits(serde_json::ser::PrettyFormatter::new());
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

// ---------------------------------------------------------------------------
// Commands

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Intensity,
    Maximize,
    Transport,
    Holonomy,
    LevayCompare,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Intensity => "intensity",
            Command::Maximize => "maximize",
            Command::Transport => "transport",
            Command::Holonomy => "holonomy",
            Command::LevayCompare => "levay-compare",
            Command::Selftest => "selftest",
        }
    }
}

fn required<'a, T>(x: &'a Option<T>, field: &str, command: Command) -> CliResult<&'a T> {
    x.as_ref()
        .ok_or_else(|| CliError::schema(field, format!("`{}` needs `{field}`", command.name())))
}

pub fn run(command: Command, sc: &Scenario) -> CliResult<RunReport> {
    match command {
        Command::Intensity => cmd_intensity(sc),
        Command::Maximize => cmd_maximize(sc),
        Command::Transport => cmd_transport(sc),
        Command::Holonomy => cmd_holonomy(sc),
        Command::LevayCompare => cmd_levay_compare(sc),
        Command::Selftest => Ok(cmd_selftest(sc.seed)),
    }
}

pub fn cmd_intensity(sc: &Scenario) -> CliResult<RunReport> {
    let mut sampler = Sampler::new(sc.seed);
    let rho = build_state(sc, &mut sampler)?;
    let u = build_operator(
        required(&sc.u, "u", Command::Intensity)?,
        rho.d_a(),
        "u",
        &mut sampler,
    )?;
    let v = build_operator(
        required(&sc.v, "v", Command::Intensity)?,
        rho.d_b(),
        "v",
        &mut sampler,
    )?;
    let r = coincidence_intensity(&rho, &u, &v).at("state")?;
    let mut report = RunReport::new(Command::Intensity, sc.seed, Some(&rho));
    report.intensity = Some(IntensityReport {
        u,
        v,
        intensity: r.value,
        stokes_intensity: 0.5 + r.interference_term,
        formula_delta: r.formula_delta,
    });
    Ok(report)
}

pub fn cmd_maximize(sc: &Scenario) -> CliResult<RunReport> {
    let mut sampler = Sampler::new(sc.seed);
    let rho = build_state(sc, &mut sampler)?;
    let u = build_operator(
        required(&sc.u, "u", Command::Maximize)?,
        rho.d_a(),
        "u",
        &mut sampler,
    )?;
    let out = maximize(&rho, &u, sc.group).at("u")?;
    let mut report = RunReport::new(Command::Maximize, sc.seed, Some(&rho));
    report.maximization = Some(MaximizationReport {
        u,
        v: out.v,
        intensity: out.intensity,
        lagrange_lambda: out.lagrange_lambda,
        lagrange_mu: out.lagrange_mu,
        residual: out.residual,
        status: out.status,
    });
    Ok(report)
}

fn n_steps(sc: &Scenario) -> CliResult<usize> {
    match sc.n_steps {
        Some(0) => Err(CliError::schema("n_steps", "n_steps must be positive")),
        Some(n) => Ok(n),
        None => Ok(DEFAULT_STEPS),
    }
}

pub fn cmd_transport(sc: &Scenario) -> CliResult<RunReport> {
    let mut sampler = Sampler::new(sc.seed);
    let rho = build_state(sc, &mut sampler)?;
    let path = build_path(
        required(&sc.path, "path", Command::Transport)?,
        rho.d_a(),
        "path",
        &mut sampler,
    )?;
    let steps = path.steps(n_steps(sc)?);
    let record = transport_sequence(&rho, &steps, sc.group).at("path")?;
    let closure_residual = record.steps.last().map_or(0.0, |s| s.closure_residual);
    let mut report = RunReport::new(Command::Transport, sc.seed, Some(&rho));
    report.transport = Some(TransportReport {
        n_steps: record.steps.len(),
        steps: record.steps,
        cumulative_u: record.cumulative_u,
        cumulative_v: record.cumulative_v,
        closure_residual,
    });
    Ok(report)
}

pub fn cmd_holonomy(sc: &Scenario) -> CliResult<RunReport> {
    let mut sampler = Sampler::new(sc.seed);
    let rho = build_state(sc, &mut sampler)?;
    let specs: Vec<(String, &PathSpec)> = if sc.loops.is_empty() {
        vec![(
            "path".to_string(),
            required(&sc.path, "loops", Command::Holonomy)?,
        )]
    } else {
        sc.loops
            .iter()
            .enumerate()
            .map(|(i, l)| (format!("loops[{i}]"), l))
            .collect()
    };
    let n = n_steps(sc)?;
    let mut loops = Vec::with_capacity(specs.len());
    for (index, (field, spec)) in specs.iter().enumerate() {
        let path = build_path(spec, rho.d_a(), field, &mut sampler)?;
        let steps = path.steps(n);
        let h = holonomy_from_loop(&rho, &steps, sc.group, DEFAULT_CLOSURE_TOL).at(field)?;
        let (path_ordered_v, path_ordered_delta) = match (&path, sc.continuum) {
            (UnitaryPath::Smooth(l), true) => {
                let cont = path_ordered_holonomy(&rho, l, n, sc.group).at(field)?.v;
                let delta = (&cont - &h.v).norm();
                (Some(cont), Some(delta))
            }
            _ => (None, None),
        };
        loops.push(LoopHolonomy {
            index,
            n_steps: steps.len(),
            distance_from_identity: (&h.v - CMatrix::identity(rho.d_b(), rho.d_b())).norm(),
            distance_from_phase: phase_identity_distance(&h.v),
            v: h.v,
            loop_closure_residual: h.loop_closure_residual,
            path_ordered_v,
            path_ordered_delta,
        });
    }
    let mut commutators = Vec::new();
    for i in 0..loops.len() {
        for j in i + 1..loops.len() {
            commutators.push(CommutatorEntry {
                first: i,
                second: j,
                norm: commutator_norm(&loops[i].v, &loops[j].v),
            });
        }
    }
    let max_commutator = commutators.iter().map(|e| e.norm).fold(0.0, f64::max);
    let mut report = RunReport::new(Command::Holonomy, sc.seed, Some(&rho));
    report.holonomy = Some(HolonomyReport {
        loops,
        commutators,
        max_commutator,
    });
    Ok(report)
}

pub fn cmd_levay_compare(sc: &Scenario) -> CliResult<RunReport> {
    let mut sampler = Sampler::new(sc.seed);
    let rho = build_state(sc, &mut sampler)?;
    if rho.d_a() != 2 || rho.d_b() != 2 {
        return Err(CliError::schema(
            "state",
            "levay-compare needs a two-qubit state",
        ));
    }
    if sc.group != Group::Special {
        return Err(CliError::schema(
            "group",
            "levay-compare needs group \"su\"",
        ));
    }
    let purity = rho.purity();
    if (purity - 1.0).abs() > 1e-10 {
        return Err(CliError::from_holonomy(
            "state",
            HolonomyError::NotPure { purity },
        ));
    }
    let psi = rho.dominant_vector();
    let spinor = to_quaternionic(&psi).at("state")?;
    let basis = cached_basis(2).at("state")?;
    let m = density_to_stokes(&rho, &basis, &basis)
        .at("state")?
        .correlation();
    let samples = sc.samples.unwrap_or(DEFAULT_LEVAY_SAMPLES);
    let (mut dv, mut di): (f64, f64) = (0.0, 0.0);
    for _ in 0..samples {
        let u_coeffs = sampler.su2_coefficients();
        let u = su2_matrix(u_coeffs);
        let levay = match levay_parallel_v(&m, u_coeffs) {
            Ok((v, _)) => su2_matrix(v),
            Err(HolonomyError::DegenerateDirection) => continue,
            Err(e) => return Err(CliError::from_holonomy("state", e)),
        };
        let full = maximize(&rho, &u, Group::Special).at("state")?;
        dv = dv.max(max_abs(&(levay - full.v)));
        let w = su2_matrix(sampler.su2_coefficients());
        let q = quaternionic_mz_intensity(&spinor, &u, &w).at("state")?;
        let f = coincidence_intensity(&rho, &u, &w).at("state")?.value;
        di = di.max((q - f).abs());
    }
    let loop_comparison = match &sc.path {
        Some(PathSpec::Smooth(terms)) => {
            let l = SmoothLoop::new(2, terms.clone()).at("path.smooth")?;
            let n = n_steps(sc)?;
            let levay_v = levay_loop_holonomy(&psi, &l, n).at("path")?;
            let path_ordered_v = path_ordered_holonomy(&rho, &l, n, Group::Special)
                .at("path")?
                .v;
            Some(LevayLoopComparison {
                n_steps: n,
                delta: max_abs(&(&levay_v - &path_ordered_v)),
                levay_v,
                path_ordered_v,
            })
        }
        Some(PathSpec::Discrete(_)) => {
            return Err(CliError::schema(
                "path",
                "levay-compare integrates smooth loops only",
            ));
        }
        None => None,
    };
    let mut report = RunReport::new(Command::LevayCompare, sc.seed, Some(&rho));
    report.levay = Some(LevayReport {
        samples,
        max_v_delta: dv,
        max_intensity_delta: di,
        loop_comparison,
    });
    Ok(report)
}

pub fn cmd_selftest(seed: u64) -> RunReport {
    let mut report = RunReport::new(Command::Selftest, seed, None);
    report.selftest = Some(run_all(seed));
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(json: &str) -> Scenario {
        parse_scenario(json).unwrap()
    }

    #[test]
    fn intensity_examples() {
        let r = cmd_intensity(&scenario(
            r#"{"schema_version": 1, "state": {"kind": "schmidt", "a": 0.8},
                "u": {"exp_i": [0, 0, 0, 0]}, "v": {"exp_i": [0, 0, 0, 0]}}"#,
        ))
        .unwrap();
        assert!((r.intensity.unwrap().intensity - 1.0).abs() < 1e-12);

        let sigma1 = r#"{"matrix": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]}"#;
        let json = format!(
            r#"{{"schema_version": 1, "state": {{"kind": "schmidt", "a": 0.8}}, "u": {sigma1}, "v": {sigma1}}}"#
        );
        let r = cmd_intensity(&scenario(&json)).unwrap().intensity.unwrap();
        assert!((r.intensity - 0.98).abs() < 1e-12);

        let r = cmd_intensity(&scenario(
            r#"{"schema_version": 1, "state": {"kind": "werner", "p": 0.5}, "seed": 7,
                "u": {"random": "u"}, "v": {"random": "u"}}"#,
        ))
        .unwrap()
        .intensity
        .unwrap();
        assert!(r.formula_delta < 1e-12);
        assert!((r.intensity - r.stokes_intensity).abs() < 1e-12);
    }

    #[test]
    fn maximize_examples() {
        let r = cmd_maximize(&scenario(
            r#"{"schema_version": 1, "state": {"kind": "product", "a": [[0.6, 0], [0, 0.8]], "b": [[1, 0], [0, 0]]},
                "u": {"exp_i": [0, 0, 0, 0.3]}}"#,
        ))
        .unwrap()
        .maximization
        .unwrap();
        let basis = cached_basis(2).unwrap();
        let u = basis.exp_i(&[0.0, 0.0, 0.0, 0.3]);
        let rho_a = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.36, 0.0), c(0.0, -0.48), c(0.0, 0.48), c(0.64, 0.0)],
        );
        let theta = (u * rho_a).trace().arg();
        let expected = CMatrix::identity(2, 2) * num_complex::Complex64::from_polar(1.0, -theta);
        assert!(max_abs(&(r.v - expected)) < 1e-6);

        let r = cmd_maximize(&scenario(
            r#"{"schema_version": 1, "state": {"kind": "schmidt", "a": 0.8},
                "u": {"matrix": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]}}"#,
        ))
        .unwrap()
        .maximization
        .unwrap();
        assert!((r.intensity - 0.98).abs() < 1e-8);
        assert!(r.residual < 1e-8);

        // product state with a traceless ρ^A-weighted U: Tr(U ρ^A) = 0 on |0⟩⟨0|
        let r = cmd_maximize(&scenario(
            r#"{"schema_version": 1, "state": {"kind": "product", "a": [[1, 0], [0, 0]], "b": [[0.6, 0], [0.8, 0]]},
                "u": {"matrix": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]}}"#,
        ))
        .unwrap()
        .maximization
        .unwrap();
        assert_eq!(r.status, MaxStatus::ZeroInterference);
    }

    #[test]
    fn holonomy_of_trivial_loop() {
        let r = cmd_holonomy(&scenario(
            r#"{"schema_version": 1, "state": {"kind": "random", "mixed": true}, "d_a": 2, "d_b": 2,
                "path": {"discrete": [{"exp_i": [0, 0, 0, 0]}, {"exp_i": [0, 0, 0, 0]}]}}"#,
        ))
        .unwrap()
        .holonomy
        .unwrap();
        assert!(r.loops[0].distance_from_identity < 1e-10);
        assert_eq!(r.loops[0].loop_closure_residual, 0.0);
    }

    #[test]
    fn open_loop_is_a_numerical_failure() {
        let err = cmd_holonomy(&scenario(
            r#"{"schema_version": 1, "state": {"kind": "schmidt", "a": 0.8},
                "path": {"discrete": [{"exp_i": [0, 0.4, 0, 0]}]}}"#,
        ))
        .unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn levay_compare_examples() {
        let r = cmd_levay_compare(&scenario(
            r#"{"schema_version": 1, "state": {"kind": "random"}, "d_a": 2, "d_b": 2, "group": "su", "seed": 3,
                "path": {"smooth": [{"generator": 1, "harmonic": 1, "cos": 0.4, "sin": 0.2},
                                    {"generator": 3, "harmonic": 1, "cos": -0.3, "sin": 0.5}]},
                "n_steps": 2000}"#,
        ))
        .unwrap()
        .levay
        .unwrap();
        assert_eq!(r.samples, 100);
        assert!(r.max_v_delta < 1e-6);
        assert!(r.max_intensity_delta < 1e-12);
        assert!(r.loop_comparison.unwrap().delta < 1e-3);

        let err = cmd_levay_compare(&scenario(
            r#"{"schema_version": 1, "state": {"kind": "werner", "p": 0.5}, "group": "su"}"#,
        ))
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn schema_errors_carry_position_and_field() {
        let err = parse_scenario(
            "{\"schema_version\": 1,\n \"state\": {\"kind\": \"schmidt\", \"a\": \"x\"}}",
        )
        .unwrap_err();
        assert_eq!(err.kind, ErrorKind::Schema);
        assert_eq!(err.line, Some(2));
        assert_eq!(err.field.as_deref(), Some("state"));
        assert_eq!(err.exit_code(), 2);
        let err = parse_scenario(r#"{"schema_version": 9, "state": {"kind": "werner", "p": 0.5}}"#)
            .unwrap_err();
        assert_eq!(err.field.as_deref(), Some("schema_version"));
        let err = cmd_intensity(&scenario(
            r#"{"schema_version": 1, "state": {"kind": "werner", "p": 1.5}}"#,
        ))
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let json = err.to_json();
        let back: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back["error"]["kind"], "schema");
    }

    #[test]
    fn reports_are_deterministic_and_round_trip() {
        let sc = scenario(
            r#"{"schema_version": 1, "state": {"kind": "random", "mixed": true}, "d_a": 2, "d_b": 3, "seed": 11,
                "path": {"smooth": [{"generator": 2, "harmonic": 1, "cos": 0.3, "sin": 0.1}]}, "n_steps": 12}"#,
        );
        let a = to_json(&cmd_transport(&sc).unwrap());
        let b = to_json(&cmd_transport(&sc).unwrap());
        assert_eq!(a, b);
        let value: serde_json::Value = serde_json::from_str(&a).unwrap();
        let steps = value["transport"]["steps"].as_array().unwrap();
        assert_eq!(steps.len(), 12);
        let report = cmd_transport(&sc).unwrap();
        let first = report.transport.as_ref().unwrap().steps[0].intensity;
        assert_eq!(steps[0]["intensity"].as_f64().unwrap(), first);
        assert!(a.contains("e-1") || a.contains("e0"));
        let csv = report.csv().unwrap();
        assert_eq!(csv.lines().count(), 13);
        assert!(unitarity_residual(&report.transport.unwrap().cumulative_v) < 1e-8);
    }

    #[test]
    fn floats_use_seventeen_significant_digits() {
        assert_eq!(to_json(&0.98), "9.7999999999999998e-1");
        assert_eq!(to_json(&0.5), "5.0000000000000000e-1");
        assert_eq!(to_json(&0.1_f64).parse::<f64>().unwrap(), 0.1);
        assert_eq!(to_json(&f64::NAN), "null");
    }
}
