//! Command-line front end: `analyze`, `free-norm`, `verify-action` and `demo`.
//!
//! Every command produces a [`Report`] serialized as JSON. Exact values are
//! written as rational strings. Exit codes: 0 when every check passes, 1 when
//! some check fails, 2 on invalid input. A run is a pure function of its
//! [`RunConfig`], so identical configurations give byte-identical reports
//! (wall-clock timing is only included with `--timing`).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::actions::{
    dihedral_rotation_hom, orbit_growth_report, random_vector, renorm_sup, sample_operator_norms, verify_cocycle,
    verify_representation, AffineAction, DirectSumAction, FreeProductAction, FreeSpaceAction, Homomorphism,
    IdentityReport, Index, InducedAction, MatrixAction, OrbitGrowth, RegularAction, RenormedAction, SharedAction,
    SparseVector, TranslationAction, TrivialAction,
};
use crate::corpus::{cycle, grid, path, random_tree, seeded_rng, star, CorpusRng};
use crate::free_space::{free_norm_dual, free_norm_flow, FreeVector};
use crate::graph::{GraphFile, PointedGraph};
use crate::groups::{
    bass_serre_ball, cayley_ball, dihedral_rotation_section, parse_group_spec, GroupElement, GroupHandle,
    DEFAULT_BALL_CAP,
};
use crate::kerr::{
    branch_points_in_image, build_quotient, delta_star, four_point_defect, realize_tree, right_inverse_h,
};
use crate::scalar::Scalar;
use crate::Rational;

pub const SCENARIOS: [&str; 6] = ["lemma61", "lemma24", "lemma72", "theorem12", "cor13", "cor73"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("cannot write output: {0}")]
    Output(String),
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "qtf",
    version,
    about = "Quasi-tree quotients, free-space norms and affine action checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quotient a pointed graph and report the tree certificates.
    Analyze(AnalyzeArgs),
    /// Transport norm of a finitely supported vector, by flow and by LP.
    FreeNorm(FreeNormArgs),
    /// Run one scenario's invariant suite.
    VerifyAction(VerifyArgs),
    /// Write the bundled graph corpus to a directory.
    Demo(DemoArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Include wall-clock timing in the report (breaks byte-identity).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FreeNormArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub vector: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// lemma61 | lemma24 | lemma72 | theorem12 | cor13 | cor73
    pub scenario: String,
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub radius: Option<u32>,
    #[arg(long)]
    pub maxlen: Option<u32>,
    #[arg(long, default_value_t = 1)]
    pub p: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random vectors per sampled check.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Ball size cap; the flag wins over QTF_CAP.
    #[arg(long, env = "QTF_CAP", default_value_t = DEFAULT_BALL_CAP)]
    pub cap: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    /// Directory for the corpus files.
    #[arg(long, default_value = "qtf-demo")]
    pub output: PathBuf,
    /// Extra group specs whose Cayley balls (and Bass–Serre balls, for free
    /// products of finite groups) join the corpus.
    #[arg(long)]
    pub group: Vec<String>,
    #[arg(long, default_value_t = 3)]
    pub radius: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "QTF_CAP", default_value_t = DEFAULT_BALL_CAP)]
    pub cap: usize,
    #[arg(long)]
    pub timing: bool,
}

/// Everything a run depends on. Echoed at the top of every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vector: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maxlen: Option<u32>,
    pub p: u32,
    pub seed: u64,
    pub samples: usize,
    pub cap: usize,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub timing: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub extra_groups: Vec<String>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        RunConfig {
            command: command.to_string(),
            scenario: None,
            input: None,
            vector: None,
            group: None,
            radius: None,
            maxlen: None,
            p: 1,
            seed: 0,
            samples: 20,
            cap: DEFAULT_BALL_CAP,
            output: None,
            timing: false,
            extra_groups: Vec::new(),
        }
    }

    pub fn scenario(name: &str) -> Self {
        RunConfig {
            scenario: Some(name.to_string()),
            ..Self::new("verify-action")
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.cap == 0 {
            return Err(CliError::Input("--cap must be positive".into()));
        }
        if self.radius == Some(0) {
            return Err(CliError::Input("--radius must be positive".into()));
        }
        if self.p == 0 {
            return Err(CliError::Input("--p must be at least 1".into()));
        }
        Ok(())
    }
}

impl From<Command> for RunConfig {
    fn from(cmd: Command) -> Self {
        match cmd {
            Command::Analyze(a) => RunConfig {
                input: Some(a.input),
                output: a.common.output,
                timing: a.common.timing,
                ..RunConfig::new("analyze")
            },
            Command::FreeNorm(a) => RunConfig {
                input: Some(a.input),
                vector: Some(a.vector),
                output: a.common.output,
                timing: a.common.timing,
                ..RunConfig::new("free-norm")
            },
            Command::VerifyAction(a) => RunConfig {
                scenario: Some(a.scenario),
                group: a.group,
                radius: a.radius,
                maxlen: a.maxlen,
                p: a.p,
                seed: a.seed,
                samples: a.samples,
                cap: a.cap,
                output: a.common.output,
                timing: a.common.timing,
                ..RunConfig::new("verify-action")
            },
            Command::Demo(a) => RunConfig {
                radius: Some(a.radius),
                seed: a.seed,
                cap: a.cap,
                output: Some(a.output),
                timing: a.timing,
                extra_groups: a.group,
                ..RunConfig::new("demo")
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub witness: BTreeMap<String, String>,
    pub anchor: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub warnings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: RunConfig,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub summary: Summary,
    pub data: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

type Witness = Vec<(&'static str, String)>;

impl Report {
    pub fn new(config: &RunConfig) -> Self {
        Report {
            command: config.clone(),
            checks: Vec::new(),
            warnings: Vec::new(),
            summary: Summary::default(),
            data: BTreeMap::new(),
            timing_ms: None,
        }
    }

    /// Records a check. Failed checks always carry a witness.
    pub fn check(&mut self, name: &str, ok: bool, witness: Witness, anchor: &str) {
        let mut witness: BTreeMap<String, String> = witness.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        if !ok && witness.is_empty() {
            witness.insert("detail".into(), "no witness recorded".into());
        }
        let status = if ok { Status::Pass } else { Status::Fail };
        self.checks.push(Check {
            name: name.to_string(),
            status,
            witness,
            anchor: anchor.to_string(),
        });
    }

    pub fn skip(&mut self, name: &str, reason: &str, anchor: &str) {
        let witness = BTreeMap::from([("reason".to_string(), reason.to_string())]);
        self.checks.push(Check {
            name: name.to_string(),
            status: Status::Skip,
            witness,
            anchor: anchor.to_string(),
        });
    }

    pub fn warn(&mut self, message: String) {
        self.warnings.push(message);
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.data.insert(key.to_string(), value);
    }

    fn finish(mut self) -> Self {
        let count = |s: Status| self.checks.iter().filter(|c| c.status == s).count();
        self.summary = Summary {
            passed: count(Status::Pass),
            failed: count(Status::Fail),
            skipped: count(Status::Skip),
            warnings: self.warnings.len(),
        };
        self
    }

    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

fn exact<T: Scalar>(x: &T) -> String {
    x.to_exact_string()
}

/// Exact p-th power plus a display value for the norm itself.
fn norm_value<T: Scalar>(x: &T, p: u32) -> Value {
    json!({ "pth_power": exact(x), "approx": x.to_f64_lossy().powf(1.0 / p as f64) })
}

/// Parses arguments, runs, writes the report, and returns the exit code.
pub fn run_with_args<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    let config = RunConfig::from(cli.command);
    match run(&config) {
        Ok(report) => {
            let text = report.to_json();
            let written = match (&config.output, config.command.as_str()) {
                (Some(path), cmd) if cmd != "demo" => fs::write(path, &text).map_err(|e| e.to_string()),
                _ => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "{}", CliError::Output(e));
                return 2;
            }
            if let Some(ms) = report.timing_ms {
                let _ = writeln!(stderr, "finished in {ms} ms");
            }
            if report.failed() {
                1
            } else {
                0
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

/// Runs a configuration and returns its report.
pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    config.validate()?;
    let start = Instant::now();
    let report = match config.command.as_str() {
        "analyze" => cmd_analyze(config)?,
        "free-norm" => cmd_free_norm(config)?,
        "verify-action" => cmd_verify_action(config)?,
        "demo" => cmd_demo(config)?,
        other => return Err(CliError::Input(format!("unknown command {other}"))),
    };
    let mut report = report.finish();
    if config.timing {
        report.timing_ms = Some(start.elapsed().as_millis());
    }
    Ok(report)
}

fn read_graph(path: &Path) -> Result<PointedGraph, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let file: GraphFile =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    PointedGraph::from_file(&file).map_err(input_err)
}

fn analyze_graph(pg: &PointedGraph, report: &mut Report, prefix: &str) -> Result<(), CliError> {
    let name = |s: &str| {
        if prefix.is_empty() {
            s.to_string()
        } else {
            format!("{prefix}: {s}")
        }
    };
    let qm = build_quotient(pg).map_err(input_err)?;
    let n = pg.vertex_count();

    let mut worst: Option<(usize, usize, u32, u32)> = None;
    for x in 0..n {
        for y in 0..n {
            let (dx, dy) = (pg.dist(x, y), qm.dist(qm.class_of(x), qm.class_of(y)));
            if dy > dx && worst.is_none() {
                worst = Some((x, y, dx, dy));
            }
        }
    }
    let witness = match worst {
        Some((x, y, dx, dy)) => {
            vec![
                ("x1", x.to_string()),
                ("x2", y.to_string()),
                ("d_x", dx.to_string()),
                ("d_y", dy.to_string()),
            ]
        }
        None => vec![("pairs", (n * n).to_string())],
    };
    report.check(
        &name("quotient distance is bounded by graph distance"),
        worst.is_none(),
        witness,
        "quotient map is 1-Lipschitz",
    );

    let defect = four_point_defect(&qm);
    report.check(
        &name("four-point defect is nonpositive"),
        defect <= 0,
        vec![("defect", defect.to_string())],
        "quotient of a quasi-tree is an R-tree",
    );

    let delta = delta_star(pg, &qm).ok();
    let h = right_inverse_h(pg, &qm);
    report.check(
        &name("right inverse is (1 + delta)-Lipschitz"),
        h.is_ok(),
        match &h {
            Ok(_) => vec![("delta_star", delta.map_or("-".into(), |d| d.to_string()))],
            Err(e) => vec![("error", e.to_string())],
        },
        "right inverse of the quotient map on vertex classes",
    );

    let realization = realize_tree::<Rational>(&qm);
    let branch = realization.as_ref().ok().map(branch_points_in_image);
    report.check(
        &name("quotient embeds in a finite tree"),
        realization.is_ok(),
        match &realization {
            Ok(tr) => vec![
                ("nodes", tr.node_count().to_string()),
                ("synthesized", tr.synthesized_nodes().len().to_string()),
            ],
            Err(e) => vec![("error", e.to_string())],
        },
        "quotient of a quasi-tree is an R-tree",
    );
    match &branch {
        Some(b) => report.check(
            &name("branch points lie in the image"),
            b.holds,
            vec![
                ("branch_nodes", format!("{:?}", b.branch_nodes)),
                ("offending", format!("{:?}", b.offending)),
            ],
            "the image of the vertex set contains every branching point",
        ),
        None => report.skip(
            &name("branch points lie in the image"),
            "no tree realization",
            "branching points",
        ),
    }

    let key = |s: &str| {
        if prefix.is_empty() {
            s.to_string()
        } else {
            format!("{prefix}.{s}")
        }
    };
    report.set(&key("vertex_count"), json!(n));
    report.set(&key("basepoint"), json!(pg.basepoint()));
    report.set(&key("classes"), json!(qm.classes()));
    report.set(&key("dist_y"), json!(qm.dist_rows()));
    report.set(&key("delta_star"), json!(delta));
    report.set(&key("four_point_defect"), json!(defect));
    if let Some(b) = branch {
        report.set(
            &key("branch_check"),
            json!({ "holds": b.holds, "branch_nodes": b.branch_nodes, "offending": b.offending }),
        );
    }
    if let Ok(tr) = realization {
        let edges: Vec<Value> = tr.edges().iter().map(|(u, v, w)| json!([u, v, exact(w)])).collect();
        let node_class: Vec<Option<usize>> = (0..tr.node_count()).map(|v| tr.node_class(v)).collect();
        report.set(&key("realization"), json!({ "node_class": node_class, "edges": edges }));
    }
    Ok(())
}

pub fn cmd_analyze(config: &RunConfig) -> Result<Report, CliError> {
    let path = config
        .input
        .as_ref()
        .ok_or_else(|| CliError::Input("--input is required".into()))?;
    let pg = read_graph(path)?;
    let mut report = Report::new(config);
    analyze_graph(&pg, &mut report, "")?;
    Ok(report)
}

#[derive(Debug, Deserialize)]
struct VectorFile {
    coeffs: BTreeMap<String, String>,
}

pub fn cmd_free_norm(config: &RunConfig) -> Result<Report, CliError> {
    let graph_path = config
        .input
        .as_ref()
        .ok_or_else(|| CliError::Input("--input is required".into()))?;
    let vector_path = config
        .vector
        .as_ref()
        .ok_or_else(|| CliError::Input("--vector is required".into()))?;
    let pg = read_graph(graph_path)?;
    let text =
        fs::read_to_string(vector_path).map_err(|e| CliError::Input(format!("{}: {e}", vector_path.display())))?;
    let file: VectorFile =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", vector_path.display())))?;

    let mut report = Report::new(config);
    let o = pg.basepoint();
    let mut pairs = Vec::new();
    for (key, value) in &file.coeffs {
        let x: usize = key
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("vertex key {key:?} is not an index")))?;
        if x >= pg.vertex_count() {
            return Err(CliError::Input(format!(
                "vertex {x} out of range for {} vertices",
                pg.vertex_count()
            )));
        }
        let a = Rational::parse_exact(value)
            .ok_or_else(|| CliError::Input(format!("coefficient {value:?} is not a rational number")))?;
        if x == o {
            report.warn(format!(
                "coefficient {} at the basepoint {o} dropped (delta_o = 0)",
                exact(&a)
            ));
            continue;
        }
        pairs.push((x, a));
    }
    let mu = FreeVector::from_pairs(o, pairs);
    let dual = free_norm_dual(&mu, &pg).map_err(input_err)?;
    let flow = free_norm_flow(&mu, &pg).map_err(input_err)?;
    report.check(
        "transport and Lipschitz-dual norms agree",
        dual.value == flow.value,
        vec![("dual", exact(&dual.value)), ("flow", exact(&flow.value))],
        "Kantorovich duality on finitely supported vectors",
    );
    let pairing = dual.certificate.pair(&mu);
    report.check(
        "certificate attains the norm",
        pairing == dual.value,
        vec![("pairing", exact(&pairing))],
        "norm of the free space is a supremum over 1-Lipschitz functions",
    );
    report.set("norm", json!(exact(&flow.value)));
    report.set("dual_value", json!(exact(&dual.value)));
    report.set("flow_value", json!(exact(&flow.value)));
    report.set(
        "certificate",
        json!(dual.certificate.values().iter().map(exact).collect::<Vec<_>>()),
    );
    let edge_flow: Vec<Value> = pg
        .edges()
        .iter()
        .zip(&flow.edge_flow)
        .filter(|(_, f)| !f.negligible())
        .map(|((u, v), f)| json!([u, v, exact(f)]))
        .collect();
    report.set("edge_flow", json!(edge_flow));
    Ok(report)
}

pub fn cmd_verify_action(config: &RunConfig) -> Result<Report, CliError> {
    let scenario = config.scenario.as_deref().unwrap_or("");
    let mut report = Report::new(config);
    match scenario {
        "lemma61" => scenario_free_space(config, &mut report)?,
        "lemma24" => scenario_induced(config, &mut report)?,
        "lemma72" => scenario_free_product(config, &mut report)?,
        "theorem12" => scenario_direct_sum(config, &mut report)?,
        "cor13" => scenario_orbit_growth(config, &mut report)?,
        "cor73" => scenario_renorming(config, &mut report)?,
        other => {
            return Err(CliError::Input(format!(
                "unknown scenario {other:?}; expected one of {}",
                SCENARIOS.join(", ")
            )))
        }
    }
    Ok(report)
}

fn elements_up_to(group: &GroupHandle, radius: u32, cap: usize) -> Result<Vec<(GroupElement, u32)>, CliError> {
    group.ball(radius, cap).map_err(input_err)
}

fn pairs_within(elements: &[(GroupElement, u32)], total: u32) -> Vec<(GroupElement, GroupElement)> {
    let mut out = Vec::new();
    for (s, ls) in elements {
        for (t, lt) in elements {
            if ls + lt <= total {
                out.push((s.clone(), t.clone()));
            }
        }
    }
    out
}

fn identity_witness<T: Scalar>(r: &IdentityReport<T>) -> Witness {
    match r.failures.first() {
        None => vec![("checked", r.checked.to_string())],
        Some(m) => {
            let names: Vec<String> = m.elements.iter().map(|g| g.to_string()).collect();
            vec![
                ("checked", r.checked.to_string()),
                ("failures", r.failures.len().to_string()),
                ("elements", names.join(", ")),
                ("lhs", format!("{:?}", m.lhs.to_strings())),
                ("rhs", format!("{:?}", m.rhs.to_strings())),
            ]
        }
    }
}

fn group_or(config: &RunConfig, default: &str) -> Result<GroupHandle, CliError> {
    parse_group_spec(config.group.as_deref().unwrap_or(default)).map_err(input_err)
}

/// Free-space action of a group on its Cayley ball.
fn scenario_free_space(config: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let group = group_or(config, "free:2")?;
    let radius = config.radius.unwrap_or(5);
    let maxlen = config.maxlen.unwrap_or(radius / 2);
    if maxlen > radius {
        return Err(CliError::Input("--maxlen cannot exceed --radius".into()));
    }
    let action = FreeSpaceAction::on_cayley_ball(group.clone(), radius, config.cap).map_err(input_err)?;
    let ball = action.cayley().expect("built on a Cayley ball").clone();
    let pg = action.graph().clone();
    let whole = group.order() == Some(ball.elements.len());
    // inside a finite group the ball is the whole Cayley graph and nothing escapes
    let (test_len, inner) = if whole {
        (radius, radius)
    } else {
        (maxlen, radius - maxlen)
    };
    let tested: Vec<(GroupElement, u32)> = ball
        .elements
        .iter()
        .cloned()
        .zip(ball.lengths.iter().copied())
        .filter(|(_, l)| *l <= test_len)
        .collect();

    let o = pg.basepoint();
    let mut bad_norm: Option<Witness> = None;
    let mut bad_dual: Option<Witness> = None;
    let mut norms = BTreeMap::new();
    for (s, _) in &tested {
        let b: SparseVector<Rational> = action.cocycle(s).map_err(input_err)?;
        let flow = action.norm_pow(&b).map_err(input_err)?;
        let dual = action.dual_norm(&b).map_err(input_err)?;
        let displacement = pg.dist(action.move_vertex(s, o).map_err(input_err)?, o);
        if flow != Rational::from_int(displacement as i64) && bad_norm.is_none() {
            bad_norm = Some(vec![
                ("element", s.to_string()),
                ("norm", exact(&flow)),
                ("displacement", displacement.to_string()),
            ]);
        }
        if dual != flow && bad_dual.is_none() {
            bad_dual = Some(vec![
                ("element", s.to_string()),
                ("flow", exact(&flow)),
                ("dual", exact(&dual)),
            ]);
        }
        norms.insert(s.to_string(), json!(exact(&flow)));
    }
    let count = vec![
        ("elements", tested.len().to_string()),
        ("max_length", test_len.to_string()),
    ];
    report.check(
        "orbit norm equals basepoint displacement",
        bad_norm.is_none(),
        bad_norm.unwrap_or_else(|| count.clone()),
        "free-space action: norm of sigma(s)0 is d(s.o, o)",
    );
    report.check(
        "transport and Lipschitz-dual norms agree on orbit points",
        bad_dual.is_none(),
        bad_dual.unwrap_or(count),
        "Kantorovich duality on finitely supported vectors",
    );

    let pair_total = if whole { 2 * radius } else { radius };
    let cocycle_pairs = pairs_within(&elements_up_to(&group, pair_total.min(radius), config.cap)?, pair_total);
    let r = verify_cocycle::<Rational>(&action, &group, &cocycle_pairs).map_err(input_err)?;
    report.check(
        "cocycle identity",
        r.passed(),
        identity_witness(&r),
        "b(st) = pi(s)b(t) + b(s)",
    );

    let mut rng = seeded_rng(config.seed);
    let pool: Vec<Index> = (0..pg.vertex_count())
        .filter(|&v| v != o && pg.depth(v) <= inner)
        .map(Index::Vertex)
        .collect();
    let vectors: Vec<SparseVector<Rational>> = (0..config.samples).map(|_| random_vector(&pool, 6, &mut rng)).collect();
    let rep_len = if whole { radius } else { maxlen };
    let rep_pairs = pairs_within(&tested, rep_len);
    let rep_pairs: Vec<_> = rep_pairs.into_iter().take(64).collect();
    let r = verify_representation::<Rational>(&action, &group, &rep_pairs, &vectors[..vectors.len().min(8)])
        .map_err(input_err)?;
    report.check(
        "representation property",
        r.passed(),
        identity_witness(&r),
        "pi(st) = pi(s)pi(t)",
    );

    let mut bad_iso: Option<Witness> = None;
    let mut bad_duality: Option<Witness> = None;
    for (k, v) in vectors.iter().enumerate() {
        let s = &tested[rng_index(&mut rng, tested.len())].0;
        let moved = action.apply_linear(s, v).map_err(input_err)?;
        let before = (
            action.norm_pow(v).map_err(input_err)?,
            action.dual_norm(v).map_err(input_err)?,
        );
        let after = (
            action.norm_pow(&moved).map_err(input_err)?,
            action.dual_norm(&moved).map_err(input_err)?,
        );
        if (before.0 != before.1 || after.0 != after.1) && bad_duality.is_none() {
            bad_duality = Some(vec![
                ("sample", k.to_string()),
                ("flow", exact(&before.0)),
                ("dual", exact(&before.1)),
            ]);
        }
        if before.0 != after.0 && bad_iso.is_none() {
            bad_iso = Some(vec![
                ("sample", k.to_string()),
                ("element", s.to_string()),
                ("norm_before", exact(&before.0)),
                ("norm_after", exact(&after.0)),
            ]);
        }
    }
    let count = vec![("samples", vectors.len().to_string())];
    report.check(
        "linear part is isometric on samples",
        bad_iso.is_none(),
        bad_iso.unwrap_or_else(|| count.clone()),
        "free-space action: Lip(f_s) = Lip(f)",
    );
    report.check(
        "transport and Lipschitz-dual norms agree on samples",
        bad_duality.is_none(),
        bad_duality.unwrap_or(count),
        "Kantorovich duality on finitely supported vectors",
    );
    report.set("group", json!(group.name()));
    report.set("ball_vertices", json!(pg.vertex_count()));
    report.set("orbit_norms", Value::Object(norms.into_iter().collect()));
    Ok(())
}

fn rng_index(rng: &mut CorpusRng, n: usize) -> usize {
    use rand::Rng;
    rng.gen_range(0..n)
}

/// `D∞` with `H = ⟨ab⟩` and the scaled interval cocycle on `ℓ¹(Z)`.
pub fn dihedral_induced_action() -> Result<(GroupHandle, InducedAction<Rational>), CliError> {
    let d = parse_group_spec("product(cyclic:2,cyclic:2)").map_err(input_err)?;
    let section = dihedral_rotation_section(&d).map_err(input_err)?;
    // |ab| = 2 in D∞, so each unit step of Z is scaled by 2
    let inner: SharedAction<Rational> = Arc::new(TranslationAction::new(
        dihedral_rotation_hom(),
        Rational::from_int(2),
        1,
        "<ab>",
    ));
    Ok((d, InducedAction::new(section, inner)))
}

fn scenario_induced(config: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    if let Some(g) = &config.group {
        if g.replace(' ', "") != "product(cyclic:2,cyclic:2)" {
            return Err(CliError::Input(
                "lemma24 runs on product(cyclic:2,cyclic:2) only".into(),
            ));
        }
    }
    let maxlen = config.maxlen.unwrap_or(8);
    let (d, induced) = dihedral_induced_action()?;
    let section = induced.section().clone();
    let ball = elements_up_to(&d, maxlen, config.cap)?;
    let b_inner = Rational::from_int(0);

    let hom = dihedral_rotation_hom();
    let inner_action = TranslationAction::new(hom, Rational::from_int(2), 1, "<ab>");
    let mut bad_inner = None;
    for (t, len) in ball.iter().filter(|(t, _)| section.in_subgroup(t)) {
        let n = inner_action
            .norm_pow(&inner_action.cocycle(t).map_err(input_err)?)
            .map_err(input_err)?;
        if n < Rational::from_int(*len as i64) - b_inner.clone() && bad_inner.is_none() {
            bad_inner = Some(vec![("element", t.to_string()), ("norm", exact(&n))]);
        }
    }
    report.check(
        "inner action satisfies its lower bound",
        bad_inner.is_none(),
        bad_inner.unwrap_or_else(|| vec![("B", exact(&b_inner))]),
        "hypothesis ||b(t)|| >= |t| - B on the subgroup",
    );

    let pairs = pairs_within(&ball, 2 * maxlen);
    let r = verify_cocycle(&induced, &d, &pairs).map_err(input_err)?;
    report.check(
        "cocycle identity",
        r.passed(),
        identity_witness(&r),
        "induced cocycle b~(st) = pi~(s)b~(t) + b~(s)",
    );

    let mut rng = seeded_rng(config.seed);
    let pool: Vec<Index> = (0..2)
        .flat_map(|c| (-4..=4).map(move |k| Index::pair(Index::Coset(c), Index::Int(k))))
        .collect();
    let vectors: Vec<SparseVector<Rational>> = (0..config.samples).map(|_| random_vector(&pool, 5, &mut rng)).collect();
    let half = elements_up_to(&d, maxlen / 2, config.cap)?;
    let r = verify_representation(&induced, &d, &pairs_within(&half, maxlen), &vectors).map_err(input_err)?;
    report.check(
        "representation property",
        r.passed(),
        identity_witness(&r),
        "alpha(st, x) = alpha(s, tx) alpha(t, x)",
    );

    let elements: Vec<GroupElement> = ball.iter().map(|(g, _)| g.clone()).collect();
    let sample = sample_operator_norms(&induced, &elements, &vectors).map_err(input_err)?;
    let same_bound = induced.lipschitz_bound() == inner_action.lipschitz_bound();
    report.check(
        "induced action keeps the inner Lipschitz constant",
        same_bound && sample.violations.is_empty(),
        vec![
            ("C", exact(&induced.lipschitz_bound())),
            ("inner_C", exact(&inner_action.lipschitz_bound())),
            ("max_sampled_ratio", exact(&sample.max_ratio_pow)),
            ("violations", sample.violations.len().to_string()),
        ],
        "induced action is C-Lipschitz with the same C",
    );

    let d_const = section.inverse_representative_bound();
    let b_tilde = induced.lower_bound_constant(&b_inner);
    let mut bad_lower = None;
    let mut rows = Vec::new();
    for (s, len) in &ball {
        let n = induced
            .norm_pow(&induced.cocycle(s).map_err(input_err)?)
            .map_err(input_err)?;
        if n < Rational::from_int(*len as i64) - b_tilde.clone() && bad_lower.is_none() {
            bad_lower = Some(vec![
                ("element", s.to_string()),
                ("norm", exact(&n)),
                ("length", len.to_string()),
            ]);
        }
        rows.push(json!([s.to_string(), len, exact(&n)]));
    }
    report.check(
        "orbit lower bound with B~ = B + D",
        bad_lower.is_none(),
        bad_lower.unwrap_or_else(|| {
            vec![
                ("B_tilde", exact(&b_tilde)),
                ("D", d_const.to_string()),
                ("elements", ball.len().to_string()),
            ]
        }),
        "||sigma~(s)0|| >= |s| - B~",
    );
    report.check(
        "D equals the longest inverse representative",
        d_const == 1,
        vec![("D", d_const.to_string())],
        "D = max{|s| : s in Omega^-1}",
    );
    report.set(
        "representatives",
        json!(section
            .representatives()
            .iter()
            .map(|g| g.to_string())
            .collect::<Vec<_>>()),
    );
    report.set("orbit_norms", json!(rows));
    Ok(())
}

fn scenario_free_product(config: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let group = group_or(config, "product(cyclic:2,cyclic:3)")?;
    let (a, b) = group
        .free_factors()
        .ok_or_else(|| CliError::Input("lemma72 needs a free product group spec".into()))?;
    let p = config.p;
    let maxlen = config.maxlen.unwrap_or(8);
    let tree = if a.order().is_some() && b.order().is_some() {
        Some(bass_serre_ball(&group, maxlen + 1, config.cap).map_err(input_err)?)
    } else {
        None
    };
    let left: SharedAction<Rational> = Arc::new(RegularAction::new(a.clone(), p));
    let right: SharedAction<Rational> = Arc::new(RegularAction::new(b.clone(), p));
    let action = FreeProductAction::new(group.clone(), left, right, p, tree.clone()).map_err(input_err)?;

    let ball = elements_up_to(&group, maxlen, config.cap)?;
    let mut bad = None;
    let mut by_letters: BTreeMap<usize, (Rational, Rational)> = BTreeMap::new();
    let mut rows = Vec::new();
    for (w, _) in &ball {
        let n = action
            .norm_pow(&action.cocycle(w).map_err(input_err)?)
            .map_err(input_err)?;
        let letters = w.letters().len();
        let expected = action.letter_norms(w).map_err(input_err)? + Rational::from_int(2 * letters as i64);
        if n != expected && bad.is_none() {
            bad = Some(vec![
                ("word", w.to_string()),
                ("norm_pow", exact(&n)),
                ("expected", exact(&expected)),
            ]);
        }
        let entry = by_letters.entry(letters).or_insert((n.clone(), n.clone()));
        entry.0 = entry.0.clone().min(n.clone());
        entry.1 = entry.1.clone().max(n.clone());
        rows.push(json!([w.to_string(), letters, norm_value(&n, p)]));
    }
    report.check(
        "norm identity ||b~(w)||^p = sum ||b(s_i)||^p + 2n",
        bad.is_none(),
        bad.unwrap_or_else(|| vec![("words", ball.len().to_string()), ("p", p.to_string())]),
        "free-product cocycle over the Bass-Serre tree",
    );

    let increasing = by_letters
        .values()
        .zip(by_letters.values().skip(1))
        .all(|(lo, hi)| lo.1 < hi.0);
    report.check(
        "orbit norm strictly increases with word length",
        increasing,
        vec![(
            "min_by_letters",
            by_letters
                .iter()
                .map(|(n, (lo, hi))| format!("{n}:[{},{}]", exact(lo), exact(hi)))
                .collect::<Vec<_>>()
                .join(" "),
        )],
        "free-product action is proper when the letter cocycles are",
    );

    let half = elements_up_to(&group, maxlen / 2, config.cap)?;
    let pairs = pairs_within(&half, maxlen);
    let r = verify_cocycle(&action, &group, &pairs).map_err(input_err)?;
    report.check(
        "cocycle identity",
        r.passed(),
        identity_witness(&r),
        "b~(sy) = pi~(s)b~(y) + b~(s)",
    );

    let mut rng = seeded_rng(config.seed);
    let mut pool = Vec::new();
    for (w, _) in half.iter().take(12) {
        let vertex = Index::tagged(0, Index::Elem(crate::groups::tree_vertex(w, 0).rep));
        for x in a.ball(1, config.cap).map_err(input_err)? {
            pool.push(Index::pair(vertex.clone(), Index::tagged(2, Index::Elem(x.0))));
        }
        for x in b.ball(1, config.cap).map_err(input_err)? {
            pool.push(Index::pair(vertex.clone(), Index::tagged(1, Index::Elem(x.0))));
        }
    }
    pool.sort();
    pool.dedup();
    let vectors: Vec<SparseVector<Rational>> = (0..config.samples).map(|_| random_vector(&pool, 5, &mut rng)).collect();
    let quarter = elements_up_to(&group, maxlen / 4, config.cap)?;
    let r = verify_representation(&action, &group, &pairs_within(&quarter, maxlen / 2), &vectors).map_err(input_err)?;
    report.check(
        "representation property",
        r.passed(),
        identity_witness(&r),
        "pi~(y)f(x) = pi(y)f(y^-1 x)",
    );

    let elements: Vec<GroupElement> = quarter.iter().map(|(g, _)| g.clone()).collect();
    let sample = sample_operator_norms(&action, &elements, &vectors).map_err(input_err)?;
    report.check(
        "linear part is isometric on samples",
        sample.violations.is_empty() && sample.max_ratio_pow == Rational::from_int(1),
        vec![
            ("max_sampled_ratio", exact(&sample.max_ratio_pow)),
            ("checked", sample.checked.to_string()),
        ],
        "the free-product representation is isometric",
    );

    match &tree {
        Some(t) => {
            let acyclic = t.graph.edges().len() + 1 == t.vertices.len();
            let automorphisms = half.iter().all(|(s, _)| t.left_action_preserves_edges(&group, s));
            report.check(
                "cocycle supports stay in the Bass-Serre ball",
                acyclic && automorphisms,
                vec![
                    ("tree_vertices", t.vertices.len().to_string()),
                    ("acyclic", acyclic.to_string()),
                ],
                "tree vertices sGamma, sLambda with edges {sGamma, sLambda}",
            );
        }
        None => report.skip(
            "cocycle supports stay in the Bass-Serre ball",
            "an infinite factor has infinitely many tree neighbours",
            "tree vertices sGamma, sLambda with edges {sGamma, sLambda}",
        ),
    }
    report.set("group", json!(group.name()));
    report.set("p", json!(p));
    report.set("orbit_norm_pth_powers", json!(rows));
    Ok(())
}

/// Exponent sum of the first free generator, `F_k → Z`.
fn first_exponent_hom() -> Homomorphism {
    Arc::new(|g| match g {
        GroupElement::Free(w) => Some(w.iter().map(|&k| k.signum() as i64 * (k.abs() == 1) as i64).sum()),
        _ => None,
    })
}

fn scenario_direct_sum(config: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let group = group_or(config, "free:2")?;
    if !group.name().starts_with("free:") {
        return Err(CliError::Input("theorem12 runs on free groups (free:k)".into()));
    }
    let radius = config.radius.unwrap_or(5);
    let maxlen = config.maxlen.unwrap_or(radius / 2).min(radius);
    let tree_part = FreeSpaceAction::on_cayley_ball(group.clone(), radius, config.cap).map_err(input_err)?;
    let line_part = TranslationAction::new(first_exponent_hom(), Rational::from_int(1), 1, "a-exponent");
    let parts: Vec<SharedAction<Rational>> = vec![Arc::new(tree_part.clone()), Arc::new(line_part.clone())];
    let sum = DirectSumAction::new(parts).map_err(input_err)?;

    let ball = elements_up_to(&group, maxlen, config.cap)?;
    let mut bad_add = None;
    let mut bad_oracle = None;
    let mut bad_lower = None;
    for (s, len) in &ball {
        let total = sum.norm_pow(&sum.cocycle(s).map_err(input_err)?).map_err(input_err)?;
        let first: Rational = tree_part
            .norm_pow(&tree_part.cocycle(s).map_err(input_err)?)
            .map_err(input_err)?;
        let second = line_part
            .norm_pow(&line_part.cocycle(s).map_err(input_err)?)
            .map_err(input_err)?;
        if total != first.clone() + second.clone() && bad_add.is_none() {
            bad_add = Some(vec![("element", s.to_string()), ("sum", exact(&total))]);
        }
        let a_exponent: i64 = match s {
            GroupElement::Free(w) => w.iter().filter(|k| k.abs() == 1).map(|&k| k as i64).sum(),
            _ => 0,
        };
        let oracle = Rational::from_int(*len as i64 + a_exponent.abs());
        if total != oracle && bad_oracle.is_none() {
            bad_oracle = Some(vec![
                ("element", s.to_string()),
                ("norm", exact(&total)),
                ("oracle", exact(&oracle)),
            ]);
        }
        if total < Rational::from_int(*len as i64) && bad_lower.is_none() {
            bad_lower = Some(vec![("element", s.to_string()), ("norm", exact(&total))]);
        }
    }
    let count = || vec![("elements", ball.len().to_string())];
    report.check(
        "orbit norm of the sum is the sum of orbit norms",
        bad_add.is_none(),
        bad_add.unwrap_or_else(count),
        "l1 direct sum of the factor actions",
    );
    report.check(
        "orbit norm matches word length plus |a-exponent|",
        bad_oracle.is_none(),
        bad_oracle.unwrap_or_else(count),
        "free-space action on a quasi-tree plus a line",
    );
    report.check(
        "orbit norm bounds word length from above",
        bad_lower.is_none(),
        bad_lower.unwrap_or_else(count),
        "orbit lower bound (1/C) d(s.o, o) - NC",
    );
    let pairs = pairs_within(&ball, radius);
    let r = verify_cocycle(&sum, &group, &pairs).map_err(input_err)?;
    report.check(
        "cocycle identity",
        r.passed(),
        identity_witness(&r),
        "componentwise sigma(s)(v_1, ..., v_N)",
    );
    report.set("group", json!(group.name()));
    Ok(())
}

fn growth_json<T: Scalar>(g: &OrbitGrowth<T>) -> Value {
    let rows: Vec<Value> = g
        .rows
        .iter()
        .map(|r| {
            json!({
                "length": r.length,
                "count": r.count,
                "min": norm_value(&r.min_norm_pow, g.p),
                "max": norm_value(&r.max_norm_pow, g.p),
            })
        })
        .collect();
    json!({
        "rows": rows,
        "fitted_a": g.fitted_a.map(|a| format!("{a:.6}")),
        "unit_constant_holds": g.unit_constant_holds,
        "proper_evidence": g.proper_evidence(),
        "label": "finite-ball evidence, not a proof",
    })
}

fn scenario_orbit_growth(config: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let group = group_or(config, "free:2")?;
    let radius = config.radius.unwrap_or(5);
    let maxlen = config.maxlen.unwrap_or(radius / 2).min(radius);
    let action = FreeSpaceAction::on_cayley_ball(group.clone(), radius, config.cap).map_err(input_err)?;
    let growth = orbit_growth_report::<Rational>(&action, &group, maxlen, config.cap).map_err(input_err)?;
    let exact_rows = growth.rows.iter().all(|r| {
        let l = Rational::from_int(r.length as i64);
        r.min_norm_pow == l && r.max_norm_pow == l
    });
    let free = group.name().starts_with("free:");
    if free {
        report.check(
            "free-space orbit norms equal word length",
            exact_rows && growth.fitted_a == Some(1.0),
            vec![
                ("fitted_a", format!("{:?}", growth.fitted_a)),
                ("rows", growth.rows.len().to_string()),
            ],
            "orbit maps are quasi-isometric embeddings",
        );
    } else {
        report.check(
            "free-space orbit norms are bounded below",
            growth.proper_evidence(),
            vec![("fitted_a", format!("{:?}", growth.fitted_a))],
            "orbit maps are quasi-isometric embeddings",
        );
    }
    report.set("free_space", growth_json(&growth));

    let (d, induced) = dihedral_induced_action()?;
    let d_growth = orbit_growth_report(&induced, &d, 8, config.cap).map_err(input_err)?;
    let b_tilde = induced.lower_bound_constant(&Rational::from_int(0));
    let envelope = d_growth
        .rows
        .iter()
        .all(|r| r.min_norm_pow >= Rational::from_int(r.length as i64) - b_tilde.clone());
    report.check(
        "induced dihedral orbits stay above |s| - B~",
        envelope,
        vec![
            ("B_tilde", exact(&b_tilde)),
            ("fitted_a", format!("{:?}", d_growth.fitted_a)),
        ],
        "||sigma~(s)0|| >= |s| - B~",
    );
    report.set("induced_dihedral", growth_json(&d_growth));

    let trivial = orbit_growth_report::<Rational>(&TrivialAction { p: 1 }, &group, maxlen.min(2), config.cap)
        .map_err(input_err)?;
    report.check(
        "trivial action is flagged as not proper",
        !trivial.proper_evidence(),
        vec![("fitted_a", format!("{:?}", trivial.fitted_a))],
        "proper actions have unbounded orbits",
    );
    report.set("trivial", growth_json(&trivial));
    Ok(())
}

fn scenario_renorming(config: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let action = MatrixAction::<Rational>::swap_scaling();
    let group = action.group().clone();
    let elements = group.elements().map_err(input_err)?;
    let shared: SharedAction<Rational> = Arc::new(action.clone());
    let renormed = RenormedAction::new(shared, &group).map_err(input_err)?;

    let mut rng = seeded_rng(config.seed);
    let pool = [Index::Int(0), Index::Int(1)];
    let vectors: Vec<SparseVector<Rational>> = (0..config.samples).map(|_| random_vector(&pool, 2, &mut rng)).collect();
    let c = action.lipschitz_bound();
    let mut bad_iso = None;
    let mut bad_equiv = None;
    let mut non_isometric = None;
    for (k, v) in vectors.iter().enumerate() {
        let plain = action.norm_pow(v).map_err(input_err)?;
        let renorm = renorm_sup(&action, &elements, v).map_err(input_err)?;
        if !(plain <= renorm && renorm <= c.clone() * plain.clone()) && bad_equiv.is_none() {
            bad_equiv = Some(vec![
                ("sample", k.to_string()),
                ("norm", exact(&plain)),
                ("renormed", exact(&renorm)),
            ]);
        }
        for s in &elements {
            let moved = action.apply_linear(s, v).map_err(input_err)?;
            let after = renormed.norm_pow(&moved).map_err(input_err)?;
            if after != renorm && bad_iso.is_none() {
                bad_iso = Some(vec![
                    ("sample", k.to_string()),
                    ("element", s.to_string()),
                    ("before", exact(&renorm)),
                    ("after", exact(&after)),
                ]);
            }
            let plain_after = action.norm_pow(&moved).map_err(input_err)?;
            if plain_after != plain && non_isometric.is_none() {
                non_isometric = Some(vec![
                    ("sample", k.to_string()),
                    ("before", exact(&plain)),
                    ("after", exact(&plain_after)),
                ]);
            }
        }
    }
    let count = || vec![("samples", vectors.len().to_string())];
    report.check(
        "original representation is not isometric",
        non_isometric.is_some(),
        non_isometric.unwrap_or_else(count),
        "uniformly bounded representation with C = 2",
    );
    report.check(
        "renormed action is isometric",
        bad_iso.is_none(),
        bad_iso.unwrap_or_else(count),
        "||v||_E = sup_s ||pi(s)v|| makes pi isometric",
    );
    report.check(
        "renormed norm is equivalent with constant C",
        bad_equiv.is_none(),
        bad_equiv.unwrap_or_else(|| vec![("C", exact(&c)), ("samples", vectors.len().to_string())]),
        "||v|| <= ||v||_E <= C ||v||",
    );
    let pairs: Vec<_> = elements
        .iter()
        .flat_map(|s| elements.iter().map(move |t| (s.clone(), t.clone())))
        .collect();
    let r = verify_cocycle(&renormed, &group, &pairs).map_err(input_err)?;
    report.check(
        "cocycle identity",
        r.passed(),
        identity_witness(&r),
        "b(st) = pi(s)b(t) + b(s)",
    );
    report.set("lipschitz_bound", json!(exact(&c)));
    Ok(())
}

/// One corpus entry.
fn write_graph(dir: &Path, name: &str, pg: &PointedGraph, labels: Option<&[String]>) -> Result<(), CliError> {
    let file = pg.to_file();
    let text = serde_json::to_string_pretty(&file).expect("graph files serialize") + "\n";
    fs::write(dir.join(format!("{name}.json")), text).map_err(|e| CliError::Output(e.to_string()))?;
    if let Some(labels) = labels {
        let text = serde_json::to_string_pretty(labels).expect("labels serialize") + "\n";
        fs::write(dir.join(format!("{name}.labels.json")), text).map_err(|e| CliError::Output(e.to_string()))?;
    }
    Ok(())
}

pub fn cmd_demo(config: &RunConfig) -> Result<Report, CliError> {
    let dir = config.output.clone().unwrap_or_else(|| PathBuf::from("qtf-demo"));
    fs::create_dir_all(&dir).map_err(|e| CliError::Output(e.to_string()))?;
    let mut entries: Vec<(String, PointedGraph, Option<Vec<String>>)> = Vec::new();
    for n in [3, 5, 8] {
        entries.push((format!("path_{n}"), path(n), None));
    }
    for n in 3..=8 {
        entries.push((format!("cycle_{n}"), cycle(n), None));
    }
    entries.push(("star_4".into(), star(4), None));
    for k in 2..=4 {
        entries.push((format!("grid_2x{k}"), grid(2, k), None));
    }
    let mut rng = seeded_rng(config.seed);
    for k in 0..3 {
        entries.push((format!("random_tree_{k}"), random_tree(12, &mut rng), None));
    }
    let radius = config.radius.unwrap_or(3);
    let mut specs: Vec<String> = vec!["free:2".into(), "cyclic:6".into(), "product(cyclic:2,cyclic:3)".into()];
    specs.extend(config.extra_groups.iter().cloned());
    for spec in &specs {
        let g = parse_group_spec(spec).map_err(input_err)?;
        let tag: String = spec
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        let ball = cayley_ball(&g, radius, config.cap).map_err(input_err)?;
        let labels: Vec<String> = ball.elements.iter().map(|x| x.to_string()).collect();
        entries.push((format!("cayley_{tag}_r{radius}"), ball.graph, Some(labels)));
        if let Some((a, b)) = g.free_factors() {
            if a.order().is_some() && b.order().is_some() {
                let tree = bass_serre_ball(&g, radius + 2, config.cap).map_err(input_err)?;
                entries.push((
                    format!("bass_serre_{tag}_r{}", radius + 2),
                    tree.graph,
                    Some(tree.labels),
                ));
            }
        }
    }

    let mut report = Report::new(config);
    let mut files = Vec::new();
    for (name, pg, labels) in &entries {
        write_graph(&dir, name, pg, labels.as_deref())?;
        files.push(json!({ "name": name, "vertices": pg.vertex_count(), "edges": pg.edges().len() }));
        if pg.vertex_count() <= 60 {
            let qm = build_quotient(pg).map_err(input_err)?;
            let defect = four_point_defect(&qm);
            report.check(
                &format!("{name}: four-point defect is nonpositive"),
                defect <= 0,
                vec![("defect", defect.to_string())],
                "quotient of a quasi-tree is an R-tree",
            );
        } else {
            report.skip(
                &format!("{name}: four-point defect is nonpositive"),
                "more than 60 vertices; run analyze on the file",
                "quotient of a quasi-tree is an R-tree",
            );
        }
    }
    report.set("files", json!(files));
    report.set("directory", json!(dir.display().to_string()));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_echo() {
        let cli = Cli::try_parse_from(["qtf", "verify-action", "lemma72", "--p", "2", "--maxlen", "4"]).unwrap();
        let config = RunConfig::from(cli.command);
        assert_eq!(config.scenario.as_deref(), Some("lemma72"));
        assert_eq!(config.p, 2);
        assert_eq!(config.maxlen, Some(4));
    }

    #[test]
    fn unknown_scenario_is_input_error() {
        let err = run(&RunConfig::scenario("lemma99")).unwrap_err();
        assert!(matches!(err, CliError::Input(_)));
    }

    #[test]
    fn failed_checks_carry_witnesses() {
        let mut report = Report::new(&RunConfig::new("analyze"));
        report.check("x", false, vec![], "anchor");
        assert!(!report.checks[0].witness.is_empty());
        let report = report.finish();
        assert_eq!(report.summary.failed, 1);
    }

    #[test]
    fn renorming_scenario_passes() {
        let report = run(&RunConfig::scenario("cor73")).unwrap();
        assert!(!report.failed(), "{}", report.to_json());
    }

    #[test]
    fn small_free_product_scenario() {
        let config = RunConfig {
            maxlen: Some(4),
            p: 2,
            ..RunConfig::scenario("lemma72")
        };
        let report = run(&config).unwrap();
        assert!(!report.failed(), "{}", report.to_json());
    }
}
