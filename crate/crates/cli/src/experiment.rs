//! Perturbation experiments: bounds against actual variations, node
//! relabeling by distance from the perturbation, ranking similarity, and
//! CSV output.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use netstab::faber_bounds::{stability_report, BoundError, DeltaDistances, ReportOptions};
use netstab::graph::{
    apply_delta, build_matrix, EdgeAction, EdgeChange, EdgeDelta, Graph, GraphError, Hops,
    MatrixKind, NodeId,
};
use netstab::krylov::{estimate_entry, KrylovError};
use netstab::model::{sample_graph, LogisticModel, ModelError};
use netstab::oracle::{dense_function, OracleError};
use netstab::spectral::{enclosing_region, Region, SpectralError};
use netstab::{Degree, FunctionDescriptor};

use crate::builders::{build_two_cycles, load_graph, two_cycles_bridge, LoadedGraph};
use crate::ranking::{
    centralities, isim_curve, least_central_nodes, ranking, RankingError, CENTRALITY_STEPS,
    DENSE_CENTRALITY_LIMIT,
};

/// Pairs sampled for "actual" on graphs above the dense limit.
pub const SAMPLED_PAIRS: usize = 200;

/// Extra Lanczos steps used to check convergence of sampled actuals.
const CONVERGENCE_EXTRA_STEPS: usize = 10;

/// What went wrong, independent of where.
#[derive(Debug, Error)]
pub enum Cause {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{0}")]
    Argument(String),
}

impl Cause {
    /// Whether the input, not the computation, is at fault.
    pub fn is_precondition(&self) -> bool {
        match self {
            Cause::Graph(e) => e.is_precondition(),
            Cause::Bound(e) => e.is_precondition(),
            Cause::Ranking(RankingError::Graph(e)) => e.is_precondition(),
            Cause::Ranking(RankingError::Argument(_)) => true,
            Cause::Model(_) | Cause::Argument(_) => true,
            Cause::Spectral(SpectralError::Negative { .. }) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Perturb,
    Region,
    Bounds,
    Actual,
    Ranking,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Load => "load",
            Stage::Perturb => "perturb",
            Stage::Region => "region",
            Stage::Bounds => "bounds",
            Stage::Actual => "actual",
            Stage::Ranking => "ranking",
            Stage::Output => "output",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage: {cause}")]
pub struct ExperimentError {
    pub stage: Stage,
    #[source]
    pub cause: Cause,
}

impl ExperimentError {
    pub fn is_precondition(&self) -> bool {
        self.cause.is_precondition()
    }
}

fn at<E: Into<Cause>>(stage: Stage) -> impl FnOnce(E) -> ExperimentError {
    move |e| ExperimentError {
        stage,
        cause: e.into(),
    }
}

fn argument(stage: Stage, msg: impl Into<String>) -> ExperimentError {
    ExperimentError {
        stage,
        cause: Cause::Argument(msg.into()),
    }
}

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File {
        path: PathBuf,
        directed: bool,
        base_index: usize,
    },
    TwoCycles,
    /// One sample of the logistic model with uniform centralities.
    Model {
        n_nodes: usize,
        slope: f64,
    },
}

impl GraphSource {
    pub fn load(&self, seed: u64) -> Result<LoadedGraph, Cause> {
        match self {
            GraphSource::File {
                path,
                directed,
                base_index,
            } => Ok(load_graph(path, *directed, *base_index)?),
            GraphSource::TwoCycles => Ok(LoadedGraph::new(build_two_cycles(), 1)),
            GraphSource::Model { n_nodes, slope } => {
                let m = LogisticModel::uniform(*n_nodes, *slope, seed)?;
                Ok(LoadedGraph::new(sample_graph(&m), 0))
            }
        }
    }
}

/// Parses `N` or `N:SLOPE`.
pub fn parse_model_spec(s: &str) -> Result<GraphSource, String> {
    let (n, slope) = match s.split_once(':') {
        Some((n, a)) => (
            n,
            a.parse::<f64>()
                .map_err(|_| format!("bad model slope {a:?}"))?,
        ),
        None => (s, 1.0),
    };
    let n_nodes = n
        .parse::<usize>()
        .map_err(|_| format!("bad model size {n:?}"))?;
    if n_nodes == 0 {
        return Err("model size must be positive".into());
    }
    Ok(GraphSource::Model { n_nodes, slope })
}

pub fn parse_kind(s: &str) -> Result<MatrixKind, String> {
    match s {
        "plain" => Ok(MatrixKind::PlainAdjacency),
        "normalized" => Ok(MatrixKind::NormalizedSymmetric),
        "transition" => Ok(MatrixKind::TransitionOut),
        _ => Err(format!(
            "unknown matrix kind {s:?} (plain, normalized, transition)"
        )),
    }
}

pub fn kind_name(kind: MatrixKind) -> &'static str {
    match kind {
        MatrixKind::PlainAdjacency => "plain",
        MatrixKind::NormalizedSymmetric => "normalized",
        MatrixKind::TransitionOut => "transition",
    }
}

/// Parses `exp` or `resolvent:ALPHA`.
pub fn parse_function(s: &str) -> Result<FunctionDescriptor, String> {
    if s == "exp" {
        return Ok(FunctionDescriptor::Exp);
    }
    if let Some(a) = s.strip_prefix("resolvent:") {
        let alpha: f64 = a
            .parse()
            .map_err(|_| format!("bad resolvent parameter {a:?}"))?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(format!("resolvent parameter must be positive, got {alpha}"));
        }
        return Ok(FunctionDescriptor::resolvent(alpha));
    }
    Err(format!("unknown function {s:?} (exp, resolvent:ALPHA)"))
}

/// How the perturbation is built.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    None,
    /// Adds every missing edge among the `m` least central nodes.
    Clique {
        m: usize,
    },
    /// Adds `addend` to the weights of edges around the `m` least central
    /// nodes and their out-neighbors.
    Reweight {
        m: usize,
        addend: f64,
    },
    /// Edge changes read from a file.
    DeltaFile(PathBuf),
    /// Edge changes in internal ids.
    Explicit(EdgeDelta),
}

impl FromStr for Perturbation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.splitn(2, ':').collect();
        let count = |t: &str| -> Result<usize, String> {
            match t.parse::<usize>() {
                Ok(m) if m >= 1 => Ok(m),
                _ => Err(format!("node count must be a positive integer, got {t:?}")),
            }
        };
        match parts.as_slice() {
            ["none"] => Ok(Perturbation::None),
            ["clique", m] => Ok(Perturbation::Clique { m: count(m)? }),
            ["reweight", rest] => {
                let (m, add) = rest.split_once(':').ok_or("expected reweight:M:ADD")?;
                let addend: f64 = add.parse().map_err(|_| format!("bad addend {add:?}"))?;
                if !(addend > 0.0 && addend.is_finite()) {
                    return Err(format!("addend must be positive, got {addend}"));
                }
                Ok(Perturbation::Reweight {
                    m: count(m)?,
                    addend,
                })
            }
            ["delta", path] if !path.is_empty() => Ok(Perturbation::DeltaFile(PathBuf::from(path))),
            _ => Err(format!(
                "unknown perturbation {s:?} (clique:M, reweight:M:ADD, delta:FILE, none)"
            )),
        }
    }
}

/// Which edges a reweighting touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReweightScope {
    /// Both endpoints in the selected set.
    #[default]
    Inside,
    /// At least one endpoint in the selected set.
    Touching,
}

impl FromStr for ReweightScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "inside" => Ok(ReweightScope::Inside),
            "touching" => Ok(ReweightScope::Touching),
            _ => Err(format!("unknown reweight scope {s:?} (inside, touching)")),
        }
    }
}

/// Region used by the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegionChoice {
    /// Segment for normalized and unweighted symmetric plain matrices,
    /// disk otherwise.
    #[default]
    Auto,
    Disk,
    Segment,
}

impl FromStr for RegionChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(RegionChoice::Auto),
            "disk" => Ok(RegionChoice::Disk),
            "segment" => Ok(RegionChoice::Segment),
            _ => Err(format!("unknown region {s:?} (auto, disk, segment)")),
        }
    }
}

/// Reads `src dst add|remove|reweight [w]` lines (`#` comments), with node
/// numbers offset by `base_index`. Undirected graphs get mirrored changes.
pub fn parse_delta<R: Read>(
    input: R,
    g: &Graph,
    base_index: usize,
) -> Result<EdgeDelta, GraphError> {
    let mut changes = Vec::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let parse_err = |msg: String| GraphError::Parse { line: lineno, msg };
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(parse_err(format!(
                "expected `src dst action [weight]`, got {text:?}"
            )));
        }
        let node = |t: &str| -> Result<NodeId, GraphError> {
            let v: usize = t
                .parse()
                .map_err(|_| parse_err(format!("bad node {t:?}")))?;
            match v.checked_sub(base_index) {
                Some(id) if id < g.n_nodes() => Ok(id),
                _ => Err(GraphError::NodeOutOfRange {
                    node: v,
                    n_nodes: g.n_nodes(),
                }),
            }
        };
        let (src, dst) = (node(fields[0])?, node(fields[1])?);
        let weight = match fields.get(3) {
            Some(t) => {
                let w: f64 = t
                    .parse()
                    .map_err(|_| parse_err(format!("bad weight {t:?}")))?;
                if !(w > 0.0 && w.is_finite()) {
                    return Err(GraphError::InvalidWeight {
                        line: lineno,
                        weight: w,
                    });
                }
                Some(w)
            }
            None => None,
        };
        let action = match (fields[2], weight) {
            ("add", w) => EdgeAction::Add(w.unwrap_or(1.0)),
            ("remove", None) => EdgeAction::Remove,
            ("reweight", Some(w)) => EdgeAction::Reweight(w),
            ("reweight", None) => return Err(parse_err("reweight needs a weight".into())),
            ("remove", Some(_)) => return Err(parse_err("remove takes no weight".into())),
            (a, _) => return Err(parse_err(format!("unknown action {a:?}"))),
        };
        changes.push(EdgeChange { src, dst, action });
    }
    let delta = if g.is_directed() {
        EdgeDelta::new(changes)
    } else {
        EdgeDelta::symmetric(changes)
    };
    delta.validate(g)?;
    Ok(delta)
}

/// Turns a recipe into concrete edge changes on `g`.
pub fn build_delta(
    g: &Graph,
    perturbation: &Perturbation,
    f: &FunctionDescriptor,
    kind: MatrixKind,
    scope: ReweightScope,
    base_index: usize,
) -> Result<EdgeDelta, Cause> {
    let delta = match perturbation {
        Perturbation::None => EdgeDelta::empty(),
        Perturbation::Explicit(d) => d.clone(),
        Perturbation::DeltaFile(path) => {
            parse_delta(File::open(path).map_err(GraphError::from)?, g, base_index)?
        }
        Perturbation::Clique { m } => {
            let nodes = least_central_nodes(g, f, kind, *m)?;
            let mut changes = Vec::new();
            for &i in &nodes {
                for &j in &nodes {
                    if i != j && !g.has_edge(i, j) {
                        changes.push(EdgeChange {
                            src: i,
                            dst: j,
                            action: EdgeAction::Add(1.0),
                        });
                    }
                }
            }
            EdgeDelta::new(changes)
        }
        Perturbation::Reweight { m, addend } => {
            let least = least_central_nodes(g, f, kind, *m)?;
            let mut selected: BTreeSet<NodeId> = least.iter().copied().collect();
            for &i in &least {
                selected.extend(g.out_neighbors(i).iter().copied());
            }
            let changes = g
                .adjacency()
                .iter()
                .filter(|&(i, j, _)| match scope {
                    ReweightScope::Inside => selected.contains(&i) && selected.contains(&j),
                    ReweightScope::Touching => selected.contains(&i) || selected.contains(&j),
                })
                .map(|(src, dst, w)| EdgeChange {
                    src,
                    dst,
                    action: EdgeAction::Reweight(w + addend),
                })
                .collect();
            EdgeDelta::new(changes)
        }
    };
    delta.validate(g)?;
    Ok(delta)
}

fn is_weighted(g: &Graph) -> bool {
    g.edges().any(|(_, _, w)| w != 1.0)
}

/// Region for the bounds on `g` perturbed into `perturbed`.
pub fn choose_region(
    g: &Graph,
    perturbed: &Graph,
    kind: MatrixKind,
    choice: RegionChoice,
    tol: f64,
) -> Result<Region, Cause> {
    let a = build_matrix(g, kind)?;
    let at = build_matrix(perturbed, kind)?;
    let region = enclosing_region(&a, Some(&at), kind, tol)?;
    let as_disk = |r: Region| match r {
        Region::Segment {
            center,
            half_length,
        } => Region::Disk {
            center,
            radius: half_length,
        },
        other => other,
    };
    match choice {
        RegionChoice::Disk => Ok(as_disk(region)),
        RegionChoice::Segment => match region {
            Region::Segment { .. } => Ok(region),
            _ => Err(Cause::Argument(
                "a segment region needs symmetric matrices".into(),
            )),
        },
        RegionChoice::Auto => {
            if kind == MatrixKind::PlainAdjacency && (is_weighted(g) || is_weighted(perturbed)) {
                Ok(as_disk(region))
            } else {
                Ok(region)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: GraphSource,
    pub kind: MatrixKind,
    pub function: FunctionDescriptor,
    /// `None` on the two-cycles graph means adding the reverse bridge; on any
    /// other graph it means an empty perturbation.
    pub perturbation: Option<Perturbation>,
    /// Lanczos steps for sampled actuals on large graphs.
    pub steps: usize,
    /// Output files are `PREFIX.csv`, `PREFIX_isim.csv`, `PREFIX_summary.txt`.
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub region: RegionChoice,
    pub scope: ReweightScope,
    pub tol: f64,
    /// Largest graph whose actual variations come from dense matrices.
    pub dense_limit: usize,
}

impl ExperimentConfig {
    pub fn new(source: GraphSource, kind: MatrixKind, function: FunctionDescriptor) -> Self {
        ExperimentConfig {
            source,
            kind,
            function,
            perturbation: None,
            steps: 60,
            out: None,
            seed: 0,
            region: RegionChoice::Auto,
            scope: ReweightScope::Inside,
            tol: 1e-10,
            dense_limit: 3000,
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.steps == 0 {
            return Err(argument(Stage::Load, "steps must be positive"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(argument(
                Stage::Load,
                format!("tolerance must lie in (0, 1), got {}", self.tol),
            ));
        }
        match self.perturbation {
            Some(Perturbation::Clique { m: 0 }) | Some(Perturbation::Reweight { m: 0, .. }) => {
                Err(argument(Stage::Load, "node count must be at least 1"))
            }
            Some(Perturbation::Reweight { addend, .. }) if !(addend > 0.0) => {
                Err(argument(Stage::Load, "addend must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    /// Position after relabeling, from 1.
    pub rank: usize,
    pub node: NodeId,
    pub label: String,
    pub dist_k_s: Hops,
    pub dist_t_k: Hops,
    pub delta_effective: Degree,
    /// `|f(A)_kk - f(A~)_kk|`; `None` for nodes not sampled.
    pub actual: Option<f64>,
    /// `+inf` where no bound applies.
    pub bound: f64,
    pub tau_or_eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActualMode {
    Dense,
    Sampled { pairs: usize, unconverged: usize },
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub rows: Vec<ExperimentRow>,
    /// Intersection similarity of the rankings before and after, for
    /// `kappa = 1..=n`.
    pub isim: Vec<f64>,
    pub region: Region,
    pub delta: EdgeDelta,
    pub actual_mode: ActualMode,
    /// `max(actual - bound)` over rows with both values finite.
    pub max_violation: f64,
    pub runtime_secs: f64,
    pub files: Vec<PathBuf>,
}

/// Runs a full experiment and writes its files when `cfg.out` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, ExperimentError> {
    let start = Instant::now();
    cfg.validate()?;
    let loaded = cfg.source.load(cfg.seed).map_err(|e| ExperimentError {
        stage: Stage::Load,
        cause: e,
    })?;
    let g = &loaded.graph;
    let n = g.n_nodes();

    let perturbation = match (&cfg.perturbation, &cfg.source) {
        (Some(p), _) => p.clone(),
        (None, GraphSource::TwoCycles) => {
            let (src, dst, w) = two_cycles_bridge();
            Perturbation::Explicit(EdgeDelta::new(vec![EdgeChange {
                src: dst,
                dst: src,
                action: EdgeAction::Add(w),
            }]))
        }
        (None, _) => Perturbation::None,
    };
    let delta = build_delta(
        g,
        &perturbation,
        &cfg.function,
        cfg.kind,
        cfg.scope,
        loaded.base_index,
    )
    .map_err(|e| ExperimentError {
        stage: Stage::Perturb,
        cause: e,
    })?;
    let perturbed = apply_delta(g, &delta).map_err(at(Stage::Perturb))?;

    let region = choose_region(g, &perturbed, cfg.kind, cfg.region, cfg.tol).map_err(|e| {
        ExperimentError {
            stage: Stage::Region,
            cause: e,
        }
    })?;

    let pairs: Vec<(NodeId, NodeId)> = (0..n).map(|k| (k, k)).collect();
    let opts = ReportOptions {
        region: Some(region),
        tol: cfg.tol,
        ..ReportOptions::default()
    };
    let reports = stability_report(g, &delta, cfg.kind, &cfg.function, &pairs, &opts)
        .map_err(at(Stage::Bounds))?;

    let a = build_matrix(g, cfg.kind).map_err(at(Stage::Actual))?;
    let at_m = build_matrix(&perturbed, cfg.kind).map_err(at(Stage::Actual))?;
    let (actual, before, after, actual_mode) = if n <= cfg.dense_limit {
        let (fa, fat) = rayon::join(
            || dense_function(&a.to_dense(), &cfg.function),
            || dense_function(&at_m.to_dense(), &cfg.function),
        );
        let (fa, fat) = (
            fa.map_err(at(Stage::Actual))?,
            fat.map_err(at(Stage::Actual))?,
        );
        let before: Vec<f64> = (0..n).map(|k| fa[(k, k)]).collect();
        let after: Vec<f64> = (0..n).map(|k| fat[(k, k)]).collect();
        let actual = before
            .iter()
            .zip(&after)
            .map(|(x, y)| Some((x - y).abs()))
            .collect();
        (actual, before, after, ActualMode::Dense)
    } else {
        let (actual, unconverged) = sampled_actuals(&a, &at_m, &cfg.function, cfg.steps, cfg.seed)
            .map_err(at(Stage::Actual))?;
        let before = centralities(&a, &cfg.function, DENSE_CENTRALITY_LIMIT, CENTRALITY_STEPS)
            .map_err(at(Stage::Ranking))?;
        let after = centralities(
            &at_m,
            &cfg.function,
            DENSE_CENTRALITY_LIMIT,
            CENTRALITY_STEPS,
        )
        .map_err(at(Stage::Ranking))?;
        let pairs = actual.iter().filter(|a| a.is_some()).count();
        (
            actual,
            before,
            after,
            ActualMode::Sampled { pairs, unconverged },
        )
    };

    let dists = DeltaDistances::new(g, &delta);
    let mut rows = Vec::with_capacity(n);
    for (k, report) in reports.into_iter().enumerate() {
        let row = match report {
            Ok(r) => ExperimentRow {
                rank: 0,
                node: k,
                label: g.label(k),
                dist_k_s: r.dist_k_s,
                dist_t_k: r.dist_t_l,
                delta_effective: r.delta_effective,
                actual: actual[k],
                bound: r.bound,
                tau_or_eps: r.params.tau_or_eps(),
            },
            Err(BoundError::NodeInPerturbedSet { .. }) => ExperimentRow {
                rank: 0,
                node: k,
                label: g.label(k),
                dist_k_s: dists.dist_k_s(k),
                dist_t_k: dists.dist_t_l(k),
                delta_effective: None,
                actual: actual[k],
                bound: f64::INFINITY,
                tau_or_eps: None,
            },
            Err(e) => {
                return Err(ExperimentError {
                    stage: Stage::Bounds,
                    cause: e.into(),
                })
            }
        };
        rows.push(row);
    }
    rows.sort_by_key(|r| (r.dist_k_s.is_none(), r.dist_k_s, r.node));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }

    let max_violation = rows
        .iter()
        .filter_map(|r| {
            r.actual
                .filter(|_| r.bound.is_finite())
                .map(|a| a - r.bound)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let isim = isim_curve(&ranking(&before), &ranking(&after), n);

    let mut outcome = ExperimentOutcome {
        rows,
        isim,
        region,
        delta,
        actual_mode,
        max_violation,
        runtime_secs: 0.0,
        files: Vec::new(),
    };
    outcome.runtime_secs = start.elapsed().as_secs_f64();
    if let Some(prefix) = &cfg.out {
        outcome.files = write_outputs(prefix, cfg, &loaded, &outcome).map_err(at(Stage::Output))?;
    }
    Ok(outcome)
}

/// Diagonal variations of up to [`SAMPLED_PAIRS`] random nodes by Lanczos,
/// with the number whose estimates moved by more than `1e-8` relative when
/// run with extra steps.
fn sampled_actuals(
    a: &netstab::CsrMatrix,
    at: &netstab::CsrMatrix,
    f: &FunctionDescriptor,
    steps: usize,
    seed: u64,
) -> Result<(Vec<Option<f64>>, usize), KrylovError> {
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = sample(&mut rng, n, SAMPLED_PAIRS.min(n)).into_vec();
    let results: Vec<(NodeId, f64, bool)> = nodes
        .par_iter()
        .map(|&k| {
            let diff = |s: usize| -> Result<f64, KrylovError> {
                let s = s.min(n);
                Ok((estimate_entry(f, a, k, k, s)? - estimate_entry(f, at, k, k, s)?).abs())
            };
            let coarse = diff(steps)?;
            let fine = diff(steps + CONVERGENCE_EXTRA_STEPS)?;
            let scale = estimate_entry(f, a, k, k, (steps + CONVERGENCE_EXTRA_STEPS).min(n))?
                .abs()
                .max(1.0);
            Ok((k, fine, (fine - coarse).abs() <= 1e-8 * scale))
        })
        .collect::<Result<_, KrylovError>>()?;
    let mut actual = vec![None; n];
    let mut unconverged = 0;
    for (k, v, ok) in results {
        actual[k] = Some(v);
        unconverged += usize::from(!ok);
    }
    Ok((actual, unconverged))
}

fn fmt_hops(h: Hops) -> String {
    h.map_or_else(|| "inf".into(), |v| v.to_string())
}

fn fmt_degree(d: Degree) -> String {
    d.map_or_else(|| "inf".into(), |v| v.to_string())
}

/// Seventeen significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn region_text(r: &Region) -> String {
    match r {
        Region::Disk { center, radius } => format!(
            "disk center={} radius={}",
            fmt_num(*center),
            fmt_num(*radius)
        ),
        Region::Segment {
            center,
            half_length,
        } => format!(
            "segment center={} half_length={}",
            fmt_num(*center),
            fmt_num(*half_length)
        ),
        Region::Ellipse {
            center,
            semi_major,
            semi_minor,
        } => {
            format!(
                "ellipse center={} a={} b={}",
                fmt_num(*center),
                fmt_num(*semi_major),
                fmt_num(*semi_minor)
            )
        }
    }
}

pub fn rows_csv(rows: &[ExperimentRow]) -> String {
    let mut s = String::from("rank,node,dist_k_S,dist_T_k,delta_eff,actual,bound,tau_or_eps\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.rank,
            r.label,
            fmt_hops(r.dist_k_s),
            fmt_hops(r.dist_t_k),
            fmt_degree(r.delta_effective),
            r.actual.map_or_else(|| "nan".into(), fmt_num),
            fmt_num(r.bound),
            r.tau_or_eps.map_or_else(|| "nan".into(), fmt_num),
        ));
    }
    s
}

fn summary_text(cfg: &ExperimentConfig, loaded: &LoadedGraph, out: &ExperimentOutcome) -> String {
    let g = &loaded.graph;
    let label_set = |set: &BTreeSet<NodeId>| {
        set.iter()
            .map(|&i| g.label(i))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let actual_line = match out.actual_mode {
        ActualMode::Dense => "dense".to_string(),
        ActualMode::Sampled { pairs, unconverged } => {
            format!("sampled pairs={pairs} unconverged={unconverged}")
        }
    };
    let isim_at = |k: usize| {
        out.isim
            .get(k.min(out.isim.len()).saturating_sub(1))
            .copied()
            .unwrap_or(1.0)
    };
    let mut s = String::new();
    s.push_str(&format!("nodes {}\n", g.n_nodes()));
    s.push_str(&format!("entries {}\n", g.n_entries()));
    s.push_str(&format!("directed {}\n", g.is_directed()));
    s.push_str(&format!("kind {}\n", kind_name(cfg.kind)));
    s.push_str(&format!("function {}\n", cfg.function));
    s.push_str(&format!("region {}\n", region_text(&out.region)));
    s.push_str(&format!("changed_entries {}\n", out.delta.changes().len()));
    s.push_str(&format!("sources {}\n", label_set(out.delta.sources())));
    s.push_str(&format!("tips {}\n", label_set(out.delta.tips())));
    s.push_str(&format!("actual {actual_line}\n"));
    s.push_str(&format!("max_violation {}\n", fmt_num(out.max_violation)));
    s.push_str(&format!("isim_10 {}\n", fmt_num(isim_at(10))));
    s.push_str(&format!(
        "isim_min {}\n",
        fmt_num(out.isim.iter().copied().fold(1.0, f64::min))
    ));
    s.push_str(&format!("runtime_secs {:.3}\n", out.runtime_secs));
    s
}

/// Writes `contents` to `path` through a temporary file, leaving nothing
/// behind on failure.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let result = File::create(&tmp).and_then(|mut f| {
        f.write_all(contents.as_bytes())?;
        f.sync_all()
    });
    let result = result.and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_outputs(
    prefix: &Path,
    cfg: &ExperimentConfig,
    loaded: &LoadedGraph,
    out: &ExperimentOutcome,
) -> io::Result<Vec<PathBuf>> {
    let main = with_suffix(prefix, ".csv");
    let isim = with_suffix(prefix, "_isim.csv");
    let summary = with_suffix(prefix, "_summary.txt");
    let mut isim_csv = String::from("kappa,isim\n");
    for (i, v) in out.isim.iter().enumerate() {
        isim_csv.push_str(&format!("{},{}\n", i + 1, fmt_num(*v)));
    }
    let files = [
        (main, rows_csv(&out.rows)),
        (isim, isim_csv),
        (summary, summary_text(cfg, loaded, out)),
    ];
    let mut written = Vec::new();
    for (path, text) in files {
        if let Err(e) = write_atomic(&path, &text) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}
