use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netstab::faber_bounds::{stability_report, BoundError, ReportOptions};
use netstab::graph::{apply_delta, bfs_distances, write_edge_list, MatrixKind, NodeId};
use netstab::model::{sample_graph, LogisticModel};
use netstab::FunctionDescriptor;

use netstab_cli::builders::LoadedGraph;
use netstab_cli::distances::{rho_curve, tracked_row, tracking_matrix};
use netstab_cli::experiment::{
    build_delta, choose_region, fmt_num, parse_function, parse_kind, parse_model_spec,
    run_experiment, write_atomic, Cause, ExperimentConfig, ExperimentError, GraphSource,
    Perturbation, RegionChoice, ReweightScope,
};

#[derive(Parser)]
#[command(
    name = "netstab",
    version,
    about = "Stability bounds for matrix-function indices of perturbed networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bounds on the change of f(M)_kk for every node (or the listed ones).
    Bounds(BoundsArgs),
    /// Hop distances tracked by Lanczos from one node, next to exact BFS.
    Distances(DistancesArgs),
    /// Writes the perturbed graph as an edge list.
    Perturb(PerturbArgs),
    /// Bounds against actual variations, relabeled by distance from S.
    Experiment(ExperimentArgs),
    /// Samples a graph from the logistic attachment model.
    Genmodel(GenmodelArgs),
    /// Fraction of connected pairs whose tracked distance is wrong.
    Rho(RhoArgs),
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Edge list, or MatrixMarket when the name ends in .mtx.
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
    /// Two 111-node cycles joined by one directed edge.
    #[arg(long)]
    two_cycles: bool,
    /// One sample of the logistic model: N or N:SLOPE.
    #[arg(long, value_name = "SPEC")]
    model: Option<String>,
}

#[derive(Args, Clone)]
struct GraphArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Treat edge-list lines as directed edges.
    #[arg(long)]
    directed: bool,
    /// Number of the first node in edge-list files.
    #[arg(long, default_value_t = 0)]
    base_index: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GraphArgs {
    fn source(&self) -> Result<GraphSource, Failure> {
        let s = &self.source;
        if let Some(path) = &s.graph {
            Ok(GraphSource::File {
                path: path.clone(),
                directed: self.directed,
                base_index: self.base_index,
            })
        } else if s.two_cycles {
            Ok(GraphSource::TwoCycles)
        } else {
            parse_model_spec(s.model.as_deref().unwrap_or_default()).map_err(Failure::precondition)
        }
    }

    fn load(&self) -> Result<(GraphSource, LoadedGraph), Failure> {
        let source = self.source()?;
        let loaded = source.load(self.seed)?;
        Ok((source, loaded))
    }
}

#[derive(Args, Clone)]
struct MatrixArgs {
    #[arg(long, default_value = "plain", value_parser = parse_kind)]
    kind: MatrixKind,
    #[arg(long = "f", default_value = "exp", value_parser = parse_function)]
    function: FunctionDescriptor,
}

#[derive(Args, Clone)]
struct PerturbationArgs {
    /// clique:M, reweight:M:ADD, delta:FILE or none.
    #[arg(long)]
    perturb: Option<Perturbation>,
    /// Edges reweighted by reweight:M:ADD.
    #[arg(long, default_value = "inside")]
    scope: ReweightScope,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    matrix: MatrixArgs,
    #[command(flatten)]
    perturbation: PerturbationArgs,
    #[arg(long, default_value = "auto")]
    region: RegionChoice,
    /// Comma-separated node numbers; all nodes when absent.
    #[arg(long, value_delimiter = ',')]
    nodes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Output CSV file; standard output when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DistancesArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Starting node number.
    #[arg(long)]
    node: usize,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PerturbArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    matrix: MatrixArgs,
    #[command(flatten)]
    perturbation: PerturbationArgs,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    matrix: MatrixArgs,
    #[command(flatten)]
    perturbation: PerturbationArgs,
    #[arg(long, default_value = "auto")]
    region: RegionChoice,
    /// Lanczos steps for sampled actuals on large graphs.
    #[arg(long, default_value_t = 60)]
    steps: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Largest graph handled with dense matrices.
    #[arg(long, default_value_t = 3000)]
    dense_limit: usize,
    /// Writes PREFIX.csv, PREFIX_isim.csv and PREFIX_summary.txt.
    #[arg(long, value_name = "PREFIX")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenmodelArgs {
    /// N or N:SLOPE.
    #[arg(long, value_name = "SPEC")]
    model: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RhoArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Comma-separated step counts.
    #[arg(long, value_delimiter = ',', required = true)]
    steps: Vec<usize>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure {
    precondition: bool,
    message: String,
}

impl Failure {
    fn precondition(message: impl Into<String>) -> Self {
        Failure {
            precondition: true,
            message: message.into(),
        }
    }
}

impl From<Cause> for Failure {
    fn from(e: Cause) -> Self {
        Failure {
            precondition: e.is_precondition(),
            message: e.to_string(),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure {
            precondition: e.is_precondition(),
            message: e.to_string(),
        }
    }
}

macro_rules! cause_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Cause::from(e).into()
            }
        }
    )*};
}

cause_from!(
    netstab::GraphError,
    netstab::KrylovError,
    BoundError,
    io::Error,
    netstab::model::ModelError
);

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_atomic(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn hops(h: Option<usize>) -> String {
    h.map_or_else(|| "inf".into(), |v| v.to_string())
}

fn bounds(args: BoundsArgs) -> Result<(), Failure> {
    let (_, loaded) = args.graph.load()?;
    let g = &loaded.graph;
    let perturbation = args
        .perturbation
        .perturb
        .clone()
        .unwrap_or(Perturbation::None);
    let delta = build_delta(
        g,
        &perturbation,
        &args.matrix.function,
        args.matrix.kind,
        args.perturbation.scope,
        loaded.base_index,
    )?;
    let perturbed = apply_delta(g, &delta)?;
    let region = choose_region(g, &perturbed, args.matrix.kind, args.region, args.tol)?;
    let nodes: Vec<NodeId> = match &args.nodes {
        Some(list) => list
            .iter()
            .map(|&v| loaded.node(v))
            .collect::<Result<_, _>>()?,
        None => (0..g.n_nodes()).collect(),
    };
    let pairs: Vec<(NodeId, NodeId)> = nodes.iter().map(|&k| (k, k)).collect();
    let opts = ReportOptions {
        region: Some(region),
        tol: args.tol,
        ..ReportOptions::default()
    };
    let reports = stability_report(
        g,
        &delta,
        args.matrix.kind,
        &args.matrix.function,
        &pairs,
        &opts,
    )?;
    let mut text = String::from("node,dist_k_S,dist_T_k,delta_eff,bound,tau_or_eps\n");
    for (&k, report) in nodes.iter().zip(reports) {
        match report {
            Ok(r) => text.push_str(&format!(
                "{},{},{},{},{},{}\n",
                g.label(k),
                hops(r.dist_k_s),
                hops(r.dist_t_l),
                r.delta_effective
                    .map_or_else(|| "inf".into(), |d| d.to_string()),
                fmt_num(r.bound),
                r.params.tau_or_eps().map_or_else(|| "nan".into(), fmt_num)
            )),
            Err(BoundError::NodeInPerturbedSet { .. }) => {
                text.push_str(&format!("{},,,,inf,nan\n", g.label(k)))
            }
            Err(e) => return Err(e.into()),
        }
    }
    emit(&args.out, &text)
}

fn distances(args: DistancesArgs) -> Result<(), Failure> {
    if args.steps == 0 {
        return Err(Failure::precondition("steps must be positive"));
    }
    let (_, loaded) = args.graph.load()?;
    let g = &loaded.graph;
    let k = loaded.node(args.node)?;
    let tracked = tracked_row(g, &tracking_matrix(g), k, args.steps)?;
    let exact = bfs_distances(g, k, false);
    let mut text = String::from("node,tracked,exact\n");
    for (m, (t, e)) in tracked.iter().zip(&exact).enumerate() {
        let shown = if *t >= args.steps && e.is_none_or(|d| d >= args.steps) {
            format!(">={}", args.steps)
        } else {
            t.to_string()
        };
        text.push_str(&format!("{},{},{}\n", g.label(m), shown, hops(*e)));
    }
    emit(&args.out, &text)
}

fn perturb(args: PerturbArgs) -> Result<(), Failure> {
    let (_, loaded) = args.graph.load()?;
    let g = &loaded.graph;
    let perturbation = args
        .perturbation
        .perturb
        .clone()
        .unwrap_or(Perturbation::None);
    let delta = build_delta(
        g,
        &perturbation,
        &args.matrix.function,
        args.matrix.kind,
        args.perturbation.scope,
        loaded.base_index,
    )?;
    let perturbed = apply_delta(g, &delta)?;
    emit(&args.out, &write_edge_list(&perturbed, loaded.base_index))
}

fn experiment(args: ExperimentArgs) -> Result<(), Failure> {
    let source = args.graph.source()?;
    let mut cfg = ExperimentConfig::new(source, args.matrix.kind, args.matrix.function);
    cfg.perturbation = args.perturbation.perturb;
    cfg.scope = args.perturbation.scope;
    cfg.steps = args.steps;
    cfg.out = args.out;
    cfg.seed = args.graph.seed;
    cfg.region = args.region;
    cfg.tol = args.tol;
    cfg.dense_limit = args.dense_limit;
    let outcome = run_experiment(&cfg)?;
    if cfg.out.is_none() {
        emit(&None, &netstab_cli::experiment::rows_csv(&outcome.rows))?;
    }
    eprintln!("max_violation {}", fmt_num(outcome.max_violation));
    for f in &outcome.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn genmodel(args: GenmodelArgs) -> Result<(), Failure> {
    let GraphSource::Model { n_nodes, slope } =
        parse_model_spec(&args.model).map_err(Failure::precondition)?
    else {
        unreachable!("model specs parse to model sources")
    };
    let m = LogisticModel::uniform(n_nodes, slope, args.seed)?;
    emit(&args.out, &write_edge_list(&sample_graph(&m), 0))
}

fn rho(args: RhoArgs) -> Result<(), Failure> {
    if args.steps.contains(&0) {
        return Err(Failure::precondition("step counts must be positive"));
    }
    let (_, loaded) = args.graph.load()?;
    let curve = rho_curve(&loaded.graph, &args.steps)?;
    let mut text = String::from("steps,mismatched,connected_pairs,rho\n");
    for c in curve {
        text.push_str(&format!(
            "{},{},{},{}\n",
            c.steps,
            c.mismatched,
            c.connected_pairs,
            fmt_num(c.value())
        ));
    }
    emit(&args.out, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bounds(a) => bounds(a),
        Command::Distances(a) => distances(a),
        Command::Perturb(a) => perturb(a),
        Command::Experiment(a) => experiment(a),
        Command::Genmodel(a) => genmodel(a),
        Command::Rho(a) => rho(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(if f.precondition { 2 } else { 1 })
        }
    }
}
