use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use periflex::analysis::{self, DeformationPath, TraceOptions};
use periflex::symmetry::{automorphisms_from_json, AutomorphismDocument};
use periflex::{Error, ErrorClass, Limits, PeriodicGraph, PlacementParams, SublatticeMap, Tolerances};
use serde::Serialize;
use serde_json::json;

mod svg;

#[derive(Parser)]
#[command(name = "periflex", version, about = "Periodic frameworks: symmetry, relaxation and deformation")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for generic-point sampling.
    #[arg(long, global = true, default_value_t = analysis::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true)]
    tol_pd: Option<f64>,
    #[arg(long, global = true)]
    tol_sym: Option<f64>,
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    #[arg(long, global = true)]
    tol_path: Option<f64>,
    /// Node cap for the automorphism search.
    #[arg(long, global = true)]
    max_search_nodes: Option<usize>,
    /// Largest sublattice index accepted by `relax`.
    #[arg(long, global = true)]
    max_index: Option<u64>,
    /// Write the main output to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check connectivity and the label lattice of a quotient graph.
    Validate { graph: PathBuf },
    /// Edge lengths, rigidity rank, flex dimension and Bézout count at a placement.
    Analyze {
        graph: PathBuf,
        params: PathBuf,
        /// Random points tried by the minimal rigidity test.
        #[arg(long, default_value_t = 5)]
        trials: usize,
    },
    /// Enumerate the automorphism group modulo lattice translations.
    Symmetries { graph: PathBuf },
    /// Fixed locus of the subgroup generated by the automorphisms in GENS.
    FixedLocus { graph: PathBuf, gens: PathBuf },
    /// Re-express a framework over the sublattice spanned by the columns of M.
    Relax { graph: PathBuf, params: PathBuf, sublattice: PathBuf },
    /// Trace a one-parameter deformation with constant edge lengths.
    Deform {
        graph: PathBuf,
        params: PathBuf,
        /// Restrict to the fixed locus of these automorphisms.
        #[arg(long, value_name = "FILE")]
        gens: Option<PathBuf>,
        #[arg(long, default_value_t = 25)]
        steps: usize,
        #[arg(long, default_value_t = 0.05)]
        step_size: f64,
        /// Write an SVG snapshot (d = 2 only).
        #[arg(long, value_name = "FILE")]
        svg: Option<PathBuf>,
    },
}

/// Everything that influences results, fixed once per invocation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    pub seed: u64,
    pub limits: Limits,
}

impl RunConfig {
    fn from_args(args: &ConfigArgs) -> Result<Self, CliError> {
        let defaults = Tolerances::default();
        let limits = Limits::default();
        let config = Self {
            tolerances: Tolerances {
                pd_tol: args.tol_pd.unwrap_or(defaults.pd_tol),
                sym_tol: args.tol_sym.unwrap_or(defaults.sym_tol),
                rank_rel_tol: args.tol_rank.unwrap_or(defaults.rank_rel_tol),
                path_tol: args.tol_path.unwrap_or(defaults.path_tol),
            },
            seed: args.seed,
            limits: Limits {
                automorphism_nodes: args.max_search_nodes.unwrap_or(limits.automorphism_nodes),
                coset_index: args.max_index.unwrap_or(limits.coset_index),
            },
        };
        config.tolerances.validate()?;
        if config.limits.automorphism_nodes == 0 || config.limits.coset_index == 0 {
            return Err(CliError::Usage("caps must be at least 1".into()));
        }
        Ok(config)
    }
}

#[derive(Debug)]
enum CliError {
    Lib(Error),
    Io(PathBuf, std::io::Error),
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) => match e.class() {
                ErrorClass::Domain => 1,
                ErrorClass::Parse => 2,
                ErrorClass::Dimension => 3,
                ErrorClass::Numerical => 4,
            },
            CliError::Io(..) | CliError::Usage(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Usage(msg) => f.write_str(msg),
        }
    }
}

/// What a command produced: text for humans, JSON for scripts, and an exit code.
struct Output {
    text: String,
    json: serde_json::Value,
    code: u8,
}

impl Output {
    fn ok(text: String, json: serde_json::Value) -> Self {
        Self { text, json, code: 0 }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn load_graph(path: &Path) -> Result<PeriodicGraph, CliError> {
    Ok(PeriodicGraph::from_json(&read(path)?)?)
}

fn load_params(path: &Path, g: &PeriodicGraph, config: &RunConfig) -> Result<PlacementParams, CliError> {
    let p = PlacementParams::from_json(&read(path)?, config.tolerances.pd_tol)?;
    if p.dim() != g.dim() || p.vertex_count() != g.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "params are for d={}, n={} but graph has d={}, n={}",
            p.dim(),
            p.vertex_count(),
            g.dim(),
            g.vertex_count()
        ))
        .into());
    }
    Ok(p)
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn validate(graph: &Path) -> Result<Output, CliError> {
    let g = load_graph(graph)?;
    let report = g.validate();
    let mut text = format!(
        "d={}, n={}, m={}\nconnected quotient: {}\nlabel lattice rank: {}\n",
        g.dim(),
        g.vertex_count(),
        g.edge_count(),
        report.connected,
        report.label_lattice_rank
    );
    if let Some(index) = report.label_lattice_index {
        text.push_str(&format!("label lattice index: {index}\n"));
    }
    for m in &report.messages {
        text.push_str(&format!("{m}\n"));
    }
    text.push_str(if report.is_valid() { "valid\n" } else { "invalid\n" });
    let code = if report.is_valid() { 0 } else { 1 };
    let mut json = to_json(&report);
    json["valid"] = json!(report.is_valid());
    Ok(Output { text, json, code })
}

fn analyze(graph: &Path, params: &Path, trials: usize, config: &RunConfig) -> Result<Output, CliError> {
    let g = load_graph(graph)?;
    g.require_valid()?;
    let p = load_params(params, &g, config)?;
    let report = analysis::analyze(&g, &p, trials, config.seed, &config.tolerances)?;
    let b = &report.bezout;
    let text = format!(
        "squared lengths: {}\nrigidity rank: {} of {} parameters\nflex dimension: {}\n\
         minimally rigid: {}\ncubic constraints μ: {} (loops {}), bound 3^μ = {}\nrange dn−d ≤ μ ≤ m: {}\n",
        fmt_vec(&report.lengths_sq),
        report.rigidity_rank,
        report.parameter_dim,
        report.flex_dim,
        report.minimally_rigid,
        b.mu,
        b.loops,
        b.bound,
        b.range_holds
    );
    let mut json = to_json(&report);
    json["seed"] = json!(config.seed);
    Ok(Output::ok(text, json))
}

fn symmetries(graph: &Path, config: &RunConfig) -> Result<Output, CliError> {
    let g = load_graph(graph)?;
    let group = periflex::enumerate_automorphisms(&g, config.limits.automorphism_nodes)?;
    let docs: Vec<AutomorphismDocument> = group.iter().map(|a| a.to_document()).collect();
    let mut text = format!("{} automorphisms modulo translations\n", group.len());
    for (k, a) in group.iter().enumerate() {
        text.push_str(&format!(
            "[{k}] perm {:?}  C {:?}  offsets {:?}\n",
            a.perm(),
            a.matrix().to_rows(),
            a.offsets()
        ));
    }
    Ok(Output::ok(text, json!({ "order": group.len(), "automorphisms": docs })))
}

fn fixed_locus(graph: &Path, gens: &Path) -> Result<Output, CliError> {
    let g = load_graph(graph)?;
    let gens = automorphisms_from_json(&read(gens)?)?;
    let fl = periflex::fixed_locus(&gens, &g)?;
    let doc = fl.locus.to_document();
    let mut text = format!(
        "subgroup order: {}\nlocus dimension: {} (of {})\nbase: ({})\n",
        fl.group.len(),
        fl.locus.dim(),
        g.parameter_dim(),
        doc.base.join(", ")
    );
    for (k, dir) in doc.directions.iter().enumerate() {
        text.push_str(&format!("direction {k}: ({})\n", dir.join(", ")));
    }
    text.push_str(&format!("ω positive definite at base: {}\n", fl.base_positive_definite));
    let mut json = to_json(&doc);
    json["group_order"] = json!(fl.group.len());
    json["base_positive_definite"] = json!(fl.base_positive_definite);
    Ok(Output::ok(text, json))
}

fn relax(graph: &Path, params: &Path, sublattice: &Path, config: &RunConfig) -> Result<Output, CliError> {
    let g = load_graph(graph)?;
    let p = load_params(params, &g, config)?;
    let m = SublatticeMap::from_json(&read(sublattice)?)?;
    let cap = config.limits.coset_index;
    let relaxed = periflex::relax_graph(&g, &m, cap)?;
    let q = periflex::relax_params(&p, &m, &g, cap, config.tolerances.pd_tol)?;
    let report = relaxed.report();
    let text = format!(
        "index {}: n={} → {}, m={} → {}\ncoset representatives: {:?}\nrelaxed ω (upper): {}\n",
        report.index,
        g.vertex_count(),
        relaxed.graph.vertex_count(),
        g.edge_count(),
        relaxed.graph.edge_count(),
        report.coset_representatives,
        fmt_vec(q.omega_upper())
    );
    let graph_json: serde_json::Value = serde_json::from_str(&relaxed.graph.to_json()).expect("graph JSON");
    let json = json!({
        "graph": graph_json,
        "params": to_json(&q.to_document()),
        "relaxation": to_json(&report),
    });
    Ok(Output::ok(text, json))
}

#[allow(clippy::too_many_arguments)]
fn deform(
    graph: &Path,
    params: &Path,
    gens: Option<&Path>,
    steps: usize,
    step_size: f64,
    svg_path: Option<&Path>,
    csv_path: Option<&Path>,
    config: &RunConfig,
) -> Result<Output, CliError> {
    let g = load_graph(graph)?;
    g.require_valid()?;
    let p = load_params(params, &g, config)?;
    let locus = match gens {
        Some(path) => {
            let gens = automorphisms_from_json(&read(path)?)?;
            Some(periflex::fixed_locus(&gens, &g)?.locus)
        }
        None => None,
    };
    let opts = TraceOptions { steps, step_size, ..TraceOptions::default() };
    let path = periflex::trace_deformation(&g, &p, locus.as_ref(), &opts, &config.tolerances)?;
    let csv = path.to_csv(&g);
    if let Some(out) = csv_path {
        write(out, &csv)?;
    }
    if let Some(out) = svg_path {
        if g.dim() != 2 {
            return Err(CliError::Usage("SVG snapshots need d = 2".into()));
        }
        write(out, &svg::render(&g, &path, config.tolerances.pd_tol)?)?;
    }
    let deviation = path.max_length_deviation(&g);
    let mut text = if path.is_empty() {
        "no flex at the start point: empty path\n".to_string()
    } else {
        format!(
            "{} samples (start at {}), max squared-length drift {deviation:.3e}, stopped: {:?}\n",
            path.samples.len(),
            path.start_index,
            path.terminations
        )
    };
    if csv_path.is_none() {
        text.push_str(&csv);
    }
    let json = json!({
        "samples": path.samples.len(),
        "start_index": path.start_index,
        "max_length_deviation": deviation,
        "terminations": path.terminations,
        "step_stats": path.step_stats,
        "header": DeformationPath::csv_header(g.dim(), g.vertex_count()).split(',').collect::<Vec<_>>(),
        "path": path.samples.iter().map(|s| s.to_vector()).collect::<Vec<_>>(),
    });
    Ok(Output::ok(text, json))
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let config = RunConfig::from_args(&cli.config)?;
    let mut csv_out = None;
    let output = match &cli.command {
        Command::Validate { graph } => validate(graph)?,
        Command::Analyze { graph, params, trials } => analyze(graph, params, *trials, &config)?,
        Command::Symmetries { graph } => symmetries(graph, &config)?,
        Command::FixedLocus { graph, gens } => fixed_locus(graph, gens)?,
        Command::Relax { graph, params, sublattice } => relax(graph, params, sublattice, &config)?,
        Command::Deform { graph, params, gens, steps, step_size, svg } => {
            // in text mode --out receives the CSV path, in JSON mode the report
            csv_out = (!cli.config.json).then_some(cli.config.out.as_deref()).flatten();
            deform(graph, params, gens.as_deref(), *steps, *step_size, svg.as_deref(), csv_out, &config)?
        }
    };
    let rendered = if cli.config.json {
        serde_json::to_string_pretty(&output.json).expect("JSON value") + "\n"
    } else {
        output.text
    };
    match cli.config.out.as_deref() {
        Some(path) if csv_out.is_none() => write(path, &rendered)?,
        _ => print!("{rendered}"),
    }
    Ok(output.code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(CliError::from(Error::Parse("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::DimensionMismatch("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(Error::SingularLattice).exit_code(), 4);
        assert_eq!(CliError::from(Error::Disconnected).exit_code(), 1);
    }

    #[test]
    fn config_rejects_bad_tolerances() {
        let cli = Cli::parse_from(["periflex", "--tol-pd=-1", "validate", "g.json"]);
        assert!(RunConfig::from_args(&cli.config).is_err());
        let cli = Cli::parse_from(["periflex", "validate", "g.json", "--seed", "7"]);
        let config = RunConfig::from_args(&cli.config).unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.tolerances, Tolerances::default());
    }
}
