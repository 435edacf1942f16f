//! Command-line front end.
//!
//! Subcommands: `run` (single scenario trajectory), `mc` (Monte Carlo mean
//! error curves), `spectral gamma-sweep` / `spectral delay-sweep`, `check`
//! (internal consistency suite on a graph), and `graph-info`. Exit codes:
//! 0 success, 1 validation failure, 2 I/O error.

use std::collections::HashMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::augmented::{
    assemble_m, build_snapshot_matrices, run_matrix_form, split_m0_m1, word_products,
    ArrivalSnapshot,
};
use crate::delay::{make_schedule, DelayKind, DelaySpec};
use crate::digraph::{min_push_weight, Digraph};
use crate::error::{Error, Result};
use crate::harness::{
    self, curve_csv, monte_carlo, parse_config_file, run_scenario, sweep_csv, trajectory_csv,
    InitMode, ScenarioConfig,
};
use crate::protocol::run_rppac;
use crate::rng::SplitMix64;
use crate::spectral::{gamma_upper_bound, mean_gap_vs_delay, spectral_radius, sweep_gamma};

#[derive(Parser)]
#[command(
    name = "pushpull",
    version,
    about = "Push-pull average consensus with surplus on delay-prone digraphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and emit the trajectory as CSV.
    Run(RunArgs),
    /// Average the consensus-error curve over seeded Monte Carlo runs.
    Mc(McArgs),
    /// Spectral-gap sweeps of the per-round system matrix.
    #[command(subcommand)]
    Spectral(SpectralCommand),
    /// Run the internal consistency checks for a graph and seed.
    Check(CheckArgs),
    /// Report degrees, connectivity, and the surplus-gain bound of a graph.
    GraphInfo(GraphInfoArgs),
}

/// Flags shared by `run` and `mc`. Unset flags fall back to the config file
/// (if given), then to the defaults.
#[derive(Args)]
struct ScenarioFlags {
    /// Edge-list file ("n=<count>" header, then "<sender> <receiver>" lines).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Network-wide maximum delay.
    #[arg(long)]
    tau_bar: Option<usize>,
    /// Delay process: zero | constant | uniform | trace.
    #[arg(long)]
    delay_kind: Option<String>,
    /// Delay trace file ("<sender> <receiver> <k> <delay>" lines).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Surplus gain.
    #[arg(long)]
    gamma: Option<f64>,
    /// Iterations per run.
    #[arg(long)]
    iters: Option<usize>,
    /// Base seed; run i of a batch uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Initial states: index | const:<v> | file:<path> | random.
    #[arg(long)]
    init: Option<String>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accept a surplus gain at or above the conservative bound.
    #[arg(long)]
    force_gamma: bool,
    /// Optional key=value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioFlags,
    /// Also dump the assembled round matrix M(k) as row-major CSV.
    #[arg(long)]
    dump_m: Option<PathBuf>,
    /// Round to dump the matrix for.
    #[arg(long, default_value_t = 0)]
    dump_m_k: usize,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    scenario: ScenarioFlags,
    /// Monte Carlo run count.
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Subcommand)]
enum SpectralCommand {
    /// Mean spectral gap over a grid of surplus gains.
    GammaSweep(GammaSweepArgs),
    /// Mean spectral gap per maximum-delay bound.
    DelaySweep(DelaySweepArgs),
}

#[derive(Args)]
struct GammaSweepArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0)]
    tau_bar: usize,
    #[arg(long, default_value_t = 0.01)]
    gamma_min: f64,
    #[arg(long, default_value_t = 0.3)]
    gamma_max: f64,
    #[arg(long, default_value_t = 30)]
    gamma_steps: usize,
    /// Random snapshots averaged per grid point (1 suffices when tau-bar=0).
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DelaySweepArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Comma-separated delay bounds, e.g. "0,1,2,5".
    #[arg(long, default_value = "0,1,2,3,4,5,6,7,8,9,10")]
    tau_bars: String,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Edge-list file.
    graph: PathBuf,
    #[arg(long, default_value_t = 2)]
    tau_bar: usize,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    iters: usize,
}

#[derive(Args)]
struct GraphInfoArgs {
    /// Edge-list file.
    graph: PathBuf,
}

/// Parses and executes; returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land here too; they are not failures
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Mc(args) => cmd_mc(args),
        Command::Spectral(SpectralCommand::GammaSweep(args)) => cmd_gamma_sweep(args),
        Command::Spectral(SpectralCommand::DelaySweep(args)) => cmd_delay_sweep(args),
        Command::Check(args) => cmd_check(args),
        Command::GraphInfo(args) => cmd_graph_info(args),
    }
}

/// Merges flags over the optional config file over the defaults.
fn resolve_scenario(
    flags: &ScenarioFlags,
    runs: Option<usize>,
) -> Result<(ScenarioConfig, Option<PathBuf>)> {
    let file: HashMap<String, String> = match &flags.config {
        Some(path) => parse_config_file(path)?,
        None => HashMap::new(),
    };
    fn from_file<T: std::str::FromStr>(
        file: &HashMap<String, String>,
        key: &str,
    ) -> Result<Option<T>> {
        match file.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("config key {key}: cannot parse {raw:?}"))),
        }
    }

    let graph = flags
        .graph
        .clone()
        .or_else(|| file.get("graph").map(PathBuf::from))
        .ok_or_else(|| Error::Config("a graph file is required (--graph)".into()))?;
    let mut cfg = ScenarioConfig::new(graph);
    if let Some(v) = flags.tau_bar.or(from_file(&file, "tau-bar")?) {
        cfg.tau_bar = v;
    }
    let kind = flags
        .delay_kind
        .clone()
        .or_else(|| file.get("delay-kind").cloned());
    if let Some(kind) = kind {
        cfg.delay_kind = DelayKind::parse(&kind)?;
    }
    cfg.trace = flags
        .trace
        .clone()
        .or_else(|| file.get("trace").map(PathBuf::from));
    if let Some(v) = flags.gamma.or(from_file(&file, "gamma")?) {
        cfg.gamma = v;
    }
    if let Some(v) = flags.iters.or(from_file(&file, "iters")?) {
        cfg.iters = v;
    }
    if let Some(v) = flags.seed.or(from_file(&file, "seed")?) {
        cfg.seed = v;
    }
    if let Some(v) = runs.or(from_file(&file, "runs")?) {
        cfg.runs = v;
    }
    let init = flags.init.clone().or_else(|| file.get("init").cloned());
    if let Some(init) = init {
        cfg.init = InitMode::parse(&init)?;
    }
    cfg.force_gamma = flags.force_gamma || from_file(&file, "force-gamma")?.unwrap_or(false);
    let out = flags
        .out
        .clone()
        .or_else(|| file.get("out").map(PathBuf::from));
    Ok((cfg, out))
}

/// Writes to stdout, treating a closed pipe (e.g. `... | head`) as success.
fn write_stdout(contents: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out
        .write_all(contents.as_bytes())
        .and_then(|()| out.flush())
    {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(Error::io("<stdout>", e)),
    }
}

fn emit(out: Option<PathBuf>, contents: &str) -> Result<()> {
    match out {
        Some(path) => harness::write_text(path, contents),
        None => write_stdout(contents),
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let (cfg, out) = resolve_scenario(&args.scenario, None)?;
    let (trajectory, _) = run_scenario(&cfg)?;
    if let Some(dump_path) = args.dump_m {
        let g = Digraph::from_file(&cfg.graph)?;
        let spec = match cfg.delay_kind {
            DelayKind::Zero => DelaySpec::zero(),
            DelayKind::Constant => DelaySpec::constant(cfg.tau_bar),
            DelayKind::UniformIid => DelaySpec::uniform(cfg.tau_bar, cfg.seed),
            DelayKind::Trace => {
                let path = cfg.trace.as_ref().ok_or_else(|| {
                    Error::Config("delay kind \"trace\" requires a trace file".into())
                })?;
                DelaySpec::from_trace(crate::delay::load_trace(path)?, cfg.tau_bar)
            }
        };
        let schedule = make_schedule(&spec, &g)?;
        let snapshot = ArrivalSnapshot::from_schedule(&g, &schedule, args.dump_m_k)?;
        let m = assemble_m(&build_snapshot_matrices(&g, &snapshot, cfg.gamma));
        crate::augmented::write_matrix_csv(&m, dump_path)?;
    }
    emit(out, &trajectory_csv(&trajectory))
}

fn cmd_mc(args: McArgs) -> Result<()> {
    let (cfg, out) = resolve_scenario(&args.scenario, args.runs)?;
    let curve = monte_carlo(&cfg)?;
    emit(out, &curve_csv(&curve))
}

fn cmd_gamma_sweep(args: GammaSweepArgs) -> Result<()> {
    if args.gamma_steps == 0 {
        return Err(Error::Config("gamma-steps must be at least 1".into()));
    }
    let g = Digraph::from_file(&args.graph)?;
    let gammas: Vec<f64> = (0..args.gamma_steps)
        .map(|i| {
            if args.gamma_steps == 1 {
                args.gamma_min
            } else {
                args.gamma_min
                    + (args.gamma_max - args.gamma_min) * i as f64 / (args.gamma_steps - 1) as f64
            }
        })
        .collect();
    let table = sweep_gamma(&g, args.tau_bar, &gammas, args.samples, args.seed)?;
    emit(args.out, &sweep_csv("gamma", &table))
}

fn cmd_delay_sweep(args: DelaySweepArgs) -> Result<()> {
    let g = Digraph::from_file(&args.graph)?;
    let tau_bars: Vec<usize> = args
        .tau_bars
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("invalid tau-bar value {v:?}")))
        })
        .collect::<Result<_>>()?;
    let table = mean_gap_vs_delay(&g, args.gamma, &tau_bars, args.samples, args.seed)?;
    emit(args.out, &sweep_csv("tau_bar", &table))
}

fn cmd_graph_info(args: GraphInfoArgs) -> Result<()> {
    let g = Digraph::from_file(&args.graph)?;
    let mut report = String::new();
    report.push_str(&format!("nodes={}\n", g.node_count()));
    report.push_str(&format!("edges={}\n", g.edge_count()));
    report.push_str(&format!(
        "strongly_connected={}\n",
        g.is_strongly_connected()
    ));
    report.push_str(&format!(
        "min_push_weight={}\n",
        min_push_weight(&g.push_weights())
    ));
    report.push_str(&format!("gamma_upper_bound={}\n", gamma_upper_bound(&g)));
    for v in 0..g.node_count() {
        report.push_str(&format!(
            "node={} in_degree={} out_degree={}\n",
            v + 1,
            g.in_degree(v),
            g.out_degree(v)
        ));
    }
    write_stdout(&report)
}

struct CheckOutcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

/// The internal consistency suite behind `check`: weight stochasticity,
/// mass conservation, message-level vs matrix-form agreement, and the
/// round-matrix decomposition identities.
pub fn run_invariant_checks(
    g: &Digraph,
    tau_bar: usize,
    gamma: f64,
    seed: u64,
    iters: usize,
) -> Vec<(String, bool, String)> {
    let mut results: Vec<CheckOutcome> = Vec::new();
    let mut push_outcome = |name, passed, detail| {
        results.push(CheckOutcome {
            name,
            passed,
            detail,
        });
    };

    let r = g.pull_weights();
    let c = g.push_weights();
    let n = g.node_count();
    let static_ok = (0..n).all(|j| {
        (r.row(j).sum() - 1.0).abs() < 1e-12
            && (c.column(j).sum() - 1.0).abs() < 1e-12
            && r[(j, j)] > 0.0
            && c[(j, j)] > 0.0
    });
    push_outcome(
        "static weights row/column stochastic",
        static_ok,
        format!("{n} rows and columns"),
    );

    let spec = if tau_bar == 0 {
        DelaySpec::zero()
    } else {
        DelaySpec::uniform(tau_bar, seed)
    };
    let schedule = match make_schedule(&spec, g) {
        Ok(s) => s,
        Err(e) => {
            push_outcome("delay schedule", false, e.to_string());
            return results
                .into_iter()
                .map(|o| (o.name.to_string(), o.passed, o.detail))
                .collect();
        }
    };

    // realized and random snapshots: stochasticity + one send layer per edge
    let mut rng = SplitMix64::new(seed ^ 0xc0ffee);
    let mut worst_row: f64 = 0.0;
    let mut worst_col: f64 = 0.0;
    let mut layers_ok = true;
    let mut snapshot_at = |snapshot: &ArrivalSnapshot| {
        let sm = build_snapshot_matrices(g, snapshot, gamma);
        let nt = sm.augmented_dim();
        for i in 0..nt {
            worst_row = worst_row.max((sm.r_tilde.row(i).sum() - 1.0).abs());
            worst_col = worst_col.max((sm.c_tilde.column(i).sum() - 1.0).abs());
        }
        for e in g.edges() {
            let hits = (0..=tau_bar)
                .filter(|&d| sm.c_tilde[(d * n + e.receiver, e.sender)] != 0.0)
                .count();
            layers_ok &= hits == 1;
        }
    };
    for k in 0..iters.min(50) {
        match ArrivalSnapshot::from_schedule(g, &schedule, k) {
            Ok(snapshot) => snapshot_at(&snapshot),
            Err(e) => {
                push_outcome("snapshot derivation", false, e.to_string());
                break;
            }
        }
    }
    for _ in 0..100 {
        snapshot_at(&ArrivalSnapshot::random(g, tau_bar, &mut rng));
    }
    push_outcome(
        "round matrices row/column stochastic",
        worst_row < 1e-12 && worst_col < 1e-12,
        format!("worst row {worst_row:.2e}, worst column {worst_col:.2e}"),
    );
    push_outcome(
        "one send layer per edge per round",
        layers_ok,
        String::new(),
    );

    let x0: Vec<f64> = (1..=n).map(|j| j as f64).collect();
    match (
        run_rppac(g, &schedule, gamma, &x0, iters),
        run_matrix_form(g, &schedule, gamma, &x0, iters),
    ) {
        (Ok(node_level), Ok(matrix_level)) => {
            let drift = node_level.max_mass_drift();
            push_outcome(
                "mass conserved along the run",
                drift < 1e-9,
                format!("max drift {drift:.2e}"),
            );
            let mut worst: f64 = 0.0;
            for k in 0..=iters {
                for j in 0..n {
                    worst = worst.max((node_level.x[k][j] - matrix_level.x[k][j]).abs());
                    worst = worst.max((node_level.s[k][j] - matrix_level.s[k][j]).abs());
                }
            }
            push_outcome(
                "message-level matches matrix form",
                worst < 1e-10,
                format!("max deviation {worst:.2e}"),
            );
        }
        (Err(e), _) | (_, Err(e)) => push_outcome("simulation", false, e.to_string()),
    }

    let snapshot = ArrivalSnapshot::random(g, tau_bar, &mut rng);
    let sm = build_snapshot_matrices(g, &snapshot, gamma);
    let (m0, m1) = split_m0_m1(&sm);
    let m = assemble_m(&sm);
    let square_zero = (&m1 * &m1).iter().all(|&v| v == 0.0);
    let sum_exact = (&m0 + &m1) == m;
    push_outcome(
        "gamma injection squares to zero and splits M exactly",
        square_zero && sum_exact,
        String::new(),
    );

    match word_products(g, &schedule, gamma, 0, tau_bar + 1) {
        Ok((r_word, e_word)) => {
            let rho_r = spectral_radius(&r_word).unwrap_or(f64::NAN);
            let rho_e = spectral_radius(&e_word).unwrap_or(f64::NAN);
            push_outcome(
                "word products: pull radius 1, damped push radius < 1",
                (rho_r - 1.0).abs() < 1e-9 && rho_e < 1.0,
                format!("rho(R_word)={rho_r:.12}, rho(E_word)={rho_e:.6}"),
            );
        }
        Err(e) => push_outcome("word products", false, e.to_string()),
    }

    results
        .into_iter()
        .map(|o| (o.name.to_string(), o.passed, o.detail))
        .collect()
}

fn cmd_check(args: CheckArgs) -> Result<()> {
    let g = Digraph::from_file(&args.graph)?;
    if !g.is_strongly_connected() {
        eprintln!("warning: graph is not strongly connected");
    }
    let results = run_invariant_checks(&g, args.tau_bar, args.gamma, args.seed, args.iters);
    let mut report = String::new();
    let mut all_ok = true;
    for (name, passed, detail) in &results {
        let mark = if *passed { "ok" } else { "FAIL" };
        if detail.is_empty() {
            report.push_str(&format!("{mark:4} {name}\n"));
        } else {
            report.push_str(&format!("{mark:4} {name} ({detail})\n"));
        }
        all_ok &= *passed;
    }
    write_stdout(&report)?;
    if all_ok {
        Ok(())
    } else {
        Err(Error::Config("invariant checks failed".into()))
    }
}
