use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use thiserror::Error;

use wsn_sim::experiment::{run_batch, seed_list, sweep_points, ProtocolRuns, SweepAxis};
use wsn_sim::export::{
    export_rounds, import_rounds, read_run_report, write_json, AggregateReport, ExportError,
    RunReport,
};
use wsn_sim::metrics::{AggregateSummary, MetricStats};
use wsn_sim::net::d0_mismatch;
use wsn_sim::plot::{render_plots, LabeledRun};
use wsn_sim::{ConfigError, ProtocolRegistry, SimConfig, Simulation, Summary};

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(ConfigError::Io(_)) => 2,
            CliError::Config(_) => 1,
            CliError::Export(_) | CliError::Io(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "wsnsim",
    version,
    about = "Clustered WSN lifetime simulator (LEACH / SEP / EACP)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration and write its per-round CSV and summary.
    Run(RunArgs),
    /// Run several protocols over the same seeds and compare them.
    Compare(CompareArgs),
    /// Cartesian parameter sweep, one aggregate row per point and protocol.
    Sweep(SweepArgs),
    /// Render comparison charts from exported per-round CSV files.
    Plot(PlotArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// JSON configuration file; omitted keys take the reference defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<SimConfig, ConfigError> {
        let cfg = match &self.config {
            Some(path) => SimConfig::load(path)?,
            None => SimConfig::default(),
        };
        if let Some(d) = d0_mismatch(&cfg.radio) {
            warn!(
                "configured d0 = {} m differs from sqrt(eps_fs/eps_mp) = {:.3} m; using the configured value",
                cfg.radio.d0, d
            );
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out/run")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Comma-separated protocol names.
    #[arg(long, value_delimiter = ',', default_value = "eacp,sep")]
    protocols: Vec<String>,
    /// Number of consecutive seeds, starting at the configured seed.
    #[arg(long, default_value_t = 30)]
    seeds: usize,
    #[arg(long, default_value = "out/compare")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// `key=v1,v2,...`; repeat for a cartesian product.
    #[arg(long, required = true)]
    vary: Vec<String>,
    #[arg(long, default_value_t = 30)]
    seeds: usize,
    /// Protocols to run at every point (defaults to the configured one).
    #[arg(long, value_delimiter = ',')]
    protocols: Vec<String>,
    /// Write the sweep table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Per-round CSV files, optionally prefixed with `label=`.
    #[arg(long = "in", required = true, num_args = 1..)]
    inputs: Vec<String>,
    #[arg(long)]
    out_dir: PathBuf,
    /// Deployed node count, when no summary.json sits next to a CSV.
    #[arg(long)]
    deployed: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            // bad arguments are configuration errors, not i/o failures
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("wsnsim: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn write_run(
    dir: &Path,
    cfg: &SimConfig,
    records: &[wsn_sim::RoundRecord],
    summary: Summary,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    export_rounds(records, dir.join("rounds.csv"))?;
    let report = RunReport {
        protocol: cfg.protocol.clone(),
        seed: cfg.seed,
        deployed: cfg.n,
        summary,
        config: cfg.clone(),
    };
    write_json(&report, dir.join("summary.json"))?;
    Ok(())
}

fn summary_line(s: &Summary) -> String {
    format!(
        "FND {} HND {} LND {}{} | to BS {} to CH {} relayed {} | rounds {}",
        s.fnd,
        s.hnd,
        s.lnd,
        if s.censored { " (censored)" } else { "" },
        s.total_msgs_to_bs,
        s.total_msgs_to_ch,
        s.total_relayed,
        s.rounds_simulated
    )
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = args.config.load()?;
    if let Some(p) = args.protocol {
        cfg = cfg.with_protocol(&p);
    }
    if let Some(seed) = args.seed {
        cfg = cfg.with_seed(seed);
    }
    let sim = Simulation::new(&cfg)?;
    let out = sim.run();
    write_run(&args.out_dir, &cfg, &out.records, out.summary)?;
    println!(
        "{} seed {}: {}",
        cfg.protocol,
        cfg.seed,
        summary_line(&out.summary)
    );
    info!("wrote {}", args.out_dir.display());
    Ok(())
}

fn stats_cells(s: &MetricStats) -> String {
    format!("{},{},{},{}", s.mean, s.stddev, s.min, s.max)
}

const AGGREGATE_HEADER: &str = "fnd_mean,fnd_std,fnd_min,fnd_max,hnd_mean,hnd_std,hnd_min,hnd_max,lnd_mean,lnd_std,lnd_min,lnd_max,msgs_to_bs_mean,msgs_to_bs_std,msgs_to_bs_min,msgs_to_bs_max,msgs_to_ch_mean,msgs_to_ch_std,msgs_to_ch_min,msgs_to_ch_max,relayed_mean,relayed_std,relayed_min,relayed_max,seeds,censored_runs";

fn aggregate_cells(a: &AggregateSummary) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        stats_cells(&a.fnd),
        stats_cells(&a.hnd),
        stats_cells(&a.lnd),
        stats_cells(&a.total_msgs_to_bs),
        stats_cells(&a.total_msgs_to_ch),
        stats_cells(&a.total_relayed),
        a.seeds,
        a.censored_runs
    )
}

fn protocol_list(requested: &[String], cfg: &SimConfig) -> Vec<String> {
    let list: Vec<String> = requested
        .iter()
        .map(|p| p.trim().to_ascii_lowercase())
        .filter(|p| !p.is_empty())
        .collect();
    if list.is_empty() {
        vec![cfg.protocol.clone()]
    } else {
        list
    }
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let cfg = args.config.load()?;
    let protocols = protocol_list(&args.protocols, &cfg);
    let seeds = seed_list(cfg.seed, args.seeds);
    let registry = ProtocolRegistry::builtin();
    let batches = run_batch(&cfg, &protocols, &seeds, &registry)?;

    let out = &args.out_dir;
    std::fs::create_dir_all(out)?;
    let mut table = format!("protocol,{AGGREGATE_HEADER}\n");
    for batch in &batches {
        write_batch(out, &cfg, batch)?;
        let _ = writeln!(
            table,
            "{},{}",
            batch.protocol,
            aggregate_cells(&batch.aggregate)
        );
        let a = &batch.aggregate;
        println!(
            "{:>6}: FND {:.1} ± {:.1}  HND {:.1} ± {:.1}  LND {:.1} ± {:.1}  to BS {:.1}  ({} seeds, {} censored)",
            batch.protocol,
            a.fnd.mean,
            a.fnd.stddev,
            a.hnd.mean,
            a.hnd.stddev,
            a.lnd.mean,
            a.lnd.stddev,
            a.total_msgs_to_bs.mean,
            a.seeds,
            a.censored_runs
        );
    }
    std::fs::write(out.join("aggregate.csv"), table)?;

    // charts show the first seed of every protocol
    let runs: Vec<LabeledRun> = batches
        .iter()
        .map(|b| {
            LabeledRun::new(
                b.protocol.to_ascii_uppercase(),
                b.outputs[0].records.clone(),
                cfg.n,
            )
        })
        .collect();
    render_plots(&runs, out.join("plots"))?;
    Ok(())
}

fn write_batch(out: &Path, cfg: &SimConfig, batch: &ProtocolRuns) -> Result<(), CliError> {
    let dir = out.join(&batch.protocol);
    for (seed, output) in batch.seeds.iter().zip(&batch.outputs) {
        let run_cfg = cfg.clone().with_protocol(&batch.protocol).with_seed(*seed);
        write_run(
            &dir.join(format!("seed_{seed}")),
            &run_cfg,
            &output.records,
            output.summary,
        )?;
    }
    let report = AggregateReport {
        protocol: batch.protocol.clone(),
        seeds: batch.seeds.clone(),
        aggregate: batch.aggregate.clone(),
        per_seed: batch.outputs.iter().map(|o| o.summary).collect(),
        config: cfg.clone().with_protocol(&batch.protocol),
    };
    write_json(&report, dir.join("aggregate.json"))?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let cfg = args.config.load()?;
    let axes = args
        .vary
        .iter()
        .map(|s| s.parse::<SweepAxis>())
        .collect::<Result<Vec<_>, _>>()?;
    let points = sweep_points(&cfg, &axes)?;
    let registry = ProtocolRegistry::builtin();

    let mut table = String::new();
    let keys: Vec<&str> = axes.iter().map(|a| a.key.as_str()).collect();
    let _ = writeln!(table, "{},protocol,{AGGREGATE_HEADER}", keys.join(","));
    for point in &points {
        let protocols = protocol_list(&args.protocols, &point.config);
        let seeds = seed_list(point.config.seed, args.seeds);
        for batch in run_batch(&point.config, &protocols, &seeds, &registry)? {
            let values: Vec<&str> = point.assignments.iter().map(|(_, v)| v.as_str()).collect();
            let _ = writeln!(
                table,
                "{},{},{}",
                values.join(","),
                batch.protocol,
                aggregate_cells(&batch.aggregate)
            );
        }
    }
    match args.out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, table)?
        }
        None => print!("{table}"),
    }
    Ok(())
}

fn default_label(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    if stem != "rounds" {
        return stem.to_string();
    }
    let parents: Vec<&str> = path
        .parent()
        .into_iter()
        .flat_map(|p| p.iter().rev().take(2))
        .filter_map(|s| s.to_str())
        .collect();
    if parents.is_empty() {
        stem.to_string()
    } else {
        parents.into_iter().rev().collect::<Vec<_>>().join("/")
    }
}

fn cmd_plot(args: PlotArgs) -> Result<(), CliError> {
    let mut runs = Vec::with_capacity(args.inputs.len());
    for input in &args.inputs {
        let (label, path) = match input.split_once('=') {
            Some((label, path)) => (label.to_string(), PathBuf::from(path)),
            None => (default_label(Path::new(input)), PathBuf::from(input)),
        };
        let records = import_rounds(&path)?;
        let sibling = path.with_file_name("summary.json");
        let deployed = match (args.deployed, sibling.exists()) {
            (Some(n), _) => n,
            (None, true) => read_run_report(&sibling)?.deployed,
            (None, false) => records.first().map(|r| r.alive_total()).unwrap_or(0),
        };
        runs.push(LabeledRun::new(label, records, deployed));
    }
    for path in render_plots(&runs, &args.out_dir)? {
        println!("{}", path.display());
    }
    Ok(())
}
