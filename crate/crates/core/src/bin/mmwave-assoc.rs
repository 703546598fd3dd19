use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mmwave_assoc::experiment::{
    self, cell_rows, compare, generate, instance_from_topology, load_config, read_results, solve_policy, ExperimentConfig,
    Instance, Policy,
};
use mmwave_assoc::oracle::{exhaustive_finite, exhaustive_saturation, SEARCH_LIMIT_ENV};
use mmwave_assoc::satsolve::TieBreak;
use mmwave_assoc::scenario::Topology;
use mmwave_assoc::{Error, Result};

/// Client association and airtime allocation for mmWave WLANs.
#[derive(Parser)]
#[command(name = "mmwave-assoc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one seeded topology as CSV.
    Generate {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one instance with one policy and print per-client rows.
    Solve {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "proposed-sat")]
        policy: String,
        /// Solve this topology CSV instead of generating one.
        #[arg(long)]
        topology: Option<PathBuf>,
        /// Write results.csv and summary.csv here instead of printing.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        deterministic: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Exhaustive optimum of one seeded instance.
    Oracle {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Largest search space to enumerate (defaults to the config or the environment).
        #[arg(long)]
        max_candidates: Option<u64>,
    },
    /// Run a policy x seed grid and write CSV reports.
    Run {
        #[command(flatten)]
        source: Source,
        /// Replace the config's seed list (repeatable).
        #[arg(long)]
        seed: Vec<u64>,
        /// Replace the config's policy list (repeatable).
        #[arg(long)]
        policy: Vec<String>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Zero the wall-time column and break rounding ties by lowest index.
        #[arg(long)]
        deterministic: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Paired comparison of two policies in a results CSV.
    Compare {
        results: PathBuf,
        #[arg(long)]
        baseline: String,
        #[arg(long)]
        candidate: String,
        #[arg(long, default_value_t = 10_000)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a complete config with every default filled in.
    Defaults {
        #[arg(long, default_value = "office-4ap")]
        scenario: String,
    },
}

#[derive(Args)]
struct Source {
    /// TOML experiment config.
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario preset.
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    sa_t0: Option<f64>,
    #[arg(long)]
    sa_alpha: Option<f64>,
    #[arg(long)]
    sa_t_min: Option<f64>,
    #[arg(long)]
    sa_p: Option<f64>,
    #[arg(long)]
    sa_q: Option<usize>,
    #[arg(long)]
    sa_seed: Option<u64>,
    /// Independent annealing runs per instance; best utility kept.
    #[arg(long)]
    sa_restarts: Option<usize>,
    #[arg(long)]
    relaxed_step: Option<f64>,
    #[arg(long)]
    relaxed_max_iters: Option<usize>,
    #[arg(long)]
    relaxed_tol: Option<f64>,
    /// Rounding tie rule: random or lowest.
    #[arg(long)]
    tie: Option<String>,
    #[arg(long)]
    oracle_limit: Option<u64>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.scenario) {
            (Some(path), _) => load_config(path)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => ExperimentConfig::default(),
        };
        if let Ok(v) = std::env::var(SEARCH_LIMIT_ENV) {
            cfg.solver.oracle_limit = v.parse().map_err(|_| Error::Config {
                line: None,
                message: format!("{SEARCH_LIMIT_ENV} must be a non-negative integer, got '{v}'"),
            })?;
        }
        Ok(cfg)
    }
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        let s = &mut cfg.solver;
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        set!(s.sa.t0, self.sa_t0);
        set!(s.sa.alpha, self.sa_alpha);
        set!(s.sa.t_min, self.sa_t_min);
        set!(s.sa.p, self.sa_p);
        set!(s.sa.seed, self.sa_seed);
        set!(s.sa.restarts, self.sa_restarts);
        set!(s.relaxed.step, self.relaxed_step);
        set!(s.relaxed.max_iters, self.relaxed_max_iters);
        set!(s.relaxed.tol, self.relaxed_tol);
        set!(s.oracle_limit, self.oracle_limit);
        if self.sa_q.is_some() {
            s.sa.q = self.sa_q;
        }
        if let Some(t) = &self.tie {
            s.tie = match t.as_str() {
                "random" => TieBreak::Random,
                "lowest" => TieBreak::Lowest,
                other => return Err(config_error(format!("--tie must be 'random' or 'lowest', got '{other}'"))),
            };
        }
        cfg.validate()
    }
}

fn config_error(message: String) -> Error {
    Error::Config { line: None, message }
}

fn parse_policies(labels: &[String]) -> Result<Vec<Policy>> {
    labels.iter().map(|l| Policy::parse(l)).collect()
}

fn first_instance(cfg: &ExperimentConfig, seed: u64) -> Result<Instance> {
    Ok(generate(cfg, seed)?.swap_remove(0))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { source, seed, out } => {
            let cfg = source.load()?;
            let inst = first_instance(&cfg, seed)?;
            match out {
                Some(path) => inst.topology.write_csv(File::create(path)?),
                None => inst.topology.write_csv(io::stdout().lock()),
            }
        }
        Command::Solve { source, seed, policy, topology, out_dir, deterministic, overrides } => {
            let mut cfg = source.load()?;
            if deterministic {
                cfg.solver.tie = TieBreak::Lowest;
            }
            overrides.apply(&mut cfg)?;
            let policy = Policy::parse(&policy)?;
            let inst = match topology {
                Some(path) => instance_from_topology(&cfg, Topology::read_csv(File::open(path)?)?, seed)?,
                None => first_instance(&cfg, seed)?,
            };
            let outcome = solve_policy(policy, &inst, &cfg.solver)?;
            let (rows, summary) = cell_rows(&cfg.name, &inst, &outcome, !deterministic);
            match out_dir {
                Some(dir) => {
                    let out = experiment::RunOutput { results: rows, summary: vec![summary], traces: Vec::new() };
                    experiment::write_outputs(&out, &dir, false)?;
                }
                None => {
                    let mut w = csv::Writer::from_writer(io::stdout().lock());
                    for r in &rows {
                        w.serialize(r)?;
                    }
                    w.flush()?;
                    eprintln!(
                        "{}: utility {:.6} nats, aggregate {:.4e} bit/s, {} iterations",
                        summary.policy, summary.utility_nats, summary.aggregate_bps, summary.solver_iters
                    );
                }
            }
            Ok(())
        }
        Command::Oracle { source, seed, max_candidates } => {
            let cfg = source.load()?;
            let limit = max_candidates.unwrap_or(cfg.solver.oracle_limit);
            let inst = first_instance(&cfg, seed)?;
            let o = match &inst.demand {
                None => exhaustive_saturation(&inst.rates, &inst.frames, limit)?,
                Some(d) => exhaustive_finite(&inst.rates, &inst.frames, d, limit)?,
            };
            let mut out = io::stdout().lock();
            writeln!(out, "candidates,{}", o.candidates)?;
            writeln!(out, "utility_nats,{}", o.utility)?;
            writeln!(out, "client_id,ap_id,airtime_frac")?;
            for i in 0..o.association.n_clients() {
                let j = o.association.ap_of(i);
                writeln!(out, "{i},{j},{}", o.airtime.get(i, j))?;
            }
            Ok(())
        }
        Command::Run { source, seed, policy, out_dir, threads, deterministic, overrides } => {
            let mut cfg = source.load()?;
            if !seed.is_empty() {
                cfg.seeds = seed;
            }
            if !policy.is_empty() {
                cfg.policies = parse_policies(&policy)?;
            }
            if deterministic {
                cfg.timing = false;
                cfg.solver.tie = TieBreak::Lowest;
            }
            overrides.apply(&mut cfg)?;
            let out = experiment::run(&cfg, threads)?;
            let files = experiment::write_outputs(&out, &out_dir, cfg.traces)?;
            eprintln!(
                "wrote {} client rows to {} and {} summary rows to {}",
                out.results.len(),
                files.results.display(),
                out.summary.len(),
                files.summary.display()
            );
            Ok(())
        }
        Command::Compare { results, baseline, candidate, resamples, seed } => {
            let rows = read_results(open(&results)?)?;
            let c = compare(&rows, &baseline, &candidate, resamples, seed)?;
            println!("{c}");
            Ok(())
        }
        Command::Defaults { scenario } => {
            experiment::write_config(&ExperimentConfig::preset(&scenario)?, io::stdout().lock())
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } => 2,
                Error::ClientOutOfCoverage { .. } => 3,
                _ => 1,
            })
        }
    }
}
