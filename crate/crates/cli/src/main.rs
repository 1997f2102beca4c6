use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flowbal_cli::error::{EXIT_INPUT, EXIT_OK};
use flowbal_cli::{cmd_compare, cmd_gen, cmd_solve, write_csv, CliError, Entry, ExperimentConfig, InstanceSource};

#[derive(Parser)]
#[command(name = "flowbal", version, about = "Flowshop branch and bound with load-balancing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve instances with sequential branch and bound.
    Solve(Opts),
    /// Run the strategy x transfer grid and write a CSV report.
    Compare(Opts),
    /// Write random instances in Taillard format.
    Gen(Opts),
}

/// Every option can also be set in the `--config` file; flags win.
#[derive(Args)]
struct Opts {
    /// Flat `key = value` experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Taillard-format instance file (repeatable).
    #[arg(long)]
    instance: Vec<String>,
    /// Random spec: jobs.
    #[arg(short, long)]
    n: Option<String>,
    /// Random spec: machines.
    #[arg(short, long)]
    m: Option<String>,
    /// Random spec: mean processing time [default: 50].
    #[arg(long)]
    mean: Option<String>,
    /// Random spec: standard deviation [default: 25].
    #[arg(long)]
    stddev: Option<String>,
    /// Random spec: number of instances [default: 1].
    #[arg(long)]
    count: Option<String>,
    /// Root seed.
    #[arg(long)]
    seed: Option<String>,
    /// Strategies: sld, rand, acwn, pfs (repeatable or comma-separated).
    #[arg(long)]
    strategy: Vec<String>,
    /// Transfers: 1in1, Min1 (repeatable or comma-separated).
    #[arg(long)]
    transfer: Vec<String>,
    /// Tree floor the initial particles are cut from.
    #[arg(long)]
    k_split: Option<String>,
    /// `M:w1,w2,...` or `M:w`.
    #[arg(long)]
    topology: Option<String>,
    /// `homogeneous` or `mixed:f1,f2,...`.
    #[arg(long)]
    het: Option<String>,
    /// `sim` or `threads`.
    #[arg(long)]
    mode: Option<String>,
    /// Node budget, or `none`.
    #[arg(long)]
    budget: Option<String>,
    /// Output file (compare) or directory (gen).
    #[arg(long)]
    out: Option<String>,
    /// PFS weight: `literal` (T*W) or `rate` (W/T).
    #[arg(long)]
    pfs_weight: Option<String>,
    /// Lower bound: `machine` or `johnson`.
    #[arg(long)]
    bound: Option<String>,
    #[arg(long)]
    sync_interval: Option<String>,
    #[arg(long)]
    refresh_interval: Option<String>,
    /// Run seeds per cell.
    #[arg(long)]
    repeats: Option<String>,
}

impl Opts {
    fn entries(&self) -> Vec<Entry> {
        let mut out = Vec::new();
        let lists = [("instance", &self.instance), ("strategy", &self.strategy), ("transfer", &self.transfer)];
        for (key, values) in lists {
            out.extend(values.iter().map(|v| Entry::flag(key, v.as_str())));
        }
        let scalars = [
            ("n", &self.n),
            ("m", &self.m),
            ("mean", &self.mean),
            ("stddev", &self.stddev),
            ("count", &self.count),
            ("seed", &self.seed),
            ("k-split", &self.k_split),
            ("topology", &self.topology),
            ("het", &self.het),
            ("mode", &self.mode),
            ("budget", &self.budget),
            ("out", &self.out),
            ("pfs-weight", &self.pfs_weight),
            ("bound", &self.bound),
            ("sync-interval", &self.sync_interval),
            ("refresh-interval", &self.refresh_interval),
            ("repeats", &self.repeats),
        ];
        for (key, value) in scalars {
            if let Some(v) = value {
                out.push(Entry::flag(key, v.as_str()));
            }
        }
        out
    }

    fn load(&self) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::load(self.config.as_deref(), self.entries())
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Solve(opts) => {
            let cfg = opts.load()?;
            let reports = cmd_solve(&cfg)?;
            for (i, r) in reports.iter().enumerate() {
                if i > 0 {
                    println!();
                }
                print!("{}", r.render());
            }
            Ok(flowbal_cli::commands::solve_exit_code(&reports))
        }
        Command::Compare(opts) => {
            let cfg = opts.load()?;
            let report = cmd_compare(&cfg)?;
            let summary = report.summary.render();
            match &cfg.out {
                Some(path) => {
                    let file = std::fs::File::create(path)
                        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                    write_csv(&report.rows, file).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                    print!("{summary}");
                }
                None => {
                    write_csv(&report.rows, std::io::stdout().lock())
                        .map_err(|e| CliError::Internal(e.to_string()))?;
                    eprint!("{summary}");
                }
            }
            Ok(report.exit_code())
        }
        Command::Gen(opts) => {
            let cfg = opts.load()?;
            let InstanceSource::Random(spec) = &cfg.source else {
                return Err(CliError::Input("gen needs a random spec (n, m)".into()));
            };
            let (paths, text) = cmd_gen(spec, cfg.out.as_deref())?;
            if cfg.out.is_some() {
                for p in paths {
                    println!("{}", p.display());
                }
            } else {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes()).map_err(|e| CliError::Internal(e.to_string()))?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("flowbal: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
