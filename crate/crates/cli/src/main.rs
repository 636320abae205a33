use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ltl_explain_cli::{cmd_enumerate, cmd_eval, cmd_oracle, cmd_search, cmd_trace_dot, output, CliError, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "ltl-explain", version, about = "Search for temporal-logic explanations of a target policy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Global seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let overrides = Overrides { seed: self.seed, workers: self.workers, out: self.out.clone() };
        RunConfig::load(&self.config, &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Multi-start greedy search; writes results.csv, trace.jsonl and manifest.toml.
    Search(Common),
    /// Score every explanation; writes oracle.csv.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Allow more than four predicates.
        #[arg(long)]
        force: bool,
    },
    /// Count (and optionally list) the canonical explanations.
    Enumerate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        list: bool,
    },
    /// Convert a trace to Graphviz DOT.
    TraceDot {
        trace: PathBuf,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score one explanation against the target.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        explanation: String,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Search(common) => {
            let report = cmd_search(common.load()?)?;
            print!("{}", report.table);
            println!("{} explanations; results in {}", report.total_explanations, report.out_dir.display());
        }
        Command::Oracle { common, force } => {
            let cfg = common.load()?;
            let out = cfg.output.clone();
            let oracle = cmd_oracle(cfg, force)?;
            let rows = output::oracle_rows(&oracle);
            let shown = rows.len().min(10);
            print!("{}", output::format_table(&rows[..shown]));
            println!(
                "{} ranked, {} filtered; full ranking in {}",
                oracle.ranked.len(),
                oracle.filtered.len(),
                out.join(ltl_explain_cli::commands::ORACLE_FILE).display()
            );
        }
        Command::Enumerate { common, list } => {
            // The environment is not needed, so a missing map is not an error here.
            let all = cmd_enumerate(&RunConfig::read(&common.config)?)?;
            println!("{}", all.len());
            if list {
                for e in &all {
                    println!("{e}");
                }
            }
        }
        Command::TraceDot { trace, out } => {
            let dot = cmd_trace_dot(&trace)?;
            match out {
                Some(path) => output::write_file(&path, &dot)?,
                None => print!("{dot}"),
            }
        }
        Command::Eval { common, explanation } => {
            let r = cmd_eval(common.load()?, &explanation)?;
            println!("explanation  {}", r.key);
            match r.wkl {
                Some(w) => println!("wkl          {w:.6e}"),
                None => println!("wkl          filtered"),
            }
            println!("mean_return  {:.6}", r.mean_return);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
