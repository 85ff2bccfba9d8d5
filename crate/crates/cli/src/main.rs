use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hcschema::attacks::GuessMode;
use hcschema::{Alphabet, SchemaKind};
use hcschema_cli::commands::{self, KeySource, Table51Options};
use hcschema_cli::config::{AttackerKind, RawConfig, DEFAULT_NODE_BUDGET, DEFAULT_SET_BUDGET};
use hcschema_cli::record::{read_results, render_table, write_results};
use hcschema_cli::CliError;

#[derive(Parser)]
#[command(name = "hcschema", version, about = "Experiments on human-computable password schemas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the response of a key to one challenge.
    Respond(RespondArgs),
    /// Estimate Q by playing the guessing game.
    Qestimate(QArgs),
    /// Reproduce the STML quality table.
    Table51(TableArgs),
    /// CSV of expansion factors over a range of lengths.
    Expansion(ExpansionArgs),
    /// Human time-cost report for a schema.
    Cost(CostArgs),
    /// Re-read a results file and print its table.
    Summarize { file: PathBuf },
}

#[derive(Args)]
struct RespondArgs {
    #[arg(long)]
    schema: SchemaKind,
    #[arg(long, default_value_t = 26)]
    alphabet_size: usize,
    /// Digits of f, one per letter.
    #[arg(long, conflicts_with_all = ["key_file", "seed"])]
    key: Option<String>,
    /// Ten digits of g (DS3).
    #[arg(long)]
    g: Option<String>,
    #[arg(long, conflicts_with = "seed")]
    key_file: Option<PathBuf>,
    /// Sample the key from this seed.
    #[arg(long)]
    seed: Option<u64>,
    challenge: String,
}

#[derive(Args)]
struct QArgs {
    /// Plain-text `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    schema: Option<String>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    alphabet_size: Option<usize>,
    /// oracle, ds3, stml-dfs, stml-enum or cheat.
    #[arg(long)]
    attacker: Option<String>,
    #[arg(long)]
    rounds: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// frequency, first-consistent or single-solution.
    #[arg(long)]
    guess_mode: Option<String>,
    #[arg(long)]
    node_budget: Option<u64>,
    #[arg(long)]
    set_budget: Option<u64>,
    #[arg(long)]
    max_pairs: Option<u32>,
    /// Exit with status 3 when more rounds than this abort on a budget.
    #[arg(long)]
    max_aborts: Option<u64>,
    /// Write line-delimited JSON records here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock time (output is then not reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, default_value_t = 200)]
    rounds: u64,
    /// Rounds for L = 10; 0 skips the row.
    #[arg(long, default_value_t = 0)]
    long_rounds: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "stml-enum")]
    attacker: AttackerKind,
    #[arg(long, default_value = "stml-dfs")]
    long_attacker: AttackerKind,
    #[arg(long, default_value = "single-solution")]
    guess_mode: GuessMode,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
    #[arg(long, default_value_t = DEFAULT_SET_BUDGET)]
    set_budget: u64,
    /// Write the table as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExpansionArgs {
    #[arg(long, default_value_t = 1)]
    from: usize,
    #[arg(long, default_value_t = 20)]
    to: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CostArgs {
    #[arg(long)]
    schema: SchemaKind,
    #[arg(long, default_value_t = 10)]
    length: usize,
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Respond(a) => {
            let source = match (a.key, a.key_file, a.seed) {
                (Some(f), _, _) => KeySource::Digits { f, g: a.g },
                (_, Some(p), _) => KeySource::File(p.display().to_string()),
                (_, _, Some(s)) => KeySource::Seed(s),
                _ => return Err(CliError::Config("give --key, --key-file or --seed".into())),
            };
            let alphabet = Alphabet::new(a.alphabet_size)?;
            Ok(format!("{}\n", commands::respond(a.schema, alphabet, &source, &a.challenge)?))
        }
        Command::Qestimate(a) => {
            let mut raw = match &a.config {
                Some(p) => RawConfig::read(p)?,
                None => RawConfig::default(),
            };
            raw.set("schema", a.schema);
            raw.set("length", a.length);
            raw.set("alphabet-size", a.alphabet_size);
            raw.set("attacker", a.attacker);
            raw.set("rounds", a.rounds);
            raw.set("seed", a.seed);
            raw.set("guess-mode", a.guess_mode);
            raw.set("node-budget", a.node_budget);
            raw.set("set-budget", a.set_budget);
            raw.set("max-pairs", a.max_pairs);
            raw.set("max-aborts", a.max_aborts);
            raw.set("out", a.out.map(|p| p.display().to_string()));
            let config = raw.resolve()?;
            let (record, rounds) = commands::qestimate(&config, a.timing)?;
            if let Some(path) = &config.out {
                let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                let mut w = BufWriter::new(file);
                write_results(&mut w, &record, &rounds)?;
                w.flush().map_err(|e| CliError::Io(e.to_string()))?;
            }
            let table = render_table(&record);
            commands::check_aborts(&config, &record.estimate).map_err(|e| {
                print!("{table}");
                e
            })?;
            Ok(table)
        }
        Command::Table51(a) => {
            let opts = Table51Options {
                rounds: a.rounds,
                long_rounds: a.long_rounds,
                seed: a.seed,
                attacker: a.attacker,
                long_attacker: a.long_attacker,
                guess_mode: a.guess_mode,
                node_budget: a.node_budget,
                set_budget: a.set_budget,
            };
            let rows = commands::table51(&opts)?;
            if let Some(p) = &a.out {
                write_file(p, &commands::table51_csv(&rows))?;
            }
            Ok(commands::table51_text(&rows))
        }
        Command::Expansion(a) => {
            let csv = commands::expansion(a.from, a.to)?;
            match &a.out {
                Some(p) => write_file(p, &csv).map(|_| String::new()),
                None => Ok(csv),
            }
        }
        Command::Cost(a) => Ok(commands::cost_report(a.schema, a.length)),
        Command::Summarize { file } => {
            let f = File::open(&file).map_err(|e| CliError::Io(format!("{}: {e}", file.display())))?;
            let (record, _) = read_results(BufReader::new(f))?;
            Ok(render_table(&record))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Attack(hcschema::attacks::AttackError::RefuseToRun { .. }) = e {
                eprintln!("hint: the oracle only runs on small alphabets; try --alphabet-size 3 or a bounded attacker");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
