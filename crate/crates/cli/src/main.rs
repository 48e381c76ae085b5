mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::Outcome;
use report::Format;

#[derive(Parser, Debug)]
#[command(name = "opmean", version, about = "Operator means, divergences and hypothesis-testing exponents")]
struct Cli {
    /// Master seed for all randomized checks.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Relative eigenvalue cutoff and PSD tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Largest matrix dimension allowed for tensor powers.
    #[arg(long, global = true)]
    cap: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Write `<command>.<ext>` into this directory instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Two-variable means and perspectives.
    Means {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        /// ka, g, gtilde, ghat or logeuclid.
        #[arg(long, default_value = "ka")]
        kind: String,
        #[arg(long, default_value_t = 2.0)]
        z: f64,
        /// Named scalar function; computes its noncommutative perspective instead.
        #[arg(long)]
        perspective: Option<String>,
    },
    /// Quantum Renyi divergences and Hoeffding quantities.
    Divergence {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// petz, sandwiched, relative, max, hoeffding or hoeffding-star.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
    },
    /// Trivial and geometric exponent bounds for two composite hypotheses.
    Bounds {
        #[arg(long, num_args = 2, required = true)]
        null: Vec<PathBuf>,
        #[arg(long, num_args = 2, required = true)]
        alt: Vec<PathBuf>,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Membership of C in the geometric-mean set of two operators, with oracles.
    Membership {
        #[arg(long = "C", alias = "c")]
        c: PathBuf,
        #[arg(long = "A", alias = "a", num_args = 2, required = true)]
        a: Vec<PathBuf>,
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Channel mean membership versus discrimination strategies.
    Channels {
        #[arg(long)]
        e: PathBuf,
        #[arg(long)]
        n1: PathBuf,
        #[arg(long)]
        n2: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Jordan decomposition of two projections and eps-relations.
    Jordan {
        #[arg(long)]
        s: PathBuf,
        #[arg(long)]
        q: PathBuf,
        #[arg(long, num_args = 1..)]
        eps: Vec<f64>,
    },
    /// The classical exponent chain example.
    AppendixA {
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        r: f64,
    },
    /// Runs the reproduction criteria.
    ReproduceAll {
        /// Criterion ids to run (default: all).
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        only: Vec<u32>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Means { .. } => "means",
            Command::Divergence { .. } => "divergence",
            Command::Bounds { .. } => "bounds",
            Command::Membership { .. } => "membership",
            Command::Channels { .. } => "channels",
            Command::Jordan { .. } => "jordan",
            Command::AppendixA { .. } => "appendix-a",
            Command::ReproduceAll { .. } => "reproduce-all",
        }
    }
}

fn configure(cli: &Cli) -> Result<(), String> {
    let mut cfg = opmean::config::Config::default();
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(format!("--tol {tol} must lie in (0,1)"));
        }
        cfg.eig_zero_tol = tol;
        cfg.psd_tol = tol;
    }
    if let Some(cap) = cli.cap {
        if cap == 0 {
            return Err("--cap must be positive".into());
        }
        cfg.dim_cap = cap;
    }
    opmean::config::install(cfg);
    if let Ok(n) = std::env::var("OPMEAN_THREADS") {
        let n: usize = n.parse().map_err(|_| format!("OPMEAN_THREADS={n:?} is not a number"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> opmean::Result<(Outcome, Vec<(u32, f64)>)> {
    let seed = cli.seed;
    let single = |o: opmean::Result<Outcome>| o.map(|o| (o, Vec::new()));
    match &cli.command {
        Command::Means {
            a,
            b,
            t,
            kind,
            z,
            perspective,
        } => single(commands::means(a, b, *t, kind, *z, perspective.as_deref())),
        Command::Divergence { a, b, kind, alpha, r } => single(commands::divergence(a, b, kind, *alpha, *r)),
        Command::Bounds { null, alt, r, grid } => single(commands::bounds(null, alt, *r, *grid)),
        Command::Membership { c, a, n_max, trials } => single(commands::membership(c, a, *n_max, *trials, seed)),
        Command::Channels { e, n1, n2, n, trials } => single(commands::channels(e, n1, n2, *n, *trials, seed)),
        Command::Jordan { s, q, eps } => single(commands::jordan(s, q, eps)),
        Command::AppendixA { k, r } => single(commands::appendix_a(*k, *r)),
        Command::ReproduceAll { only } => commands::reproduce_all(seed, only),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure(&cli) {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    let command = cli.command.name();
    let start = Instant::now();
    let (outcome, timings) = match dispatch(&cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    let doc = report::envelope(command, cli.seed, outcome.params, outcome.result);
    let bytes = match cli.format {
        Format::Json => Ok(report::to_json_bytes(&doc)),
        Format::Csv if matches!(cli.command, Command::ReproduceAll { .. }) => {
            report::checks_to_csv_bytes(doc["result"]["criteria"].as_array().map(Vec::as_slice).unwrap_or_default())
        }
        Format::Csv => report::to_csv_bytes(&doc),
    };
    let written = bytes.and_then(|b| report::emit(&b, command, cli.format, cli.out.as_deref()));
    if let Err(e) = written {
        eprintln!("error: writing report: {e}");
        return ExitCode::from(1);
    }
    let timing = json!({
        "command": command,
        "wall_seconds": elapsed,
        "criteria": timings.iter().map(|(id, s)| json!({"id": id, "wall_seconds": s})).collect::<Vec<_>>(),
    });
    eprintln!("{command}: {elapsed:.3}s");
    if let Some(dir) = &cli.out {
        if let Err(e) = std::fs::write(dir.join(format!("{command}.timing.json")), report::to_json_bytes(&timing)) {
            eprintln!("error: writing timing: {e}");
            return ExitCode::from(1);
        }
    }
    if outcome.violation {
        eprintln!("{command}: certified violation");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
