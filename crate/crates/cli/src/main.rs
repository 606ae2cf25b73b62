use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use survsplit::bench::{bench_single_tree, cell_grid, emit_table, TableFormat};
use survsplit::experiments::{run_concordance_parity, run_rmse_parity, ParityReport, DEFAULT_REPS};
use survsplit::io::write_atomic;
use survsplit::simgen::PHConfig;
use survsplit::{concordance_error, train, Error, ForestModel, ForestParams, SplitRule, SurvivalDataset, TreeParams};

#[derive(Parser)]
#[command(name = "survsplit", version, about = "Random survival forests with exact and fast log-rank splitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a forest on a CSV file and write the model as JSON.
    Train(TrainArgs),
    /// Predict survival curves (or survival at a horizon) for a CSV file.
    Predict(PredictArgs),
    /// Out-of-bag concordance error of a model on its training data.
    Evaluate(EvaluateArgs),
    /// Time single-tree growth under both split rules.
    Bench(BenchArgs),
    /// Paired exact-vs-fast accuracy comparison.
    Parity(ParityArgs),
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "time")]
    time_col: String,
    #[arg(long, default_value = "event")]
    event_col: String,
}

#[derive(Args, Clone)]
struct ForestArgs {
    #[arg(long, default_value_t = 500)]
    trees: usize,
    /// Features tried per split [default: ceil(sqrt(p))]
    #[arg(long)]
    mtry: Option<usize>,
    #[arg(long, default_value_t = survsplit::tree::DEFAULT_MIN_NODE_SIZE)]
    min_node_size: usize,
    #[arg(long, default_value_t = 0.5)]
    sample_fraction: f64,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, value_enum, default_value_t = Rule::Fast)]
    split_rule: Rule,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads [default: all cores]
    #[arg(long, env = "SURVSPLIT_THREADS")]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Exact,
    Fast,
}

impl From<Rule> for SplitRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Exact => SplitRule::Exact,
            Rule::Fast => SplitRule::Fast,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Csv,
}

impl From<Format> for TableFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Markdown => TableFormat::Markdown,
            Format::Csv => TableFormat::Csv,
        }
    }
}

impl ForestArgs {
    fn params(&self, p: usize) -> ForestParams {
        let mut fp = ForestParams::for_features(p);
        fp.num_trees = self.trees;
        fp.sample_fraction = self.sample_fraction;
        fp.num_threads = self.threads;
        fp.tree = TreeParams {
            mtry: self.mtry.unwrap_or(fp.tree.mtry),
            min_node_size: self.min_node_size,
            max_depth: self.max_depth,
            split_rule: self.split_rule.into(),
            rng_seed: self.seed,
            ..fp.tree
        };
        fp
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    forest: ForestArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
    /// Emit only S(horizon) instead of full curves.
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [20_000, 50_000])]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [25, 50])]
    p: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [20, 130, 260, 500])]
    m: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Only the smallest cell (n=20000, p=25, M=20).
    #[arg(long)]
    quick: bool,
    /// Features tried per split [default: all]
    #[arg(long)]
    mtry: Option<usize>,
    #[arg(long, default_value_t = survsplit::tree::DEFAULT_MIN_NODE_SIZE)]
    min_node_size: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Study {
    Concordance,
    Rmse,
}

#[derive(Args)]
struct ParityArgs {
    #[arg(long, value_enum, default_value_t = Study::Rmse)]
    study: Study,
    /// CSV data for the concordance study [default: simulated proportional hazards]
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "time")]
    time_col: String,
    #[arg(long, default_value = "event")]
    event_col: String,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    /// Simulated sample size.
    #[arg(long, default_value_t = 5000)]
    n: usize,
    /// Simulated covariate count.
    #[arg(long = "p", default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 0.5)]
    horizon: f64,
    #[arg(long, default_value_t = 0.3)]
    censor_rate: f64,
    #[arg(long, default_value_t = 1)]
    data_seed: u64,
    #[command(flatten)]
    forest: ForestArgs,
    /// Per-repetition CSV (rep, seed, err_exact, err_approx, delta).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Usage(_) | Error::Schema(_) | Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn load_data(a: &DataArgs) -> Result<SurvivalDataset, Failure> {
    SurvivalDataset::load_csv(&a.data, &a.time_col, &a.event_col).map_err(|e| Failure::Runtime(e.to_string()))
}

fn emit(text: &str, out: Option<&Path>) -> CmdResult {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()).map_err(Failure::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_train(a: TrainArgs) -> CmdResult {
    let data = load_data(&a.data)?;
    let params = a.forest.params(data.p());
    let start = Instant::now();
    let model = train(&data, &params)?;
    let secs = start.elapsed().as_secs_f64();
    model.save(&a.out)?;
    println!(
        "trained {} trees ({} rule) on n={} p={} in {:.2}s -> {}",
        model.num_trees(),
        params.tree.split_rule,
        data.n(),
        data.p(),
        secs,
        a.out.display()
    );
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> CmdResult {
    let model = ForestModel::load(&a.model)?;
    let data = load_data(&a.data)?;
    if data.p() != model.num_features() {
        return Err(Failure::Runtime(format!(
            "model expects {} covariates, data has {}",
            model.num_features(),
            data.p()
        )));
    }
    let curves = model.predict_curves(&data, survsplit::CurveKind::Survival)?;
    let mut out = String::new();
    match a.horizon {
        Some(h) => {
            out.push_str("row,survival\n");
            for (i, c) in curves.iter().enumerate() {
                let _ = writeln!(out, "{i},{}", c.value_at(h));
            }
        }
        None => {
            out.push_str("row");
            for t in &model.global_grid {
                let _ = write!(out, ",t={t}");
            }
            out.push('\n');
            for (i, c) in curves.iter().enumerate() {
                let _ = write!(out, "{i}");
                for v in &c.values {
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
        }
    }
    write_atomic(&a.out, out.as_bytes())?;
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> CmdResult {
    let model = ForestModel::load(&a.model)?;
    let data = load_data(&a.data)?;
    let risk = model.oob_risk_scores(&data)?;
    let (mut r, mut t, mut e) = (Vec::new(), Vec::new(), Vec::new());
    for (i, s) in risk.iter().enumerate() {
        if let Some(s) = s {
            r.push(*s);
            t.push(data.times()[i]);
            e.push(data.events()[i]);
        }
    }
    let pe = concordance_error(&r, &t, &e)?;
    println!("| samples | with OOB prediction | OOB PE_C |");
    println!("|---:|---:|---:|");
    println!("| {} | {} | {pe:.4} |", data.n(), r.len());
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let cells = if a.quick {
        cell_grid(&[20_000], &[25], &[20])
    } else {
        cell_grid(&a.n, &a.p, &a.m)
    };
    let max_p = cells.iter().map(|c| c.p).max().unwrap_or(1);
    let params = TreeParams {
        mtry: a.mtry.unwrap_or(max_p),
        min_node_size: a.min_node_size,
        ..TreeParams::for_features(max_p)
    };
    if params.mtry == 0 {
        return Err(Failure::Usage("--mtry must be at least 1".into()));
    }
    let rows = bench_single_tree(&cells, a.reps, &params, a.seed)?;
    emit(&emit_table(&rows, a.format.into()), a.out.as_deref())
}

fn cmd_parity(a: ParityArgs) -> CmdResult {
    let report: ParityReport = match a.study {
        Study::Concordance => {
            let data = match &a.data {
                Some(path) => SurvivalDataset::load_csv(path, &a.time_col, &a.event_col)
                    .map_err(|e| Failure::Runtime(e.to_string()))?,
                None => {
                    let cfg = PHConfig {
                        censor_rate: a.censor_rate,
                        horizon: a.horizon,
                        ..PHConfig::standard(a.n, a.dim, a.data_seed)
                    };
                    survsplit::simgen::gen_ph(&cfg)?.0
                }
            };
            run_concordance_parity(&data, a.reps, &a.forest.params(data.p()))?
        }
        Study::Rmse => {
            let cfg = PHConfig {
                censor_rate: a.censor_rate,
                horizon: a.horizon,
                ..PHConfig::standard(a.n, a.dim, a.data_seed)
            };
            run_rmse_parity(&cfg, a.reps, &a.forest.params(a.dim))?
        }
    };
    if let Some(out) = &a.out {
        write_atomic(out, report.to_csv().as_bytes())?;
    }
    print!("{}", report.summary_markdown());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Parity(a) => cmd_parity(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
