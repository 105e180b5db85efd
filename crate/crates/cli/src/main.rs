//! `capgaps`: sample random qubit channels, compute their capacities and
//! gaps, bound `Q_III` by convex decomposition, plot, and check small codes.

use std::path::PathBuf;
use std::process::ExitCode;

use capgaps::capacity::OptimizerConfig;
use capgaps::coding::{
    bare_error, builtin_code, coding_error, kl_check, noise_channel, single_qubit_paulis, works,
    Coding, KL_TOL,
};
use capgaps::experiments::{
    decompose_row, evaluate_all, items_for_batch, plot_scatter, read_csv, summarize, with_threads,
    write_csv, WorkItem,
};
use capgaps::sampling::{sample_channels, BatchFile, SampleSpec};
use capgaps::Error;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "capgaps",
    version,
    about = "Quantum capacity gaps of random qubit channels"
)]
struct Cli {
    /// Seed for sampling and for the optimizers.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct OptArgs {
    /// Optimizer restarts per quantity.
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    /// Simplex iterations per run.
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Convergence tolerance on the simplex value spread.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

impl OptArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.restarts,
            max_iters: self.max_iters,
            tol: self.tol,
            seed: 0,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample random qubit channels of a fixed Choi rank.
    Sample {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute capacities and gaps for sampled batches.
    Capacities {
        /// Batch files written by `sample` (repeatable).
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opt: OptArgs,
    },
    /// Add the decomposition bound on Q_III to an existing results file.
    Decompose {
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        /// Results file to update in place.
        #[arg(long)]
        append: PathBuf,
        #[command(flatten)]
        opt: OptArgs,
    },
    /// Scatter plot of two result columns as SVG.
    Figure {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "t_norm")]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        out: PathBuf,
        /// Draw all points in one color.
        #[arg(long)]
        no_group: bool,
    },
    /// Print summary statistics of a results file.
    Summary {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Coding error, bare error and Knill-Laflamme check of a built-in code.
    CodeCheck {
        #[arg(long)]
        code: String,
        /// Noise as family:param (bitflip, dephasing, depolarizing, amplitude_damping).
        #[arg(long)]
        noise: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cli: Cli) -> capgaps::Result<()> {
    let threads = cli.threads;
    match cli.cmd {
        Command::Sample { rank, count, out } => {
            let spec = SampleSpec {
                rank,
                count,
                seed: cli.seed.unwrap_or(0),
            };
            let batch = with_threads(threads, || sample_channels(&spec))??;
            batch.to_file().write(&out)?;
            eprintln!(
                "wrote {count} rank-{rank} channels to {} ({} degenerate draws resampled)",
                out.display(),
                batch.rejections
            );
        }
        Command::Capacities { inputs, out, opt } => {
            let (items, seed) = load_items(&inputs, cli.seed)?;
            let rows = evaluate_all(&items, seed, &opt.config(), false, threads)?;
            write_csv(&rows, &out)?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::Decompose {
            inputs,
            append,
            opt,
        } => {
            let (items, _) = load_items(&inputs, cli.seed)?;
            let cfg = opt.config();
            cfg.validate()?;
            let mut rows = read_csv(&append)?;
            let missing = with_threads(threads, || {
                rows.par_iter_mut()
                    .map(|row| {
                        match items
                            .iter()
                            .find(|it| it.rank == row.rank && it.index == row.index)
                        {
                            Some(item) => {
                                decompose_row(row, &item.channel, &cfg);
                                0
                            }
                            None => 1,
                        }
                    })
                    .sum::<usize>()
            })?;
            if missing > 0 {
                log::warn!("{missing} rows have no matching channel in the inputs");
            }
            write_csv(&rows, &append)?;
            let accepted = rows.iter().filter(|r| r.q3_ub.is_some()).count();
            eprintln!(
                "{accepted} of {} rows have an accepted decomposition",
                rows.len()
            );
        }
        Command::Figure {
            input,
            x,
            y,
            out,
            no_group,
        } => {
            let rows = read_csv(&input)?;
            std::fs::write(&out, plot_scatter(&rows, &x, &y, !no_group)?)?;
        }
        Command::Summary { input } => {
            let rows = read_csv(&input)?;
            let s = summarize(&rows);
            let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            println!("rows                         {}", rows.len());
            println!(
                "rank 2: q5 > 1e-3 at |t|<0.4 {}",
                show(s.rank2_positive_low_t)
            );
            println!("rank 2: transition statistic {}", show(s.rank2_transition));
            println!(
                "rank 2: median |dq24|        {}",
                show(s.rank2_median_abs_dq24)
            );
            println!("rank 3-4: q5 <= 1e-3         {}", show(s.rank34_zero));
            println!(
                "rank 3-4: dq34 > 0           {}",
                show(s.rank34_dq34_positive)
            );
            println!(
                "rank 3-4: dq23 < 0           {}",
                show(s.rank34_dq23_negative)
            );
        }
        Command::CodeCheck { code, noise } => {
            let stab = builtin_code(&code)?;
            let ch = noise_channel(&noise)?;
            let coding = Coding::from_code(&stab)?;
            let eps = coding_error(&coding, &ch)?;
            let bare = bare_error(&ch, coding.k)?;
            let kl = kl_check(&stab, &single_qubit_paulis(stab.n), KL_TOL)?;
            println!("code            {} [n={}, k={}]", stab.name, stab.n, stab.k);
            println!("noise           {noise}");
            println!("coding_error    {eps:.12}");
            println!("bare_error      {bare:.12}");
            println!("works           {}", works(&coding, &ch)?);
            println!(
                "kl_single_qubit {} (max deviation {:.3e})",
                kl.satisfied, kl.max_deviation
            );
        }
    }
    Ok(())
}

/// Loads batch files into work items ordered by `(rank, index)`; the
/// optimizer seed defaults to the seed of the first batch.
fn load_items(inputs: &[PathBuf], seed: Option<u64>) -> capgaps::Result<(Vec<WorkItem>, u64)> {
    let mut items = Vec::new();
    let mut first_seed = None;
    for path in inputs {
        let batch = BatchFile::read(path)?;
        let spec = batch.manifest.spec;
        first_seed.get_or_insert(spec.seed);
        if items.iter().any(|it: &WorkItem| it.rank == spec.rank) {
            return Err(Error::Precondition(format!(
                "{}: a batch of rank {} was already given",
                path.display(),
                spec.rank
            )));
        }
        items.extend(items_for_batch(&spec, batch.channels()?));
    }
    items.sort_by_key(|it| (it.rank, it.index));
    Ok((items, seed.or(first_seed).unwrap_or(0)))
}
