use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use phg::bench::{run_bench, write_csv, BenchConfig};
use phg::eval::{default_batch_size, eval_scalar_oracle, evaluate_batch, PointBatch};
use phg::io::{EvalOutput, PointsFile, TrackSummary};
use phg::kernels::BackendKind;
use phg::system::{build_tables, homogenize, HomogenizedSystem, HomotopyTables, LaurentSystem};
use phg::tracker::{check_start_points, track_batch, EvalOptions, TrackError, TrackOptions};
use phg::{gen_chandra, gen_cyclic, gen_random, LiftingSource, RandomSystemConfig};

#[derive(Parser)]
#[command(
    name = "phg",
    version,
    about = "Polyhedral homotopy evaluation and batched path tracking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a system file.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Evaluate extended Jacobian blocks at a point set.
    Eval {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_name = "K")]
        batch_size: Option<usize>,
        #[arg(long, env = "PHG_BACKEND", default_value = "reference")]
        backend: String,
        /// Also compare against the scalar oracle and report the deviation.
        #[arg(long)]
        check_oracle: bool,
    },
    /// Track a point set from its start parameter to zero.
    Track {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_name = "K")]
        batch_size: Option<usize>,
        #[arg(long, env = "PHG_BACKEND", default_value = "reference")]
        backend: String,
        /// Override the start parameter from the points file.
        #[arg(long)]
        tau0: Option<f64>,
        /// Fixed-step benchmark protocol with this many uniform steps.
        #[arg(long)]
        fixed_steps: Option<u64>,
        /// Corrector iterations per step.
        #[arg(long)]
        newton_iters: Option<u32>,
    },
    /// Fixed-step wall-clock benchmark over growing point counts.
    Bench {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "PHG_BACKEND", default_value = "reference")]
        backend: String,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[arg(long, default_value_t = 100)]
        fixed_steps: u64,
        #[arg(long, default_value_t = 1)]
        newton_iters: u32,
        #[arg(long, value_name = "K")]
        batch_size: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        tau0: Option<f64>,
        /// Comma-separated point counts (default 10,50,250,500,1000).
        #[arg(long, value_delimiter = ',')]
        point_counts: Option<Vec<usize>>,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Cyclic-n benchmark system.
    Cyclic {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discretized Chandrasekhar H-equation.
    Chandra {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.51)]
        c: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded random system.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = -3)]
        exp_min: i64,
        #[arg(long, default_value_t = 3)]
        exp_max: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failures sorted by exit code: usage 1, data 2, numerical 3.
enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message; fold all parse problems into the
            // usage exit code.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { kind } => cmd_gen(kind),
        Command::Eval {
            system,
            points,
            out,
            batch_size,
            backend,
            check_oracle,
        } => cmd_eval(system, points, out, batch_size, &backend, check_oracle),
        Command::Track {
            system,
            points,
            out,
            batch_size,
            backend,
            tau0,
            fixed_steps,
            newton_iters,
        } => cmd_track(system, points, out, batch_size, &backend, tau0, fixed_steps, newton_iters),
        Command::Bench {
            system,
            out,
            backend,
            repetitions,
            fixed_steps,
            newton_iters,
            batch_size,
            seed,
            tau0,
            point_counts,
        } => cmd_bench(
            system,
            out,
            &backend,
            repetitions,
            fixed_steps,
            newton_iters,
            batch_size,
            seed,
            tau0,
            point_counts,
        ),
    }
}

fn parse_backend(name: &str) -> Result<BackendKind, CliError> {
    name.parse::<BackendKind>().map_err(CliError::Usage)
}

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn write_output(out: Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(&path, content)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load_system(path: &PathBuf) -> Result<(LaurentSystem, HomogenizedSystem, HomotopyTables), CliError> {
    let text = read_file(path)?;
    let sys = LaurentSystem::parse(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let hsys = homogenize(&sys);
    let tables = build_tables(&hsys);
    Ok((sys, hsys, tables))
}

fn load_points(path: &PathBuf, nvars: usize, tau0: Option<f64>) -> Result<PointBatch, CliError> {
    let text = read_file(path)?;
    let mut pf = PointsFile::parse(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if let Some(t) = tau0 {
        pf.tau0 = t;
    }
    pf.into_batch(nvars)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn cmd_gen(kind: GenKind) -> Result<(), CliError> {
    let (sys, out) = match kind {
        GenKind::Cyclic { n, seed, out } => {
            if n < 3 {
                return Err(CliError::Usage("cyclic systems need --n >= 3".into()));
            }
            (gen_cyclic(n, &mut LiftingSource::seeded(seed)), out)
        }
        GenKind::Chandra { n, c, seed, out } => {
            if n < 2 {
                return Err(CliError::Usage("chandra systems need --n >= 2".into()));
            }
            if !(c > 0.0 && c <= 1.0) {
                return Err(CliError::Usage("parameter --c must lie in (0, 1]".into()));
            }
            (gen_chandra(n, c, &mut LiftingSource::seeded(seed)), out)
        }
        GenKind::Random {
            n,
            m,
            seed,
            exp_min,
            exp_max,
            out,
        } => {
            if n < 1 || m < 1 || exp_min > exp_max {
                return Err(CliError::Usage(
                    "random systems need --n >= 1, --m >= 1 and exp-min <= exp-max".into(),
                ));
            }
            let mut cfg = RandomSystemConfig::new(n, m, seed);
            cfg.exp_min = exp_min;
            cfg.exp_max = exp_max;
            (gen_random(&cfg, &mut LiftingSource::seeded(seed)), out)
        }
    };
    eprintln!(
        "m={} N={}",
        sys.monomial_count(),
        sys.equation_count() + 1
    );
    write_output(out, &(sys.to_json() + "\n"))
}

fn cmd_eval(
    system: PathBuf,
    points: PathBuf,
    out: Option<PathBuf>,
    batch_size: Option<usize>,
    backend: &str,
    check_oracle: bool,
) -> Result<(), CliError> {
    let backend = parse_backend(backend)?;
    let (_, hsys, tables) = load_system(&system)?;
    let batch = load_points(&points, tables.variable_count(), None)?;
    let b = batch_size.unwrap_or_else(|| default_batch_size(batch.len()));
    if b == 0 {
        return Err(CliError::Usage("--batch-size must be at least 1".into()));
    }
    let jac = evaluate_batch(&batch, &tables, b, backend.instance())
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    let deviation = if check_oracle {
        let mut max_dev = 0.0f64;
        for p in 0..batch.len() {
            let oracle = eval_scalar_oracle(batch.point(p), batch.tau(p), &hsys)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            for k in 0..tables.equation_count() {
                for c in 0..tables.block_cols() {
                    num += (jac.entry(p, k, c) - oracle[(k, c)]).norm_sqr();
                    den += oracle[(k, c)].norm_sqr();
                }
            }
            max_dev = max_dev.max(num.sqrt() / den.sqrt().max(f64::MIN_POSITIVE));
        }
        eprintln!("max oracle deviation: {max_dev:.3e}");
        Some(max_dev)
    } else {
        None
    };

    let output = EvalOutput::from_jacobian(&jac, batch.taus(), deviation);
    write_output(out, &(output.to_json() + "\n"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_track(
    system: PathBuf,
    points: PathBuf,
    out: Option<PathBuf>,
    batch_size: Option<usize>,
    backend: &str,
    tau0: Option<f64>,
    fixed_steps: Option<u64>,
    newton_iters: Option<u32>,
) -> Result<(), CliError> {
    let backend = parse_backend(backend)?;
    if let Some(t) = tau0 {
        if !(t < 0.0) || !t.is_finite() {
            return Err(CliError::Usage(format!(
                "--tau0 must be a finite negative value, got {t}"
            )));
        }
    }
    let (_, _, tables) = load_system(&system)?;
    let batch = load_points(&points, tables.variable_count(), tau0)?;

    let fixed = fixed_steps.is_some();
    let opts = TrackOptions {
        tau0: tau0.or_else(|| (!batch.is_empty()).then(|| batch.tau(0))).unwrap_or(-20.0),
        fixed_step_mode: fixed,
        fixed_steps: fixed_steps.unwrap_or(100),
        newton_max_iters: newton_iters.unwrap_or(4),
        // The fixed-step protocol does not depend on on-path starts.
        skip_start_check: fixed,
        ..TrackOptions::default()
    };
    let eval = EvalOptions {
        backend,
        batch_size,
    };
    if !batch.is_empty() {
        check_start_points(&batch, &tables, &opts, &eval).map_err(|e| match e {
            TrackError::StartPointInvalid { .. } => CliError::Data(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        })?;
    }

    let started = Instant::now();
    let results = track_batch(&batch, &tables, &opts, &eval).map_err(|e| match e {
        TrackError::InvalidOptions(m) => CliError::Usage(m),
        other => CliError::Numerical(other.to_string()),
    })?;
    let wall = started.elapsed().as_secs_f64();

    let text = phg::io::write_track_jsonl(&results, wall);
    write_output(out, &text)?;
    let summary = TrackSummary::from_results(&results, wall);
    eprintln!("{}", summary.render());

    if !results.is_empty() && summary.converged == 0 {
        return Err(CliError::Numerical("no path converged".into()));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    system: PathBuf,
    out: Option<PathBuf>,
    backend: &str,
    repetitions: usize,
    fixed_steps: u64,
    newton_iters: u32,
    batch_size: Option<usize>,
    seed: u64,
    tau0: Option<f64>,
    point_counts: Option<Vec<usize>>,
) -> Result<(), CliError> {
    let backend = parse_backend(backend)?;
    if repetitions == 0 || fixed_steps == 0 {
        return Err(CliError::Usage(
            "--repetitions and --fixed-steps must be at least 1".into(),
        ));
    }
    let (_, _, tables) = load_system(&system)?;
    let mut cfg = BenchConfig {
        repetitions,
        fixed_steps,
        newton_iters,
        batch_size,
        seed,
        backend,
        ..BenchConfig::default()
    };
    if let Some(t) = tau0 {
        if !(t < 0.0) || !t.is_finite() {
            return Err(CliError::Usage(format!(
                "--tau0 must be a finite negative value, got {t}"
            )));
        }
        cfg.tau0 = t;
    }
    if let Some(counts) = point_counts {
        if counts.is_empty() {
            return Err(CliError::Usage("--point-counts must not be empty".into()));
        }
        cfg.point_counts = counts;
    }
    let rows = run_bench(&tables, &cfg);
    for r in &rows {
        eprintln!(
            "{:>6} points: mean {}, per point {} us [{}]",
            r.points,
            r.mean_seconds.map_or("-".into(), |v| format!("{v:.4} s")),
            r.per_point_us.map_or("-".into(), |v| format!("{v:.2}")),
            r.backend
        );
    }
    write_output(out, &write_csv(&rows))
}
