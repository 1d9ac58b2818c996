//! Wall-clock benchmark harness: fixed Euler-Newton step counts over
//! growing point batches, averaged over repetitions, reported as CSV.

use std::time::Instant;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::PointBatch;
use crate::kernels::{BackendKind, ComplexMatrix};
use crate::system::HomotopyTables;
use crate::tracker::{euler_newton_step, EvalOptions, TrackOptions};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub point_counts: Vec<usize>,
    pub repetitions: usize,
    pub fixed_steps: u64,
    pub newton_iters: u32,
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub tau0: f64,
    pub backend: BackendKind,
    /// Rows whose working-set estimate exceeds this are skipped and marked
    /// "-" in the CSV instead of aborting the run.
    pub max_bytes: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            point_counts: vec![10, 50, 250, 500, 1000],
            repetitions: 3,
            fixed_steps: 100,
            newton_iters: 1,
            batch_size: None,
            seed: 7,
            tau0: -20.0,
            backend: BackendKind::Reference,
            max_bytes: 8 << 30,
        }
    }
}

/// One CSV row. `None` measurements render as "-".
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub points: usize,
    pub mean_seconds: Option<f64>,
    pub std_seconds: Option<f64>,
    pub per_point_us: Option<f64>,
    pub backend: String,
    /// Paths that ended in a failure status, across all repetitions.
    pub failed_paths: usize,
}

/// Seeded batch of random unit-norm points with no small coordinates, safe
/// for logarithmic evaluation.
pub fn random_unit_batch(nvars: usize, p: usize, seed: u64, tau0: f64) -> PointBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = ComplexMatrix::zeros(p, nvars);
    for i in 0..p {
        for j in 0..nvars {
            let re = rng.random_range(-0.5..0.5);
            let im = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            y[(i, j)] = Complex64::new(re, im).exp();
        }
        let norm: f64 = y.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for v in y.row_mut(i) {
            *v /= norm;
        }
    }
    PointBatch::new(y, vec![tau0; p]).expect("tau0 <= 0")
}

fn working_set_bytes(tables: &HomotopyTables, p: usize) -> usize {
    let nvars = tables.variable_count();
    let width = tables.equation_count() * tables.block_cols();
    let per_point = tables.monomial_count() + width + 2 * (nvars + 1);
    // Complex128 entries plus slack for temporaries.
    p.saturating_mul(per_point).saturating_mul(16).saturating_mul(4)
}

/// One timed repetition: `steps` uniform Euler-Newton steps over the whole
/// batch. Unlike the tracker, failed points are never dropped, so every
/// step processes all `p` rows and the measured cost reflects the full
/// protocol. Returns the wall time and the points that ever failed a step.
pub fn run_protocol(
    start: &PointBatch,
    tables: &HomotopyTables,
    steps: u64,
    newton_iters: u32,
    eval: &EvalOptions,
) -> (f64, usize) {
    let mut batch = start.clone();
    let p = batch.len();
    let opts = TrackOptions {
        fixed_step_mode: true,
        fixed_steps: steps,
        newton_max_iters: newton_iters,
        skip_start_check: true,
        ..TrackOptions::default()
    };
    let mut ever_failed = vec![false; p];
    let timer = Instant::now();
    for step in 0..steps {
        let dtau: Vec<f64> = (0..p)
            .map(|i| {
                let remaining = -batch.tau(i);
                let left = steps - step;
                (remaining / left as f64).min(remaining)
            })
            .collect();
        let reports = euler_newton_step(&mut batch, tables, &dtau, &opts, eval);
        for (i, r) in reports.iter().enumerate() {
            if r.failure.is_some() {
                ever_failed[i] = true;
            }
        }
    }
    let elapsed = timer.elapsed().as_secs_f64();
    (elapsed, ever_failed.iter().filter(|f| **f).count())
}

/// Runs the fixed-step protocol for every configured point count and
/// repetition. Per-row failures (e.g. the memory guard) yield "-" rows so
/// the run continues.
pub fn run_bench(tables: &HomotopyTables, cfg: &BenchConfig) -> Vec<BenchRow> {
    let eval = EvalOptions {
        backend: cfg.backend,
        batch_size: cfg.batch_size,
    };
    let mut rows = Vec::with_capacity(cfg.point_counts.len());
    for &p in &cfg.point_counts {
        if p == 0 || working_set_bytes(tables, p) > cfg.max_bytes {
            rows.push(BenchRow {
                points: p,
                mean_seconds: None,
                std_seconds: None,
                per_point_us: None,
                backend: cfg.backend.name().into(),
                failed_paths: 0,
            });
            continue;
        }
        let batch = random_unit_batch(tables.variable_count(), p, cfg.seed, cfg.tau0);
        let mut times = Vec::with_capacity(cfg.repetitions);
        let mut failed = 0usize;
        for _ in 0..cfg.repetitions.max(1) {
            let (elapsed, failures) =
                run_protocol(&batch, tables, cfg.fixed_steps, cfg.newton_iters, &eval);
            times.push(elapsed);
            failed = failed.max(failures);
        }
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        let std = if times.len() > 1 {
            (times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (times.len() - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        rows.push(BenchRow {
            points: p,
            mean_seconds: Some(mean),
            std_seconds: Some(std),
            per_point_us: Some(mean / p as f64 * 1e6),
            backend: cfg.backend.name().into(),
            failed_paths: failed,
        });
    }
    rows
}

fn field(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => "-".into(),
    }
}

pub fn write_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("points,mean_seconds,std_seconds,per_point_us,backend\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.points,
            field(r.mean_seconds),
            field(r.std_seconds),
            field(r.per_point_us),
            r.backend
        ));
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<BenchRow>, crate::io::IoError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| crate::io::IoError::Format("empty CSV".into()))?;
    if header.trim() != "points,mean_seconds,std_seconds,per_point_us,backend" {
        return Err(crate::io::IoError::Format(format!(
            "unexpected CSV header: {header}"
        )));
    }
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(crate::io::IoError::Format(format!("bad CSV row: {line}")));
        }
        let num = |s: &str| -> Result<Option<f64>, crate::io::IoError> {
            if s == "-" {
                Ok(None)
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|e| crate::io::IoError::Format(format!("bad number {s}: {e}")))
            }
        };
        rows.push(BenchRow {
            points: cols[0]
                .parse()
                .map_err(|e| crate::io::IoError::Format(format!("bad count: {e}")))?,
            mean_seconds: num(cols[1])?,
            std_seconds: num(cols[2])?,
            per_point_us: num(cols[3])?,
            backend: cols[4].to_string(),
            failed_paths: 0,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_cyclic, LiftingSource};
    use crate::system::{build_tables, homogenize};

    #[test]
    fn csv_has_header_and_one_row_per_count() {
        let sys = gen_cyclic(3, &mut LiftingSource::seeded(4));
        let tables = build_tables(&homogenize(&sys));
        let cfg = BenchConfig {
            point_counts: vec![2, 4],
            repetitions: 2,
            fixed_steps: 3,
            ..BenchConfig::default()
        };
        let rows = run_bench(&tables, &cfg);
        assert_eq!(rows.len(), 2);
        let csv = write_csv(&rows);
        assert_eq!(csv.lines().count(), 3);
        let parsed = parse_csv(&csv).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].points, 2);
        assert!(parsed[0].mean_seconds.is_some());
        // Round trip through the formatter.
        assert_eq!(write_csv(&parsed), csv);
    }

    #[test]
    fn memory_guard_marks_dash_rows() {
        let sys = gen_cyclic(3, &mut LiftingSource::seeded(4));
        let tables = build_tables(&homogenize(&sys));
        let cfg = BenchConfig {
            point_counts: vec![2, usize::MAX / 1024],
            repetitions: 1,
            fixed_steps: 1,
            ..BenchConfig::default()
        };
        let rows = run_bench(&tables, &cfg);
        assert!(rows[0].mean_seconds.is_some());
        assert!(rows[1].mean_seconds.is_none());
        let csv = write_csv(&rows);
        assert!(csv.lines().nth(2).unwrap().contains("-,-,-"));
    }

    #[test]
    fn unit_batch_is_seeded_and_normalized() {
        let a = random_unit_batch(4, 6, 9, -20.0);
        let b = random_unit_batch(4, 6, 9, -20.0);
        for i in 0..6 {
            assert!((a.point_norm(i) - 1.0).abs() < 1e-13);
            for j in 0..4 {
                assert_eq!(a.y()[(i, j)], b.y()[(i, j)]);
            }
        }
    }
}
