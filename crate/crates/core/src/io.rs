//! File formats: point sets, evaluation output, track records (JSON lines),
//! and the benchmark CSV.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{ExtendedJacobianBatch, PointBatch};
use crate::kernels::ComplexMatrix;
use crate::tracker::{PathStatus, TrackResult};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("format error: {0}")]
    Format(String),
}

fn json_err(e: serde_json::Error) -> IoError {
    IoError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn pair(z: &Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn unpair(p: &[f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// Point set: one shared start parameter and one row per point. Rows of
/// length N are homogeneous; rows of length n = N - 1 are affine and get
/// the homogenizing coordinate 1 appended.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PointsFile {
    pub tau0: f64,
    pub points: Vec<Vec<[f64; 2]>>,
}

impl PointsFile {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(json_err)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("points serialize")
    }

    pub fn from_batch(batch: &PointBatch) -> Self {
        let tau0 = if batch.is_empty() { 0.0 } else { batch.tau(0) };
        Self {
            tau0,
            points: (0..batch.len())
                .map(|i| batch.point(i).iter().map(pair).collect())
                .collect(),
        }
    }

    /// Builds a batch for a system with N homogeneous coordinates,
    /// homogenizing affine rows on the fly.
    pub fn into_batch(&self, nvars: usize) -> Result<PointBatch, IoError> {
        let p = self.points.len();
        let mut y = ComplexMatrix::zeros(p, nvars);
        for (i, row) in self.points.iter().enumerate() {
            if row.len() == nvars {
                for (j, v) in row.iter().enumerate() {
                    y[(i, j)] = unpair(v);
                }
            } else if row.len() + 1 == nvars {
                for (j, v) in row.iter().enumerate() {
                    y[(i, j)] = unpair(v);
                }
                y[(i, nvars - 1)] = Complex64::ONE;
            } else {
                return Err(IoError::Shape(format!(
                    "point {i} has {} coordinates, expected {} (homogeneous) or {} (affine)",
                    row.len(),
                    nvars,
                    nvars - 1
                )));
            }
        }
        PointBatch::new(y, vec![self.tau0; p])
            .map_err(|e| IoError::Format(format!("invalid points: {e}")))
    }
}

/// Evaluation output: per-point extended Jacobian blocks in homogeneous
/// coordinates, plus the measured oracle deviation when requested.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalOutput {
    pub coords: String,
    pub equations: usize,
    pub block_cols: usize,
    pub tau: Vec<f64>,
    /// blocks[point][equation][column] = [re, im].
    pub blocks: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_oracle_deviation: Option<f64>,
}

impl EvalOutput {
    pub fn from_jacobian(
        jac: &ExtendedJacobianBatch,
        tau: &[f64],
        max_oracle_deviation: Option<f64>,
    ) -> Self {
        Self {
            coords: "homogeneous".into(),
            equations: jac.equations(),
            block_cols: jac.block_cols(),
            tau: tau.to_vec(),
            blocks: (0..jac.points())
                .map(|p| {
                    (0..jac.equations())
                        .map(|k| jac.block_row(p, k).iter().map(pair).collect())
                        .collect()
                })
                .collect(),
            max_oracle_deviation,
        }
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(json_err)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("eval output serializes")
    }

    pub fn block(&self, point: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.equations, self.block_cols, |k, c| {
            unpair(&self.blocks[point][k][c])
        })
    }
}

/// One tracked path as a JSON line. `residual` is absent when it could not
/// be measured (failed paths report an infinite residual internally).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrackRecord {
    pub path: usize,
    pub status: String,
    pub tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub steps: u64,
    pub newton_iters: u64,
    pub at_infinity: bool,
    pub y: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_affine: Option<Vec<[f64; 2]>>,
}

/// Final summary line of a track run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrackSummary {
    pub paths: usize,
    pub converged: usize,
    pub singular: usize,
    pub step_underflow: usize,
    pub max_steps: usize,
    pub overflowed: usize,
    pub wall_seconds: f64,
}

impl TrackSummary {
    pub fn from_results(results: &[TrackResult], wall_seconds: f64) -> Self {
        let count = |s: PathStatus| results.iter().filter(|r| r.status == s).count();
        Self {
            paths: results.len(),
            converged: count(PathStatus::Converged),
            singular: count(PathStatus::SingularEncountered),
            step_underflow: count(PathStatus::StepUnderflow),
            max_steps: count(PathStatus::MaxSteps),
            overflowed: count(PathStatus::Overflowed),
            wall_seconds,
        }
    }

    pub fn render(&self) -> String {
        format!(
            "{} paths: {} Converged, {} SingularEncountered, {} StepUnderflow, {} MaxSteps, {} Overflowed ({:.3} s)",
            self.paths,
            self.converged,
            self.singular,
            self.step_underflow,
            self.max_steps,
            self.overflowed,
            self.wall_seconds
        )
    }
}

/// Track results as JSON lines: one record per path, then the summary.
pub fn write_track_jsonl(results: &[TrackResult], wall_seconds: f64) -> String {
    let mut out = String::new();
    for (i, r) in results.iter().enumerate() {
        let record = TrackRecord {
            path: i,
            status: r.status.as_str().into(),
            tau: r.tau,
            residual: r.residual.is_finite().then_some(r.residual),
            steps: r.steps_taken,
            newton_iters: r.newton_iters_total,
            at_infinity: r.at_infinity(),
            y: r.y.iter().map(pair).collect(),
            x_affine: r
                .x_affine
                .as_ref()
                .map(|x| x.iter().map(pair).collect()),
        };
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    let summary = TrackSummary::from_results(results, wall_seconds);
    out.push_str(&serde_json::to_string(&summary).expect("summary serializes"));
    out.push('\n');
    out
}

pub fn parse_track_jsonl(text: &str) -> Result<(Vec<TrackRecord>, TrackSummary), IoError> {
    let mut records = Vec::new();
    let mut summary = None;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        if let Ok(record) = serde_json::from_str::<TrackRecord>(line) {
            records.push(record);
        } else {
            summary = Some(serde_json::from_str::<TrackSummary>(line).map_err(json_err)?);
        }
    }
    let summary = summary.ok_or_else(|| IoError::Format("missing summary line".into()))?;
    Ok((records, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate_batch;
    use crate::kernels::BackendKind;
    use crate::system::{build_tables, homogenize, LaurentSystem};
    use num_rational::Rational64;

    #[test]
    fn affine_points_are_homogenized() {
        let pf = PointsFile {
            tau0: -2.0,
            points: vec![vec![[1.0, 0.0]]],
        };
        let batch = pf.into_batch(2).unwrap();
        assert_eq!(batch.vars(), 2);
        assert_eq!(batch.point(0)[1], Complex64::ONE);
        assert_eq!(batch.tau(0), -2.0);
    }

    #[test]
    fn wrong_point_length_is_rejected() {
        let pf = PointsFile {
            tau0: -2.0,
            points: vec![vec![[1.0, 0.0]; 4]],
        };
        assert!(matches!(pf.into_batch(2), Err(IoError::Shape(_))));
    }

    #[test]
    fn points_roundtrip() {
        let pf = PointsFile {
            tau0: -1.5,
            points: vec![vec![[0.25, -1.0], [1.0, 0.5]], vec![[2.0, 0.0], [0.0, 1.0]]],
        };
        let again = PointsFile::parse(&pf.to_json()).unwrap();
        assert_eq!(pf, again);
    }

    #[test]
    fn eval_output_roundtrip() {
        let sys = LaurentSystem::new(
            vec![vec![1], vec![0]],
            ComplexMatrix::from_real_rows(&[vec![2.0, 3.0]]),
            vec![Rational64::from_integer(1), Rational64::from_integer(2)],
        )
        .unwrap();
        let tables = build_tables(&homogenize(&sys));
        let batch = PointBatch::new(
            ComplexMatrix::from_rows(&[vec![Complex64::ONE, Complex64::ONE]]),
            vec![0.0],
        )
        .unwrap();
        let jac = evaluate_batch(&batch, &tables, 1, BackendKind::Reference.instance()).unwrap();
        let out = EvalOutput::from_jacobian(&jac, batch.taus(), Some(1e-13));
        let again = EvalOutput::parse(&out.to_json()).unwrap();
        assert_eq!(out, again);
        let block = again.block(0);
        assert!((block[(0, 3)] - Complex64::new(5.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn track_jsonl_roundtrip() {
        let results = vec![TrackResult {
            status: PathStatus::Converged,
            y: vec![Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)],
            tau: 0.0,
            x_affine: Some(vec![Complex64::new(0.75, 0.0)]),
            residual: 1e-12,
            steps_taken: 40,
            newton_iters_total: 41,
            start_y: vec![Complex64::ONE, Complex64::ZERO],
            start_tau: -20.0,
        }];
        let text = write_track_jsonl(&results, 0.125);
        let (records, summary) = parse_track_jsonl(&text).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].status, "Converged");
        assert_eq!(summary.paths, 1);
        assert_eq!(summary.converged, 1);
    }

    #[test]
    fn failed_paths_roundtrip_without_residual() {
        let results = vec![TrackResult {
            status: PathStatus::SingularEncountered,
            y: vec![Complex64::ONE, Complex64::ZERO],
            tau: -3.5,
            x_affine: None,
            residual: f64::INFINITY,
            steps_taken: 12,
            newton_iters_total: 20,
            start_y: vec![Complex64::ONE, Complex64::ZERO],
            start_tau: -20.0,
        }];
        let text = write_track_jsonl(&results, 0.01);
        let (records, summary) = parse_track_jsonl(&text).unwrap();
        assert_eq!(records[0].residual, None);
        assert!(records[0].at_infinity);
        assert_eq!(summary.singular, 1);
    }
}
