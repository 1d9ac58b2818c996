//! Laurent system model: common-support systems, homogenization, and the
//! constant tables consumed by the batched evaluator.

use std::cmp::Ordering;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::ComplexMatrix;

#[derive(Debug, Clone, Error)]
pub enum SystemError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate monomial: support columns {first} and {second} are equal")]
    DuplicateMonomial { first: usize, second: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty support")]
    EmptySupport,
    #[error("equation {row} has no monomials")]
    ZeroEquation { row: usize },
    #[error("invalid lifting value at index {index}: {message}")]
    InvalidLifting { index: usize, message: String },
}

/// Square Laurent polynomial system over one shared ("unmixed") support.
///
/// Equation `k` is `sum_i C[k][i] * x^{support[i]}`; zero coefficients mark
/// monomials absent from that equation. Lifting values are exact rationals
/// assigning the deformation exponent of each monomial.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSystem {
    n: usize,
    m: usize,
    support: Vec<Vec<i64>>,
    coefficients: ComplexMatrix,
    lifting: Vec<Rational64>,
}

/// Graded lexicographic order on exponent vectors: total degree first,
/// then entrywise comparison, both ascending. Fixes the table layout.
pub fn canonical_monomial_cmp(a: &[i64], b: &[i64]) -> Ordering {
    let da: i64 = a.iter().sum();
    let db: i64 = b.iter().sum();
    da.cmp(&db).then_with(|| a.cmp(b))
}

impl LaurentSystem {
    pub fn new(
        support: Vec<Vec<i64>>,
        coefficients: ComplexMatrix,
        lifting: Vec<Rational64>,
    ) -> Result<Self, SystemError> {
        let m = support.len();
        if m == 0 {
            return Err(SystemError::EmptySupport);
        }
        let n = coefficients.rows();
        if n == 0 {
            return Err(SystemError::Shape("system has no equations".into()));
        }
        for (i, col) in support.iter().enumerate() {
            if col.len() != n {
                return Err(SystemError::Shape(format!(
                    "support column {i} has length {}, expected {n}",
                    col.len()
                )));
            }
        }
        if coefficients.cols() != m {
            return Err(SystemError::Shape(format!(
                "coefficient matrix is {}x{}, expected {}x{}",
                coefficients.rows(),
                coefficients.cols(),
                n,
                m
            )));
        }
        for i in 0..m {
            for j in (i + 1)..m {
                if support[i] == support[j] {
                    return Err(SystemError::DuplicateMonomial { first: i, second: j });
                }
            }
        }
        for k in 0..n {
            if coefficients.row(k).iter().all(|c| *c == Complex64::ZERO) {
                return Err(SystemError::ZeroEquation { row: k });
            }
        }
        if lifting.len() != m {
            return Err(SystemError::Shape(format!(
                "lifting has {} entries, expected {m}",
                lifting.len()
            )));
        }
        for (i, w) in lifting.iter().enumerate() {
            if *w < Rational64::from_integer(0) {
                return Err(SystemError::InvalidLifting {
                    index: i,
                    message: format!("negative value {w}"),
                });
            }
        }
        Ok(Self {
            n,
            m,
            support,
            coefficients,
            lifting,
        })
    }

    pub fn equation_count(&self) -> usize {
        self.n
    }

    pub fn monomial_count(&self) -> usize {
        self.m
    }

    pub fn support(&self) -> &[Vec<i64>] {
        &self.support
    }

    pub fn coefficients(&self) -> &ComplexMatrix {
        &self.coefficients
    }

    pub fn coefficient(&self, k: usize, i: usize) -> Complex64 {
        self.coefficients[(k, i)]
    }

    pub fn lifting(&self) -> &[Rational64] {
        &self.lifting
    }

    /// Real-valued view of the lifting values.
    pub fn lifting_f64(&self) -> Vec<f64> {
        self.lifting
            .iter()
            .map(|w| w.to_f64().expect("lifting value representable as f64"))
            .collect()
    }

    /// Replaces the lifting values, e.g. after `unmix` which leaves them zero.
    pub fn with_lifting(mut self, lifting: Vec<Rational64>) -> Result<Self, SystemError> {
        if lifting.len() != self.m {
            return Err(SystemError::Shape(format!(
                "lifting has {} entries, expected {}",
                lifting.len(),
                self.m
            )));
        }
        self.lifting = lifting;
        Ok(self)
    }

    /// Replaces one coefficient. Used by on-path start seeding.
    pub fn with_coefficient(mut self, k: usize, i: usize, c: Complex64) -> Self {
        self.coefficients[(k, i)] = c;
        self
    }

    /// Parses the JSON system format. Lossless for rational lifting values.
    pub fn parse(text: &str) -> Result<Self, SystemError> {
        let raw: SystemFile = serde_json::from_str(text).map_err(|e| SystemError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        raw.into_system()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SystemFile::from_system(self)).expect("system serializes")
    }
}

/// On-disk JSON form: `support` holds m exponent vectors of length n,
/// `coefficients` holds n rows of m `[re, im]` pairs, `lifting` holds m
/// `[numerator, denominator]` pairs.
#[derive(Serialize, Deserialize)]
struct SystemFile {
    n: usize,
    support: Vec<Vec<i64>>,
    coefficients: Vec<Vec<[f64; 2]>>,
    lifting: Vec<[i64; 2]>,
}

impl SystemFile {
    fn from_system(sys: &LaurentSystem) -> Self {
        Self {
            n: sys.n,
            support: sys.support.clone(),
            coefficients: (0..sys.n)
                .map(|k| sys.coefficients.row(k).iter().map(|c| [c.re, c.im]).collect())
                .collect(),
            lifting: sys.lifting.iter().map(|w| [*w.numer(), *w.denom()]).collect(),
        }
    }

    fn into_system(self) -> Result<LaurentSystem, SystemError> {
        if self.support.iter().any(|col| col.len() != self.n) {
            return Err(SystemError::Shape(format!(
                "support vectors must have length n = {}",
                self.n
            )));
        }
        let m = self.support.len();
        if self.coefficients.iter().any(|row| row.len() != m) {
            return Err(SystemError::Shape(format!(
                "each coefficient row must have {m} entries"
            )));
        }
        let coeff_rows: Vec<Vec<Complex64>> = self
            .coefficients
            .iter()
            .map(|row| row.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
            .collect();
        let mut lifting = Vec::with_capacity(self.lifting.len());
        for (i, &[num, den]) in self.lifting.iter().enumerate() {
            if den == 0 {
                return Err(SystemError::InvalidLifting {
                    index: i,
                    message: "zero denominator".into(),
                });
            }
            lifting.push(Rational64::new(num, den));
        }
        LaurentSystem::new(self.support, ComplexMatrix::from_rows(&coeff_rows), lifting)
    }
}

/// Merges per-equation supports into one common support, zero-padding the
/// coefficients. Evaluating the result equals evaluating the mixed input at
/// every point. Lifting values are left at zero for the caller to assign.
pub fn unmix(
    supports: &[Vec<Vec<i64>>],
    coeffs: &[Vec<Complex64>],
) -> Result<LaurentSystem, SystemError> {
    let n = supports.len();
    if n == 0 || coeffs.len() != n {
        return Err(SystemError::Shape(format!(
            "{} support lists but {} coefficient lists",
            n,
            coeffs.len()
        )));
    }
    let mut union: Vec<Vec<i64>> = Vec::new();
    for (k, list) in supports.iter().enumerate() {
        if list.len() != coeffs[k].len() {
            return Err(SystemError::Shape(format!(
                "equation {k}: {} exponent vectors but {} coefficients",
                list.len(),
                coeffs[k].len()
            )));
        }
        for a in list {
            if a.len() != n {
                return Err(SystemError::Shape(format!(
                    "equation {k}: exponent vector of length {}, expected {n}",
                    a.len()
                )));
            }
            if !union.contains(a) {
                union.push(a.clone());
            }
        }
    }
    if union.is_empty() {
        return Err(SystemError::EmptySupport);
    }
    union.sort_by(|a, b| canonical_monomial_cmp(a, b));

    let m = union.len();
    let mut c = ComplexMatrix::zeros(n, m);
    for k in 0..n {
        for (a, &coeff) in supports[k].iter().zip(&coeffs[k]) {
            let i = union.iter().position(|u| u == a).expect("monomial in union");
            // Repeated monomials within one equation accumulate.
            c[(k, i)] += coeff;
        }
    }
    LaurentSystem::new(union, c, vec![Rational64::from_integer(0); m])
}

/// Projective lift of a Laurent system: every monomial gains a balancing
/// exponent on the extra coordinate so all column sums equal one shared
/// degree `d = max_i 1^T a_i`. For Laurent supports the balancing entries
/// may exceed `d` and original entries may be negative; both are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedSystem {
    base: LaurentSystem,
    degree: i64,
    hom_support: Vec<Vec<i64>>,
}

impl HomogenizedSystem {
    pub fn base(&self) -> &LaurentSystem {
        &self.base
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    /// m exponent vectors of length N = n + 1; original variables first,
    /// homogenizing coordinate last.
    pub fn hom_support(&self) -> &[Vec<i64>] {
        &self.hom_support
    }

    pub fn equation_count(&self) -> usize {
        self.base.n
    }

    pub fn monomial_count(&self) -> usize {
        self.base.m
    }

    pub fn variable_count(&self) -> usize {
        self.base.n + 1
    }
}

pub fn homogenize(sys: &LaurentSystem) -> HomogenizedSystem {
    let degree = sys
        .support
        .iter()
        .map(|a| a.iter().sum::<i64>())
        .max()
        .expect("nonempty support");
    let hom_support = sys
        .support
        .iter()
        .map(|a| {
            let mut col = a.clone();
            col.push(degree - a.iter().sum::<i64>());
            col
        })
        .collect();
    HomogenizedSystem {
        base: sys.clone(),
        degree,
        hom_support,
    }
}

/// Constant matrices precomputed once per system and reused by every
/// evaluation: the exponent matrix (homogenized exponents stacked over the
/// lifting row) and one derivative table per equation whose column `i` is
/// `C[k][i] * (a_i, w_i, 1)`.
#[derive(Debug, Clone)]
pub struct HomotopyTables {
    equation_count: usize,
    variable_count: usize,
    monomial_count: usize,
    degree: i64,
    exponent_matrix: ComplexMatrix,
    tables: Vec<ComplexMatrix>,
    stacked: ComplexMatrix,
}

impl HomotopyTables {
    pub fn equation_count(&self) -> usize {
        self.equation_count
    }

    /// N = n + 1 homogeneous coordinates.
    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    pub fn monomial_count(&self) -> usize {
        self.monomial_count
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    /// (N+1) x m matrix: homogenized exponent columns with the lifting row
    /// appended. Real-valued, stored complex for the matrix product.
    pub fn exponent_matrix(&self) -> &ComplexMatrix {
        &self.exponent_matrix
    }

    /// Derivative table of equation `k`, shape (N+2) x m.
    pub fn table(&self, k: usize) -> &ComplexMatrix {
        &self.tables[k]
    }

    /// Horizontal concatenation of all transposed tables, shape
    /// m x (n * (N+2)). Right operand of the batched evaluation product.
    pub fn stacked(&self) -> &ComplexMatrix {
        &self.stacked
    }

    /// Width of one per-point block row: N + 2.
    pub fn block_cols(&self) -> usize {
        self.variable_count + 2
    }
}

pub fn build_tables(hsys: &HomogenizedSystem) -> HomotopyTables {
    let n = hsys.equation_count();
    let nvars = hsys.variable_count();
    let m = hsys.monomial_count();
    let lifting = hsys.base().lifting_f64();

    let exponent_matrix = ComplexMatrix::from_fn(nvars + 1, m, |r, i| {
        let v = if r < nvars {
            hsys.hom_support()[i][r] as f64
        } else {
            lifting[i]
        };
        Complex64::new(v, 0.0)
    });

    let tables: Vec<ComplexMatrix> = (0..n)
        .map(|k| {
            ComplexMatrix::from_fn(nvars + 2, m, |r, i| {
                let c = hsys.base().coefficient(k, i);
                if r <= nvars {
                    c * exponent_matrix[(r, i)]
                } else {
                    c
                }
            })
        })
        .collect();

    let block_cols = nvars + 2;
    let stacked = ComplexMatrix::from_fn(m, n * block_cols, |i, col| {
        let k = col / block_cols;
        let r = col % block_cols;
        tables[k][(r, i)]
    });

    HomotopyTables {
        equation_count: n,
        variable_count: nvars,
        monomial_count: m,
        degree: hsys.degree(),
        exponent_matrix,
        tables,
        stacked,
    }
}
