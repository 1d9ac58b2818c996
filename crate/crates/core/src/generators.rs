//! Benchmark system generators, seeded random systems, and on-path start
//! seeding for tests.

use num_complex::Complex64;
use num_rational::Rational64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::int_pow;
use crate::kernels::ComplexMatrix;
use crate::system::{unmix, LaurentSystem, SystemError};

/// Seeded source of positive rational lifting values.
///
/// Defaults to numerators in `1..=1000` over denominator 1000. Callers can
/// widen the numerator range when larger lifting values are wanted.
pub struct LiftingSource {
    rng: ChaCha8Rng,
    max_numerator: i64,
    denominator: i64,
}

impl LiftingSource {
    pub fn seeded(seed: u64) -> Self {
        Self::with_numerator_range(seed, 1000, 1000)
    }

    pub fn with_numerator_range(seed: u64, max_numerator: i64, denominator: i64) -> Self {
        assert!(max_numerator >= 1 && denominator >= 1);
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_numerator,
            denominator,
        }
    }

    pub fn draw(&mut self, count: usize) -> Vec<Rational64> {
        (0..count)
            .map(|_| Rational64::new(self.rng.random_range(1..=self.max_numerator), self.denominator))
            .collect()
    }
}

/// The cyclic-n family: equations 1..n-1 sum the length-k cyclic products
/// of consecutive variables, equation n is the full product minus one.
pub fn gen_cyclic(n: usize, lifting: &mut LiftingSource) -> LaurentSystem {
    assert!(n >= 3, "cyclic systems need n >= 3");
    let mut supports: Vec<Vec<Vec<i64>>> = Vec::with_capacity(n);
    let mut coeffs: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for k in 1..n {
        let mut sup = Vec::with_capacity(n);
        for i in 0..n {
            let mut e = vec![0i64; n];
            for j in 0..k {
                e[(i + j) % n] = 1;
            }
            sup.push(e);
        }
        supports.push(sup);
        coeffs.push(vec![Complex64::ONE; n]);
    }
    supports.push(vec![vec![1i64; n], vec![0i64; n]]);
    coeffs.push(vec![Complex64::ONE, -Complex64::ONE]);

    let sys = unmix(&supports, &coeffs).expect("cyclic construction is well formed");
    let m = sys.monomial_count();
    sys.with_lifting(lifting.draw(m)).expect("m lifting values")
}

/// Discretized Chandrasekhar H-equation:
/// `f_k = 2n x_k - c x_k sum_{j<n} (k/(k+j)) x_j - 2n`.
pub fn gen_chandra(n: usize, c: f64, lifting: &mut LiftingSource) -> LaurentSystem {
    assert!(n >= 2, "chandra systems need n >= 2");
    assert!(c > 0.0 && c <= 1.0, "parameter c must lie in (0, 1]");
    let two_n = 2.0 * n as f64;
    let mut supports: Vec<Vec<Vec<i64>>> = Vec::with_capacity(n);
    let mut coeffs: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for k in 1..=n {
        let mut sup = Vec::new();
        let mut cf = Vec::new();
        let mut linear = vec![0i64; n];
        linear[k - 1] = 1;
        sup.push(linear);
        cf.push(Complex64::new(two_n, 0.0));
        for j in 1..n {
            let mut quad = vec![0i64; n];
            quad[k - 1] += 1;
            quad[j - 1] += 1;
            sup.push(quad);
            cf.push(Complex64::new(-c * k as f64 / (k + j) as f64, 0.0));
        }
        sup.push(vec![0i64; n]);
        cf.push(Complex64::new(-two_n, 0.0));
        supports.push(sup);
        coeffs.push(cf);
    }
    let sys = unmix(&supports, &coeffs).expect("chandra construction is well formed");
    let m = sys.monomial_count();
    sys.with_lifting(lifting.draw(m)).expect("m lifting values")
}

/// Parameters for seeded random systems.
#[derive(Debug, Clone)]
pub struct RandomSystemConfig {
    pub n: usize,
    /// Upper bound on the number of distinct monomials drawn.
    pub max_monomials: usize,
    pub exp_min: i64,
    pub exp_max: i64,
    pub seed: u64,
    /// Always include the constant monomial.
    pub include_constant: bool,
    /// Minimum coefficient modulus; moduli are drawn from [min, 1].
    pub min_coeff_modulus: f64,
}

impl RandomSystemConfig {
    pub fn new(n: usize, max_monomials: usize, seed: u64) -> Self {
        Self {
            n,
            max_monomials,
            exp_min: -3,
            exp_max: 3,
            seed,
            include_constant: true,
            min_coeff_modulus: 0.0,
        }
    }
}

/// Dense random system on a randomly drawn distinct support, coefficients
/// sampled from the unit disk.
pub fn gen_random(cfg: &RandomSystemConfig, lifting: &mut LiftingSource) -> LaurentSystem {
    assert!(cfg.n >= 1 && cfg.max_monomials >= 1 && cfg.exp_min <= cfg.exp_max);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut support: Vec<Vec<i64>> = Vec::new();
    if cfg.include_constant {
        support.push(vec![0i64; cfg.n]);
    }
    let mut attempts = 0usize;
    while support.len() < cfg.max_monomials && attempts < cfg.max_monomials * 64 {
        attempts += 1;
        let cand: Vec<i64> = (0..cfg.n)
            .map(|_| rng.random_range(cfg.exp_min..=cfg.exp_max))
            .collect();
        if !support.contains(&cand) {
            support.push(cand);
        }
    }
    support.sort_by(|a, b| crate::system::canonical_monomial_cmp(a, b));
    let m = support.len();

    let mut coefficients = ComplexMatrix::zeros(cfg.n, m);
    for k in 0..cfg.n {
        loop {
            for i in 0..m {
                coefficients[(k, i)] = random_disk(&mut rng, cfg.min_coeff_modulus);
            }
            if coefficients.row(k).iter().any(|z| *z != Complex64::ZERO) {
                break;
            }
        }
    }

    LaurentSystem::new(support, coefficients, lifting.draw(m))
        .expect("random construction is well formed")
}

fn random_disk(rng: &mut ChaCha8Rng, min_modulus: f64) -> Complex64 {
    loop {
        let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let r = z.norm();
        if r <= 1.0 && r >= min_modulus {
            return z;
        }
    }
}

/// Adjusts one coefficient per equation so the homotopy vanishes at the
/// given affine point and parameter value. The touched monomial is the one
/// with the largest deformed monomial magnitude, which keeps the adjustment
/// small. Start-point computation proper is out of scope; this produces
/// valid on-path starts for tests and examples.
pub fn seed_on_path(
    sys: &LaurentSystem,
    x0: &[Complex64],
    tau0: f64,
) -> Result<LaurentSystem, SystemError> {
    assert_eq!(x0.len(), sys.equation_count(), "point dimension mismatch");
    let lifting = sys.lifting_f64();
    let m = sys.monomial_count();

    // Deformed monomial values x0^{a_i} e^{tau0 w_i}.
    let mut monos = Vec::with_capacity(m);
    for (i, a) in sys.support().iter().enumerate() {
        let mut v = Complex64::new((tau0 * lifting[i]).exp(), 0.0);
        for (x, &e) in x0.iter().zip(a) {
            let p = int_pow(*x, e).ok_or_else(|| {
                SystemError::Shape("zero coordinate with negative exponent".into())
            })?;
            v *= p;
        }
        monos.push(v);
    }

    let mut out = sys.clone();
    for k in 0..sys.equation_count() {
        let residual: Complex64 = (0..m).map(|i| sys.coefficient(k, i) * monos[i]).sum();
        let pivot = (0..m)
            .max_by(|&a, &b| {
                monos[a]
                    .norm()
                    .partial_cmp(&monos[b].norm())
                    .expect("finite monomial values")
            })
            .expect("nonempty support");
        let adjusted = out.coefficient(k, pivot) - residual / monos[pivot];
        out = out.with_coefficient(k, pivot, adjusted);
    }
    Ok(out)
}
