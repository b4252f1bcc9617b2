//! Randomised invariant suite for the SFT and RP layers, shared by the
//! `check-sft` command and the test harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{certify_psd, inner, kron, ComplexMatrix, C64};
use crate::rp::{random_unit_vector, rp_identity_check};
use crate::sft::{
    convolve, max_entangled, sft, sft_inverse, theta_op, theta_single, y_map, BipartiteOperator, Orientation, RieszMap,
};

/// Deliberate defects for exercising the suite itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Negates every convolution.
    ConvolutionSignFlip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub dims: Vec<usize>,
    /// Dims for the Y-map identities.
    pub y_dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { dims: vec![2, 3, 4], y_dims: (2..=6).collect(), trials: 100, seed: 0, fault: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Passes when `value < tolerance`.
    MaxDeviation,
    /// Passes when `value ≥ −tolerance`.
    MinEigenvalue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub metric: Metric,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SuiteResult {
    fn new(name: &'static str, metric: Metric, value: f64, tolerance: f64) -> Self {
        let passed = match metric {
            Metric::MaxDeviation => value < tolerance,
            Metric::MinEigenvalue => value >= -tolerance,
        };
        Self { name, metric, value, tolerance, passed }
    }
}

pub const ALGEBRA_TOL: f64 = 1e-10;
pub const Y_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-9;

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// `G G† / ‖G‖²_F`, a random PSD matrix of unit trace.
pub fn random_psd(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = random_matrix(n, n, rng);
    let f = g.frobenius_norm();
    g.mul(&g.dagger()).scale_real(1.0 / (f * f))
}

struct Runner {
    fault: Option<Fault>,
}

impl Runner {
    fn conv(&self, a: &BipartiteOperator, b: &BipartiteOperator, r: &RieszMap) -> Result<BipartiteOperator> {
        let c = convolve(a, b, r)?;
        Ok(match self.fault {
            Some(Fault::ConvolutionSignFlip) => c.scale_real(-1.0),
            None => c,
        })
    }
}

fn min_eig(m: &ComplexMatrix) -> Result<f64> {
    Ok(certify_psd(m, POSITIVITY_TOL)?.min_eigenvalue)
}

fn mp(m: ComplexMatrix, d: usize) -> Result<BipartiteOperator> {
    BipartiteOperator::minus_plus(m, d)
}

fn pm(m: ComplexMatrix, d: usize) -> Result<BipartiteOperator> {
    BipartiteOperator::plus_minus(m, d)
}

/// Runs every suite; each result aggregates over all dims and trials.
pub fn run_sft_suite(cfg: &SuiteConfig) -> Result<Vec<SuiteResult>> {
    if cfg.dims.iter().chain(&cfg.y_dims).any(|&d| d == 0) {
        return Err(Error::InvalidArgument("suite dims must be ≥ 1".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let run = Runner { fault: cfg.fault };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut products = 0.0f64;
    let mut theta_dagger = 0.0f64;
    let mut roundtrip = 0.0f64;
    let mut key_identity = 0.0f64;
    let mut herm_invariant = 0.0f64;
    let mut herm_separation = f64::INFINITY;
    let mut schur = f64::INFINITY;
    let mut sft_identity = f64::INFINITY;
    let mut expectation_law = 0.0f64;
    let mut theta_products = f64::INFINITY;
    let mut exponential = f64::INFINITY;

    for &d in &cfg.dims {
        let r = RieszMap::new(d)?;
        let n = d * d;
        for _ in 0..cfg.trials {
            let s = mp(random_matrix(n, n, &mut rng), d)?;
            let t = mp(random_matrix(n, n, &mut rng), d)?;
            let st = mp(s.matrix().mul(t.matrix()), d)?;
            let lhs = sft(&st, &r)?;
            let rhs = run.conv(&sft(&s, &r)?, &sft(&t, &r)?, &r)?;
            products = products.max(lhs.matrix().max_abs_diff(rhs.matrix()));

            let ft = sft(&t, &r)?;
            theta_dagger = theta_dagger.max(sft(&theta_op(&t, &r)?, &r)?.matrix().max_abs_diff(&ft.matrix().dagger()));
            roundtrip = roundtrip.max(sft_inverse(&ft, &r)?.matrix().max_abs_diff(t.matrix()));

            // Key identity on a random Hermitian H.
            let h = mp(s.matrix().add(&s.matrix().dagger())?.scale_real(0.25), d)?;
            let (xp, x) = (random_unit_vector(d, &mut rng), random_unit_vector(d, &mut rng));
            let beta = rng.random_range(0.0..2.0);
            let (a, b) = rp_identity_check(&h, &r, beta, &xp, &x)?;
            key_identity = key_identity.max((a - b).norm());

            // Reflection-invariant T has Hermitian SFT; a generic T does not.
            let sym = mp(t.matrix().add(theta_op(&t, &r)?.matrix())?.scale_real(0.5), d)?;
            herm_invariant = herm_invariant.max(sft(&sym, &r)?.matrix().hermiticity_defect());
            if d > 1 {
                herm_separation = herm_separation.min(ft.matrix().hermiticity_defect());
            }

            let a = pm(random_psd(n, &mut rng), d)?;
            let b = pm(random_psd(n, &mut rng), d)?;
            schur = schur.min(min_eig(run.conv(&a, &b, &r)?.matrix())?);

            let tp = random_matrix(d, d, &mut rng);
            let prod = mp(kron(&theta_single(&tp), &tp), d)?;
            theta_products = theta_products.min(min_eig(sft(&prod, &r)?.matrix())?);

            let w = random_matrix(n, 1, &mut rng);
            let fi = sft(&BipartiteOperator::identity(d, Orientation::MinusPlus), &r)?;
            let lhs = inner(&w, &fi.matrix().mul(&w))?;
            let trace: C64 = (0..d).map(|i| w[(i * d + i, 0)]).sum();
            expectation_law = expectation_law.max((lhs - trace.norm_sqr()).norm());
        }
        let fi = sft(&BipartiteOperator::identity(d, Orientation::MinusPlus), &r)?;
        sft_identity = sft_identity.min(min_eig(fi.matrix())?);

        // Truncated exponential: 𝔉ₛ(Σ_{k≤K} Sᵏ/k!) = Σ 𝔉ₛ(S)^{*k}/k! stays PSD.
        for _ in 0..cfg.trials.min(10) {
            let a = pm(random_psd(n, &mut rng).scale_real(d as f64), d)?;
            let s = sft_inverse(&a, &r)?;
            let mut term = ComplexMatrix::identity(n);
            let mut series = ComplexMatrix::identity(n);
            let mut conv_term = sft(&mp(ComplexMatrix::identity(n), d)?, &r)?;
            let mut conv_series = conv_term.matrix().clone();
            for k in 1..=12 {
                term = term.mul(s.matrix()).scale_real(1.0 / k as f64);
                series.add_assign_scaled(&term, C64::new(1.0, 0.0));
                conv_term = run.conv(&conv_term, &a, &r)?.scale_real(1.0 / k as f64);
                conv_series.add_assign_scaled(conv_term.matrix(), C64::new(1.0, 0.0));
            }
            let direct = sft(&mp(series, d)?, &r)?;
            exponential = exponential.min(min_eig(direct.matrix())?);
            products = products.max(direct.matrix().max_abs_diff(&conv_series));
        }
    }

    let mut y_product = 0.0f64;
    let mut y_identity = 0.0f64;
    for &d in &cfg.y_dims {
        let r = RieszMap::new(d)?;
        let y = y_map(&r);
        let mut want = ComplexMatrix::identity(d * d);
        want = want.scale_real(d as f64);
        y_product = y_product.max(y.mul(&y.dagger()).max_abs_diff(&want));
        let i = BipartiteOperator::identity(d, Orientation::PlusMinus);
        y_identity = y_identity.max(run.conv(&i, &i, &r)?.matrix().max_abs_diff(&want));
        // 𝔉ₛ(I) = u u† on the maximally entangled vector.
        let u = max_entangled(d);
        let fi = sft(&BipartiteOperator::identity(d, Orientation::MinusPlus), &r)?;
        y_identity = y_identity.max(fi.matrix().max_abs_diff(&u.mul(&u.dagger())));
    }

    let separation_ok = cfg.dims.iter().all(|&d| d == 1) || herm_separation > 1e-6;
    Ok(vec![
        SuiteResult::new("sft_products_to_convolutions", Metric::MaxDeviation, products, ALGEBRA_TOL),
        SuiteResult::new("sft_theta_is_dagger", Metric::MaxDeviation, theta_dagger, ALGEBRA_TOL),
        SuiteResult::new("sft_inverse_roundtrip", Metric::MaxDeviation, roundtrip, ALGEBRA_TOL),
        SuiteResult::new("key_identity", Metric::MaxDeviation, key_identity, ALGEBRA_TOL),
        SuiteResult {
            passed: herm_invariant < ALGEBRA_TOL && separation_ok,
            ..SuiteResult::new("hermiticity_correspondence", Metric::MaxDeviation, herm_invariant, ALGEBRA_TOL)
        },
        SuiteResult::new("y_times_y_dagger", Metric::MaxDeviation, y_product, Y_TOL),
        SuiteResult::new("identity_convolution", Metric::MaxDeviation, y_identity, Y_TOL),
        SuiteResult::new("schur_product", Metric::MinEigenvalue, schur, POSITIVITY_TOL),
        SuiteResult::new("sft_of_identity", Metric::MinEigenvalue, sft_identity, POSITIVITY_TOL),
        SuiteResult::new("identity_expectation_law", Metric::MaxDeviation, expectation_law, ALGEBRA_TOL),
        SuiteResult::new("reflected_product_positivity", Metric::MinEigenvalue, theta_products, POSITIVITY_TOL),
        SuiteResult::new("truncated_exponential", Metric::MinEigenvalue, exponential, POSITIVITY_TOL),
    ])
}

pub fn all_passed(results: &[SuiteResult]) -> bool {
    results.iter().all(|r| r.passed)
}
