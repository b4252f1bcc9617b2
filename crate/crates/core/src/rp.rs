//! Reflection positivity: a sampling oracle, the two sufficient criteria and
//! the `H(s)` deformation from the proof of the second one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    certify_psd, default_psd_tolerance, herm_exp, inner, kron, ComplexMatrix, HermitianEigen, PsdCertificate, C64,
};
use crate::sft::{sft, theta_op, theta_single, BipartiteOperator, Orientation, RieszMap};

pub const DEFAULT_BETAS: [f64; 4] = [0.0, 0.25, 1.0, 4.0];
/// Sign / reality tolerance applied to sampled expectations.
pub const EXPECTATION_TOL: f64 = 1e-9;
/// Oracle sample count used when a certifier cross-validates itself.
pub const CROSS_CHECK_TRIALS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RpMethod {
    Thm1,
    Thm2,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RpVerdict {
    RpCertified,
    RpRefuted,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub beta: f64,
    pub trial: usize,
    pub re: f64,
    pub im: f64,
}

impl Sample {
    pub fn value(&self) -> C64 {
        C64::new(self.re, self.im)
    }

    pub fn violates(&self, tol: f64) -> bool {
        self.re < -tol || self.im.abs() > tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RpReport {
    pub method: RpMethod,
    pub certificate: Option<PsdCertificate>,
    pub sampled_expectations: Vec<Sample>,
    pub seed: u64,
    pub verdict: RpVerdict,
}

impl RpReport {
    pub fn min_real_part(&self) -> f64 {
        self.sampled_expectations.iter().map(|s| s.re).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.sampled_expectations.iter().map(|s| s.im.abs()).fold(0.0, f64::max)
    }
}

/// Unit vector with i.i.d. complex standard normal entries.
pub fn random_unit_vector(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let data: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let v = ComplexMatrix::column(data);
    let norm = v.frobenius_norm();
    v.scale_real(1.0 / norm)
}

/// `θ(x) ⊗ x ∈ H₋₊`.
pub fn reflected_product(x: &ComplexMatrix) -> ComplexMatrix {
    kron(&x.conj(), x)
}

fn check_hamiltonian(h: &BipartiteOperator, r: &RieszMap) -> Result<()> {
    h.expect(Orientation::MinusPlus)?;
    if h.dim_left() != r.dim || h.dim_right() != r.dim {
        return Err(Error::DimensionMismatch(format!(
            "hamiltonian on {}x{} factors, Riesz map of dim {}",
            h.dim_left(),
            h.dim_right(),
            r.dim
        )));
    }
    let tol = default_psd_tolerance(h.matrix());
    let defect = h.matrix().hermiticity_defect();
    if defect > tol {
        return Err(Error::NotHermitian { defect, tol });
    }
    Ok(())
}

fn check_betas(betas: &[f64]) -> Result<()> {
    if let Some(b) = betas.iter().find(|b| !(**b >= 0.0) || !b.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be a finite nonnegative number, got {b}")));
    }
    Ok(())
}

/// Samples `⟨θ(x')⊗x', e^{−βH} θ(x)⊗x⟩` over independent random unit pairs
/// `(x', x)`. Sampling can only refute, never certify.
pub fn rp_oracle(h: &BipartiteOperator, r: &RieszMap, betas: &[f64], trials: usize, seed: u64) -> Result<RpReport> {
    check_hamiltonian(h, r)?;
    let eig = HermitianEigen::new(h.matrix());
    rp_oracle_with(r, betas, trials, seed, |beta, v| {
        Ok(eig.apply_fn_to_vec(|l| C64::new((-beta * l).exp(), 0.0), v))
    })
}

/// The sampling loop of [`rp_oracle`] for an arbitrary evolution
/// `(β, v) ↦ E_β v` on `H₋₊`.
pub fn rp_oracle_with(
    r: &RieszMap,
    betas: &[f64],
    trials: usize,
    seed: u64,
    mut evolve: impl FnMut(f64, &ComplexMatrix) -> Result<ComplexMatrix>,
) -> Result<RpReport> {
    check_betas(betas)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(trials * betas.len());
    for trial in 0..trials {
        let xp = random_unit_vector(r.dim, &mut rng);
        let x = random_unit_vector(r.dim, &mut rng);
        let (bra, ket) = (reflected_product(&xp), reflected_product(&x));
        for &beta in betas {
            let v = inner(&bra, &evolve(beta, &ket)?)?;
            samples.push(Sample { beta, trial, re: v.re, im: v.im });
        }
    }
    let refuted = samples.iter().any(|s| s.violates(EXPECTATION_TOL));
    Ok(RpReport {
        method: RpMethod::Oracle,
        certificate: None,
        sampled_expectations: samples,
        seed,
        verdict: if refuted { RpVerdict::RpRefuted } else { RpVerdict::Inconclusive },
    })
}

/// Both sides of the key identity:
/// `⟨θ(x')⊗x', e^{−βH} θ(x)⊗x⟩` and `⟨x'⊗θ(x), 𝔉ₛ(e^{−βH}) x'⊗θ(x)⟩`.
pub fn rp_identity_check(
    h: &BipartiteOperator,
    r: &RieszMap,
    beta: f64,
    xp: &ComplexMatrix,
    x: &ComplexMatrix,
) -> Result<(C64, C64)> {
    check_hamiltonian(h, r)?;
    check_betas(&[beta])?;
    for v in [xp, x] {
        if v.cols() != 1 || v.rows() != r.dim {
            return Err(Error::DimensionMismatch("sample vector length differs from dim H₊".into()));
        }
    }
    let e = h.with_matrix(herm_exp(h.matrix(), -beta)?)?;
    let lhs = inner(&reflected_product(xp), &e.matrix().mul(&reflected_product(x)))?;
    let f = sft(&e, r)?;
    let w = kron(xp, &x.conj());
    let rhs = inner(&w, &f.matrix().mul(&w))?;
    Ok((lhs, rhs))
}

fn soundness_guard(certified: bool, oracle: &RpReport) -> Result<()> {
    if certified && oracle.verdict == RpVerdict::RpRefuted {
        return Err(Error::Structural(format!(
            "soundness violation: certified operator refuted by the oracle (min re {:e})",
            oracle.min_real_part()
        )));
    }
    Ok(())
}

/// Theorem RP1: `𝔉ₛ(−H) ⪰ 0` implies RP. Failure is reported as
/// inconclusive unless the cross-checking oracle refutes.
pub fn certify_thm1(h: &BipartiteOperator, r: &RieszMap, seed: u64) -> Result<RpReport> {
    check_hamiltonian(h, r)?;
    let f = sft(&h.scale_real(-1.0), r)?;
    let cert = certify_psd(f.matrix(), default_psd_tolerance(f.matrix()))?;
    let oracle = rp_oracle(h, r, &DEFAULT_BETAS, CROSS_CHECK_TRIALS, seed)?;
    soundness_guard(cert.is_positive(), &oracle)?;
    let verdict = if cert.is_positive() { RpVerdict::RpCertified } else { oracle.verdict };
    Ok(RpReport {
        method: RpMethod::Thm1,
        certificate: Some(cert),
        sampled_expectations: oracle.sampled_expectations,
        seed,
        verdict,
    })
}

/// `H = H₋ + H₀ + H₊ + λI` with `H₊ = I ⊗ H'₊` and `θ(H₊) = H₋`.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorDecomposition {
    pub h_minus: BipartiteOperator,
    pub h_zero: BipartiteOperator,
    pub h_plus: BipartiteOperator,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralResiduals {
    /// `‖H₊ − I ⊗ H'₊‖_max` with `H'₊` recovered by partial trace.
    pub tensor_form: f64,
    /// `‖θ(H₊) − H₋‖_max`.
    pub theta_symmetry: f64,
}

impl MirrorDecomposition {
    pub fn dim(&self) -> usize {
        self.h_plus.dim_right()
    }

    /// `H'₊ = Tr₋(H₊) / dim H₋`.
    pub fn h_plus_local(&self) -> ComplexMatrix {
        let n = self.dim();
        let m = self.h_plus.matrix();
        ComplexMatrix::from_fn(n, n, |b, d| {
            let s: C64 = (0..n).map(|a| m[(a * n + b, a * n + d)]).sum();
            s / n as f64
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut k = self.h_minus.matrix().clone();
        k.add_assign_scaled(self.h_zero.matrix(), C64::new(1.0, 0.0));
        k.add_assign_scaled(self.h_plus.matrix(), C64::new(1.0, 0.0));
        k.add_identity(self.lambda);
        k
    }

    pub fn residuals(&self, r: &RieszMap) -> Result<StructuralResiduals> {
        for op in [&self.h_minus, &self.h_zero, &self.h_plus] {
            op.expect(Orientation::MinusPlus)?;
            if op.dim_left() != r.dim || op.dim_right() != r.dim {
                return Err(Error::DimensionMismatch("decomposition term dims differ from the Riesz map".into()));
            }
        }
        let lifted = kron(&ComplexMatrix::identity(self.dim()), &self.h_plus_local());
        Ok(StructuralResiduals {
            tensor_form: lifted.max_abs_diff(self.h_plus.matrix()),
            theta_symmetry: theta_op(&self.h_plus, r)?.matrix().max_abs_diff(self.h_minus.matrix()),
        })
    }

    pub fn check_structure(&self, r: &RieszMap, tol: f64) -> Result<StructuralResiduals> {
        let res = self.residuals(r)?;
        if !(res.tensor_form <= tol) {
            return Err(Error::Structural(format!(
                "H₊ is not of the form I ⊗ H'₊ (residual {:e})",
                res.tensor_form
            )));
        }
        if !(res.theta_symmetry <= tol) {
            return Err(Error::Structural(format!("θ(H₊) ≠ H₋ (residual {:e})", res.theta_symmetry)));
        }
        Ok(res)
    }

    /// `H − s θ(H₊) H₊ = H(s) + (λ + s⁻¹) I`, formed without the `s⁻¹` terms.
    pub fn shifted_deformation(&self, s: f64) -> ComplexMatrix {
        let mut k = self.reconstruct();
        let prod = self.h_minus.matrix().mul(self.h_plus.matrix());
        k.add_assign_scaled(&prod, C64::new(-s, 0.0));
        k
    }
}

pub const STRUCTURAL_TOL: f64 = 1e-9;

/// Theorem RP2: `𝔉ₛ(−H₀) ⪰ 0` implies RP of the reconstructed `H`.
pub fn certify_thm2(
    d: &MirrorDecomposition,
    r: &RieszMap,
    trials: usize,
    seed: u64,
) -> Result<(RpReport, StructuralResiduals)> {
    let res = d.check_structure(r, STRUCTURAL_TOL)?;
    let f = sft(&d.h_zero.scale_real(-1.0), r)?;
    let cert = certify_psd(f.matrix(), default_psd_tolerance(f.matrix()))?;
    let h = BipartiteOperator::minus_plus(d.reconstruct(), r.dim)?;
    let oracle = rp_oracle(&h, r, &DEFAULT_BETAS, trials, seed)?;
    soundness_guard(cert.is_positive(), &oracle)?;
    let verdict = if cert.is_positive() { RpVerdict::RpCertified } else { oracle.verdict };
    Ok((
        RpReport {
            method: RpMethod::Thm2,
            certificate: Some(cert),
            sampled_expectations: oracle.sampled_expectations,
            seed,
            verdict,
        },
        res,
    ))
}

/// `−H(s) = −H₀ + s θ(T₊) ⊗ T₊` with `T₊ = H'₊ − s⁻¹ I`.
pub fn h_s_deformation(d: &MirrorDecomposition, s: f64, r: &RieszMap) -> Result<BipartiteOperator> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("deformation parameter must be positive, got {s}")));
    }
    d.residuals(r)?;
    let mut t = d.h_plus_local();
    t.add_identity(-1.0 / s);
    let mut m = kron(&theta_single(&t), &t).scale_real(s);
    m.add_assign_scaled(d.h_zero.matrix(), C64::new(-1.0, 0.0));
    BipartiteOperator::minus_plus(m, r.dim)
}

/// Agreement of sampled expectations between `e^{−β(H − sθ(H₊)H₊)}` and
/// `e^{−βH}` for each `s`. Up to the positive factor `e^{β(λ+s⁻¹)}` the first
/// is `e^{−βH(s)}`, so this measures how fast the deformation family
/// recovers `H` as `s → 0⁺`. Returns `(s, max |difference|)` pairs.
pub fn deformation_convergence(
    d: &MirrorDecomposition,
    r: &RieszMap,
    s_values: &[f64],
    betas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if let Some(s) = s_values.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("deformation parameter must be positive, got {s}")));
    }
    let h = BipartiteOperator::minus_plus(d.reconstruct(), r.dim)?;
    let base = rp_oracle(&h, r, betas, trials, seed)?;
    s_values
        .iter()
        .map(|&s| {
            let hs = BipartiteOperator::minus_plus(d.shifted_deformation(s), r.dim)?;
            let rep = rp_oracle(&hs, r, betas, trials, seed)?;
            let dev = rep
                .sampled_expectations
                .iter()
                .zip(&base.sampled_expectations)
                .map(|(a, b)| (a.value() - b.value()).norm())
                .fold(0.0, f64::max);
            Ok((s, dev))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_hamiltonian_expectations() {
        let r = RieszMap::new(3).unwrap();
        let h = BipartiteOperator::minus_plus(ComplexMatrix::zeros(9, 9), 3).unwrap();
        let rep = rp_oracle(&h, &r, &DEFAULT_BETAS, 5, 7).unwrap();
        assert_eq!(rep.verdict, RpVerdict::Inconclusive);
        assert_eq!(rep.sampled_expectations.len(), 20);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xp = random_unit_vector(3, &mut rng);
        let x = random_unit_vector(3, &mut rng);
        let want = inner(&xp, &x).unwrap().norm_sqr();
        assert!((rep.sampled_expectations[0].re - want).abs() < 1e-14);
        let (l, rr) = rp_identity_check(&h, &r, 1.0, &x, &x).unwrap();
        assert!((l - 1.0).norm() < 1e-14 && (rr - 1.0).norm() < 1e-14);
    }

    #[test]
    fn scalar_hamiltonian() {
        let r = RieszMap::new(2).unwrap();
        let h = BipartiteOperator::minus_plus(ComplexMatrix::identity(4).scale_real(0.7), 2).unwrap();
        let x = ComplexMatrix::basis(2, 1);
        let (l, rr) = rp_identity_check(&h, &r, 2.0, &x, &x).unwrap();
        let want = (-1.4f64).exp();
        assert!((l - want).norm() < 1e-14 && (rr - want).norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let r = RieszMap::new(2).unwrap();
        let h = BipartiteOperator::minus_plus(ComplexMatrix::zeros(4, 4), 2).unwrap();
        assert!(rp_oracle(&h, &r, &[-1.0], 1, 0).is_err());
        let mut nh = ComplexMatrix::zeros(4, 4);
        nh[(0, 1)] = C64::new(1.0, 0.0);
        let nh = BipartiteOperator::minus_plus(nh, 2).unwrap();
        assert!(matches!(rp_oracle(&nh, &r, &[1.0], 1, 0), Err(Error::NotHermitian { .. })));
        let d = MirrorDecomposition { h_minus: h.clone(), h_zero: h.clone(), h_plus: h.clone(), lambda: 0.0 };
        assert!(h_s_deformation(&d, 0.0, &r).is_err());
    }
}
