use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rpcert::linalg::{certify_psd, herm_exp, inner, kron, ComplexMatrix, C64};
use rpcert::rp::*;
use rpcert::sft::*;
use rpcert::suite::{random_matrix, random_psd};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn mp(m: ComplexMatrix, d: usize) -> BipartiteOperator {
    BipartiteOperator::minus_plus(m, d).unwrap()
}

fn pm(m: ComplexMatrix, d: usize) -> BipartiteOperator {
    BipartiteOperator::plus_minus(m, d).unwrap()
}

/// `⟨x⊗y, 𝔉ₛ(T)(x'⊗y')⟩ = ⟨θ(x')⊗x, T(y'⊗θ(y))⟩` evaluated with vectors.
#[test]
fn sft_matches_defining_relation() {
    let mut g = rng(1);
    for d in [2, 3] {
        let r = RieszMap::new(d).unwrap();
        let t = mp(random_matrix(d * d, d * d, &mut g), d);
        let f = sft(&t, &r).unwrap();
        // On every basis 4-tuple.
        for i in 0..d {
            for j in 0..d {
                for ip in 0..d {
                    for jp in 0..d {
                        let e = |k| ComplexMatrix::basis(d, k);
                        let lhs = inner(&kron(&e(i), &e(j)), &f.matrix().mul(&kron(&e(ip), &e(jp)))).unwrap();
                        let bra = kron(&e(ip).conj(), &e(i));
                        let ket = kron(&e(jp), &e(j).conj());
                        let rhs = inner(&bra, &t.matrix().mul(&ket)).unwrap();
                        assert!((lhs - rhs).norm() < 1e-14);
                        assert!((lhs - sft_entry_by_definition(&t, i, j, ip, jp)).norm() < 1e-14);
                    }
                }
            }
        }
        // And on random vectors, which exercises the anti-linear slots.
        for _ in 0..20 {
            let v: Vec<_> = (0..4).map(|_| random_unit_vector(d, &mut g)).collect();
            let (x, y, xp, yp) = (&v[0], &v[1], &v[2], &v[3]);
            let lhs = inner(&kron(x, y), &f.matrix().mul(&kron(xp, yp))).unwrap();
            let th = |u: &ComplexMatrix| theta_vec(u, &r).unwrap();
            let rhs = inner(&kron(&th(xp), x), &t.matrix().mul(&kron(yp, &th(y)))).unwrap();
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }
}

#[test]
fn theta_vec_reverses_the_inner_product() {
    let mut g = rng(2);
    let r = RieszMap::new(4).unwrap();
    for _ in 0..20 {
        let (v, w) = (random_unit_vector(4, &mut g), random_unit_vector(4, &mut g));
        let th = |u: &ComplexMatrix| theta_vec(u, &r).unwrap();
        assert!((inner(&v, &w).unwrap() - inner(&th(&w), &th(&v)).unwrap()).norm() < 1e-15);
        assert_eq!(th(&th(&v)), v);
    }
    let i_e2 = ComplexMatrix::basis(4, 1).scale(C64::new(0.0, 1.0));
    assert_eq!(theta_vec(&i_e2, &r).unwrap(), ComplexMatrix::basis(4, 1).scale(C64::new(0.0, -1.0)));
    assert!(theta_vec(&ComplexMatrix::basis(3, 0), &r).is_err());
}

#[test]
fn theta_op_swaps_factors() {
    let mut g = rng(3);
    let r = RieszMap::new(3).unwrap();
    let m = random_matrix(3, 3, &mut g);
    let n = random_matrix(3, 3, &mut g);
    let t = BipartiteOperator::product(&theta_single(&m), &n, Orientation::MinusPlus).unwrap();
    let want = kron(&theta_single(&n), &m);
    assert!(theta_op(&t, &r).unwrap().matrix().max_abs_diff(&want) < 1e-15);
    let id = BipartiteOperator::identity(3, Orientation::MinusPlus);
    assert_eq!(theta_op(&id, &r).unwrap(), id);
}

#[test]
fn sft_inverse_of_rank_one_identity_image() {
    for d in 1..=4 {
        let r = RieszMap::new(d).unwrap();
        let u = max_entangled(d);
        let back = sft_inverse(&pm(u.mul(&u.dagger()), d), &r).unwrap();
        assert_eq!(back.matrix(), &ComplexMatrix::identity(d * d));
    }
}

#[test]
fn y_adjoint_expansion() {
    // Y†(x⊗y) = Σ_β x⊗θ(β)⊗β⊗y, entry by entry.
    let d = 3;
    let r = RieszMap::new(d).unwrap();
    let yd = y_map(&r).dagger();
    let mut g = rng(4);
    let (x, y) = (random_unit_vector(d, &mut g), random_unit_vector(d, &mut g));
    let lhs = yd.mul(&kron(&x, &y));
    let mut rhs = ComplexMatrix::zeros(d * d * d * d, 1);
    for b in 0..d {
        let beta = ComplexMatrix::basis(d, b);
        let term = kron(&kron(&kron(&x, &theta_vec(&beta, &r).unwrap()), &beta), &y);
        rhs.add_assign_scaled(&term, C64::new(1.0, 0.0));
    }
    assert!(lhs.max_abs_diff(&rhs) < 1e-15);
}

fn convolve_loops(a: &ComplexMatrix, b: &ComplexMatrix, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d * d, d * d, |row, col| {
        let (al, be, alp, bep) = (row / d, row % d, col / d, col % d);
        let mut s = C64::new(0.0, 0.0);
        for k in 0..d {
            for kp in 0..d {
                s += a[(al * d + k, alp * d + kp)] * b[(k * d + be, kp * d + bep)];
            }
        }
        s
    })
}

#[test]
fn convolution_three_ways_and_associativity() {
    let mut g = rng(5);
    for d in [1, 2, 3] {
        let r = RieszMap::new(d).unwrap();
        let n = d * d;
        let (a, b, c) = (random_matrix(n, n, &mut g), random_matrix(n, n, &mut g), random_matrix(n, n, &mut g));
        let fast = convolve(&pm(a.clone(), d), &pm(b.clone(), d), &r).unwrap();
        let lit = convolve_via_y(&pm(a.clone(), d), &pm(b.clone(), d), &r).unwrap();
        let loops = convolve_loops(&a, &b, d);
        assert!(fast.matrix().max_abs_diff(&lit.matrix().clone()) < 1e-12);
        assert!(fast.matrix().max_abs_diff(&loops) < 1e-12);
        let left = convolve(&fast, &pm(c.clone(), d), &r).unwrap();
        let bc = convolve(&pm(b, d), &pm(c, d), &r).unwrap();
        let right = convolve(&pm(a, d), &bc, &r).unwrap();
        assert!(left.matrix().max_abs_diff(right.matrix()) < 1e-10);
    }
}

#[test]
fn oracle_agrees_with_direct_evaluation() {
    let d = 3;
    let r = RieszMap::new(d).unwrap();
    let mut g = rng(6);
    let a = random_matrix(9, 9, &mut g);
    let h = mp(a.add(&a.dagger()).unwrap().scale_real(0.5), d);
    let rep = rp_oracle(&h, &r, &[0.0, 1.0], 5, 99).unwrap();
    // Replay the sampler's vector stream.
    let mut g = rng(99);
    for trial in 0..5 {
        let xp = random_unit_vector(d, &mut g);
        let x = random_unit_vector(d, &mut g);
        for (k, beta) in [0.0, 1.0].into_iter().enumerate() {
            let e = herm_exp(h.matrix(), -beta).unwrap();
            let want = inner(&kron(&xp.conj(), &xp), &e.mul(&kron(&x.conj(), &x))).unwrap();
            let s = &rep.sampled_expectations[trial * 2 + k];
            assert!((s.value() - want).norm() < 1e-12);
            let (lhs, rhs) = rp_identity_check(&h, &r, beta, &xp, &x).unwrap();
            assert!((lhs - want).norm() < 1e-12 && (rhs - want).norm() < 1e-12);
        }
    }
    // β = 0 gives |⟨x, x'⟩|² ≥ 0.
    assert!(rep.sampled_expectations.iter().filter(|s| s.beta == 0.0).all(|s| s.re >= 0.0));
}

#[test]
fn thm1_certifies_reflected_products() {
    // −H = θ(T)⊗T has 𝔉ₛ(−H) ⪰ 0.
    let d = 3;
    let r = RieszMap::new(d).unwrap();
    let mut g = rng(7);
    let t = random_matrix(d, d, &mut g);
    let t = t.add(&t.dagger()).unwrap().scale_real(0.5);
    let h = mp(kron(&theta_single(&t), &t).scale_real(-1.0), d);
    let rep = certify_thm1(&h, &r, 1).unwrap();
    assert_eq!(rep.verdict, RpVerdict::RpCertified);
    assert!(rep.min_real_part() >= -EXPECTATION_TOL);
}

#[test]
fn oracle_refutes_the_wrong_sign() {
    // H = +θ(T)⊗T with T a rank-one projector: e^{−βH} pushes orthogonal
    // reflected pairs negative.
    let d = 2;
    let r = RieszMap::new(d).unwrap();
    let t = ComplexMatrix::real_diag(&[1.0, 0.0]);
    let h = mp(kron(&theta_single(&t), &t).scale_real(4.0), d);
    let f = sft(&h.scale_real(-1.0), &r).unwrap();
    assert!(!certify_psd(f.matrix(), 1e-9).unwrap().is_positive());
    let rep = rp_oracle(&h, &r, &[4.0], 200, 3).unwrap();
    assert_eq!(rep.verdict, RpVerdict::RpRefuted);
    // Thm1 cannot certify; the oracle's refutation is passed through.
    assert_eq!(certify_thm1(&h, &r, 3).unwrap().verdict, RpVerdict::RpRefuted);
}

fn toy_decomposition(d: usize, seed: u64) -> (MirrorDecomposition, RieszMap) {
    let r = RieszMap::new(d).unwrap();
    let mut g = rng(seed);
    let p = random_psd(d, &mut g);
    let h_plus = mp(kron(&ComplexMatrix::identity(d), &p), d);
    let h_minus = theta_op(&h_plus, &r).unwrap();
    // Unit-norm T keeps e^{−βK} well scaled for the absolute tolerances.
    let t = random_matrix(d, d, &mut g);
    let t = t.scale_real(1.0 / t.frobenius_norm());
    let h_zero = mp(kron(&theta_single(&t), &t).scale_real(-1.0), d);
    let h_zero = mp(h_zero.matrix().add(&h_zero.matrix().dagger()).unwrap().scale_real(0.5), d);
    (MirrorDecomposition { h_minus, h_zero, h_plus, lambda: 0.5 }, r)
}

#[test]
fn thm2_on_a_synthetic_decomposition() {
    let (dec, r) = toy_decomposition(3, 8);
    let (rep, res) = certify_thm2(&dec, &r, 20, 1).unwrap();
    assert!(res.tensor_form < 1e-12 && res.theta_symmetry < 1e-12);
    if certify_psd(sft(&dec.h_zero.scale_real(-1.0), &r).unwrap().matrix(), 1e-9).unwrap().is_positive() {
        assert_eq!(rep.verdict, RpVerdict::RpCertified);
    }
    for s in [0.1, 1.0, 10.0] {
        let hs = h_s_deformation(&dec, s, &r).unwrap();
        assert!(certify_psd(sft(&hs, &r).unwrap().matrix(), 1e-9).unwrap().min_eigenvalue >= -1e-9);
    }
    let conv = deformation_convergence(&dec, &r, &[1.0, 1e-2, 1e-4, 1e-6], &DEFAULT_BETAS, 5, 2).unwrap();
    assert!(conv.windows(2).all(|w| w[1].1 <= w[0].1));
    assert!(conv.last().unwrap().1 < 1e-3);
}

#[test]
fn thm2_rejects_broken_structure() {
    let (mut dec, r) = toy_decomposition(2, 9);
    let mut g = rng(10);
    dec.h_plus = mp(random_psd(4, &mut g), 2);
    assert!(matches!(certify_thm2(&dec, &r, 5, 1), Err(rpcert::Error::Structural(_))));
    assert!(h_s_deformation(&dec, 0.0, &r).is_err());
}

fn small_matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| ComplexMatrix::new(n, n, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap())
}

fn dim_and_pair() -> impl Strategy<Value = (usize, ComplexMatrix, ComplexMatrix)> {
    (1usize..=3).prop_flat_map(|d| (Just(d), small_matrix(d * d), small_matrix(d * d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_sft_roundtrip((d, s, _t) in dim_and_pair()) {
        let r = RieszMap::new(d).unwrap();
        let f = sft(&mp(s.clone(), d), &r).unwrap();
        prop_assert_eq!(sft_inverse(&f, &r).unwrap().into_matrix(), s.clone());
        prop_assert_eq!(sft(&sft_inverse(&pm(s.clone(), d), &r).unwrap(), &r).unwrap().into_matrix(), s);
    }

    #[test]
    fn prop_products_become_convolutions((d, s, t) in dim_and_pair()) {
        let r = RieszMap::new(d).unwrap();
        let lhs = sft(&mp(s.mul(&t), d), &r).unwrap();
        let rhs = convolve(&sft(&mp(s, d), &r).unwrap(), &sft(&mp(t, d), &r).unwrap(), &r).unwrap();
        prop_assert!(lhs.matrix().max_abs_diff(rhs.matrix()) < 1e-10);
    }

    #[test]
    fn prop_theta_becomes_dagger((d, s, _t) in dim_and_pair()) {
        let r = RieszMap::new(d).unwrap();
        let op = mp(s, d);
        let th = theta_op(&op, &r).unwrap();
        prop_assert_eq!(theta_op(&th, &r).unwrap(), op.clone());
        let lhs = sft(&th, &r).unwrap();
        prop_assert!(lhs.matrix().max_abs_diff(&sft(&op, &r).unwrap().matrix().dagger()) < 1e-12);
    }

    #[test]
    fn prop_reflection_invariance_iff_hermitian_sft((d, s, _t) in dim_and_pair()) {
        let r = RieszMap::new(d).unwrap();
        let op = mp(s, d);
        let th = theta_op(&op, &r).unwrap();
        let f = sft(&op, &r).unwrap();
        let invariance = th.matrix().max_abs_diff(op.matrix());
        prop_assert!((f.matrix().hermiticity_defect() - invariance).abs() < 1e-12);
    }

    #[test]
    fn prop_schur_product((d, a, b) in dim_and_pair()) {
        let r = RieszMap::new(d).unwrap();
        let (a, b) = (a.mul(&a.dagger()), b.mul(&b.dagger()));
        let c = convolve(&pm(a, d), &pm(b, d), &r).unwrap();
        prop_assert!(certify_psd(c.matrix(), 1e-9).unwrap().min_eigenvalue >= -1e-9);
    }

    #[test]
    fn prop_reflected_product_positive((d, a, _b) in dim_and_pair()) {
        let r = RieszMap::new(d * d).unwrap();
        let t = a;
        let op = BipartiteOperator::product(&theta_single(&t), &t, Orientation::MinusPlus).unwrap();
        let f = sft(&op, &r).unwrap();
        prop_assert!(certify_psd(f.matrix(), 1e-9).unwrap().min_eigenvalue >= -1e-9);
    }

    #[test]
    fn prop_identity_expectation_law(d in 1usize..=4, seed in any::<u64>()) {
        let r = RieszMap::new(d).unwrap();
        let w = random_matrix(d * d, 1, &mut rng(seed));
        let f = sft(&BipartiteOperator::identity(d, Orientation::MinusPlus), &r).unwrap();
        let lhs = inner(&w, &f.matrix().mul(&w)).unwrap();
        let tr: C64 = (0..d).map(|i| w[(i * d + i, 0)]).sum();
        prop_assert!((lhs - tr.norm_sqr()).norm() < 1e-12);
    }
}
