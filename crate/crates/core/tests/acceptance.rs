//! Acceptance criteria 1–9, one line each. Runs without the libtest harness
//! so that the lines appear in ordinary `cargo test` output.

use std::time::Instant;

use rpcert::cli::{cmd_certify, RunConfig};
use rpcert::fusion::{rho, zigzag_residuals, FusionCategory};
use rpcert::lattice::{theta_sphere, torus_ladder, MirrorGraph};
use rpcert::linalg::{certify_psd, ComplexMatrix};
use rpcert::lwmodel::*;
use rpcert::rp::{deformation_convergence, h_s_deformation, RpVerdict, DEFAULT_BETAS};
use rpcert::sft::{convolve, sft, y_map, BipartiteOperator, Orientation, RieszMap};
use rpcert::suite::{run_sft_suite, SuiteConfig, SuiteResult};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn instances() -> Vec<(FusionCategory, MirrorGraph)> {
    vec![
        (FusionCategory::vec_zn(2).unwrap(), theta_sphere().unwrap()),
        (FusionCategory::fibonacci().unwrap(), theta_sphere().unwrap()),
        (FusionCategory::vec_zn(2).unwrap(), torus_ladder(1).unwrap()),
    ]
}

fn label(cat: &FusionCategory, g: &MirrorGraph) -> String {
    format!("{}/{}", cat.name(), g.name)
}

fn suite(names: &[&str], results: &[SuiteResult]) -> (bool, String) {
    let picked: Vec<&SuiteResult> = results.iter().filter(|r| names.contains(&r.name)).collect();
    assert_eq!(picked.len(), names.len(), "suite names drifted");
    let ok = picked.iter().all(|r| r.passed);
    let detail = picked.iter().map(|r| format!("{}={:.1e}", r.name, r.value)).collect::<Vec<_>>().join(", ");
    (ok, detail)
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let res = run_sft_suite(&SuiteConfig { dims: vec![2, 3, 4], y_dims: vec![], trials: 100, seed: 1, fault: None })
        .map_err(err)?;
    let secs = t.elapsed().as_secs_f64();
    let (ok, detail) = suite(
        &["sft_products_to_convolutions", "sft_theta_is_dagger", "sft_inverse_roundtrip", "key_identity"],
        &res,
    );
    check(ok && secs < 10.0, format!("{detail}; {secs:.2}s"))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for d in 2..=6 {
        let r = RieszMap::new(d).map_err(err)?;
        let want = ComplexMatrix::identity(d * d).scale_real(d as f64);
        let y = y_map(&r);
        worst = worst.max(y.mul(&y.dagger()).max_abs_diff(&want));
        let i = BipartiteOperator::identity(d, Orientation::PlusMinus);
        worst = worst.max(convolve(&i, &i, &r).map_err(err)?.matrix().max_abs_diff(&want));
    }
    check(worst < 1e-12, format!("max deviation {worst:.1e} over dims 2–6"))
}

fn criterion_3() -> Outcome {
    let res = run_sft_suite(&SuiteConfig { dims: vec![2, 3, 4], y_dims: vec![], trials: 100, seed: 3, fault: None })
        .map_err(err)?;
    let (ok, detail) = suite(
        &[
            "schur_product",
            "sft_of_identity",
            "identity_expectation_law",
            "reflected_product_positivity",
            "truncated_exponential",
        ],
        &res,
    );
    check(ok, detail)
}

fn criterion_4() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (cat, g) in instances() {
        let name = label(&cat, &g);
        let m = LWModel::build_default(cat, g).map_err(err)?;
        let d = m.mirror_decompose().map_err(err)?;
        let r = m.riesz();
        let f0 = sft(&d.decomposition.h_zero.scale_real(-1.0), &r).map_err(err)?;
        let h0_positive = certify_psd(f0.matrix(), 1e-9).map_err(err)?.is_positive();
        let mut min = f64::INFINITY;
        for s in [0.1, 1.0, 10.0] {
            let hs = h_s_deformation(&d.decomposition, s, &r).map_err(err)?;
            let f = sft(&hs, &r).map_err(err)?;
            min = min.min(certify_psd(f.matrix(), 1e-9).map_err(err)?.min_eigenvalue);
        }
        let conv = deformation_convergence(&d.decomposition, &r, &[1.0, 1e-2, 1e-4, 1e-6], &DEFAULT_BETAS, 10, 4)
            .map_err(err)?;
        let monotone = conv.windows(2).all(|w| w[1].1 <= w[0].1);
        let last = conv.last().unwrap().1;
        ok &= (!h0_positive || min >= -1e-9) && monotone && last < 1e-3;
        lines.push(format!("{name}: min eig {min:.1e}, |Δ| at s=1e-6 {last:.1e}"));
    }
    check(ok, lines.join("; "))
}

fn criterion_5() -> Outcome {
    let mut cats: Vec<FusionCategory> = (2..=4).map(|n| FusionCategory::vec_zn(n).unwrap()).collect();
    cats.push(FusionCategory::fibonacci().map_err(err)?);
    cats.push(FusionCategory::ising().map_err(err)?);
    let (mut pent, mut zz, mut lp, mut rho_dev) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for cat in &cats {
        let v = cat.validate();
        pent = pent.max(v.pentagon);
        let (a, b) = zigzag_residuals(cat);
        zz = zz.max(a).max(b);
        lp = lp.max(v.loop_value);
        for n in 1..=5 {
            let r = rho(cat, n);
            let id = ComplexMatrix::identity(r.rows());
            rho_dev = rho_dev.max(r.mul(&r.dagger()).max_abs_diff(&id));
            let mut p = id.clone();
            for _ in 0..n {
                p = p.mul(&r);
            }
            rho_dev = rho_dev.max(p.max_abs_diff(&id));
        }
    }
    let dtau = FusionCategory::fibonacci().map_err(err)?.qdim(1);
    let ok = pent < 1e-10 && zz < 1e-10 && lp < 1e-10 && (dtau - 1.6180339887).abs() < 1e-9 && rho_dev < 1e-9;
    check(
        ok,
        format!("pentagon {pent:.1e}, zig-zag {zz:.1e}, ∪∩ {lp:.1e}, d(τ) = {dtau:.10}, ρ {rho_dev:.1e}"),
    )
}

fn max_conjugated_diff(a: &LWOperators, b: &LWOperators, u: &ComplexMatrix) -> f64 {
    let c = |x: &ComplexMatrix| u.mul(x).mul(&u.dagger());
    let mut worst = 0.0f64;
    for (x, y) in a.vertex_ops.iter().zip(&b.vertex_ops) {
        worst = worst.max(c(x).max_abs_diff(y));
    }
    for (k, x) in &a.plaquette_ops_j {
        worst = worst.max(c(x).max_abs_diff(&b.plaquette_ops_j[k]));
    }
    worst
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for (cat, g) in instances() {
        let name = label(&cat, &g);
        let s = build_spaces(&cat, &g, DEFAULT_DIM_CAP_FOR_TESTS).map_err(err)?;
        let ops = build_operators(&cat, &g, &s, 1.0, 1.0).map_err(err)?;
        let res = algebra_residuals(&ops);
        let mut inv = 0.0f64;
        for v in 0..g.num_vertices() {
            for r in 1..g.degree(v) {
                let o = build_operators(&cat, &g.reroot_vertex(v, r), &s, 1.0, 1.0).map_err(err)?;
                let u = reroot_unitary(&cat, &g, &s, v, r).map_err(err)?;
                inv = inv.max(max_conjugated_diff(&ops, &o, &u));
            }
        }
        let id = ComplexMatrix::identity(s.dim_full());
        for p in 0..g.num_plaquettes() {
            for r in 1..g.plaquettes[p].len() {
                let o = build_operators(&cat, &g.reroot_walk(p, r), &s, 1.0, 1.0).map_err(err)?;
                inv = inv.max(max_conjugated_diff(&ops, &o, &id));
            }
        }
        for e in 0..g.num_edges() {
            let o = build_operators(&cat, &g.flip_edge(e), &s, 1.0, 1.0).map_err(err)?;
            let u = flip_unitary(&cat, &g, &s, e).map_err(err)?;
            inv = inv.max(max_conjugated_diff(&ops, &o, &u));
        }
        ok &= res.passes(1e-9, 1e-10, 1e-9) && inv < 1e-10 && s.dim_full() <= 1024;
        lines.push(format!(
            "{name}: ‖X²−X‖ {:.1e}, ‖X−X†‖ {:.1e}, [·,·] {:.1e}, invariance {inv:.1e}",
            res.projection, res.hermiticity, res.commutator
        ));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    check(ok, format!("{}; {secs:.1}s", lines.join("; ")))
}

const DEFAULT_DIM_CAP_FOR_TESTS: usize = rpcert::linalg::DEFAULT_DIM_CAP;

fn criterion_7() -> Outcome {
    let z2 = FusionCategory::vec_zn(2).map_err(err)?;
    let torus = torus_ladder(1).map_err(err)?;
    let s = build_spaces(&z2, &torus, DEFAULT_DIM_CAP_FOR_TESTS).map_err(err)?;
    let ops = build_operators(&z2, &torus, &s, 1.0, 1.0).map_err(err)?;
    let mut dev = 0.0f64;
    for p in 0..torus.num_plaquettes() {
        dev = dev.max(ops.plaquette_ops[p].max_abs_diff(&toric_code_plaquette(&torus, &s, p).map_err(err)?));
    }
    let k_torus = spectrum_summary(&ops.hamiltonian, 8).kernel_dimension;
    let theta = theta_sphere().map_err(err)?;
    let mut k_theta = Vec::new();
    for cat in [z2.clone(), FusionCategory::fibonacci().map_err(err)?] {
        let s = build_spaces(&cat, &theta, DEFAULT_DIM_CAP_FOR_TESTS).map_err(err)?;
        let ops = build_operators(&cat, &theta, &s, 1.0, 1.0).map_err(err)?;
        k_theta.push(spectrum_summary(&ops.hamiltonian, 4).kernel_dimension);
    }
    check(
        dev < 1e-10 && k_torus == 4 && k_theta.iter().all(|&k| k == 1),
        format!("toric oracle {dev:.1e}, torus kernel {k_torus}, theta_sphere kernels {k_theta:?}"),
    )
}

fn criterion_8() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut literal_min = f64::INFINITY;
    for (cat, g) in instances() {
        let name = label(&cat, &g);
        let m = LWModel::build_default(cat, g).map_err(err)?;
        let d = m.mirror_decompose().map_err(err)?;
        let mut lemma_min = f64::INFINITY;
        let mut lemma_recon = 0.0f64;
        for &p in &d.crossing {
            for j in m.cat.labels() {
                let c = m.lemma_check(p, j).map_err(err)?;
                ok &= c.certificate.is_positive();
                lemma_min = lemma_min.min(c.certificate.min_eigenvalue);
                literal_min = literal_min.min(c.literal_sign.min_eigenvalue);
                lemma_recon = lemma_recon.max(c.reconstruction_residual);
            }
        }
        let (thm2, _) = m.certify_thm2(&d, 50, 8).map_err(err)?;
        let h0 = thm2.certificate.as_ref().map(|c| c.min_eigenvalue).unwrap_or(f64::NAN);
        let o = m.rp_oracle(&DEFAULT_BETAS, 50, 8).map_err(err)?;
        let (re, im) = (o.min_real_part(), o.max_abs_imag());
        ok &= thm2.verdict == RpVerdict::RpCertified
            && re >= -1e-9
            && im < 1e-9
            && o.sampled_expectations.len() == 50 * DEFAULT_BETAS.len()
            && d.reconstruction < 1e-9;
        lines.push(format!(
            "{name}: loop SFT min {lemma_min:.1e} (T⊠θT residual {lemma_recon:.1e}), 𝔉ₛ(−H₀) min {h0:.1e}, \
             oracle min re {re:.1e} |im| {im:.1e}, reconstruction {:.1e}",
            d.reconstruction
        ));
    }
    lines.push(format!(
        "loop terms certified as 𝔉ₛ(+ιH_{{p,j}}ι†) ⪰ 0, the sign 𝔉ₛ(−H₀) ⪰ 0 requires since H₀ = −λΣιH_pι†; \
         the printed sign 𝔉ₛ(−ιH_{{p,j}}ι†) has min eigenvalue {literal_min:.3}"
    ));
    check(ok, lines.join("; "))
}

fn criterion_9() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for category in ["vec_zn(2)", "fibonacci"] {
        let cfg = RunConfig { category: category.into(), seed: 99, ..RunConfig::default() };
        let a = cmd_certify(&cfg).map_err(err)?;
        let b = cmd_certify(&cfg).map_err(err)?;
        let (ta, tb) = (a.to_toml().map_err(err)?, b.to_toml().map_err(err)?);
        let drift = a
            .oracle
            .iter()
            .zip(&b.oracle)
            .flat_map(|(x, y)| x.samples.iter().zip(&y.samples))
            .map(|(s, t)| (s.value() - t.value()).norm())
            .fold(0.0, f64::max);
        ok &= ta == tb && drift <= 1e-12;
        lines.push(format!("{category}: reports identical {}, sample drift {drift:.1e}", ta == tb));
    }
    check(ok, lines.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("SFT algebra suite", criterion_1),
        ("Y calculus", criterion_2),
        ("positivity suite", criterion_3),
        ("theorem-proof deformation", criterion_4),
        ("fusion data gates", criterion_5),
        ("LW operator algebra", criterion_6),
        ("toric-code oracle and kernels", criterion_7),
        ("main theorem at desk scale", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} [{secs:.1}s] — {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} [{secs:.1}s] — {detail}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
