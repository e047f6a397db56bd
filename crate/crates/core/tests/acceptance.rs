//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use superfock::car::flow::car_flow_morphism;
use superfock::car::gns::{moment_check, GnsRep, DEFAULT_GNS_BUDGET_BYTES};
use superfock::car::intertwiner::{commutant_intertwiners, full_algebra_intertwiners, GeneratorChoice};
use superfock::car::jordan_wigner::FiniteCARAlgebra;
use superfock::car::quasifree::QuasiFreeSpec;
use superfock::car::tomita::{modular_vs_bogoliubov, tomita_engine};
use superfock::cohomology::automorphism::{automorphism_apply, automorphism_defect, random_cell_simple, separation, AutomorphismElement};
use superfock::cohomology::cochain::{Cochain, SignConvention};
use superfock::cohomology::exclusion::{higher_sector_exclusion, DEFAULT_BUDGET_BYTES};
use superfock::cohomology::symbol::{symbol_recovery, SquareFamily, RECOVERY_TOL};
use superfock::cohomology::two_addit::{clifford_two_addit, orthogonality_forward, recover_pairings, symbol_pairing};
use superfock::cohomology::two_index::{pointwise_orthogonal, random_symbol_pair, tensor_square_two_index, two_index_estimate};
use superfock::fock::creation_matrix;
use superfock::grid::{local_operator, GridInterval, MultiplicitySpace};
use superfock::harness::{run_suite, RunConfig};
use superfock::linalg::{c64, frobenius, CMatrix, RANK_THRESHOLD};
use superfock::rng::{self, SeededRng};
use superfock::sps::{exp_addit, log_unit, ExpUnit, OneParticleAddit, Section, SuperProductSystem};

/// Outcome of one criterion: pass flag and a one-line summary.
type Outcome = (bool, String);

fn inner(f: &[Complex64], g: &[Complex64]) -> Complex64 {
    f.iter().zip(g).map(|(a, b)| a.conj() * b).sum()
}

fn normalized(v: superfock::fock::FockVector) -> superfock::fock::FockVector {
    let n = v.norm();
    v.scale(c64(1.0 / n.max(f64::MIN_POSITIVE)))
}

fn within(label: &str, value: f64, tol: f64) -> (bool, String) {
    let value = value + 0.0;
    (value <= tol, format!("{label} {value:.3e} (tol {tol:.0e})"))
}

fn join(parts: Vec<(bool, String)>) -> Outcome {
    let ok = parts.iter().all(|p| p.0);
    (ok, parts.into_iter().map(|p| p.1).collect::<Vec<_>>().join(", "))
}

fn timed(limit: Duration, start: Instant) -> (bool, String) {
    let e = start.elapsed();
    (
        e <= limit,
        format!("runtime {:.1} s (limit {} s)", e.as_secs_f64(), limit.as_secs()),
    )
}

fn car_relations() -> Outcome {
    let start = Instant::now();
    let mut rng = rng::seeded(101);
    let mut worst: f64 = 0.0;
    for (d, cells) in [(1, 10), (2, 5)] {
        let m = d * cells;
        let alg = FiniteCARAlgebra::new(m, false).unwrap();
        for _ in 0..100 {
            let f = rng::unit_vec(&mut rng, m);
            let g = rng::unit_vec(&mut rng, m);
            let (anti, mixed) = alg.car_defects(&f, &g).unwrap();
            worst = worst.max(anti).max(mixed);
        }
    }
    // dense recomputation from the Fock-space creation operators
    let m = 8;
    let id = CMatrix::identity(1 << m, 1 << m);
    let mut dense: f64 = 0.0;
    for _ in 0..5 {
        let f = rng::unit_vec(&mut rng, m);
        let g = rng::unit_vec(&mut rng, m);
        let af = creation_matrix(m, &f).unwrap().adjoint();
        let ag = creation_matrix(m, &g).unwrap().adjoint();
        dense = dense.max(frobenius(&(&af * &ag + &ag * &af)));
        dense = dense.max(frobenius(&(&af * ag.adjoint() + ag.adjoint() * &af - &id * inner(&f, &g))));
    }
    join(vec![
        within("max defect over 200 pairs", worst, 1e-10),
        within("dense oracle", dense, 1e-10),
        timed(Duration::from_secs(60), start),
    ])
}

fn super_product_axioms() -> Outcome {
    let start = Instant::now();
    let (n, d, sectors) = (6, 2, 4);
    let sps = SuperProductSystem::new(GridInterval::unit(n).unwrap(), MultiplicitySpace::new(d).unwrap(), Some(sectors)).unwrap();
    let mut rng = rng::seeded(102);
    let mut assoc: f64 = 0.0;
    for (s1, s2, s3) in SuperProductSystem::triples(n) {
        // split the particle budget across the factors
        for (a, b) in [(0, 0), (2, 1), (1, 2), (0, 4), (4, 0), (1, 1)] {
            let x = normalized(sps.random_fiber_vector(&mut rng, s1, a, 64));
            let y = normalized(sps.random_fiber_vector(&mut rng, s2, b, 64));
            let z = normalized(sps.random_fiber_vector(&mut rng, s3, sectors - a - b, 64));
            assoc = assoc.max(sps.associativity_defect(s1, s2, s3, &x, &y, &z).unwrap());
        }
    }
    let mut iso: f64 = 0.0;
    for (s, t) in SuperProductSystem::pairs(n) {
        for a in 0..=sectors {
            let x = normalized(sps.random_fiber_vector(&mut rng, s, a, 64));
            let x2 = normalized(sps.random_fiber_vector(&mut rng, s, a, 64));
            let y = normalized(sps.random_fiber_vector(&mut rng, t, sectors - a, 64));
            let y2 = normalized(sps.random_fiber_vector(&mut rng, t, sectors - a, 64));
            iso = iso.max(sps.isometry_defect(s, t, (&x, &x2), (&y, &y2)).unwrap());
        }
    }
    join(vec![
        within("associativity", assoc, 1e-12),
        within("isometry", iso, 1e-12),
        timed(Duration::from_secs(120), start),
    ])
}

fn cochain_complex() -> Outcome {
    let sps = SuperProductSystem::new(GridInterval::unit(4).unwrap(), MultiplicitySpace::new(1).unwrap(), Some(4)).unwrap();
    let mut rng = rng::seeded(103);
    let mut worst: f64 = 0.0;
    let mut literal: f64 = 0.0;
    for i in 0..50 {
        let c = Cochain::random_adapted(&sps, &mut rng, i % 3, 4, 4, 16).unwrap();
        let scale = c.max_norm().max(f64::MIN_POSITIVE);
        let alt = SignConvention::Alternating;
        worst = worst.max(c.coboundary(&sps, alt).unwrap().coboundary(&sps, alt).unwrap().max_norm() / scale);
        let lit = SignConvention::Literal;
        literal = literal.max(c.coboundary(&sps, lit).unwrap().coboundary(&sps, lit).unwrap().max_norm() / scale);
    }
    let (ok, msg) = within("d∘d over 50 cochains", worst, 1e-12);
    (ok && literal > 1e-6, format!("{msg}, literal sign gives {literal:.3e}"))
}

fn random_symbol(rng: &mut SeededRng, d: usize, n: usize) -> Vec<CMatrix> {
    (0..n).map(|_| rng::complex_matrix(rng, d, d)).collect()
}

fn clifford(n: usize, d: usize, max_particles: usize) -> SuperProductSystem {
    SuperProductSystem::clifford(
        GridInterval::unit(n).unwrap(),
        MultiplicitySpace::new(d).unwrap(),
        Some(max_particles),
    )
    .unwrap()
}

fn clifford_two_addits() -> Outcome {
    let mut rng = rng::seeded(104);
    let mut identity: f64 = 0.0;
    let mut defective: f64 = 0.0;
    let mut residual: f64 = 0.0;
    let mut symbol_error: f64 = 0.0;
    for d in [1, 2] {
        let sps = clifford(8, d, 2);
        let f = random_symbol(&mut rng, d, 8);
        let a = clifford_two_addit(&sps, &f).unwrap();
        identity = identity.max(a.identity_defect(&sps).unwrap().max_defect);
        defective = defective.max(a.defectiveness(&sps));
        let rec = symbol_recovery(&SquareFamily::from_clifford(&sps, &a).unwrap(), RECOVERY_TOL).unwrap();
        residual = residual.max(rec.residual);
        // the later-minus-earlier symbol is the input for r ≥ 1
        for r in 1..8 {
            symbol_error = symbol_error.max(frobenius(&(&rec.f1[r] - &f[r])));
        }
    }
    join(vec![
        within("2-addit identity", identity, 1e-12),
        within("defectiveness", defective, 1e-12),
        within("recovery residual", residual, 1e-10),
        within("recovered symbol", symbol_error, 1e-10),
    ])
}

fn orthogonality_lemma() -> Outcome {
    let (n, d) = (6, 2);
    let sps = clifford(n, d, 2);
    let mut rng = rng::seeded(105);
    let mut forward: f64 = 0.0;
    let mut reverse: f64 = 0.0;
    let mut full_rank = true;
    for _ in 0..20 {
        let (f, _) = random_symbol_pair(&mut rng, d, n);
        let g = pointwise_orthogonal(&mut rng, &f);
        let worst = (1..n).map(|r| symbol_pairing(&f[r], &g[r]).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "oracle symbols are not orthogonal");
        let a = clifford_two_addit(&sps, &f).unwrap();
        let b = clifford_two_addit(&sps, &g).unwrap();
        forward = forward.max(orthogonality_forward(&sps, &a, &b).unwrap());
        let rec = recover_pairings(&sps, &a, &b).unwrap();
        full_rank &= rec.rank == n - 1;
        reverse = reverse.max(rec.pairings[1..].iter().map(|p| p.norm()).fold(0.0, f64::max));
    }
    let mut parts = vec![within("forward", forward, 1e-12), within("recovered pairings", reverse, 1e-12)];
    parts.push((
        full_rank,
        format!("pairing system rank {}", if full_rank { "full" } else { "deficient" }),
    ));
    join(parts)
}

fn two_index() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for (d, expect) in [(1, 1), (2, 4)] {
        let est = two_index_estimate(&clifford(6, d, 2)).unwrap();
        let ok = est.count == expect && est.is_certified();
        parts.push((ok, format!("Clifford d={d}: {} (nullity {})", est.count, est.maximality_nullity)));
    }
    let mut rng = rng::seeded(106);
    let est = tensor_square_two_index(GridInterval::unit(6).unwrap(), MultiplicitySpace::new(1).unwrap(), &mut rng, 2).unwrap();
    let ok = est.count == 4 && est.is_certified() && est.intertwining_defect.unwrap() < 1e-12;
    parts.push((ok, format!("E system d=1: {} (nullity {})", est.count, est.maximality_nullity)));
    parts.push((RANK_THRESHOLD == 1e-8, format!("singular-value threshold {RANK_THRESHOLD:.0e}")));
    parts.push(timed(Duration::from_secs(600), start));
    join(parts)
}

fn exclusion() -> Outcome {
    let four = higher_sector_exclusion(8, 1, 2, DEFAULT_BUDGET_BYTES, true).unwrap();
    let two = higher_sector_exclusion(8, 1, 1, DEFAULT_BUDGET_BYTES, true).unwrap();
    // one free scalar symbol value per difference r = 1, …, 7
    let predicted = 7;
    join(vec![
        (
            four.nullity == 0 && !four.informational,
            format!("4-particle nullity {}", four.nullity),
        ),
        (
            two.nullity == predicted,
            format!("2-particle control {} (predicted {predicted})", two.nullity),
        ),
    ])
}

fn exp_log() -> Outcome {
    let cells = 256;
    let sps = SuperProductSystem::new(GridInterval::new(1.0, cells).unwrap(), MultiplicitySpace::new(2).unwrap(), None).unwrap();
    let mut rng = rng::seeded(108);
    let mut worst_final: f64 = 0.0;
    let mut decreasing = true;
    let mut log_residual: f64 = 0.0;
    for norms in [(1.0, 1.0), (0.5, 1.0), (0.8, 0.3)] {
        let xi: Vec<Complex64> = rng::unit_vec(&mut rng, 2).into_iter().map(|z| z * norms.0).collect();
        let eta: Vec<Complex64> = rng::unit_vec(&mut rng, 2).into_iter().map(|z| z * norms.1).collect();
        let b = OneParticleAddit { xi: xi.clone() };
        let b2 = OneParticleAddit { xi: eta.clone() };
        let target = inner(&xi, &eta).exp();
        let mut last = f64::INFINITY;
        let mut n = 1;
        while n <= cells {
            let e = exp_addit(&sps, &b, cells, n).unwrap();
            let e2 = exp_addit(&sps, &b2, cells, n).unwrap();
            let err = (e.inner(&e2).unwrap() - target).norm();
            decreasing &= err < last;
            last = err;
            n *= 2;
        }
        worst_final = worst_final.max(last);
        let u = ExpUnit {
            addit: &b,
            max_terms: 1 << 16,
        };
        let log = log_unit(&sps, &u, cells, cells).unwrap();
        log_residual = log_residual.max(log.sub(&b.value(&sps, cells).unwrap()).unwrap().norm());
    }
    join(vec![
        within("Exp error at n = 256", worst_final, 1e-2),
        (
            decreasing,
            format!("error series {}", if decreasing { "decreasing" } else { "not decreasing" }),
        ),
        within("Log∘Exp residual", log_residual, 1e-2),
    ])
}

fn quasi_free_gns() -> Outcome {
    let mut parts = Vec::new();
    let cases = [
        ("1/2, 3 modes", QuasiFreeSpec::scalar(0.5, 1).unwrap(), 3),
        ("1/2·1_2, 2 modes", QuasiFreeSpec::scalar(0.5, 2).unwrap(), 1),
        (
            "diag(1/3, 2/3), 2 modes",
            QuasiFreeSpec::diagonal(&[1.0 / 3.0, 2.0 / 3.0]).unwrap(),
            1,
        ),
    ];
    for (label, spec, cells) in cases {
        let g = GnsRep::new(spec, cells, DEFAULT_GNS_BUDGET_BYTES).unwrap();
        let res = moment_check(&g, 6).unwrap();
        let (ok, msg) = within(&format!("{label}: determinant"), res.determinant_defect, 1e-10);
        let (ok2, msg2) = within("Wick", res.wick_defect, 1e-10);
        parts.push((ok && ok2, format!("{msg}, {msg2} over {} words", res.words)));
    }
    join(parts)
}

fn finite_tomita() -> Outcome {
    let g = GnsRep::new(
        QuasiFreeSpec::diagonal(&[1.0 / 3.0, 2.0 / 3.0]).unwrap(),
        1,
        DEFAULT_GNS_BUDGET_BYTES,
    )
    .unwrap();
    let span = g.monomials(&[0, 1]);
    let md = tomita_engine(&span, g.omega()).unwrap();
    let bog = [0.5, 1.0, 2.0]
        .iter()
        .map(|&s| modular_vs_bogoliubov(&g, &md, s).unwrap())
        .fold(0.0, f64::max);
    let t = GnsRep::new(QuasiFreeSpec::scalar(0.5, 2).unwrap(), 1, DEFAULT_GNS_BUDGET_BYTES).unwrap();
    let tmd = tomita_engine(&t.monomials(&[0, 1]), t.omega()).unwrap();
    let id = CMatrix::identity(t.dim(), t.dim());
    join(vec![
        within("JΩ = Ω, ΔΩ = Ω", md.vacuum_defect(g.omega()), 1e-12),
        within("JΔ^{1/2}xΩ = x*Ω", md.polar_defect(&span, g.omega()), 1e-9),
        within("modular vs Bogoliubov", bog, 1e-8),
        within("tracial Δ = 1", frobenius(&(tmd.delta() - id)), 1e-12),
    ])
}

fn intertwiners() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for (d, m, k) in [(1, 3, 1), (1, 4, 2), (2, 3, 1)] {
        let res = full_algebra_intertwiners(d, m, k, GeneratorChoice::Basis, false).unwrap();
        let random = full_algebra_intertwiners(d, m, k, GeneratorChoice::Random(7), false).unwrap();
        let expect = 1 << (k * d);
        let ok = res.dim == expect && random.dim == expect && res.residual < 1e-10;
        parts.push((ok, format!("({d},{m},{k}): {}", res.dim)));
    }
    let res = commutant_intertwiners(&QuasiFreeSpec::scalar(0.3, 1).unwrap(), 2, 1, true).unwrap();
    // even-degree count of Γ(C) ⊗ Γ(C)
    let even = 2;
    parts.push((
        res.dim == even,
        format!("with commutant (1,2,1): {} (even-degree count {even})", res.dim),
    ));
    // the flow itself is a state-preserving morphism at this size
    let g = GnsRep::new(QuasiFreeSpec::scalar(0.3, 1).unwrap(), 2, DEFAULT_GNS_BUDGET_BYTES).unwrap();
    let flow = car_flow_morphism(&g, 1).unwrap();
    parts.push(within("flow morphism defect", flow.morphism_defect().unwrap(), 1e-10));
    parts.push(timed(Duration::from_secs(300), start));
    join(parts)
}

fn automorphism_group() -> Outcome {
    let (n, d) = (6, 2);
    let sps = clifford(n, d, 6);
    let mut rng = rng::seeded(112);
    let mut morphism: f64 = 0.0;
    for _ in 0..20 {
        let g = AutomorphismElement::random(&mut rng, d, n);
        for (s, t) in SuperProductSystem::pairs(n) {
            morphism = morphism.max(automorphism_defect(&sps, &g, s, t, 1, &mut rng).unwrap());
        }
    }
    let u = rng::unitary(&mut rng, d);
    let lambda = 0.9;
    let g = AutomorphismElement::constant(lambda, &u, n).unwrap();
    let big: DMatrix<Complex64> = local_operator(n, &u);
    let mut constant: f64 = 0.0;
    for t in 1..=n {
        let v = random_cell_simple(&sps, &mut rng, t, 4, 16);
        let a = automorphism_apply(&sps, &g, t, &v).unwrap();
        let phase = Complex64::from_polar(1.0, lambda * sps.grid().time(t));
        constant = constant.max(a.sub(&v.second_quantize(&big).unwrap().scale(phase)).unwrap().norm());
    }
    let p = AutomorphismElement::random(&mut rng, d, n);
    let mut f = p.f().to_vec();
    f[2] = &f[2] * rng::unitary(&mut rng, d * d);
    let q = AutomorphismElement::new(p.lambda(), f).unwrap();
    let r = AutomorphismElement::new(p.lambda() + 0.25, p.f().to_vec()).unwrap();
    let same = separation(&sps, &p, &p).unwrap() + 0.0;
    let apart = separation(&sps, &p, &q).unwrap().min(separation(&sps, &p, &r).unwrap());
    join(vec![
        within("morphism defect", morphism, 1e-10),
        within("constant F", constant, 1e-10),
        (same < 1e-14 && apart > 1e-3, format!("separation {apart:.3e} (self {same:.1e})")),
    ])
}

fn determinism() -> Outcome {
    let cfg = RunConfig {
        seed: 2024,
        ..RunConfig::default()
    };
    let a = run_suite(&cfg).unwrap().to_json();
    let b = run_suite(&cfg).unwrap().to_json();
    let other = run_suite(&RunConfig { seed: 2025, ..cfg }).unwrap().to_json();
    (
        a == b && a != other,
        format!("{} bytes, identical {}, seed-sensitive {}", a.len(), a == b, a != other),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("CAR relations", car_relations),
        ("super-product axioms", super_product_axioms),
        ("cochain complex", cochain_complex),
        ("Clifford 2-addits", clifford_two_addits),
        ("orthogonality lemma", orthogonality_lemma),
        ("2-index", two_index),
        ("higher-sector exclusion", exclusion),
        ("Exp/Log", exp_log),
        ("quasi-free/GNS equivalence", quasi_free_gns),
        ("finite Tomita", finite_tomita),
        ("intertwiner dimensions", intertwiners),
        ("automorphism group", automorphism_group),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, msg) = match panic::catch_unwind(AssertUnwindSafe(run)) {
            Ok(outcome) => outcome,
            Err(e) => {
                let reason = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                (false, format!("panicked: {}", reason.unwrap_or_default()))
            }
        };
        println!("criterion {:>2} {:<28} {} {msg}", i + 1, name, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
