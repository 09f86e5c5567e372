//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{chsh_grid_max, noisy_pure, pure_product, separable_mixture, Audit};
use monogamy::bell::{chsh_forms, chsh_max_2qubit, chsh_value, deterministic_table, joint_table, lhv_from_extension, lhv_table, local_2x2_membership_detail, Measurement, ProbabilityTable, Scenario};
use monogamy::entanglement::{negativity, schmidt_rank};
use monogamy::extendibility::{
    ab_marginal, bisect_threshold, check_extendible, drop_last_party, extendibility_threshold, symmetrize_extension, verify_extension, Criterion, Family,
    Variant,
};
use monogamy::sdp::{solve_feasibility, verify_farkas, verify_primal, Constraint, SdpProblem, SdpStatus, SparseSymmetric};
use monogamy::states::{bdsw_tripartite, max_entangled, pure_density, random_density, random_pure_vector, werner};
use monogamy::DensityMatrix;

/// Werner 2-extendibility threshold from the first bisection run.
const WERNER_K2_THRESHOLD: f64 = 0.6666259765625;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: f64) -> std::result::Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_secs, || format!("took {:.2} s, limit {limit_secs} s", elapsed.as_secs_f64()))
}

fn criterion_1() -> Check {
    let t0 = Instant::now();
    let r = bisect_threshold(Family::Werner, Criterion::Ppt, 0.0, 1.0, 1e-7).map_err(|e| e.to_string())?;
    // partial-transpose spectrum of werner(p): (1+p)/4 three times and (1−3p)/4
    let analytic = |p: f64| (1.0 - 3.0 * p) / 4.0;
    ensure(analytic(r.threshold) >= -1e-6 && analytic(r.upper) < 0.0, || format!("bracket [{}, {}] misses the analytic sign change", r.threshold, r.upper))?;
    ensure((r.threshold - 1.0 / 3.0).abs() <= 1e-6, || format!("onset {} is not 1/3 within 1e-6", r.threshold))?;
    within(t0.elapsed(), 1.0)?;
    Ok(format!("onset {:.9} in {:.3} s", r.threshold, t0.elapsed().as_secs_f64()))
}

fn criterion_2(audit: &mut Audit) -> Check {
    let t0 = Instant::now();
    let ab = bdsw_tripartite().partial_trace(&[2]).map_err(|e| e.to_string())?;
    let n = negativity(&ab, 1).map_err(|e| e.to_string())?;
    ensure((n - 0.125).abs() <= 1e-8, || format!("negativity {n}"))?;
    let r = check_extendible(&ab, 2, Variant::PermutationInvariant).map_err(|e| e.to_string())?;
    audit.extension(&ab, &r);
    ensure(r.status == SdpStatus::Feasible, || format!("status {:?}", r.status))?;
    ensure(r.margin > 1e-7, || format!("margin {}", r.margin))?;
    let w = r.extension.as_ref().ok_or("no witness")?;
    ensure(verify_extension(w, &ab, 2, Variant::PermutationInvariant).map_err(|e| e.to_string())?, || "witness rejected".into())?;
    within(t0.elapsed(), 10.0)?;
    Ok(format!("negativity {n:.10}, margin {:.3e}, {:.2} s", r.margin, t0.elapsed().as_secs_f64()))
}

fn criterion_3(audit: &mut Audit) -> Check {
    let t0 = Instant::now();
    let mut entangled = 0;
    let mut seed = 0;
    while entangled < 50 {
        seed += 1;
        let v = random_pure_vector(4, 5000 + seed);
        if schmidt_rank(&v, [2, 2]).map_err(|e| e.to_string())? != 2 {
            continue;
        }
        let rho = pure_density(&v, vec![2, 2]).map_err(|e| e.to_string())?;
        let r = check_extendible(&rho, 2, Variant::PermutationInvariant).map_err(|e| e.to_string())?;
        audit.extension(&rho, &r);
        ensure(r.status == SdpStatus::Infeasible && r.certificate.is_some(), || format!("pure state seed {seed}: {:?}", r.status))?;
        entangled += 1;
    }
    for seed in 0..10 {
        let rho = pure_product(seed);
        let r = check_extendible(&rho, 2, Variant::PermutationInvariant).map_err(|e| e.to_string())?;
        audit.extension(&rho, &r);
        ensure(r.status == SdpStatus::Feasible, || format!("product seed {seed}: {:?}", r.status))?;
    }
    within(t0.elapsed(), 120.0)?;
    Ok(format!("50 Infeasible with certificates, 10 products Feasible, {:.2} s", t0.elapsed().as_secs_f64()))
}

fn criterion_4(audit: &mut Audit) -> Check {
    let t0 = Instant::now();
    for seed in 0..20 {
        let s = separable_mixture(seed);
        for k in [2, 3] {
            let r = check_extendible(&s.rho, k, Variant::PermutationInvariant).map_err(|e| e.to_string())?;
            audit.extension(&s.rho, &r);
            ensure(r.status == SdpStatus::Feasible, || format!("mixture {seed} at k={k}: {:?}", r.status))?;
            let hand = s.extension(k);
            ensure(verify_extension(&hand, &s.rho, k, Variant::PermutationInvariant).map_err(|e| e.to_string())?, || {
                format!("hand-built extension of mixture {seed} rejected at k={k}")
            })?;
        }
    }
    within(t0.elapsed(), 180.0)?;
    Ok(format!("20 mixtures Feasible at k=2,3 with valid hand-built extensions, {:.2} s", t0.elapsed().as_secs_f64()))
}

fn reconstruct_membership(t: &ProbabilityTable, weights: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let p: f64 = weights.iter().enumerate().map(|(l, w)| w * deterministic_table(l).get(x, y, a, b)).sum();
                    worst = worst.max((p - t.get(x, y, a, b)).abs());
                }
            }
        }
    }
    worst
}

fn criterion_5(audit: &mut Audit, membership_audits: &mut usize) -> Check {
    let t0 = Instant::now();
    let mut witnesses: Vec<(String, DensityMatrix)> = vec![("bdsw".into(), bdsw_tripartite())];
    let mut seed = 0;
    while witnesses.len() < 10 {
        seed += 1;
        let rho = random_density(&[2, 2], 900 + seed).map_err(|e| e.to_string())?;
        let r = check_extendible(&rho, 2, Variant::PermutationInvariant).map_err(|e| e.to_string())?;
        audit.extension(&rho, &r);
        if r.status == SdpStatus::Feasible {
            witnesses.push((format!("random seed {}", 900 + seed), r.extension.expect("feasible results carry a witness")));
        }
        ensure(seed < 200, || "too few Feasible random states".into())?;
    }
    let mut tables = 0;
    for (w, (name, ext)) in witnesses.iter().enumerate() {
        let rho = ab_marginal(ext, 1).map_err(|e| e.to_string())?;
        ensure(verify_extension(ext, &rho, 2, Variant::PermutationInvariant).map_err(|e| e.to_string())?, || format!("{name}: witness rejected"))?;
        for trial in 0..3u64 {
            let base = 10_000 * w as u64 + 100 * trial;
            let n_alice = 2 + (base / 100 % 3) as usize;
            let alice: Vec<Measurement> = (0..n_alice).map(|i| Measurement::random_projective(2, base + i as u64)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
            let bob: Vec<Measurement> = (0..2).map(|i| Measurement::random_projective(2, base + 50 + i)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
            let s = Scenario::new(alice, bob).map_err(|e| e.to_string())?;
            let model = lhv_from_extension(ext, &s).map_err(|e| e.to_string())?;
            let lhv = lhv_table(&model, &s).map_err(|e| e.to_string())?;
            let quantum = joint_table(&rho, &s).map_err(|e| e.to_string())?;
            let diff = lhv.max_abs_diff(&quantum).map_err(|e| e.to_string())?;
            ensure(diff <= 1e-8, || format!("{name}, trial {trial}: tables differ by {diff:.3e}"))?;
            for x0 in 0..n_alice {
                for x1 in x0 + 1..n_alice {
                    let sub = quantum.sub_table(&[x0, x1], &[0, 1]).map_err(|e| e.to_string())?;
                    let value = chsh_value(&sub).map_err(|e| e.to_string())?;
                    let forms = chsh_forms(&sub).map_err(|e| e.to_string())?;
                    ensure(value <= 2.0 + 1e-6 && forms.iter().all(|f| *f <= 2.0 + 1e-6), || format!("{name}: CHSH {value}"))?;
                    let m = local_2x2_membership_detail(&sub).map_err(|e| e.to_string())?;
                    ensure(m.member, || format!("{name}: sub-table ({x0},{x1}) reported non-local ({:?})", m.status))?;
                    let weights = m.weights.as_ref().ok_or("member without weights")?;
                    let sum: f64 = weights.iter().sum();
                    let err = reconstruct_membership(&sub, weights);
                    ensure(weights.iter().all(|w| *w >= -1e-9) && (sum - 1.0).abs() <= 1e-8 && err <= 1e-7, || {
                        format!("{name}: membership weights do not reproduce the table ({err:.3e})")
                    })?;
                    *membership_audits += 1;
                    tables += 1;
                }
            }
        }
    }
    within(t0.elapsed(), 120.0)?;
    Ok(format!("10 witnesses, {tables} CHSH sub-tables local, {:.2} s", t0.elapsed().as_secs_f64()))
}

fn criterion_6() -> Check {
    let t0 = Instant::now();
    let phi = max_entangled(2).map_err(|e| e.to_string())?;
    let v = chsh_max_2qubit(&phi).map_err(|e| e.to_string())?;
    ensure((v - 2.0 * 2.0_f64.sqrt()).abs() <= 1e-8, || format!("Φ⁺ gives {v}"))?;

    let violates = |p: f64| -> std::result::Result<bool, String> { Ok(chsh_max_2qubit(&werner(p).map_err(|e| e.to_string())?).map_err(|e| e.to_string())? > 2.0) };
    ensure(!violates(0.0)? && violates(1.0)?, || "Werner endpoints".into())?;
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if violates(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let onset = 0.5 * (lo + hi);
    ensure((onset - 1.0 / 2.0_f64.sqrt()).abs() <= 1e-4, || format!("Werner onset {onset}"))?;
    for (p, expect) in [(0.70, false), (0.72, true)] {
        ensure(violates(p)? == expect, || format!("Werner p={p}"))?;
    }

    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let rho = if seed % 2 == 0 {
            random_density(&[2, 2], 300 + seed).map_err(|e| e.to_string())?
        } else {
            pure_density(&random_pure_vector(4, 300 + seed), vec![2, 2]).map_err(|e| e.to_string())?
        };
        let closed = chsh_max_2qubit(&rho).map_err(|e| e.to_string())?;
        let grid = chsh_grid_max(&rho);
        worst = worst.max((closed - grid).abs());
        ensure((closed - grid).abs() <= 1e-3, || format!("seed {seed}: closed form {closed}, grid {grid}"))?;
    }
    within(t0.elapsed(), 60.0)?;
    Ok(format!("Φ⁺ {v:.12}, Werner onset {onset:.6}, grid gap {worst:.2e}, {:.2} s", t0.elapsed().as_secs_f64()))
}

fn criterion_7(audit: &mut Audit) -> Check {
    let t0 = Instant::now();
    let (mut feasible3, mut infeasible2) = (0, 0);
    for seed in 0..20 {
        let rho = noisy_pure(seed);
        let perm = check_extendible(&rho, 2, Variant::PermutationInvariant).map_err(|e| e.to_string())?;
        let marg = check_extendible(&rho, 2, Variant::EqualMarginals).map_err(|e| e.to_string())?;
        audit.extension(&rho, &perm);
        audit.extension(&rho, &marg);
        ensure(perm.status == marg.status, || format!("seed {seed}: perm {:?}, marginals {:?}", perm.status, marg.status))?;
        if perm.status == SdpStatus::Infeasible {
            infeasible2 += 1;
        }
        if let Some(w) = &marg.extension {
            let sym = symmetrize_extension(w).map_err(|e| e.to_string())?;
            ensure(verify_extension(&sym, &rho, 2, Variant::PermutationInvariant).map_err(|e| e.to_string())?, || format!("seed {seed}: twirled witness rejected"))?;
        }
        let k3 = check_extendible(&rho, 3, Variant::PermutationInvariant).map_err(|e| e.to_string())?;
        audit.extension(&rho, &k3);
        if k3.status == SdpStatus::Feasible {
            feasible3 += 1;
            ensure(perm.status == SdpStatus::Feasible, || format!("seed {seed}: Feasible at k=3 but {:?} at k=2", perm.status))?;
            let down = drop_last_party(k3.extension.as_ref().ok_or("no witness")?).map_err(|e| e.to_string())?;
            ensure(verify_extension(&down, &rho, 2, Variant::PermutationInvariant).map_err(|e| e.to_string())?, || format!("seed {seed}: traced-down witness rejected"))?;
        }
    }
    ensure(feasible3 > 0 && infeasible2 > 0, || format!("degenerate sample: {feasible3} Feasible at k=3, {infeasible2} Infeasible at k=2"))?;
    within(t0.elapsed(), 300.0)?;
    Ok(format!("20 states, {infeasible2} Infeasible at k=2, {feasible3} Feasible at k=3, {:.2} s", t0.elapsed().as_secs_f64()))
}

fn entry(side: usize, i: usize, j: usize) -> SparseSymmetric {
    let mut s = SparseSymmetric::new(side);
    s.push(i, j, if i == j { 1.0 } else { 0.5 });
    s
}

fn criterion_8(audit: &Audit, membership_audits: usize) -> Check {
    let scalar = SdpProblem::new(1, vec![Constraint::new(entry(1, 0, 0), 1.0)]).map_err(|e| e.to_string())?;
    let diag = SdpProblem::new(
        2,
        vec![Constraint::new(entry(2, 0, 0), 1.0), Constraint::new(entry(2, 1, 1), -1.0), Constraint::new(entry(2, 0, 1), 0.0)],
    )
    .map_err(|e| e.to_string())?;
    let mut trace = SparseSymmetric::new(2);
    trace.push(0, 0, 1.0);
    trace.push(1, 1, 1.0);
    let mut diff = SparseSymmetric::new(2);
    diff.push(0, 0, 1.0);
    diff.push(1, 1, -1.0);
    let half = SdpProblem::new(2, vec![Constraint::new(trace, 1.0), Constraint::new(diff, 0.0)]).map_err(|e| e.to_string())?;

    let mut margins = Vec::new();
    for (name, p, status, margin) in [("X = 1", &scalar, SdpStatus::Feasible, 1.0), ("X = diag(1, −1)", &diag, SdpStatus::Infeasible, -1.0), ("Tr X = 1, X₀₀ = X₁₁", &half, SdpStatus::Feasible, 0.5)] {
        let s = solve_feasibility(p).map_err(|e| e.to_string())?;
        ensure(s.status == status, || format!("{name}: {:?}", s.status))?;
        ensure((s.margin - margin).abs() <= 1e-6, || format!("{name}: margin {}", s.margin))?;
        let checked = match s.status {
            SdpStatus::Feasible => verify_primal(s.witness.as_ref().ok_or("no witness")?, p).map_err(|e| e.to_string())?,
            SdpStatus::Infeasible => verify_farkas(s.certificate.as_ref().ok_or("no certificate")?, p).map_err(|e| e.to_string())?,
            SdpStatus::Borderline => false,
        };
        ensure(checked, || format!("{name}: returned object fails verification"))?;
        margins.push(s.margin);
    }
    ensure(audit.failures.is_empty(), || audit.failures.join("; "))?;
    ensure(audit.primal_checked > 0 && audit.farkas_checked > 0, || "no solver results were audited".into())?;
    Ok(format!(
        "margins {:.9}/{:.9}/{:.9}; suite audit: {} primal, {} Farkas, {} membership decompositions verified",
        margins[0], margins[1], margins[2], audit.primal_checked, audit.farkas_checked, membership_audits
    ))
}

fn criterion_9() -> Check {
    let t0 = Instant::now();
    let r = extendibility_threshold(Family::Werner, 2, 0.0, 1.0).map_err(|e| e.to_string())?;
    ensure(r.threshold == WERNER_K2_THRESHOLD || (r.threshold - WERNER_K2_THRESHOLD).abs() <= 1e-12, || {
        format!("threshold {} differs from the frozen {WERNER_K2_THRESHOLD}", r.threshold)
    })?;
    ensure(r.threshold >= 1.0 / 3.0 && r.threshold < 1.0, || format!("threshold {} outside [1/3, 1)", r.threshold))?;
    ensure(r.upper - r.threshold <= 1e-4, || "bracket wider than 1e-4".into())?;
    ensure((r.threshold - 2.0 / 3.0).abs() <= 1e-4, || format!("threshold {} is not 2/3 within 1e-4", r.threshold))?;
    Ok(format!(
        "threshold {} (bracket [{:.10}, {:.10}], {} steps, {} borderline), {:.2} s",
        r.threshold,
        r.threshold,
        r.upper,
        r.steps.len(),
        r.borderline_count(),
        t0.elapsed().as_secs_f64()
    ))
}

fn run(label: &str, f: impl FnOnce() -> Check) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match outcome {
        Ok(detail) => {
            println!("criterion {label}: PASS ({detail})");
            true
        }
        Err(detail) => {
            println!("criterion {label}: FAIL ({detail})");
            false
        }
    }
}

fn main() {
    let mut audit = Audit::default();
    let mut membership_audits = 0;
    let results = [
        run("1 Werner PPT threshold", criterion_1),
        run("2 BDSW shareable entanglement", || criterion_2(&mut audit)),
        run("3 pure-state monogamy", || criterion_3(&mut audit)),
        run("4 separable extendibility", || criterion_4(&mut audit)),
        run("5 LHV model from extensions", || criterion_5(&mut audit, &mut membership_audits)),
        run("6 CHSH oracles", criterion_6),
        run("7 variant equivalence and nesting", || criterion_7(&mut audit)),
        run("8 SDP unit suite and audit", || criterion_8(&audit, membership_audits)),
        run("9 Werner 2-extendibility regression", criterion_9),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
