//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use genprob::frame::CountingFrame;
use genprob::frame::VALIDATION_PROBES;
use genprob::prelude::*;
use genprob::random::{
    random_density_with, random_ensemble_with, random_positive_with, random_povm_with, random_procedure_with,
    substream,
};
use genprob::simulator::{post_selection_scenario, run, SimulationReport};
use rand::Rng;

type Outcome = std::result::Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let detail = f()?;
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        ensure(elapsed < limit, || format!("{detail}; took {elapsed:.2?}, limit {limit:.0?}"))?;
    }
    Ok(format!("{detail}; {elapsed:.2?}"))
}

fn raw_average(e: &PreparationEnsemble) -> Matrix {
    let d = e.dim();
    let mut out = Matrix::zeros(d);
    for entry in e.entries() {
        out = &out + &entry.state.matrix().scale(entry.prior);
    }
    out
}

fn born_reduction() -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..1000u64 {
        let mut rng = substream(101, t);
        let d = 2 + (t % 7) as usize;
        let n = rng.random_range(2..=5);
        let povm = random_povm_with(d, n, &mut rng);
        let rho = random_density_with(d, &mut rng);
        let report = general_distribution(&povm.as_procedure(), &rho).map_err(|e| e.to_string())?;
        ensure(report.standard, || format!("trial {t}: complete POVM not flagged standard"))?;
        for (label, effect) in povm.effects() {
            let born = tr_ab(effect.matrix(), rho.matrix());
            worst = worst.max((report.probabilities.get(label).unwrap() - born).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max |p − Tr(Eρ)| = {worst:.3e}"))?;
    Ok(format!("1000 POVMs, d 2..8, max dev {worst:.2e}"))
}

/// The two fixed cases first, then random procedures with random ensembles.
fn monte_carlo_scenarios() -> Vec<(PreparationEnsemble, MeasurementProcedure)> {
    let x_exact = MeasurementProcedure::new(vec![
        (label("m0"), projector(&ket(2, 0))),
        (label("m1"), projector(&plus())),
    ])
    .unwrap();
    let mut out = vec![
        (PreparationEnsemble::single(label("s0"), DensityOperator::pure(&ket(2, 0))), x_exact.clone()),
        (
            PreparationEnsemble::new(vec![
                (label("s0"), 0.5, DensityOperator::pure(&ket(2, 0))),
                (label("s1"), 0.5, DensityOperator::pure(&plus())),
            ])
            .unwrap(),
            x_exact,
        ),
    ];
    for i in 2..20u64 {
        let mut rng = substream(202, i);
        let d = rng.random_range(2..=4);
        let e = random_ensemble_with(d, rng.random_range(2..=3), &mut rng);
        let x = random_procedure_with(d, rng.random_range(2..=3), &mut rng);
        out.push((e, x));
    }
    out
}

fn simulate_all() -> std::result::Result<Vec<SimulationReport>, String> {
    monte_carlo_scenarios()
        .into_iter()
        .enumerate()
        .map(|(i, (e, x))| {
            let sc = post_selection_scenario(e, &x, 100_000, 7000 + i as u64).map_err(|e| e.to_string())?;
            run(&sc).map_err(|e| e.to_string())
        })
        .collect()
}

fn general_law_monte_carlo() -> Outcome {
    let scenarios = monte_carlo_scenarios();
    let reports = simulate_all()?;
    let mut worst_z: f64 = 0.0;
    for (i, ((e, x), report)) in scenarios.iter().zip(&reports).enumerate() {
        ensure(!report.inconclusive, || format!("scenario {i} inconclusive"))?;
        let ops: Vec<&Matrix> = x.outcomes().iter().map(|(_, m)| m.matrix()).collect();
        let rho_bar = raw_average(e);
        for (idx, (l, _)) in x.outcomes().iter().enumerate() {
            let est = report.outcome_frequencies.iter().find(|f| &f.label == l).unwrap();
            let analytic = general_law(&ops, idx, &rho_bar);
            let gap = (est.frequency - analytic).abs();
            worst_z = worst_z.max(gap / est.stderr);
            ensure(gap <= 4.0 * est.stderr, || {
                format!("scenario {i} p({l}): gap {gap:.3e} > 4·{:.3e}", est.stderr)
            })?;
        }
    }
    let exact = general_probability(&scenarios[0].1, average_state(&scenarios[0].0), &label("m0"))
        .map_err(|e| e.to_string())?;
    ensure((exact - 2.0 / 3.0).abs() <= 1e-15, || format!("exact case gives {exact}, expected 2/3"))?;
    let m0 = &reports[0].outcome_frequencies[0];
    ensure((m0.frequency - 2.0 / 3.0).abs() <= 4.0 * m0.stderr, || {
        format!("exact case p̂(m0) = {} vs 2/3", m0.frequency)
    })?;
    Ok(format!("20 scenarios × 1e5 trials, max z {worst_z:.2}, exact case p̂ = {:.5}", m0.frequency))
}

fn posterior_likelihood() -> Outcome {
    let scenarios = monte_carlo_scenarios();
    let reports = simulate_all()?;
    let mut worst_z: f64 = 0.0;
    for (i, ((e, x), report)) in scenarios.iter().zip(&reports).enumerate() {
        let priors: Vec<f64> = e.entries().iter().map(|s| s.prior).collect();
        let states: Vec<&Matrix> = e.entries().iter().map(|s| s.state.matrix()).collect();
        let ops: Vec<&Matrix> = x.outcomes().iter().map(|(_, m)| m.matrix()).collect();
        let expected = posterior_oracle(&priors, &states, &sum_of(&ops));
        for (k, est) in report.preparation_frequencies.iter().enumerate() {
            let gap = (est.frequency - expected[k]).abs();
            worst_z = worst_z.max(gap / est.stderr);
            ensure(gap <= 4.0 * est.stderr, || format!("scenario {i} P({}|x): gap {gap:.3e}", est.label))?;
        }
        let library = posterior(e, x).map_err(|e| e.to_string())?;
        for (k, entry) in library.entries.iter().enumerate() {
            ensure((entry.posterior - expected[k]).abs() <= 1e-12, || {
                format!("scenario {i}: posterior() {} vs oracle {}", entry.posterior, expected[k])
            })?;
        }
    }
    let mut worst_std: f64 = 0.0;
    for t in 0..200u64 {
        let mut rng = substream(303, t);
        let d = rng.random_range(1..=6);
        let e = random_ensemble_with(d, rng.random_range(1..=4), &mut rng);
        let k = rng.random_range(0.01..100.0);
        let x = random_povm_with(d, rng.random_range(1..=4), &mut rng).as_procedure().scaled(k).unwrap();
        let post = posterior(&e, &x).map_err(|e| e.to_string())?;
        for (entry, prep) in post.entries.iter().zip(e.entries()) {
            worst_std = worst_std.max((entry.posterior - prep.prior).abs());
        }
    }
    ensure(worst_std <= 1e-12, || format!("X ∝ I posterior deviates from prior by {worst_std:.3e}"))?;
    Ok(format!("max z {worst_z:.2}; X ∝ I max |P − p| {worst_std:.2e}"))
}

fn bayes_decomposition() -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..1000u64 {
        let mut rng = substream(404, t);
        let d = rng.random_range(1..=8);
        let e = random_ensemble_with(d, rng.random_range(1..=5), &mut rng);
        let n = rng.random_range(1..=5);
        let x = random_procedure_with(d, n, &mut rng);
        let m = OutcomeLabel::indexed("m", rng.random_range(0..n));
        let check = bayes_consistency(&e, &x, &m).map_err(|e| e.to_string())?;
        let ops: Vec<&Matrix> = x.outcomes().iter().map(|(_, m)| m.matrix()).collect();
        let oracle_lhs = general_law(&ops, m_index(&x, &m), &raw_average(&e));
        worst = worst.max(check.gap()).max((check.lhs - oracle_lhs).abs());
    }
    ensure(worst <= 1e-12, || format!("max Bayes gap {worst:.3e}"))?;
    Ok(format!("1000 triples, max gap {worst:.2e}"))
}

fn m_index(x: &MeasurementProcedure, m: &OutcomeLabel) -> usize {
    x.labels().position(|l| l == m).unwrap()
}

fn retrodiction_duality() -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..1000u64 {
        let mut rng = substream(505, t);
        let d = rng.random_range(1..=8);
        let e = random_ensemble_with(d, rng.random_range(1..=5), &mut rng);
        let m = random_positive_with(d, &mut rng);
        let direct = retrodict(&e, &m).map_err(|e| e.to_string())?;
        let dual = retrodict_via_duality(&e, &m).map_err(|e| e.to_string())?;
        worst = worst.max(direct.max_abs_diff(&dual).map_err(|e| e.to_string())?);
    }
    ensure(worst <= 1e-12, || format!("max discrepancy {worst:.3e}"))?;
    let e = PreparationEnsemble::new(vec![
        (label("s0"), 0.5, DensityOperator::pure(&ket(2, 0))),
        (label("s1"), 0.5, DensityOperator::pure(&plus())),
    ])
    .unwrap();
    let r = retrodict(&e, &projector(&ket(2, 0))).map_err(|e| e.to_string())?;
    let (a, b) = (r.get(&label("s0")).unwrap(), r.get(&label("s1")).unwrap());
    ensure((a - 2.0 / 3.0).abs() <= 1e-12 && (b - 1.0 / 3.0).abs() <= 1e-12, || {
        format!("{{|0>,|+>}} case gives {{{a}, {b}}}")
    })?;
    Ok(format!("1000 instances, max discrepancy {worst:.2e}; {{|0>,|+>}} → {{{a:.12}, {b:.12}}}"))
}

fn frame_reconstruction() -> Outcome {
    let (mut worst_f, mut worst_eig): (f64, f64) = (0.0, f64::INFINITY);
    for d in 2..=8usize {
        for t in 0..100u64 {
            let mut rng = substream(606, (d as u64) << 32 | t);
            let hidden = random_positive_with(d, &mut rng);
            let w = CountingFrame::new(HiddenFrame::new(hidden.clone()));
            let res = reconstruct(&w).map_err(|e| e.to_string())?;
            ensure(res.queries == d * d, || format!("d={d}: {} reconstruction queries", res.queries))?;
            ensure(w.count() == d * d + VALIDATION_PROBES, || format!("d={d}: {} frame calls", w.count()))?;
            worst_f = worst_f.max(res.r_hat.matrix().frobenius_diff(hidden.matrix()));
            worst_eig = worst_eig.min(positivity_of_reconstruction(&res).map_err(|e| e.to_string())?);
        }
    }
    ensure(worst_f <= 1e-8, || format!("max ‖R_hat − R‖_F = {worst_f:.3e}"))?;
    ensure(worst_eig >= -1e-10, || format!("min eigenvalue {worst_eig:.3e}"))?;
    Ok(format!("700 trials, max ‖ΔR‖_F {worst_f:.2e}, min eigenvalue {worst_eig:.2e}"))
}

fn uniqueness_lemma() -> Outcome {
    let mut rng = substream(707, 0);
    let r0 = random_positive_with(2, &mut rng).into_hermitian();
    let probe_basis = UnitaryOperator::from_columns(&[
        StateVector::pair_superposition(2, 0, 1, c(0.0, 1.0)),
        StateVector::pair_superposition(2, 0, 1, c(0.0, -1.0)),
    ])
    .unwrap();
    let mut lines = Vec::new();
    for delta in [1e-6, 1e-3] {
        let mut m = r0.matrix().clone();
        m[(0, 1)] += c(0.0, delta);
        m[(1, 0)] += c(0.0, -delta);
        let r1 = HermitianOperator::new(m).map_err(|e| e.to_string())?;
        let gap = uniqueness_check(&r0, &r1, std::slice::from_ref(&probe_basis)).map_err(|e| e.to_string())?;
        ensure((gap - delta).abs() <= 1e-12, || format!("δ={delta:e}: gap {gap:e}"))?;
        lines.push(format!("δ={delta:e} gap {gap:.6e}"));
    }
    let same = uniqueness_check(&r0, &r0.clone(), &genprob::frame::polarization_bases(2)).map_err(|e| e.to_string())?;
    ensure(same == 0.0, || format!("equal operators give gap {same:e}"))?;
    Ok(format!("{}; equal → 0", lines.join(", ")))
}

fn merging_invariance() -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..500u64 {
        let mut rng = substream(808, t);
        let d = rng.random_range(1..=6);
        let n = rng.random_range(3..=6);
        let x = random_procedure_with(d, n, &mut rng);
        let rho = random_density_with(d, &mut rng);
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        let pair = [OutcomeLabel::indexed("m", a), OutcomeLabel::indexed("m", b)];
        let merged = x.merge_outcomes(&pair, label("merged")).map_err(|e| e.to_string())?;
        let before = general_distribution(&x, &rho).map_err(|e| e.to_string())?.probabilities;
        let after = general_distribution(&merged, &rho).map_err(|e| e.to_string())?.probabilities;
        for (l, p) in before.entries() {
            if pair.contains(l) {
                continue;
            }
            worst = worst.max((after.get(l).unwrap() - p).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max change {worst:.3e}"))?;
    Ok(format!("500 procedures with 3..6 outcomes, max change {worst:.2e}"))
}

fn scaling_invariance() -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..300u64 {
        let mut rng = substream(909, t);
        let d = rng.random_range(1..=6);
        let x = random_procedure_with(d, rng.random_range(1..=5), &mut rng);
        let rho = random_density_with(d, &mut rng);
        let base = general_distribution(&x, &rho).map_err(|e| e.to_string())?.probabilities;
        for k in [1e-3, 1.0, 1e3] {
            let scaled = general_distribution(&x.scaled(k).unwrap(), &rho).map_err(|e| e.to_string())?;
            worst = worst.max(base.max_abs_diff(&scaled.probabilities).map_err(|e| e.to_string())?);
        }
    }
    ensure(worst <= 1e-12, || format!("max change {worst:.3e}"))?;
    Ok(format!("300 procedures × c ∈ {{1e-3, 1, 1e3}}, max change {worst:.2e}"))
}

fn noncontextuality() -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..200u64 {
        let mut rng = substream(1010, t);
        let d = rng.random_range(2..=6);
        let e = random_effect(d, &mut rng);
        let rest = complement(&e);
        let (a1, a2) = split(&rest, &random_effect(d, &mut rng));
        let (b1, b2) = split(&rest, &random_effect(d, &mut rng));
        let povm_a = StandardPOVM::new(vec![(label("e"), e.clone()), (label("a1"), a1), (label("a2"), a2)])
            .map_err(|e| e.to_string())?;
        let povm_b = StandardPOVM::new(vec![(label("b1"), b1), (label("e"), e.clone()), (label("b2"), b2)])
            .map_err(|e| e.to_string())?;
        let rho = random_density_with(d, &mut rng);
        let (pa, pb) = born_noncontextuality_check(&e, &povm_a, &povm_b, &rho).map_err(|e| e.to_string())?;
        let oracle = tr_ab(e.matrix(), rho.matrix());
        worst = worst.max((pa - pb).abs()).max((pa - oracle).abs());
    }
    ensure(worst <= 1e-12, || format!("max disagreement {worst:.3e}"))?;
    Ok(format!("200 POVM pairs, max disagreement {worst:.2e}"))
}

fn heralding() -> Outcome {
    let signal = StandardPOVM::new(vec![
        (label("m0"), projector(&ket(2, 0))),
        (label("m1"), projector(&ket(2, 1))),
    ])
    .unwrap();
    let sc = genprob::simulator::herald_scenario(&signal, bell_phi_plus(), &projector(&ket(2, 1)), 100_000, 11)
        .map_err(|e| e.to_string())?;
    let report = run(&sc).map_err(|e| e.to_string())?;
    ensure(!report.inconclusive, || "no heralded trials".into())?;
    for (est, analytic) in report.outcome_frequencies.iter().zip([0.0, 1.0]) {
        ensure((est.frequency - analytic).abs() <= 4.0 * est.stderr, || {
            format!("p̂({}) = {} vs {analytic}", est.label, est.frequency)
        })?;
    }
    Ok(format!(
        "{} heralded of 1e5, p̂ = {{{}, {}}}",
        report.accepted_count, report.outcome_frequencies[0].frequency, report.outcome_frequencies[1].frequency
    ))
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("AC1  Born reduction", Some(Duration::from_secs(10)), born_reduction),
        ("AC2  general-law Monte-Carlo", Some(Duration::from_secs(30)), general_law_monte_carlo),
        ("AC3  posterior and likelihood", None, posterior_likelihood),
        ("AC4  Bayes decomposition", None, bayes_decomposition),
        ("AC5  retrodiction duality", None, retrodiction_duality),
        ("AC6  frame reconstruction", None, frame_reconstruction),
        ("AC7  uniqueness probe", None, uniqueness_lemma),
        ("AC8  merging invariance", None, merging_invariance),
        ("AC9  scaling invariance", None, scaling_invariance),
        ("AC10 non-contextuality", None, noncontextuality),
        ("AC11 heralding", None, heralding),
    ];
    let mut failed = 0;
    for (name, limit, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(|| timed(limit, f)))
            .unwrap_or_else(|_| Err("panicked".to_owned()));
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all 11 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 11 criteria failed");
        ExitCode::FAILURE
    }
}
