//! Seeded prepare–measure–record Monte-Carlo with post-selection.
//!
//! Each trial draws a preparation `k ~ p_k`, then an outcome `j` of the full
//! POVM from the Born weights `Tr(E_j ρ_k)` by inverse-CDF sampling. Trials
//! whose outcome is not recorded are discarded. Trials run in fixed-size
//! batches; batch `b` draws from substream `(seed, b)`, so tallies are
//! identical in sequential and parallel mode.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{label, MeasurementProcedure, OutcomeLabel, StandardPOVM};
use crate::operator::{check_dims, check_positive, trace_product, DensityOperator, HermitianOperator, PositiveOperator};
use crate::parallel::{map_reduce_indices, ExecutionMode};
use crate::probability::{
    average_state, general_distribution, posterior, retrodict, LabeledDistribution, PreparationEnsemble,
};
use crate::random::substream;
use crate::tolerance::{POVM_TOL, PROPORTIONALITY_TOL};

pub const BATCH_SIZE: u64 = 8192;
/// Label of the sink outcome added by [`completion_of`].
pub const SINK_LABEL: &str = "⊥";
/// Label of the complementary outcome in [`herald_scenario`].
pub const NO_HERALD_LABEL: &str = "no-herald";
/// Gap threshold, in standard errors, for statistical consistency.
pub const CONSISTENCY_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub ensemble: PreparationEnsemble,
    pub full_povm: StandardPOVM,
    pub recorded: Vec<OutcomeLabel>,
    pub samples: u64,
    pub seed: u64,
}

impl Scenario {
    pub fn new(
        ensemble: PreparationEnsemble,
        full_povm: StandardPOVM,
        recorded: Vec<OutcomeLabel>,
        samples: u64,
        seed: u64,
    ) -> Result<Self> {
        check_dims(ensemble.dim(), full_povm.dim())?;
        if recorded.is_empty() {
            return Err(Error::EmptySelection);
        }
        for l in &recorded {
            full_povm.effect(l)?;
        }
        if samples == 0 {
            return Err(Error::InvalidArgument("samples must be >= 1".into()));
        }
        // order recorded labels as in the POVM, dropping repeats
        let recorded = full_povm.labels().filter(|l| recorded.contains(l)).cloned().collect();
        Ok(Self { ensemble, full_povm, recorded, samples, seed })
    }

    /// The recorded part of the full POVM as a (generally non-standard) procedure.
    pub fn restricted_procedure(&self) -> Result<MeasurementProcedure> {
        self.full_povm.as_procedure().restrict(&self.recorded)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub label: OutcomeLabel,
    pub count: u64,
    pub frequency: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub quantity: String,
    pub analytic: f64,
    pub empirical: f64,
    pub gap: f64,
    pub stderr: f64,
    /// gap / stderr
    pub z: f64,
}

impl Comparison {
    fn new(quantity: String, analytic: f64, estimate: &Estimate) -> Self {
        let gap = (estimate.frequency - analytic).abs();
        Self { quantity, analytic, empirical: estimate.frequency, gap, stderr: estimate.stderr, z: gap / estimate.stderr }
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.gap <= sigmas * self.stderr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalEstimate {
    pub outcome: OutcomeLabel,
    pub preparations: Vec<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub samples: u64,
    pub accepted_count: u64,
    /// No trial survived post-selection; all estimates are empty.
    pub inconclusive: bool,
    /// p̂(m_i) over recorded outcomes.
    pub outcome_frequencies: Vec<Estimate>,
    /// P̂(s_k | recorded).
    pub preparation_frequencies: Vec<Estimate>,
    /// P̂(s_k | m_j) for each recorded outcome that occurred.
    pub conditional_preparations: Vec<ConditionalEstimate>,
    pub analytic_comparison: Vec<Comparison>,
}

impl SimulationReport {
    /// All comparisons within `sigmas` standard errors. False when inconclusive.
    pub fn is_consistent(&self, sigmas: f64) -> bool {
        !self.inconclusive && self.analytic_comparison.iter().all(|c| c.within(sigmas))
    }

    pub fn max_z(&self) -> f64 {
        self.analytic_comparison.iter().map(|c| c.z).fold(0.0, f64::max)
    }

    pub fn comparison(&self, quantity: &str) -> Option<&Comparison> {
        self.analytic_comparison.iter().find(|c| c.quantity == quantity)
    }
}

/// Binomial plug-in standard error; a boundary estimate (count 0 or n) uses
/// the rule-of-three bound 3/n.
pub fn binomial_stderr(count: u64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    if count == 0 || count == n {
        return 3.0 / n as f64;
    }
    let p = count as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}

fn estimate(label: &OutcomeLabel, count: u64, n: u64) -> Estimate {
    Estimate { label: label.clone(), count, frequency: count as f64 / n as f64, stderr: binomial_stderr(count, n) }
}

/// Cumulative distribution with every entry from the last positive weight on
/// pinned to exactly 1.
fn cdf(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights.iter().map(|w| { acc += w; acc }).collect();
    if let Some(last) = weights.iter().rposition(|&w| w > 0.0) {
        for c in &mut out[last..] {
            *c = 1.0;
        }
    }
    out
}

fn draw(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

struct Sampler {
    prior_cdf: Vec<f64>,
    born_cdfs: Vec<Vec<f64>>,
    /// Full-POVM index → recorded index.
    recorded_slot: Vec<Option<usize>>,
    n_recorded: usize,
}

impl Sampler {
    fn new(sc: &Scenario) -> Result<Self> {
        let priors: Vec<f64> = sc.ensemble.entries().iter().map(|e| e.prior).collect();
        let mut born_cdfs = Vec::with_capacity(priors.len());
        for entry in sc.ensemble.entries() {
            let mut weights = Vec::with_capacity(sc.full_povm.len());
            for (_, e) in sc.full_povm.effects() {
                let w = trace_product(e, &entry.state)?;
                if w < -POVM_TOL {
                    return Err(Error::InternalConsistency(format!("negative Born weight {w}")));
                }
                weights.push(w.max(0.0));
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > POVM_TOL {
                return Err(Error::InternalConsistency(format!("Born weights sum to {total}")));
            }
            born_cdfs.push(cdf(&weights));
        }
        let recorded_slot = sc
            .full_povm
            .labels()
            .map(|l| sc.recorded.iter().position(|r| r == l))
            .collect();
        Ok(Self { prior_cdf: cdf(&priors), born_cdfs, recorded_slot, n_recorded: sc.recorded.len() })
    }

    /// Joint tally `[k * n_recorded + r]` of accepted trials for one batch.
    fn run_batch(&self, seed: u64, batch: u64, trials: u64) -> Vec<u64> {
        let mut rng = substream(seed, batch);
        let mut tally = vec![0u64; self.prior_cdf.len() * self.n_recorded];
        for _ in 0..trials {
            let k = draw(&self.prior_cdf, rng.random::<f64>());
            let j = draw(&self.born_cdfs[k], rng.random::<f64>());
            if let Some(r) = self.recorded_slot[j] {
                tally[k * self.n_recorded + r] += 1;
            }
        }
        tally
    }
}

pub fn run(sc: &Scenario) -> Result<SimulationReport> {
    run_with(sc, ExecutionMode::default())
}

pub fn run_with(sc: &Scenario, mode: ExecutionMode) -> Result<SimulationReport> {
    let sampler = Sampler::new(sc)?;
    let n_batches = sc.samples.div_ceil(BATCH_SIZE);
    let width = sampler.prior_cdf.len() * sampler.n_recorded;
    let tally = map_reduce_indices(
        mode,
        n_batches as usize,
        |b| {
            let b = b as u64;
            let trials = BATCH_SIZE.min(sc.samples - b * BATCH_SIZE);
            sampler.run_batch(sc.seed, b, trials)
        },
        || vec![0u64; width],
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    );
    summarize(sc, &sampler, &tally)
}

fn summarize(sc: &Scenario, sampler: &Sampler, tally: &[u64]) -> Result<SimulationReport> {
    let nr = sampler.n_recorded;
    let preps = sc.ensemble.entries();
    let accepted: u64 = tally.iter().sum();
    if accepted == 0 {
        return Ok(SimulationReport {
            samples: sc.samples,
            accepted_count: 0,
            inconclusive: true,
            outcome_frequencies: vec![],
            preparation_frequencies: vec![],
            conditional_preparations: vec![],
            analytic_comparison: vec![],
        });
    }
    let outcome_count = |r: usize| -> u64 { (0..preps.len()).map(|k| tally[k * nr + r]).sum() };
    let prep_count = |k: usize| -> u64 { tally[k * nr..(k + 1) * nr].iter().sum() };

    let outcome_frequencies: Vec<Estimate> =
        sc.recorded.iter().enumerate().map(|(r, l)| estimate(l, outcome_count(r), accepted)).collect();
    let preparation_frequencies: Vec<Estimate> =
        preps.iter().enumerate().map(|(k, e)| estimate(&e.label, prep_count(k), accepted)).collect();
    let conditional_preparations: Vec<ConditionalEstimate> = sc
        .recorded
        .iter()
        .enumerate()
        .filter(|(r, _)| outcome_count(*r) > 0)
        .map(|(r, l)| {
            let n = outcome_count(r);
            ConditionalEstimate {
                outcome: l.clone(),
                preparations: preps.iter().enumerate().map(|(k, e)| estimate(&e.label, tally[k * nr + r], n)).collect(),
            }
        })
        .collect();

    let restricted = sc.restricted_procedure()?;
    let mut analytic_comparison = Vec::new();
    let predicted = general_distribution(&restricted, average_state(&sc.ensemble))?;
    for est in &outcome_frequencies {
        let p = predicted.probabilities.get(&est.label).expect("recorded label");
        analytic_comparison.push(Comparison::new(format!("p({})", est.label), p, est));
    }
    let post = posterior(&sc.ensemble, &restricted)?;
    for (est, entry) in preparation_frequencies.iter().zip(&post.entries) {
        analytic_comparison.push(Comparison::new(format!("P({}|x)", est.label), entry.posterior, est));
    }
    for cond in &conditional_preparations {
        let retro = retrodict(&sc.ensemble, sc.full_povm.effect(&cond.outcome)?)?;
        for est in &cond.preparations {
            let p = retro.get(&est.label).expect("ensemble label");
            analytic_comparison.push(Comparison::new(format!("P({}|{})", est.label, cond.outcome), p, est));
        }
    }

    Ok(SimulationReport {
        samples: sc.samples,
        accepted_count: accepted,
        inconclusive: false,
        outcome_frequencies,
        preparation_frequencies,
        conditional_preparations,
        analytic_comparison,
    })
}

/// Embeds a procedure into a complete POVM: `E_i = M_i / λ_max(X)` plus a
/// sink outcome `E_⊥ = I − X/λ_max`. A procedure that is already a POVM is
/// kept as is with a zero sink.
pub fn completion_of(x: &MeasurementProcedure) -> Result<StandardPOVM> {
    let sink = label(SINK_LABEL);
    if x.labels().any(|l| *l == sink) {
        return Err(Error::LabelCollision(SINK_LABEL.into()));
    }
    let d = x.dim();
    let mut effects: Vec<(OutcomeLabel, PositiveOperator)>;
    if x.is_standard().is_some_and(|k| (k - 1.0).abs() <= PROPORTIONALITY_TOL) {
        effects = x.outcomes().to_vec();
        effects.push((sink, PositiveOperator::zeros(d)));
    } else {
        let big_x = x.procedure_sum();
        let lambda_max = big_x.max_eigenvalue()?;
        if !(lambda_max.is_finite() && lambda_max > 0.0) {
            return Err(Error::ZeroOperator);
        }
        effects = x
            .outcomes()
            .iter()
            .map(|(l, m)| Ok((l.clone(), m.scale(1.0 / lambda_max)?)))
            .collect::<Result<Vec<_>>>()?;
        let rest = HermitianOperator::identity(d).sub(&big_x.as_hermitian().scale(1.0 / lambda_max))?;
        effects.push((sink, check_positive(&rest)?));
    }
    StandardPOVM::new(effects)
}

/// Scenario realizing procedure `x` as post-selection on its own outcomes
/// within [`completion_of`]`(x)`.
pub fn post_selection_scenario(
    ensemble: PreparationEnsemble,
    x: &MeasurementProcedure,
    samples: u64,
    seed: u64,
) -> Result<Scenario> {
    let full = completion_of(x)?;
    Scenario::new(ensemble, full, x.labels().cloned().collect(), samples, seed)
}

/// Joint-space scenario where a herald effect on subsystem A gates the signal
/// POVM on subsystem B. Only heralded outcomes are recorded.
pub fn herald_scenario(
    signal_povm: &StandardPOVM,
    joint_state: DensityOperator,
    herald_effect: &PositiveOperator,
    samples: u64,
    seed: u64,
) -> Result<Scenario> {
    let (da, db) = (herald_effect.dim(), signal_povm.dim());
    check_dims(da * db, joint_state.dim())?;
    let max_eigenvalue = herald_effect.max_eigenvalue()?;
    if max_eigenvalue > 1.0 + POVM_TOL {
        return Err(Error::NotAnEffect { max_eigenvalue });
    }
    let no_herald = label(NO_HERALD_LABEL);
    if signal_povm.labels().any(|l| *l == no_herald) {
        return Err(Error::LabelCollision(NO_HERALD_LABEL.into()));
    }
    let mut effects: Vec<(OutcomeLabel, PositiveOperator)> =
        signal_povm.effects().iter().map(|(l, e)| (l.clone(), herald_effect.tensor(e))).collect();
    let complement = check_positive(&HermitianOperator::identity(da).sub(herald_effect)?)?;
    effects.push((no_herald, complement.tensor(&PositiveOperator::identity(db))));
    let full = StandardPOVM::new(effects)?;
    let recorded = signal_povm.labels().cloned().collect();
    Scenario::new(PreparationEnsemble::single(label("joint"), joint_state), full, recorded, samples, seed)
}

/// Bob's retrodictive distribution over Alice's preparations given his outcome.
pub fn communication_scenario(
    e: &PreparationEnsemble,
    bob_povm: &StandardPOVM,
    observed: &OutcomeLabel,
) -> Result<LabeledDistribution> {
    retrodict(e, bob_povm.effect(observed)?)
}

/// Monte-Carlo counterpart of [`communication_scenario`]: trials are
/// post-selected on `observed`, so the preparation frequencies estimate
/// P(s_k | observed).
pub fn communication_estimate(
    e: &PreparationEnsemble,
    bob_povm: &StandardPOVM,
    observed: &OutcomeLabel,
    samples: u64,
    seed: u64,
) -> Result<SimulationReport> {
    let sc = Scenario::new(e.clone(), bob_povm.clone(), vec![observed.clone()], samples, seed)?;
    run(&sc)
}
