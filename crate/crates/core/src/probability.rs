//! The general probability law p(m_i|s,x) = Tr(M_i ρ) / Tr(X ρ) and its
//! Bayesian and retrodictive companions.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{MeasurementProcedure, OutcomeLabel, StandardPOVM};
use crate::operator::{check_dims, trace_product, DensityOperator, PositiveOperator};
use crate::tolerance::{Tolerances, POVM_TOL, PROBABILITY_SLACK};

/// Preparations share the label type with outcomes; the duality construction
/// turns one into the other.
pub type PreparationLabel = OutcomeLabel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleEntry {
    pub label: PreparationLabel,
    pub prior: f64,
    pub state: DensityOperator,
}

/// Possible preparations `s_k` with priors `p_k` and states `ρ_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreparationEnsemble {
    dim: usize,
    entries: Vec<EnsembleEntry>,
    #[serde(skip)]
    average: DensityOperator,
}

impl PreparationEnsemble {
    /// Priors must be non-negative and sum to one within `tau_tr`; they are
    /// stored renormalized to an exact sum.
    pub fn new(entries: Vec<(PreparationLabel, f64, DensityOperator)>) -> Result<Self> {
        let dim = entries.first().ok_or(Error::EmptyProcedure)?.2.dim();
        let mut seen = HashSet::new();
        for (label, prior, state) in &entries {
            check_dims(dim, state.dim())?;
            if !(prior.is_finite() && *prior >= 0.0) {
                return Err(Error::InvalidPrior(format!("prior of `{label}` is {prior}")));
            }
            if !seen.insert(label) {
                return Err(Error::DuplicateLabel(label.to_string()));
            }
        }
        let total: f64 = entries.iter().map(|(_, p, _)| p).sum();
        if (total - 1.0).abs() > Tolerances::current().trace {
            return Err(Error::InvalidPrior(format!("priors sum to {total}")));
        }
        let entries: Vec<EnsembleEntry> = entries
            .into_iter()
            .map(|(label, prior, state)| EnsembleEntry { label, prior: prior / total, state })
            .collect();
        let mut acc = PositiveOperator::zeros(dim);
        for e in &entries {
            acc = acc.add(&e.state.scale(e.prior)?)?;
        }
        let average = DensityOperator::from_positive(acc)?;
        Ok(Self { dim, entries, average })
    }

    /// Single preparation with prior 1.
    pub fn single(label: PreparationLabel, state: DensityOperator) -> Self {
        Self::new(vec![(label, 1.0, state)]).expect("a single density operator is a valid ensemble")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[EnsembleEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &PreparationLabel> {
        self.entries.iter().map(|e| &e.label)
    }
}

/// ρ = Σ_k p_k ρ_k
pub fn average_state(e: &PreparationEnsemble) -> &DensityOperator {
    &e.average
}

/// Ordered label → probability map.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LabeledDistribution {
    entries: Vec<(OutcomeLabel, f64)>,
}

impl LabeledDistribution {
    pub fn new(entries: Vec<(OutcomeLabel, f64)>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[(OutcomeLabel, f64)] {
        &self.entries
    }

    pub fn get(&self, label: &OutcomeLabel) -> Option<f64> {
        self.entries.iter().find(|(l, _)| l == label).map(|(_, p)| *p)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.values().sum()
    }

    /// Max pointwise difference; labels must agree in order.
    pub fn max_abs_diff(&self, other: &LabeledDistribution) -> Result<f64> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::DimensionMismatch { expected: self.entries.len(), found: other.entries.len() });
        }
        let mut gap: f64 = 0.0;
        for ((la, pa), (lb, pb)) in self.entries.iter().zip(&other.entries) {
            if la != lb {
                return Err(Error::UnknownLabel(lb.to_string()));
            }
            gap = gap.max((pa - pb).abs());
        }
        Ok(gap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityReport {
    pub probabilities: LabeledDistribution,
    /// Tr(X ρ)
    pub denominator: f64,
    /// Whether X ∝ I held.
    pub standard: bool,
    pub k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorEntry {
    pub label: PreparationLabel,
    pub posterior: f64,
    pub likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorReport {
    pub entries: Vec<PosteriorEntry>,
    /// Tr(X ρ̄)
    pub denominator: f64,
}

impl PosteriorReport {
    pub fn posterior(&self, label: &PreparationLabel) -> Option<f64> {
        self.entries.iter().find(|e| &e.label == label).map(|e| e.posterior)
    }

    pub fn posteriors(&self) -> LabeledDistribution {
        LabeledDistribution::new(self.entries.iter().map(|e| (e.label.clone(), e.posterior)).collect())
    }
}

/// Clamps a computed probability to [0, 1] after checking that any excursion
/// is round-off.
pub(crate) fn clamp_probability(raw: f64) -> Result<f64> {
    if !raw.is_finite() || !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&raw) {
        return Err(Error::InternalConsistency(format!("probability {raw} outside [0, 1]")));
    }
    Ok(raw.clamp(0.0, 1.0))
}

fn floor() -> f64 {
    Tolerances::current().denominator
}

/// p(m|s,x) = Tr(M_m ρ) / Tr(X ρ)
pub fn general_probability(x: &MeasurementProcedure, rho: &DensityOperator, m: &OutcomeLabel) -> Result<f64> {
    let op = x.operator(m)?;
    let denominator = trace_product(x.procedure_sum(), rho)?;
    if denominator <= floor() {
        return Err(Error::IncompatibleState { denominator });
    }
    clamp_probability(trace_product(op, rho)? / denominator)
}

/// Applies the general law to every outcome of `x`.
pub fn general_distribution(x: &MeasurementProcedure, rho: &DensityOperator) -> Result<ProbabilityReport> {
    check_dims(x.dim(), rho.dim())?;
    let denominator = trace_product(x.procedure_sum(), rho)?;
    if denominator <= floor() {
        return Err(Error::IncompatibleState { denominator });
    }
    let probabilities = x
        .outcomes()
        .iter()
        .map(|(l, op)| Ok((l.clone(), clamp_probability(trace_product(op, rho)? / denominator)?)))
        .collect::<Result<Vec<_>>>()?;
    let k = x.is_standard();
    Ok(ProbabilityReport {
        probabilities: LabeledDistribution::new(probabilities),
        denominator,
        standard: k.is_some(),
        k,
    })
}

/// P(s_k|x) = p_k Tr(X ρ_k) / Tr(X ρ̄) and the likelihood l(s_k|x) = Tr(X ρ_k) / Tr(X ρ̄).
pub fn posterior(e: &PreparationEnsemble, x: &MeasurementProcedure) -> Result<PosteriorReport> {
    check_dims(e.dim(), x.dim())?;
    let big_x = x.procedure_sum();
    let denominator = trace_product(big_x, average_state(e))?;
    if denominator <= floor() {
        return Err(Error::IncompatibleEnsemble { denominator });
    }
    let entries = e
        .entries()
        .iter()
        .map(|entry| {
            let likelihood = trace_product(big_x, &entry.state)? / denominator;
            if !(likelihood.is_finite() && likelihood >= -PROBABILITY_SLACK) {
                return Err(Error::InternalConsistency(format!("likelihood {likelihood} is negative")));
            }
            let likelihood = likelihood.max(0.0);
            Ok(PosteriorEntry {
                label: entry.label.clone(),
                posterior: clamp_probability(entry.prior * likelihood)?,
                likelihood,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorReport { entries, denominator })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BayesCheck {
    /// p(m|ρ̄, x)
    pub lhs: f64,
    /// Σ_k p(m|ρ_k, x) P(s_k|x)
    pub rhs: f64,
}

impl BayesCheck {
    pub fn gap(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Evaluates both sides of p(m|ρ̄,x) = Σ_k p(m|ρ_k,x) P(s_k|x).
///
/// Preparations with Tr(X ρ_k) at or below the denominator floor contribute
/// zero (their posterior vanishes too).
pub fn bayes_consistency(e: &PreparationEnsemble, x: &MeasurementProcedure, m: &OutcomeLabel) -> Result<BayesCheck> {
    let post = posterior(e, x)?;
    let lhs = general_probability(x, average_state(e), m)?;
    let mut rhs = 0.0;
    for (entry, p) in e.entries().iter().zip(&post.entries) {
        match general_probability(x, &entry.state, m) {
            Ok(prob) => rhs += prob * p.posterior,
            Err(Error::IncompatibleState { .. }) => {}
            Err(other) => return Err(other),
        }
    }
    Ok(BayesCheck { lhs, rhs })
}

/// P(s_k|m_j) = p_k Tr(M_j ρ_k) / Tr(M_j ρ̄)
pub fn retrodict(e: &PreparationEnsemble, m_j: &PositiveOperator) -> Result<LabeledDistribution> {
    check_dims(e.dim(), m_j.dim())?;
    let denominator = trace_product(m_j, average_state(e))?;
    if denominator <= floor() {
        return Err(Error::OutcomeImpossible { denominator });
    }
    let entries = e
        .entries()
        .iter()
        .map(|entry| {
            let p = entry.prior * trace_product(m_j, &entry.state)? / denominator;
            Ok((entry.label.clone(), clamp_probability(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledDistribution::new(entries))
}

/// The state M_j / Tr(M_j) assigned backward from an observed outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RetrodictiveState(DensityOperator);

impl RetrodictiveState {
    pub fn density(&self) -> &DensityOperator {
        &self.0
    }
}

impl std::ops::Deref for RetrodictiveState {
    type Target = DensityOperator;
    fn deref(&self) -> &DensityOperator {
        &self.0
    }
}

pub fn retrodictive_state(m_j: &PositiveOperator) -> Result<RetrodictiveState> {
    DensityOperator::normalized(m_j).map(RetrodictiveState)
}

/// Retrodiction computed through the predictive law with roles swapped: the
/// retrodictive state plays the state and `p_k ρ_k` play the outcome
/// operators. Outcomes follow ensemble order.
pub fn retrodict_via_duality(e: &PreparationEnsemble, m_j: &PositiveOperator) -> Result<LabeledDistribution> {
    check_dims(e.dim(), m_j.dim())?;
    let impossible = trace_product(m_j, average_state(e))?;
    if impossible <= floor() {
        return Err(Error::OutcomeImpossible { denominator: impossible });
    }
    let rho_retr = retrodictive_state(m_j)?;
    let dual = MeasurementProcedure::new(
        e.entries()
            .iter()
            .map(|entry| Ok((entry.label.clone(), entry.state.scale(entry.prior)?)))
            .collect::<Result<Vec<_>>>()?,
    )?;
    match general_distribution(&dual, &rho_retr) {
        Ok(report) => Ok(report.probabilities),
        Err(Error::IncompatibleState { denominator }) => Err(Error::OutcomeImpossible { denominator }),
        Err(other) => Err(other),
    }
}

fn povm_index(povm: &StandardPOVM, effect: &PositiveOperator) -> Result<usize> {
    check_dims(povm.dim(), effect.dim())?;
    povm.effects()
        .iter()
        .position(|(_, e)| e.matrix().max_abs_diff(effect.matrix()) <= POVM_TOL)
        .ok_or(Error::EffectNotInPovm)
}

/// Probability of a shared effect computed in two POVMs, each time as
/// 1 − Σ(probabilities of the other effects).
pub fn born_noncontextuality_check(
    effect: &PositiveOperator,
    povm_a: &StandardPOVM,
    povm_b: &StandardPOVM,
    rho: &DensityOperator,
) -> Result<(f64, f64)> {
    let complement = |povm: &StandardPOVM| -> Result<f64> {
        let idx = povm_index(povm, effect)?;
        let mut others = 0.0;
        for (i, (_, e)) in povm.effects().iter().enumerate() {
            if i != idx {
                others += trace_product(e, rho)?;
            }
        }
        clamp_probability(1.0 - others)
    };
    Ok((complement(povm_a)?, complement(povm_b)?))
}
