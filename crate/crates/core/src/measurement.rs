//! Measurement procedures: labeled sets of positive operators that need not
//! sum to the identity, plus the standard POVM special case.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::exact_sum;
use crate::operator::{check_dims, HermitianOperator, PositiveOperator};
use crate::tolerance::{Tolerances, POVM_TOL, PROPORTIONALITY_TOL};

/// Non-empty text identifier of a recorded event (or, in dual procedures, of a preparation).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct OutcomeLabel(String);

impl OutcomeLabel {
    pub fn new(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(Error::EmptyLabel);
        }
        Ok(Self(label))
    }

    pub fn indexed(prefix: &str, index: usize) -> Self {
        Self(format!("{prefix}{index}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for OutcomeLabel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Self::new(s)
    }
}

impl From<OutcomeLabel> for String {
    fn from(l: OutcomeLabel) -> String {
        l.0
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Shorthand for building labels in code and tests. Panics on an empty string.
pub fn label(s: &str) -> OutcomeLabel {
    OutcomeLabel::new(s).expect("non-empty label")
}

fn check_unique<'a>(labels: impl Iterator<Item = &'a OutcomeLabel>) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(Error::DuplicateLabel(l.0.clone()));
        }
    }
    Ok(())
}

fn sum_of<'a>(dim: usize, ops: impl Iterator<Item = &'a PositiveOperator>) -> Result<PositiveOperator> {
    let sum = exact_sum(dim, ops.map(|op| op.matrix()));
    Ok(PositiveOperator::from_hermitian_unchecked(HermitianOperator::from_matrix_unchecked(sum)))
}

/// A measurement procedure `x`: outcomes `m_i` with operators `M_i`, in the
/// order given. `X = Σ M_i` is cached at construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementProcedure {
    dim: usize,
    outcomes: Vec<(OutcomeLabel, PositiveOperator)>,
    #[serde(skip)]
    sum: PositiveOperator,
}

impl MeasurementProcedure {
    pub fn new(outcomes: Vec<(OutcomeLabel, PositiveOperator)>) -> Result<Self> {
        let dim = outcomes.first().ok_or(Error::EmptyProcedure)?.1.dim();
        for (_, op) in &outcomes {
            check_dims(dim, op.dim())?;
        }
        check_unique(outcomes.iter().map(|(l, _)| l))?;
        let sum = sum_of(dim, outcomes.iter().map(|(_, op)| op))?;
        let trace = sum.trace();
        if trace <= Tolerances::current().trace {
            return Err(Error::DegenerateProcedure { trace });
        }
        Ok(Self { dim, outcomes, sum })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[(OutcomeLabel, PositiveOperator)] {
        &self.outcomes
    }

    pub fn labels(&self) -> impl Iterator<Item = &OutcomeLabel> {
        self.outcomes.iter().map(|(l, _)| l)
    }

    pub fn operator(&self, label: &OutcomeLabel) -> Result<&PositiveOperator> {
        self.outcomes
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, op)| op)
            .ok_or_else(|| Error::UnknownLabel(label.0.clone()))
    }

    /// X = Σ_i M_i
    pub fn procedure_sum(&self) -> &PositiveOperator {
        &self.sum
    }

    fn selection(&self, labels: &[OutcomeLabel]) -> Result<HashSet<OutcomeLabel>> {
        if labels.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut set = HashSet::new();
        for l in labels {
            self.operator(l)?;
            set.insert(l.clone());
        }
        Ok(set)
    }

    /// Replaces the selected outcomes by a single outcome whose operator is
    /// their sum. The merged outcome takes the position of the first selected
    /// outcome.
    pub fn merge_outcomes(&self, labels: &[OutcomeLabel], new_label: OutcomeLabel) -> Result<Self> {
        let selected = self.selection(labels)?;
        if self.labels().any(|l| *l == new_label && !selected.contains(l)) {
            return Err(Error::LabelCollision(new_label.0));
        }
        let merged = sum_of(
            self.dim,
            self.outcomes.iter().filter(|(l, _)| selected.contains(l)).map(|(_, op)| op),
        )?;
        let mut outcomes = Vec::with_capacity(self.outcomes.len() + 1 - selected.len());
        let mut merged = Some(merged);
        for (l, op) in &self.outcomes {
            if selected.contains(l) {
                if let Some(m) = merged.take() {
                    outcomes.push((new_label.clone(), m));
                }
            } else {
                outcomes.push((l.clone(), op.clone()));
            }
        }
        Self::new(outcomes)
    }

    /// Keeps only the recorded outcomes (post-selection), preserving order.
    pub fn restrict(&self, recorded: &[OutcomeLabel]) -> Result<Self> {
        let selected = self.selection(recorded)?;
        let outcomes: Vec<_> = self.outcomes.iter().filter(|(l, _)| selected.contains(l)).cloned().collect();
        Self::new(outcomes)
    }

    /// `Some(K)` with `K = Tr(X)/d` when `X` is proportional to the identity.
    ///
    /// The max-abs test is relative to `max(1, K)` so that uniform scaling of
    /// all outcomes does not change the verdict.
    pub fn is_standard(&self) -> Option<f64> {
        let k = self.sum.trace() / self.dim as f64;
        (self.proportionality_deviation(k) <= PROPORTIONALITY_TOL * k.max(1.0)).then_some(k)
    }

    fn proportionality_deviation(&self, k: f64) -> f64 {
        self.sum.matrix().max_abs_diff(HermitianOperator::identity(self.dim).scale(k).matrix())
    }

    /// E_i = M_i / K for a procedure with X = K I.
    pub fn to_povm(&self) -> Result<StandardPOVM> {
        let Some(k) = self.is_standard() else {
            let k = self.sum.trace() / self.dim as f64;
            return Err(Error::NonStandardProcedure { deviation: self.proportionality_deviation(k) });
        };
        let effects = self
            .outcomes
            .iter()
            .map(|(l, op)| Ok((l.clone(), op.scale(1.0 / k)?)))
            .collect::<Result<Vec<_>>>()?;
        StandardPOVM::new(effects)
    }

    /// Every M_i multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidArgument(format!("scale factor {c} must be finite and > 0")));
        }
        let outcomes = self
            .outcomes
            .iter()
            .map(|(l, op)| Ok((l.clone(), op.scale(c)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(outcomes)
    }
}

/// A complete set of effects: Σ E_i = I and each E_i ≤ I.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StandardPOVM {
    dim: usize,
    effects: Vec<(OutcomeLabel, PositiveOperator)>,
}

impl StandardPOVM {
    pub fn new(effects: Vec<(OutcomeLabel, PositiveOperator)>) -> Result<Self> {
        let dim = effects.first().ok_or(Error::EmptyProcedure)?.1.dim();
        for (_, e) in &effects {
            check_dims(dim, e.dim())?;
        }
        check_unique(effects.iter().map(|(l, _)| l))?;
        let sum = sum_of(dim, effects.iter().map(|(_, e)| e))?;
        let deviation = sum.matrix().max_abs_diff(HermitianOperator::identity(dim).matrix());
        if deviation > POVM_TOL {
            return Err(Error::NotComplete { deviation });
        }
        for (_, e) in &effects {
            let max_eigenvalue = e.max_eigenvalue()?;
            if max_eigenvalue > 1.0 + POVM_TOL {
                return Err(Error::NotAnEffect { max_eigenvalue });
            }
        }
        Ok(Self { dim, effects })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[(OutcomeLabel, PositiveOperator)] {
        &self.effects
    }

    pub fn labels(&self) -> impl Iterator<Item = &OutcomeLabel> {
        self.effects.iter().map(|(l, _)| l)
    }

    pub fn effect(&self, label: &OutcomeLabel) -> Result<&PositiveOperator> {
        self.effects
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, e)| e)
            .ok_or_else(|| Error::UnknownLabel(label.0.clone()))
    }

    pub fn as_procedure(&self) -> MeasurementProcedure {
        MeasurementProcedure::new(self.effects.clone()).expect("a POVM has Tr(X) = d > 0")
    }
}
