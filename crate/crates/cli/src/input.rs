//! Scenario files.
//!
//! ```toml
//! dimension = 2
//! samples = 100000        # optional
//! seed = 1                # optional
//! observed = "m0"         # retrodict only
//! recorded = ["m0", "m1"] # simulate only, defaults to every outcome
//!
//! [[ensemble]]            # or a single [state] table
//! label = "s0"
//! prior = 0.5
//! ket = [1, 0]            # entries are numbers or [re, im] pairs
//!
//! [[outcomes]]
//! label = "m0"
//! matrix = [[1, 0], [0, 0]]
//! ```
//!
//! Kets are normalized and turned into projectors.

use std::fmt;
use std::ops::Range;

use genprob::prelude::*;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use toml::Spanned;

#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}, `{}`: {}", self.field, self.message),
            None => write!(f, "`{}`: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for InputError {}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawComplex {
    Real(f64),
    Pair([f64; 2]),
}

impl RawComplex {
    fn value(&self) -> C64 {
        match *self {
            RawComplex::Real(re) => C64::new(re, 0.0),
            RawComplex::Pair([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperator {
    label: Option<String>,
    prior: Option<f64>,
    ket: Option<Vec<RawComplex>>,
    matrix: Option<Vec<Vec<RawComplex>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    dimension: Spanned<usize>,
    samples: Option<u64>,
    seed: Option<u64>,
    observed: Option<Spanned<String>>,
    recorded: Option<Spanned<Vec<String>>>,
    #[serde(default)]
    ensemble: Vec<Spanned<RawOperator>>,
    state: Option<Spanned<RawOperator>>,
    #[serde(default)]
    outcomes: Vec<Spanned<RawOperator>>,
}

/// A parsed scenario file. Sections a command does not need may be absent.
#[derive(Debug, Clone)]
pub struct ScenarioFile {
    pub dimension: usize,
    pub ensemble: Option<PreparationEnsemble>,
    pub procedure: Option<MeasurementProcedure>,
    pub recorded: Option<Vec<OutcomeLabel>>,
    pub observed: Option<OutcomeLabel>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    /// `sha256:<hex>` of the file bytes.
    pub digest: String,
}

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

struct Source<'a>(&'a str);

impl Source<'_> {
    fn line_of(&self, span: Range<usize>) -> usize {
        self.0[..span.start.min(self.0.len())].matches('\n').count() + 1
    }

    fn error(&self, span: Range<usize>, field: impl Into<String>, message: impl fmt::Display) -> InputError {
        InputError { line: Some(self.line_of(span)), field: field.into(), message: message.to_string() }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, InputError> {
        let src = Source(text);
        let raw: RawFile = toml::from_str(text).map_err(|e| InputError {
            line: e.span().map(|s| src.line_of(s)),
            field: "file".into(),
            message: e.message().trim().to_owned(),
        })?;

        let d = *raw.dimension.get_ref();
        if d == 0 {
            return Err(src.error(raw.dimension.span(), "dimension", "must be at least 1"));
        }

        let ensemble = match (&raw.state, raw.ensemble.is_empty()) {
            (Some(state), false) => {
                return Err(src.error(state.span(), "state", "give either [state] or [[ensemble]], not both"));
            }
            (Some(state), true) => {
                let rho = density(&src, state, "state", d)?;
                Some(PreparationEnsemble::single(label("state"), rho))
            }
            (None, false) => Some(parse_ensemble(&src, &raw.ensemble, d)?),
            (None, true) => None,
        };

        let procedure = if raw.outcomes.is_empty() {
            None
        } else {
            let mut outcomes = Vec::with_capacity(raw.outcomes.len());
            for (i, entry) in raw.outcomes.iter().enumerate() {
                let field = format!("outcomes[{i}]");
                let l = entry_label(&src, entry, &field)?;
                outcomes.push((l, positive(&src, entry, &field, d)?));
            }
            let first = raw.outcomes[0].span();
            Some(MeasurementProcedure::new(outcomes).map_err(|e| src.error(first, "outcomes", e))?)
        };

        let known = |l: &OutcomeLabel| procedure.as_ref().is_some_and(|p| p.labels().any(|k| k == l));
        let observed = match &raw.observed {
            Some(o) => {
                let l = OutcomeLabel::new(o.get_ref().clone()).map_err(|e| src.error(o.span(), "observed", e))?;
                if !known(&l) {
                    return Err(src.error(o.span(), "observed", format!("no outcome labeled `{l}`")));
                }
                Some(l)
            }
            None => None,
        };
        let recorded = match &raw.recorded {
            Some(r) => {
                let mut labels = Vec::new();
                for s in r.get_ref() {
                    let l = OutcomeLabel::new(s.clone()).map_err(|e| src.error(r.span(), "recorded", e))?;
                    if !known(&l) {
                        return Err(src.error(r.span(), "recorded", format!("no outcome labeled `{l}`")));
                    }
                    labels.push(l);
                }
                if labels.is_empty() {
                    return Err(src.error(r.span(), "recorded", "must name at least one outcome"));
                }
                Some(labels)
            }
            None => None,
        };

        Ok(ScenarioFile {
            dimension: d,
            ensemble,
            procedure,
            recorded,
            observed,
            samples: raw.samples,
            seed: raw.seed,
            digest: digest(text.as_bytes()),
        })
    }

    pub fn require_ensemble(&self) -> Result<&PreparationEnsemble, InputError> {
        self.ensemble.as_ref().ok_or_else(|| missing("ensemble", "an [[ensemble]] or [state] section is required"))
    }

    pub fn require_procedure(&self) -> Result<&MeasurementProcedure, InputError> {
        self.procedure.as_ref().ok_or_else(|| missing("outcomes", "at least one [[outcomes]] entry is required"))
    }

    pub fn require_observed(&self) -> Result<&OutcomeLabel, InputError> {
        self.observed.as_ref().ok_or_else(|| missing("observed", "an observed outcome label is required"))
    }
}

fn missing(field: &str, message: &str) -> InputError {
    InputError { line: None, field: field.into(), message: message.into() }
}

fn parse_ensemble(src: &Source, entries: &[Spanned<RawOperator>], d: usize) -> Result<PreparationEnsemble, InputError> {
    let mut out = Vec::with_capacity(entries.len());
    for (i, entry) in entries.iter().enumerate() {
        let field = format!("ensemble[{i}]");
        let l = entry_label(src, entry, &field)?;
        let prior = entry
            .get_ref()
            .prior
            .ok_or_else(|| src.error(entry.span(), format!("{field}.prior"), "missing prior"))?;
        out.push((l, prior, density(src, entry, &field, d)?));
    }
    PreparationEnsemble::new(out).map_err(|e| src.error(entries[0].span(), "ensemble", e))
}

fn entry_label(src: &Source, entry: &Spanned<RawOperator>, field: &str) -> Result<OutcomeLabel, InputError> {
    let raw = entry.get_ref().label.clone().ok_or_else(|| src.error(entry.span(), format!("{field}.label"), "missing label"))?;
    OutcomeLabel::new(raw).map_err(|e| src.error(entry.span(), format!("{field}.label"), e))
}

enum Operator {
    Ket(StateVector),
    Matrix(Matrix),
}

fn operator(src: &Source, entry: &Spanned<RawOperator>, field: &str, d: usize) -> Result<Operator, InputError> {
    let raw = entry.get_ref();
    let err = |sub: &str, msg: String| src.error(entry.span(), format!("{field}{sub}"), msg);
    match (&raw.ket, &raw.matrix) {
        (Some(_), Some(_)) => Err(err("", "give either `ket` or `matrix`, not both".into())),
        (None, None) => Err(err("", "needs a `ket` or a `matrix`".into())),
        (Some(ket), None) => {
            if ket.len() != d {
                return Err(err(".ket", format!("has {} amplitudes, dimension is {d}", ket.len())));
            }
            let amps = ket.iter().map(RawComplex::value).collect();
            StateVector::normalized(amps).map(Operator::Ket).map_err(|e| err(".ket", e.to_string()))
        }
        (None, Some(rows)) => {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(err(".matrix", format!("must be {d}×{d}")));
            }
            let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(RawComplex::value).collect()).collect();
            Matrix::from_rows(&rows).map(Operator::Matrix).map_err(|e| err(".matrix", e.to_string()))
        }
    }
}

fn density(src: &Source, entry: &Spanned<RawOperator>, field: &str, d: usize) -> Result<DensityOperator, InputError> {
    match operator(src, entry, field, d)? {
        Operator::Ket(v) => Ok(DensityOperator::pure(&v)),
        Operator::Matrix(m) => {
            DensityOperator::new(m).map_err(|e| src.error(entry.span(), format!("{field}.matrix"), e))
        }
    }
}

fn positive(src: &Source, entry: &Spanned<RawOperator>, field: &str, d: usize) -> Result<PositiveOperator, InputError> {
    match operator(src, entry, field, d)? {
        Operator::Ket(v) => Ok(projector(&v)),
        Operator::Matrix(m) => {
            PositiveOperator::new(m).map_err(|e| src.error(entry.span(), format!("{field}.matrix"), e))
        }
    }
}
