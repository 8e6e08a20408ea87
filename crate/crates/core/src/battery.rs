//! Randomized property battery run by `genprob verify`.
//!
//! Every instance is generated from substream `(seed, stream)` where the
//! stream id encodes property, dimension and trial, so any failing case can
//! be replayed from its [`Replay`] record alone.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{
    polarization_bases, polarization_entry_bound, positivity_of_reconstruction, reconstruct, uniqueness_check,
    verify_additivity, verify_real_scaling, verify_scaling, CountingFrame, FnFrame, FrameFunction, HiddenFrame,
};
use crate::matrix::C64;
use crate::measurement::label;
use crate::operator::{trace_product, HermitianOperator, PositiveOperator};
use crate::parallel::{map_indices, ExecutionMode};
use crate::probability::{general_distribution, retrodict, retrodict_via_duality};
use crate::random::{
    random_density_with, random_ensemble_with, random_hermitian_with, random_positive_with, random_povm_with,
    random_procedure_with, substream,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Additivity,
    Scaling,
    Reconstruction,
    Uniqueness,
    Positivity,
    Duality,
    BornReduction,
    MergingInvariance,
}

impl Property {
    pub const ALL: [Property; 8] = [
        Property::Additivity,
        Property::Scaling,
        Property::Reconstruction,
        Property::Uniqueness,
        Property::Positivity,
        Property::Duality,
        Property::BornReduction,
        Property::MergingInvariance,
    ];

    pub fn threshold(self) -> f64 {
        match self {
            Property::Additivity => 1e-12,
            Property::Scaling => 1e-10,
            Property::Reconstruction => 1e-8,
            Property::Uniqueness => 1e-12,
            Property::Positivity => 1e-10,
            Property::Duality => 1e-12,
            Property::BornReduction => 1e-12,
            Property::MergingInvariance => 1e-12,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Property::Additivity => "additivity",
            Property::Scaling => "scaling",
            Property::Reconstruction => "reconstruction",
            Property::Uniqueness => "uniqueness",
            Property::Positivity => "positivity",
            Property::Duality => "duality",
            Property::BornReduction => "born_reduction",
            Property::MergingInvariance => "merging_invariance",
        }
    }

    fn index(self) -> u64 {
        Property::ALL.iter().position(|&p| p == self).expect("listed") as u64
    }
}

/// Which frame function the frame properties probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameFixture {
    /// `w(A) = Tr(A R)` for a random hidden positive `R`.
    #[default]
    Hidden,
    /// `w(A) = (Tr A)²`: non-additive, must be caught.
    TraceSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replay {
    pub property: Property,
    pub seed: u64,
    pub dim: usize,
    pub trial: usize,
    pub fixture: FrameFixture,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub property: Property,
    pub dim: usize,
    pub trials: usize,
    pub max_violation: f64,
    pub threshold: f64,
    pub passed: bool,
    /// Set when the check failed: the worst case.
    pub replay: Option<Replay>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub checks: Vec<PropertyCheck>,
}

impl BatteryReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone)]
pub struct BatteryOptions {
    pub trials: usize,
    pub mode: ExecutionMode,
    pub fixture: FrameFixture,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self { trials: 20, mode: ExecutionMode::default(), fixture: FrameFixture::Hidden }
    }
}

pub fn run_battery(seed: u64, dims: &[usize], opts: &BatteryOptions) -> Result<BatteryReport> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidArgument("dims must be a non-empty list of integers >= 1".into()));
    }
    let mut checks = Vec::new();
    for &dim in dims {
        for property in Property::ALL {
            checks.push(run_property(property, seed, dim, opts));
        }
    }
    Ok(BatteryReport { seed, dims: dims.to_vec(), checks })
}

fn run_property(property: Property, seed: u64, dim: usize, opts: &BatteryOptions) -> PropertyCheck {
    let outcomes = map_indices(opts.mode, opts.trials, |trial| {
        replay_case(&Replay { property, seed, dim, trial, fixture: opts.fixture })
    });
    let mut worst = (0.0_f64, 0usize);
    let mut error = None;
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(v) if v.is_nan() => {
                worst = (f64::INFINITY, trial);
                error.get_or_insert_with(|| "NaN violation".to_owned());
            }
            Ok(v) if v > worst.0 => worst = (v, trial),
            Ok(_) => {}
            Err(e) => {
                if error.is_none() {
                    worst = (f64::INFINITY, trial);
                    error = Some(e.to_string());
                }
            }
        }
    }
    let threshold = property.threshold();
    let passed = error.is_none() && worst.0 <= threshold;
    PropertyCheck {
        property,
        dim,
        trials: opts.trials,
        max_violation: worst.0,
        threshold,
        passed,
        replay: (!passed).then_some(Replay { property, seed, dim, trial: worst.1, fixture: opts.fixture }),
        error,
    }
}

fn case_rng(r: &Replay) -> ChaCha8Rng {
    let stream = (r.property.index() << 56) ^ ((r.dim as u64) << 32) ^ r.trial as u64;
    substream(r.seed, stream)
}

/// Re-runs one battery instance and returns its violation.
pub fn replay_case(r: &Replay) -> Result<f64> {
    let mut rng = case_rng(r);
    let d = r.dim;
    match r.property {
        Property::Additivity => with_frame(r.fixture, d, &mut rng, |w, rng| verify_additivity(w, 5, rng.random())),
        Property::Scaling => with_frame(r.fixture, d, &mut rng, |w, rng| {
            let a = random_positive_with(d, rng);
            let mut worst: f64 = 0.0;
            let (l, rr) = verify_scaling(w, &a, rng.random_range(0..20), rng.random_range(1..20))?;
            worst = worst.max((l - rr).abs());
            for c in [std::f64::consts::PI, std::f64::consts::SQRT_2, 1e-3] {
                let (l, rr) = verify_real_scaling(w, &a, c)?;
                worst = worst.max((l - rr).abs());
            }
            Ok(worst)
        }),
        Property::Reconstruction => {
            let r_hidden = random_positive_with(d, &mut rng);
            let w = CountingFrame::new(frame_for(r.fixture, r_hidden.clone()));
            let res = reconstruct(&w)?;
            if res.queries != d * d || w.count() != d * d + res.validation_queries {
                return Err(Error::InternalConsistency(format!("reconstruction used {} queries", w.count())));
            }
            // residual carries the frame-vs-model mismatch for non-linear fixtures
            Ok(res.r_hat.matrix().frobenius_diff(r_hidden.matrix()).max(res.residual))
        }
        Property::Positivity => {
            let r_hidden = random_positive_with(d, &mut rng);
            let res = reconstruct(&frame_for(r.fixture, r_hidden))?;
            Ok((-positivity_of_reconstruction(&res)?).max(0.0))
        }
        Property::Uniqueness => uniqueness_case(d, &mut rng),
        Property::Duality => {
            let n = rng.random_range(1..=4);
            let e = random_ensemble_with(d, n, &mut rng);
            let m = random_positive_with(d, &mut rng);
            retrodict(&e, &m)?.max_abs_diff(&retrodict_via_duality(&e, &m)?)
        }
        Property::BornReduction => {
            let n = rng.random_range(1..=5);
            let povm = random_povm_with(d, n, &mut rng);
            let rho = random_density_with(d, &mut rng);
            let report = general_distribution(&povm.as_procedure(), &rho)?;
            let mut worst: f64 = 0.0;
            for ((_, e), p) in povm.effects().iter().zip(report.probabilities.values()) {
                worst = worst.max((p - trace_product(e, &rho)?).abs());
            }
            Ok(worst)
        }
        Property::MergingInvariance => {
            let n = rng.random_range(3..=5);
            let x = random_procedure_with(d, n, &mut rng);
            let rho = random_density_with(d, &mut rng);
            let before = general_distribution(&x, &rho)?;
            let merged = x.merge_outcomes(&[label("m0"), label("m1")], label("m01"))?;
            let after = general_distribution(&merged, &rho)?;
            let mut worst: f64 = 0.0;
            for (l, p) in before.probabilities.entries().iter().skip(2) {
                worst = worst.max((after.probabilities.get(l).expect("untouched label") - p).abs());
            }
            let merged_p = after.probabilities.get(&label("m01")).expect("merged label");
            let sum_p = before.probabilities.values().take(2).sum::<f64>();
            Ok(worst.max((merged_p - sum_p).abs()))
        }
    }
}

fn frame_for(fixture: FrameFixture, r_hidden: PositiveOperator) -> Box<dyn FrameFunction + Send> {
    match fixture {
        FrameFixture::Hidden => Box::new(HiddenFrame::new(r_hidden)),
        FrameFixture::TraceSquared => {
            let d = r_hidden.dim();
            Box::new(FnFrame::new(d, |a: &PositiveOperator| a.trace().powi(2)))
        }
    }
}

fn with_frame<F>(fixture: FrameFixture, d: usize, rng: &mut ChaCha8Rng, f: F) -> Result<f64>
where
    F: FnOnce(&dyn FrameFunction, &mut ChaCha8Rng) -> Result<f64>,
{
    let w = frame_for(fixture, random_positive_with(d, rng));
    f(w.as_ref(), rng)
}

fn uniqueness_case(d: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let r = random_hermitian_with(d, rng);
    let bases = polarization_bases(d);
    let mut worst = uniqueness_check(&r, &r, &bases)?;
    if d >= 2 {
        for delta in [1e-6, 1e-3] {
            let mut m = r.matrix().clone();
            m[(0, 1)] += C64::new(0.0, delta);
            m[(1, 0)] -= C64::new(0.0, delta);
            let q = HermitianOperator::new(m)?;
            worst = worst.max((uniqueness_check(&r, &q, &bases)? - delta).abs());
        }
    }
    // 4ε entry bound on a random small perturbation
    let delta = random_hermitian_with(d, rng).scale(1e-6);
    let q = r.add(&delta)?;
    let gap = uniqueness_check(&r, &q, &bases)?;
    let excess = (r.matrix().max_abs_diff(q.matrix()) - polarization_entry_bound(gap)).max(0.0);
    Ok(worst.max(excess))
}
