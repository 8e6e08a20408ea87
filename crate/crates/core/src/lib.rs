//! Generalized quantum probability for measurement procedures whose outcome
//! operators need not sum to the identity.
//!
//! The central rule is
//!
//! ```text
//!   p(m_i | s, x) = Tr(M_i ρ) / Tr(X ρ),   X = Σ_j M_j
//! ```
//!
//! which reduces to the Born rule when `X ∝ I`. Around it the crate provides
//! the Bayesian posterior and likelihood over preparation ensembles,
//! retrodiction and its predictive dual, reconstruction of the operator
//! behind an additive frame function, and a seeded post-selection
//! Monte-Carlo simulator that checks every formula independently.
//!
//! ```
//! use genprob::prelude::*;
//!
//! let zero = StateVector::basis(2, 0);
//! let plus = StateVector::pair_superposition(2, 0, 1, C64::new(1.0, 0.0));
//! let x = MeasurementProcedure::new(vec![
//!     (label("m0"), projector(&zero)),
//!     (label("m1"), projector(&plus)),
//! ])?;
//! let p = general_probability(&x, &DensityOperator::pure(&zero), &label("m0"))?;
//! assert!((p - 2.0 / 3.0).abs() < 1e-15);
//! # Ok::<(), genprob::Error>(())
//! ```

pub mod battery;
pub mod eigen;
pub mod error;
pub mod frame;
pub mod matrix;
pub mod measurement;
pub mod operator;
pub mod parallel;
pub mod probability;
pub mod random;
pub mod simulator;
pub mod tolerance;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::Error;
    pub use crate::frame::{
        positivity_of_reconstruction, reconstruct, reconstruct_with, uniqueness_check, verify_additivity,
        verify_scaling, FrameFunction, HiddenFrame, ReconstructionResult,
    };
    pub use crate::matrix::{Matrix, C64};
    pub use crate::measurement::{label, MeasurementProcedure, OutcomeLabel, StandardPOVM};
    pub use crate::operator::{
        check_positive, eigh, projector, tensor_product, trace_product, DensityOperator, EigenDecomposition,
        HermitianOperator, PositiveOperator, StateVector, UnitaryOperator,
    };
    pub use crate::parallel::ExecutionMode;
    pub use crate::probability::{
        average_state, bayes_consistency, born_noncontextuality_check, general_distribution, general_probability,
        posterior, retrodict, retrodict_via_duality, retrodictive_state, LabeledDistribution, PosteriorReport,
        PreparationEnsemble, PreparationLabel, ProbabilityReport,
    };
    pub use crate::random::{random_density, random_unitary};
    pub use crate::simulator::{
        communication_scenario, completion_of, herald_scenario, run, Scenario, SimulationReport,
    };
    pub use crate::tolerance::Tolerances;
}
