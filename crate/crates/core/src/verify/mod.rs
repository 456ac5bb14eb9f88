//! Numerical checks of the estimates and invariants, and the suite runner.

pub mod energy;
pub mod experiments;
pub mod invariants;
pub mod lemmas;
pub mod sampling;
pub mod suite;

pub use energy::{energy_budget, EnergyReport};
pub use experiments::{
    formulation_consistency, galerkin_convergence, perturbation_direction, smoothing_trace, uniqueness_experiment,
    ConsistencyReport, ConvergenceReport, SmoothingTrace, UniquenessReport,
};
pub use invariants::InvariantReport;
pub use lemmas::{check_banach_algebra, check_lemma_a1, check_lemma_a2, Estimate, InequalityReport, StabilityReport, SweepParams};
pub use suite::{run_suite, CheckResult, SuiteConfig, SuiteReport};
