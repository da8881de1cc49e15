//! Numerical tools for the one-dimensional defocusing Gross-Pitaevskii
//! equation with unit-modulus boundary conditions.
//!
//! The crate evolves fields under the Gross-Pitaevskii, complex modified
//! KdV, and shifted KdV flows, computes the renormalized transmission
//! coefficient and bound states of the associated Zakharov-Shabat operator,
//! evaluates a family of conserved energies through trace formulas, and
//! provides a phase-invariant metric on the finite-energy state space.

pub mod energies;
pub mod error;
pub mod evolution;
pub mod field;
pub mod grid;
pub mod metric;
pub mod scattering;

pub use energies::{energy_functional, energy_functional_trace, energy_report,
    equivalence_ladder, equivalence_report, expansion_check, g_value,
    ordered_exponential_integral, poisson_quadratic, quadratic_term, trace_hamiltonian,
    trace_samples, EnergyReport, EquivalenceReport, ExpansionCheck, HamiltonianEntry,
    TraceSamples};
pub use error::{GpError, Result};
pub use field::{derived_pair, energy_norm, ginzburg_landau, hamiltonian_h3, mass_momentum,
    preset_field, random_flat_field, surrogate_smallness, two_variation, DerivedPair, GPField};
pub use grid::{make_grid, read_field, sobolev_inner, sobolev_norm, sobolev_norm_sq, write_field,
    Grid, SampledFunction, C64};
pub use metric::{metric_distance, metric_distance_detailed, metric_distance_with,
    weighted_phase_distance, MetricConfig, MetricEvaluation};
pub use scattering::{coefficient_fields, collect_scattering, eigenvalues,
    eigenvalues_with_exclusion, jost_solve, log_transmission, log_transmission_refined,
    neumann_series, phi_correction, reduction_phase, transmission, transmission_classical,
    CoefficientFields, Eigenvalue, JostTrace, NeumannReport, PointKind, ScatteringData,
    SpectralPoint};
