//! Numerical laboratory for the nonlocal parabolic equation
//! `∂ₜu + (−Δ)ₚˢu − |u|^{q−2}u = f` on a box with zero exterior data.
//!
//! Fields live on the interior nodes of a uniform grid ([`GridSpec`]); the
//! fractional p-Laplacian is a dense quadrature ([`OperatorContext`]) whose
//! exterior contribution is folded into precomputed tail weights.

// `!(a < b)` is intentional throughout: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod certify;
pub mod convex;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod integrator;
pub mod operator;
pub mod params;
pub mod quadrature;
pub mod sobolev;

pub use blowup::{blowup_thresholds, blowup_time_bound, solve_beta, BlowupCertificate, Thresholds, Verdict};
pub use certify::{certify_blowup, AutoScale, CertifyOptions, CertifyOutcome};
pub use convex::{
    check_energy_comparison, check_stroock_varopoulos, field_resolvent, moreau_yosida_value, project_lr_ball,
    resolvent_seminorm_decrease, scalar_resolvent, yosida_apply, Margin, ProxSpec, SvReport,
};
pub use error::{Error, Result};
pub use functionals::{
    check_gn_inequality, gn_exponent, interpolation_exponents, phi_cap, phi_r, psi_q, total_energy, EnergyRecord,
};
pub use grid::{lp_norm, make_initial_data, Field, GridSpec, InitialKind};
pub use integrator::{
    check_dissipation, detect_blowup, run, run_with_context, strong_form_residual, BlowupInterval, BlowupPolicy,
    DissipationReport, SimConfig, manufactured_forcing, SimOutcome, SimState, SimStatus, Snapshot, TimeOptions,
};
pub use operator::{apply_flap, dirichlet_form, normalization_constant, seminorm_p, Kernel, KernelTable, OperatorContext};
pub use params::{validate_params, AdmissibilityReport, CriticalExponent, Forcing, ForcingMode, ModelParams};
pub use sobolev::{estimate_sobolev_constant, SobolevEstimate, SobolevOptions};
