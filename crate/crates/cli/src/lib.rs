//! Experiment harness for the `belief-bounds` library: samples two-layer
//! benchmark networks from weight priors, runs the exact reference and
//! both optimized bounds, and reduces the results into reproducible CSV
//! tables. The `belief-bounds` binary in this crate is a thin
//! command-line front end over these modules.

pub mod build;
pub mod prior;
pub mod sweep;
pub mod trial;

pub use build::{bipartite, evidence_for, EvidencePolicy, Leak};
pub use prior::WeightPrior;
pub use sweep::{
    abscissa_rows, agg_path, median, plan_cells, run_cells, run_figure,
    sigma_std_bins, AggRow, CellPlan, Figure, FigureJob, FigureOutput,
    AGG_HEADER,
};
pub use trial::{
    resolve_lb_mode, run_trial, run_trial_on, trial_rng, trial_seed, LbMode,
    TrialRecord, TrialSettings, TRIAL_HEADER,
};
