//! Full simulations, parameter sweeps and convergence studies.

pub mod convergence;
pub mod presets;
pub mod run;
pub mod sweep;

pub use convergence::{convergence_study, ConvergenceCase, ConvergenceReport};
pub use presets::initial_state;
pub use run::{run_simulation, RunOutput, RunSummary};
pub use sweep::{parameter_sweep, SweepParam, SweepResult, SweepRow, SweepSpec};
