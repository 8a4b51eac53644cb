//! Scenario configuration, the Monte Carlo experiment driver, parameter
//! sweeps and figure-data emission.

mod config;
mod experiment;
mod plot;

pub use config::{
    Algorithm, ArraySection, BaselineSection, CltSection, DoiSection, ErrorSection, ErrorVariant, LossSection, Scenario,
    ScenarioConfig, ScheduleSection, TrialSection, UserSection,
};
pub use experiment::{
    derive_seed, radar_only_loss, run_scenario, sweep, Aggregate, CltSeries, ExperimentResult, ExperimentRow, KlPoint,
    RowStatus, Stat, SweepAxis, SweepMetric, SweepPoint, SweepTable,
};
pub use plot::{emit_plot_data, relative_db, PlotFile, PlotKind, PlotSource, MANIFEST};
