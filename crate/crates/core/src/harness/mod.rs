//! Scenario suites, dataset generation, training, evaluation and the
//! file formats the command-line tool works with.

mod dataset;
mod evaluate;
mod simulate;
mod suite;
mod sweep;
mod train;

pub use dataset::{read_dataset, read_rows, write_dataset, write_rows, DatasetRow, HEADER};
pub use evaluate::{
    check_disjoint, dispersion_table, evaluate, evaluate_seeded, run_cases, summarize, CaseResult, DispersionEntry, EvaluationSummary,
    HistogramBin, MarginStats, SHUFFLE_SEED,
};
pub use simulate::{scenario_measurements, simulate, AmplitudeCache};
pub use suite::{
    detection_seeds, trial_seed, ModelRef, ScenarioSuite, SuiteClass, SuiteKind, DEFAULT_SNR_LIST_DB,
    DEFAULT_TRIALS_PER_SNR,
};
pub use sweep::{sweep_rmse, write_rmse_csv, write_rmse_file, RmseRow};
pub use train::{dataset_soil, phases_present, train_bundle, training_set, TrainedClass};

/// Order-preserving map, parallel when the `parallel` feature is on.
pub(crate) fn map_ordered<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
