//! Corpus handling, feature systems and the evaluation protocol.

mod corpus;
mod features;
mod metrics;
mod report;
mod run;
mod toy;

pub use corpus::{
    gen_synthetic_corpus, synth_corpus, ClassSpec, Corpus, CorpusItem, SyntheticClip, SyntheticCorpusSpec,
};
pub use features::{clip_llds, corpus_llds, FeatureConfig, FeatureSystem, FeatureTransformer, PreparedFeatures};
pub use metrics::{confusion_matrix, mean_sd, population_sd, uar, uar_report, UarReport};
pub use report::{
    export_curve, export_plot, export_report, pca_2d, read_report, render_plot, render_scatter, report_rows, Pca2,
    PlotSeries, ReportRow, RowKind,
};
pub use run::{
    evaluate, prepare, run_experiment, sweep_augmentation, Augmentation, EvalReport, Prepared, RunConfig, RunResult,
    SweepPoint,
};
pub use toy::{
    compare_alternation, covered_modes, policy_stats, toy_mixture, AlternationComparison, PolicyStats, ToyData,
    ToySpec,
};

/// SplitMix64 over `base ^ mix(stream)`; independent child seeds per stream.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(base ^ mix(stream))
}
