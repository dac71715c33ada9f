//! Seeded corpora, spike-noise corruption, and the ablation experiments
//! (noise robustness, dimension sweep, importance profile, codec comparison,
//! generalization).

mod corpus;
mod experiments;
mod noise;
mod report;
mod synthetic;

pub use corpus::{load_corpus, Corpus, CorpusSource, CorpusSpec};
pub use experiments::{
    codec_comparison, derive_seed, dim_sweep, evaluate_corpus, evaluate_fourier_iou, evaluate_iou,
    fit_basis, generalization_check, importance_profile, noise_benchmark, EvalSettings,
};
pub use noise::{inject_spike_noise, NoiseSpec, SpikeNoise};
pub use report::{ContourIou, CorpusInfo, IouStats, Report, ReportRow, CSV_HEADER};
pub use synthetic::{
    generate_ribbons, linear_ensemble, LinearEnsemble, LinearEnsembleSpec, RibbonFamily,
    RibbonShape,
};
