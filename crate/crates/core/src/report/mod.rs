//! Outcome matrices from benchmark runs and the reports derived from them:
//! cactus data, FF-normalized informedness/speed, Jaccard similarity and
//! domination shares.

mod analysis;
mod bench;
mod matrix;

pub use analysis::{
    cactus, pareto, similarity, write_cactus_csv, CactusRow, ParetoReport, ParetoRow,
    SimilarityReport, FF_LABEL,
};
pub use bench::{
    parse_manifest, run_bench, BenchConfig, BenchError, BenchStats, CacheKey, ManifestEntry,
};
pub use matrix::{MatrixError, MatrixRow, OutcomeClass, OutcomeMatrix};
