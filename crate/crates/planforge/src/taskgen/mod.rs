//! Problem instance generation for the six task families, with controlled
//! solution-length difficulty and a constructive solvability guarantee:
//! goals are full states reached by a random valid walk, so the walk is a
//! witness plan for every emitted problem.

mod dataset;
mod families;
mod generate;
mod paraphrase;

pub use dataset::{write_dataset, DatasetManifest, InstanceMeta, ManifestEntry};
pub use families::{Bucket, FamilyName, Subfamily, TaskFamily};
pub use generate::{
    bucket_quotas, generate, generate_with_family, GenError, GenSpec, GeneratedInstance,
    LenSource,
};
pub use paraphrase::{
    extract_atom_spans, paraphrase_problem, statement_preserves_atoms, template_statement,
};

/// Pearson chi-square statistic of observed bucket counts against expected
/// proportions given by integer weights.
pub fn chi_square_stat(observed: &[u32], weights: &[u32]) -> f64 {
    assert_eq!(observed.len(), weights.len());
    let n: f64 = observed.iter().map(|&o| o as f64).sum();
    let total_w: f64 = weights.iter().map(|&w| w as f64).sum();
    let mut stat = 0.0;
    for (&o, &w) in observed.iter().zip(weights) {
        let expected = n * w as f64 / total_w;
        if expected > 0.0 {
            let d = o as f64 - expected;
            stat += d * d / expected;
        }
    }
    stat
}

/// Upper critical values of the chi-square distribution at significance
/// 0.01, indexed by degrees of freedom starting at 1.
pub const CHI_SQUARE_CRIT_001: [f64; 10] =
    [6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090, 21.666, 23.209];
