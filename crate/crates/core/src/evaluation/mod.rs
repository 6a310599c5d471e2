//! Phantoms, baseline reconstructions, image similarity and the `lambda` search
//! behind the sub-sampling study.

mod baseline;
mod metric;
mod phantom;
mod search;
mod study;

pub use baseline::{interpolate_missing, reconstruct_baseline, BaselineKind};
pub use metric::{ncc, pearson};
pub use phantom::{
    scatterer_image, simulate_phantom, NoiseLevel, Phantom, PhantomSpec, STANDARD_DISPERSION,
    STANDARD_LATERAL_PITCH,
};
pub use search::{
    golden_search_lambda, golden_section_max, GoldenOptions, LambdaSearch, SearchOutcome,
    SearchPoint, INV_PHI,
};
pub use study::{run_study, run_study_on, ReferenceMode, StudyConfig, StudyReport, StudyRow};
