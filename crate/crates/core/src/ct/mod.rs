//! Parallel-beam transmission tomography with knoll attenuation models.

mod counts;
mod fbp;
mod phantom;
mod problem;
mod radon;

pub use counts::{simulate_counts, CountData, Noise};
pub use fbp::{fbp, fbp_baseline};
pub use phantom::Phantom;
pub use problem::{
    Attenuation, CtLinearization, CtProblem, PhaseLevels, PhaseView, BLANK_SCAN, MU_AIR, MU_BONE, MU_SOFT,
};
pub use radon::{RadonOperator, RayGeometry, Sinogram};
