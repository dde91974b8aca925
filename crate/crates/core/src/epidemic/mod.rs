//! Delayed SIR model with diffusion on a rectangle.

mod grid;
mod history;
mod kernel;
mod model;

pub use grid::{laplacian_neumann, Grid2D};
pub use history::{
    check_history_in_w, compatibilize_in_w, epidemic_guard, epidemic_preset, initial_profile, make_epidemic_problem,
    HistoryPreset, ProfileParams,
};
pub use kernel::{Convolution, Kernel2D};
pub use model::{EpidemicModel, EpidemicParams};
