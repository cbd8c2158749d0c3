//! Fixed-point toolkit for self-maps on metric spaces.
//!
//! * [`space`]: metric spaces and reproducible sampling.
//! * [`maps`]: self-maps, a gallery of examples, and file-backed maps.
//! * [`contraction`]: sampled Banach, Kannan, Chatterjea, Singh and
//!   Singh-Chatterjea constants.
//! * [`solver`]: Picard iteration on `T^p` with rate and tail bounds.
//! * [`analysis`]: minimal `p` for a Banach constant.
//! * [`cli`]: the `fplab` command-line frontend.

pub mod analysis;
pub mod cli;
pub mod contraction;
pub mod error;
pub mod maps;
pub mod report;
pub mod solver;
pub mod space;

pub use error::{Error, Result};
pub use maps::SelfMap;
pub use space::{MetricSpace, Point, SamplePlan};
