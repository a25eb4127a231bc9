//! Image-complexity guided planning of per-scale channel multipliers for
//! encoder-decoder segmentation networks.
//!
//! The pipeline measures how hard a dataset's images are to compress
//! ([`complexity`]), fits a linear law relating that complexity to how fast
//! accuracy falls as a network is thinned ([`degradation`]), and solves for
//! channel multipliers under a weight budget or an accuracy floor
//! ([`planner`]).

pub mod archmodel;
pub mod complexity;
pub mod degradation;
pub mod error;
pub mod exec;
pub mod imaging;
pub mod planner;

pub use archmodel::{apply_multipliers, parse_architecture, ArchitectureSpec, ConvLayer, MultiplierAssignment};
pub use complexity::{DatasetProfile, ImageComplexity, ScaleComplexity};
pub use degradation::{AccuracyObservation, ComplexityKind, DegradationModel, Metric};
pub use error::{Error, Result};
pub use exec::Execution;
pub use imaging::{MaskImage, RasterImage};
pub use planner::{build_plan, CompressionPlan, Constraint, ConstraintKind, Mode};
