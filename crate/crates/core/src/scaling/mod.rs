//! Power-law fits, growth and saturation exponents, and finite-size data
//! collapse of roughness curves.

mod collapse;
mod fit;

pub use collapse::{
    collapse_residual, optimize_collapse, CollapseBounds, CollapseResult, CollapseWindow,
};
pub use fit::{
    fit_decay_rate, fit_power_law, growth_exponent, saturated_roughness, saturation_exponent,
    saturation_onset, GrowthOptions, PowerLawFit,
};
