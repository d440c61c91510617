//! Value-transforming methods: noise addition in its additive,
//! multiplicative and logarithmic forms, swapping, extreme-value coding,
//! rounding, range recoding, blank-and-impute, blurring and fully-synthetic
//! generation.
//!
//! Every operation targets named attributes and leaves all other cells
//! untouched. Missing cells are skipped and consume no random draws. All
//! randomness comes from the caller's seed through [`crate::rng::Rng`].

mod coding;
mod impute;
mod swap;
mod synth;

pub use coding::{code_extremes, recode_ranges, round_values, RecodeSpec, Threshold};
pub use impute::{blank_and_impute, blur};
pub use swap::{random_swap, swap_values};
pub use synth::synthesize;

use alloc::string::ToString;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::table::{Cell, Table};

/// Parameters of the normal noise term: mean, variance and seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub mean: f64,
    pub variance: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(mean: f64, variance: f64, seed: u64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance < 0.0 {
            return Err(Error::InvalidParameter(alloc::format!(
                "noise needs a finite mean and a finite variance >= 0, got N({mean}, {variance})"
            )));
        }
        Ok(Self {
            mean,
            variance,
            seed,
        })
    }

    /// Zero-mean noise for [`add_noise`].
    pub fn additive(variance: f64, seed: u64) -> Result<Self> {
        Self::new(0.0, variance, seed)
    }

    /// Unit-mean noise for [`multiply_noise`].
    pub fn multiplicative(variance: f64, seed: u64) -> Result<Self> {
        Self::new(1.0, variance, seed)
    }

    pub fn std_dev(&self) -> f64 {
        libm::sqrt(self.variance)
    }

    fn draws(&self) -> impl FnMut() -> f64 {
        let mut rng = Rng::seed_from_u64(self.seed);
        let (mean, sd) = (self.mean, self.std_dev());
        move || rng.normal(mean, sd)
    }
}

/// `z = x + e` with `e ~ N(0, σ²)` drawn independently per cell.
pub fn add_noise(t: &Table, attr: &str, spec: &NoiseSpec) -> Result<Table> {
    if spec.mean != 0.0 {
        return Err(Error::InvalidParameter(
            "additive noise must have mean 0".into(),
        ));
    }
    let col = t.continuous_index(attr)?;
    let mut noise = spec.draws();
    t.map_numbers(col, |_, x| Ok(x + noise()))
}

/// `y = x · e` with `e ~ N(1, σ²)` drawn independently per cell.
pub fn multiply_noise(t: &Table, attr: &str, spec: &NoiseSpec) -> Result<Table> {
    if spec.mean != 1.0 {
        return Err(Error::InvalidParameter(
            "multiplicative noise must have mean 1".into(),
        ));
    }
    let col = t.continuous_index(attr)?;
    let mut noise = spec.draws();
    t.map_numbers(col, |_, x| Ok(x * noise()))
}

/// `z = ln x + e` with `e ~ N(μ, σ²)`. The published column stays on the
/// log scale.
pub fn log_multiply_noise(t: &Table, attr: &str, spec: &NoiseSpec) -> Result<Table> {
    let col = t.continuous_index(attr)?;
    for (row, cell) in t.column(col).enumerate() {
        if let Cell::Number(v) = cell {
            if *v <= 0.0 {
                return Err(Error::NonPositive {
                    row,
                    attribute: attr.to_string(),
                    value: *v,
                });
            }
        }
    }
    let mut noise = spec.draws();
    t.map_numbers(col, |_, x| Ok(libm::log(x) + noise()))
}
