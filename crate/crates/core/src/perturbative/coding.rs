use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stats;
use crate::table::{Cell, DataClass, Table};

/// A coding threshold, either absolute or a percentile of the column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Value(f64),
    /// Percentile in `[0, 100]`, resolved by linear interpolation over the
    /// column's non-missing values.
    Percentile(f64),
}

impl Threshold {
    fn resolve(self, values: &[f64]) -> Result<f64> {
        match self {
            Threshold::Value(v) if !v.is_nan() => Ok(v),
            Threshold::Value(_) => Err(Error::InvalidParameter("threshold is NaN".into())),
            Threshold::Percentile(p) => stats::percentile(values, p).ok_or_else(|| {
                Error::InvalidParameter(alloc::format!(
                    "percentile {p} needs a value in [0, 100] and a non-empty column"
                ))
            }),
        }
    }
}

/// Top- and bottom-coding: values below `low` become `low_label`, values
/// above `high` become `high_label`. When anything is coded the column turns
/// categorical and the remaining numbers are kept as their text form.
pub fn code_extremes(
    t: &Table,
    attr: &str,
    low: Threshold,
    high: Threshold,
    low_label: &str,
    high_label: &str,
) -> Result<Table> {
    let col = t.continuous_index(attr)?;
    let values = t.numbers(col);
    let lo = low.resolve(&values)?;
    let hi = high.resolve(&values)?;
    if lo > hi {
        return Err(Error::InvalidParameter(alloc::format!(
            "low threshold {lo} exceeds high threshold {hi}"
        )));
    }
    if values.iter().all(|v| *v >= lo && *v <= hi) {
        return Ok(t.clone());
    }
    let cells = t
        .column(col)
        .map(|cell| match cell {
            Cell::Number(v) if *v < lo => Cell::text(low_label),
            Cell::Number(v) if *v > hi => Cell::text(high_label),
            Cell::Number(v) => Cell::text(alloc::format!("{v}")),
            other => other.clone(),
        })
        .collect();
    let mut meta = t.schema()[col].clone();
    meta.class = DataClass::Categorical;
    Ok(t.with_column(col, meta, cells))
}

/// Rounds each value to the nearest multiple of `base`, halves away from
/// zero.
pub fn round_values(t: &Table, attr: &str, base: f64) -> Result<Table> {
    if !(base.is_finite() && base > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "rounding base must be positive, got {base}"
        )));
    }
    let col = t.continuous_index(attr)?;
    t.map_numbers(col, |_, x| Ok(base * libm::round(x / base)))
}

/// Intervals `[b0, b1), [b1, b2), …, [b(m-1), bm]` with one label each.
#[derive(Debug, Clone, PartialEq)]
pub struct RecodeSpec {
    attribute: String,
    breakpoints: Vec<f64>,
    labels: Vec<String>,
}

impl RecodeSpec {
    pub fn new(
        attribute: impl Into<String>,
        breakpoints: Vec<f64>,
        labels: Vec<String>,
    ) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidParameter(
                "recoding needs at least two breakpoints".into(),
            ));
        }
        if breakpoints.iter().any(|b| !b.is_finite())
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidParameter(
                "recode breakpoints must be finite and strictly increasing".into(),
            ));
        }
        if labels.len() != breakpoints.len() - 1 {
            return Err(Error::InvalidParameter(alloc::format!(
                "{} breakpoints define {} intervals but {} labels were given",
                breakpoints.len(),
                breakpoints.len() - 1,
                labels.len()
            )));
        }
        Ok(Self {
            attribute: attribute.into(),
            breakpoints,
            labels,
        })
    }

    /// Labels every interval `lo - hi`.
    pub fn with_range_labels(attribute: impl Into<String>, breakpoints: Vec<f64>) -> Result<Self> {
        let labels = breakpoints
            .windows(2)
            .map(|w| alloc::format!("{} - {}", w[0], w[1]))
            .collect();
        Self::new(attribute, breakpoints, labels)
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn label_for(&self, value: f64) -> Option<&str> {
        let last = self.breakpoints.len() - 1;
        if value < self.breakpoints[0] || value > self.breakpoints[last] {
            return None;
        }
        // Index of the first breakpoint strictly above `value`.
        let upper = self.breakpoints.partition_point(|b| *b <= value);
        Some(&self.labels[upper.clamp(1, last) - 1])
    }
}

/// Replaces each value by the label of its interval; the column turns
/// categorical.
pub fn recode_ranges(t: &Table, spec: &RecodeSpec) -> Result<Table> {
    let col = t.continuous_index(&spec.attribute)?;
    let mut cells = Vec::with_capacity(t.len());
    for (row, cell) in t.column(col).enumerate() {
        cells.push(match cell {
            Cell::Number(v) => {
                Cell::text(
                    spec.label_for(*v)
                        .ok_or_else(|| Error::OutsideRecodeRange {
                            row,
                            attribute: spec.attribute.to_string(),
                            value: *v,
                        })?,
                )
            }
            other => other.clone(),
        });
    }
    let mut meta = t.schema()[col].clone();
    meta.class = DataClass::Categorical;
    Ok(t.with_column(col, meta, cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{AttributeKind, AttributeMeta};
    use alloc::vec;

    fn table(values: &[f64]) -> Table {
        let schema = vec![AttributeMeta::new(
            "v",
            AttributeKind::Sensitive,
            DataClass::Continuous,
        )];
        Table::new(
            schema,
            values.iter().map(|&v| vec![Cell::Number(v)]).collect(),
        )
        .unwrap()
    }

    fn texts(t: &Table) -> Vec<String> {
        t.column(0).map(ToString::to_string).collect()
    }

    #[test]
    fn infinite_thresholds_are_identity() {
        let t = table(&[1.0, 5.0]);
        let out = code_extremes(
            &t,
            "v",
            Threshold::Value(f64::NEG_INFINITY),
            Threshold::Value(f64::INFINITY),
            "lo",
            "hi",
        )
        .unwrap();
        assert_eq!(out, t);
        assert_eq!(out.schema()[0].class, DataClass::Continuous);
    }

    #[test]
    fn inverted_thresholds_fail() {
        let t = table(&[1.0]);
        assert!(code_extremes(
            &t,
            "v",
            Threshold::Value(2.0),
            Threshold::Value(1.0),
            "a",
            "b"
        )
        .is_err());
    }

    #[test]
    fn rounding_by_hand() {
        let out = round_values(&table(&[12345.0, -1500.0, 1499.0]), "v", 1000.0).unwrap();
        assert_eq!(out.numbers(0), [12000.0, -2000.0, 1000.0]);
        let t = table(&[10.0, 20.0]);
        assert_eq!(round_values(&t, "v", 5.0).unwrap(), t);
        assert!(round_values(&t, "v", 0.0).is_err());
        assert!(round_values(&t, "v", -1.0).is_err());
    }

    #[test]
    fn recode_is_half_open() {
        let spec = RecodeSpec::new(
            "v",
            vec![16.0, 19.0, 30.0],
            vec!["young".into(), "adult".into()],
        )
        .unwrap();
        let out = recode_ranges(&table(&[16.0, 18.9, 19.0, 30.0]), &spec).unwrap();
        assert_eq!(texts(&out), ["young", "young", "adult", "adult"]);
        assert_eq!(out.schema()[0].class, DataClass::Categorical);
        assert!(matches!(
            recode_ranges(&table(&[31.0]), &spec),
            Err(Error::OutsideRecodeRange { row: 0, .. })
        ));
    }

    #[test]
    fn single_interval_covers_all() {
        let spec = RecodeSpec::with_range_labels("v", vec![0.0, 100.0]).unwrap();
        let out = recode_ranges(&table(&[0.0, 50.0, 100.0]), &spec).unwrap();
        assert_eq!(texts(&out), ["0 - 100"; 3]);
    }

    #[test]
    fn recode_spec_validation() {
        assert!(RecodeSpec::new("v", vec![1.0], vec![]).is_err());
        assert!(RecodeSpec::new("v", vec![1.0, 1.0], vec!["a".into()]).is_err());
        assert!(RecodeSpec::new("v", vec![1.0, 2.0], vec![]).is_err());
    }
}
