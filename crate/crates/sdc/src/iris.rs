//! The Iris noise experiment: load the headerless UCI file, perturb all four
//! measurements, compare separability.

use std::io::Read;

use sdc_core::utility::{build_report, ReportConfig, UtilityReport};
use sdc_core::{AttributeKind, AttributeMeta, DataClass, Table};

use crate::config::{NoiseScale, Step};
use crate::error::Result;
use crate::pipeline::run_steps;

pub const MEASUREMENTS: [&str; 4] = ["sepal_length", "sepal_width", "petal_length", "petal_width"];
pub const LABEL: &str = "class";
pub const EXPECTED_ROWS: usize = 150;
pub const FOLDS: usize = 10;

pub fn iris_schema() -> Vec<AttributeMeta> {
    let mut schema: Vec<AttributeMeta> = MEASUREMENTS
        .iter()
        .map(|m| AttributeMeta::new(*m, AttributeKind::NonSensitive, DataClass::Continuous))
        .collect();
    schema.push(AttributeMeta::new(
        LABEL,
        AttributeKind::Sensitive,
        DataClass::Categorical,
    ));
    schema
}

/// Reads `iris.data`: five comma-separated fields per line, no header.
/// Blank lines are skipped.
pub fn load_iris<R: Read>(source: R) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        records.push(rec.iter().map(|f| f.trim().to_owned()).collect::<Vec<_>>());
    }
    Ok(Table::parse(iris_schema(), records)?)
}

/// One `add_noise` step per measurement, σ = `sigma_factor` × its sample
/// standard deviation.
pub fn noise_steps(sigma_factor: f64) -> Vec<Step> {
    MEASUREMENTS
        .iter()
        .map(|m| Step::AddNoise {
            attribute: (*m).to_owned(),
            scale: NoiseScale::SigmaFactor(sigma_factor),
        })
        .collect()
}

pub fn privatize(t: &Table, sigma_factor: f64, seed: u64) -> Result<Table> {
    run_steps(t, &noise_steps(sigma_factor), seed)
}

/// Utility report with the 1-NN gauge on the petal features. When the
/// gauge cannot run (fewer than two classes, say) the report is built
/// without it and the reason is returned alongside.
pub fn report(
    original: &Table,
    privatized: &Table,
    seed: u64,
) -> Result<(UtilityReport, Option<String>)> {
    let mut config = ReportConfig {
        label: Some(LABEL.to_owned()),
        features: vec!["petal_length".into(), "petal_width".into()],
        folds: FOLDS.min(original.len().max(2)),
        seed,
        ..ReportConfig::default()
    };
    match build_report(original, privatized, &config) {
        Ok(r) => Ok((r, None)),
        Err(e @ (sdc_core::Error::TooFewClasses(_) | sdc_core::Error::InvalidParameter(_))) => {
            config.label = None;
            Ok((
                build_report(original, privatized, &config)?,
                Some(e.to_string()),
            ))
        }
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_uci_lines() {
        let text = "5.1,3.5,1.4,0.2,Iris-setosa\n7.0,3.2,4.7,1.4,Iris-versicolor\n\n";
        let t = load_iris(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.numbers(2), [1.4, 4.7]);
        assert!(load_iris("5.1,3.5,1.4,Iris-setosa\n".as_bytes()).is_err());
    }

    #[test]
    fn zero_factor_is_identity() {
        let text = "5.1,3.5,1.4,0.2,Iris-setosa\n7.0,3.2,4.7,1.4,Iris-versicolor\n";
        let t = load_iris(text.as_bytes()).unwrap();
        assert_eq!(privatize(&t, 0.0, 3).unwrap(), t);
    }
}
