//! Running a parsed pipeline: validation, step execution and atomic output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sdc_core::nonperturbative::{
    enforce_k_anonymity, generalize, suppress_cells, suppress_records,
};
use sdc_core::perturbative::{
    self as pert, blank_and_impute, blur, code_extremes, random_swap, recode_ranges, round_values,
    swap_values, synthesize, NoiseSpec, Threshold,
};
use sdc_core::utility::{build_report, ReportConfig, UtilityReport};
use sdc_core::{stats, AttributeMeta, Cell, DataClass, Table};

use crate::config::{NoiseScale, PipelineConfig, Step};
use crate::error::{Error, Result};
use crate::schema::Schema;
use crate::tabular::emit_table;

/// Default fold count for the separability gauge.
pub const DEFAULT_FOLDS: usize = 10;

fn invalid(message: String) -> Error {
    Error::Core(sdc_core::Error::InvalidParameter(message))
}

fn find<'a>(schema: &'a [AttributeMeta], name: &str) -> Result<&'a AttributeMeta> {
    schema
        .iter()
        .find(|m| m.name == name)
        .ok_or_else(|| Error::Core(sdc_core::Error::UnknownAttribute(name.to_owned())))
}

fn find_mut<'a>(schema: &'a mut [AttributeMeta], name: &str) -> Result<&'a mut AttributeMeta> {
    schema
        .iter_mut()
        .find(|m| m.name == name)
        .ok_or_else(|| Error::Core(sdc_core::Error::UnknownAttribute(name.to_owned())))
}

fn continuous<'a>(
    schema: &'a [AttributeMeta],
    name: &str,
    step: usize,
    method: &str,
) -> Result<&'a AttributeMeta> {
    let meta = find(schema, name)?;
    if meta.class != DataClass::Continuous {
        return Err(invalid(format!(
            "step {step} ({method}): `{name}` is not continuous at this point of the pipeline"
        )));
    }
    Ok(meta)
}

fn check_scale(scale: NoiseScale, step: usize) -> Result<()> {
    let v = match scale {
        NoiseScale::Sigma(v) | NoiseScale::Variance(v) | NoiseScale::SigmaFactor(v) => v,
    };
    if !(v.is_finite() && v >= 0.0) {
        return Err(invalid(format!(
            "step {step}: noise scale must be finite and >= 0, got {v}"
        )));
    }
    Ok(())
}

/// Checks every step against the schema as it will look when the step
/// runs. Needs no data.
pub fn validate(config: &PipelineConfig, schema: &[AttributeMeta]) -> Result<()> {
    let mut schema = schema.to_vec();
    for name in config
        .quasi
        .iter()
        .chain(&config.sensitive)
        .chain(&config.features)
    {
        find(&schema, name)?;
    }
    if let Some(label) = &config.label {
        find(&schema, label)?;
        if config.features.is_empty() {
            return Err(invalid("`label` needs `features`".into()));
        }
    }
    if config.folds.is_some_and(|f| f < 2) {
        return Err(invalid("`folds` must be at least 2".into()));
    }
    for (i, step) in config.steps.iter().enumerate() {
        let method = step.method();
        match step {
            Step::SuppressCells {
                attributes,
                below,
                above,
                ..
            } => {
                for a in attributes {
                    if below.is_some() || above.is_some() {
                        continuous(&schema, a, i, method)?;
                    } else {
                        find(&schema, a)?;
                    }
                }
            }
            Step::SuppressRecords { .. } | Step::Synthesize => {}
            Step::Generalize { attribute, level } => {
                let meta = find_mut(&mut schema, attribute)?;
                let depth = meta
                    .hierarchy
                    .as_ref()
                    .ok_or_else(|| Error::Core(sdc_core::Error::NoHierarchy(attribute.clone())))?
                    .depth();
                if *level < meta.level || *level > depth {
                    return Err(Error::Core(sdc_core::Error::LevelOutOfRange {
                        attribute: attribute.clone(),
                        level: *level,
                        current: meta.level,
                        depth,
                    }));
                }
                if *level > meta.level {
                    meta.level = *level;
                    meta.class = DataClass::Categorical;
                }
            }
            Step::KAnonymity { quasi, k } => {
                if quasi.is_empty() {
                    return Err(invalid(format!(
                        "step {i} (k_anonymity): no quasi attributes"
                    )));
                }
                if *k < 2 {
                    return Err(invalid(format!(
                        "step {i} (k_anonymity): k must be at least 2"
                    )));
                }
                for q in quasi {
                    let meta = find_mut(&mut schema, q)?;
                    // The enforcer may raise any attribute with a hierarchy.
                    if meta.hierarchy.is_some() {
                        meta.class = DataClass::Categorical;
                    }
                }
            }
            Step::AddNoise { attribute, scale }
            | Step::MultiplyNoise { attribute, scale }
            | Step::LogNoise { attribute, scale } => {
                continuous(&schema, attribute, i, method)?;
                check_scale(*scale, i)?;
            }
            Step::Swap { attributes, .. } | Step::RandomSwap { attributes, .. } => {
                if attributes.is_empty() {
                    return Err(invalid(format!("step {i} ({method}): no attributes")));
                }
                for a in attributes {
                    find(&schema, a)?;
                }
                if let Step::RandomSwap { fraction, .. } = step {
                    if !(0.0..=1.0).contains(fraction) {
                        return Err(invalid(format!(
                            "step {i}: fraction {fraction} is outside [0, 1]"
                        )));
                    }
                }
            }
            Step::CodeExtremes {
                attribute,
                low,
                high,
            } => {
                continuous(&schema, attribute, i, method)?;
                for (t, _) in low.iter().chain(high) {
                    match t {
                        Threshold::Percentile(p) if !(0.0..=100.0).contains(p) => {
                            return Err(invalid(format!(
                                "step {i}: percentile {p} is outside [0, 100]"
                            )));
                        }
                        Threshold::Value(v) if v.is_nan() => {
                            return Err(invalid(format!("step {i}: threshold is NaN")));
                        }
                        _ => {}
                    }
                }
                if let (Some((Threshold::Value(lo), _)), Some((Threshold::Value(hi), _))) =
                    (low, high)
                {
                    if lo > hi {
                        return Err(invalid(format!(
                            "step {i}: low threshold {lo} exceeds high {hi}"
                        )));
                    }
                }
            }
            Step::Round { attribute, base } => {
                continuous(&schema, attribute, i, method)?;
                if !(base.is_finite() && *base > 0.0) {
                    return Err(invalid(format!("step {i}: rounding base must be positive")));
                }
            }
            Step::Recode(spec) => {
                continuous(&schema, spec.attribute(), i, method)?;
                find_mut(&mut schema, spec.attribute())?.class = DataClass::Categorical;
            }
            Step::BlankImpute { attribute, .. } => {
                find(&schema, attribute)?;
            }
            Step::Blur {
                attribute, quasi, ..
            } => {
                continuous(&schema, attribute, i, method)?;
                for q in quasi {
                    find(&schema, q)?;
                }
            }
        }
    }
    Ok(())
}

fn variance(t: &Table, attr: &str, scale: NoiseScale) -> Result<f64> {
    Ok(match scale {
        NoiseScale::Sigma(s) => s * s,
        NoiseScale::Variance(v) => v,
        NoiseScale::SigmaFactor(f) => {
            let col = t.index_of(attr)?;
            let sd = stats::sample_std(&t.numbers(col)).unwrap_or(0.0);
            (f * sd) * (f * sd)
        }
    })
}

/// Applies one step. `seed` is the step's own sub-seed.
pub fn apply(t: &Table, step: &Step, seed: u64) -> Result<Table> {
    Ok(match step {
        Step::SuppressCells {
            attributes,
            rows,
            equals,
            below,
            above,
        } => {
            for a in attributes {
                t.index_of(a)?;
            }
            if let Some(&index) = rows.iter().find(|r| **r >= t.len()) {
                return Err(Error::Core(sdc_core::Error::IndexOutOfRange {
                    index,
                    len: t.len(),
                }));
            }
            suppress_cells(t, |r, meta, cell| {
                attributes.contains(&meta.name)
                    && (rows.contains(&r)
                        || equals
                            .as_ref()
                            .is_some_and(|v| !cell.is_missing() && cell.to_string() == *v)
                        || matches!((cell, below), (Cell::Number(x), Some(b)) if x < b)
                        || matches!((cell, above), (Cell::Number(x), Some(a)) if x > a))
            })
        }
        Step::SuppressRecords { rows } => suppress_records(t, rows)?,
        Step::Generalize { attribute, level } => generalize(t, attribute, *level)?,
        Step::KAnonymity { quasi, k } => enforce_k_anonymity(t, quasi, *k)?.0,
        Step::AddNoise { attribute, scale } => {
            let spec = NoiseSpec::additive(variance(t, attribute, *scale)?, seed)?;
            pert::add_noise(t, attribute, &spec)?
        }
        Step::MultiplyNoise { attribute, scale } => {
            let spec = NoiseSpec::multiplicative(variance(t, attribute, *scale)?, seed)?;
            pert::multiply_noise(t, attribute, &spec)?
        }
        Step::LogNoise { attribute, scale } => {
            let spec = NoiseSpec::new(0.0, variance(t, attribute, *scale)?, seed)?;
            pert::log_multiply_noise(t, attribute, &spec)?
        }
        Step::Swap { attributes, pairs } => swap_values(t, attributes, pairs)?,
        Step::RandomSwap {
            attributes,
            fraction,
        } => random_swap(t, attributes, *fraction, seed)?,
        Step::CodeExtremes {
            attribute,
            low,
            high,
        } => {
            let (lo, lo_label) = low
                .clone()
                .unwrap_or((Threshold::Value(f64::NEG_INFINITY), String::new()));
            let (hi, hi_label) = high
                .clone()
                .unwrap_or((Threshold::Value(f64::INFINITY), String::new()));
            code_extremes(t, attribute, lo, hi, &lo_label, &hi_label)?
        }
        Step::Round { attribute, base } => round_values(t, attribute, *base)?,
        Step::Recode(spec) => recode_ranges(t, spec)?,
        Step::BlankImpute { attribute, rows } => blank_and_impute(t, attribute, rows)?,
        Step::Blur {
            attribute,
            quasi,
            rows,
        } => {
            let all: Vec<usize>;
            let rows = match rows {
                Some(r) => r.as_slice(),
                None => {
                    all = (0..t.len()).collect();
                    &all
                }
            };
            blur(t, attribute, quasi, rows)?
        }
        Step::Synthesize => synthesize(t, seed),
    })
}

/// Runs every step in order; step `i` gets sub-seed `seed + i`.
pub fn run_steps(t: &Table, steps: &[Step], seed: u64) -> Result<Table> {
    let mut current = t.clone();
    for (i, step) in steps.iter().enumerate() {
        current = apply(&current, step, seed.wrapping_add(i as u64)).map_err(|e| match e {
            Error::Core(inner) => invalid(format!("step {i} ({}): {inner}", step.method())),
            other => other,
        })?;
    }
    Ok(current)
}

pub fn report_config(config: &PipelineConfig, records: usize, seed: u64) -> ReportConfig {
    ReportConfig {
        quasi: config.quasi.clone(),
        sensitive: config.sensitive.clone(),
        label: config.label.clone(),
        features: config.features.clone(),
        folds: config.folds.unwrap_or(DEFAULT_FOLDS).min(records.max(2)),
        seed,
    }
}

/// The files a pipeline produces.
#[derive(Debug)]
pub struct Outputs {
    pub table: Table,
    pub report: UtilityReport,
}

pub fn execute(config: &PipelineConfig, original: &Table, seed: u64) -> Result<Outputs> {
    let table = run_steps(original, &config.steps, seed)?;
    let report = build_report(
        original,
        &table,
        &report_config(config, original.len(), seed),
    )?;
    Ok(Outputs { table, report })
}

/// Writes files so that either all of them appear or none do. Each file is
/// written to a temporary sibling first; renames happen only once every
/// file is complete, in the order given.
pub fn write_all_or_nothing(files: &[(&Path, Vec<u8>)]) -> Result<()> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let io = |e| Error::io(*path, e);
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        staged.push((tmp, *path));
    }
    let mut done: Vec<PathBuf> = Vec::new();
    for (tmp, path) in staged {
        if let Err(e) = tmp.persist(path) {
            for p in &done {
                let _ = fs::remove_file(p);
            }
            return Err(Error::io(path, e.error));
        }
        done.push(path.to_owned());
    }
    Ok(())
}

/// Serializes the outputs: privatized CSV, its schema descriptor, report.
pub fn render_outputs(outputs: &Outputs, schema: &Schema) -> Result<(Vec<u8>, Vec<u8>, Vec<u8>)> {
    let mut csv = Vec::new();
    emit_table(&outputs.table, &mut csv)?;
    let schema_text = schema.render(outputs.table.schema()).into_bytes();
    Ok((csv, schema_text, outputs.report.render().into_bytes()))
}
