//! Privacy-utility measurement: distribution distances, a 1-nearest-neighbour
//! separability gauge, and the audit report tying them together.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::nonperturbative::verify_k_anonymity;
use crate::rng::Rng;
use crate::stats;
use crate::table::{Cell, DataClass, Table};

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
/// Both samples must be non-empty.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max(libm::fabs(i as f64 / n - j as f64 / m));
    }
    d
}

/// Total-variation distance `½ Σ |p − q|` between two label frequency maps.
pub fn total_variation(a: &BTreeMap<&str, usize>, b: &BTreeMap<&str, usize>) -> f64 {
    let na: usize = a.values().sum();
    let nb: usize = b.values().sum();
    let keys: BTreeSet<&str> = a.keys().chain(b.keys()).copied().collect();
    let mut total = 0.0;
    for k in keys {
        let p = *a.get(k).unwrap_or(&0) as f64 / na as f64;
        let q = *b.get(k).unwrap_or(&0) as f64 / nb as f64;
        total += libm::fabs(p - q);
    }
    (total / 2.0).min(1.0)
}

fn frequencies(t: &Table, col: usize) -> BTreeMap<&str, usize> {
    let mut out = BTreeMap::new();
    for cell in t.column(col) {
        if let Cell::Text(s) = cell {
            *out.entry(s.as_str()).or_insert(0) += 1;
        }
    }
    out
}

/// KS statistic for continuous attributes, total-variation distance for
/// categorical ones. Missing cells are ignored.
pub fn distribution_distance(original: &Table, privatized: &Table, attr: &str) -> Result<f64> {
    let a = original.index_of(attr)?;
    let b = privatized.index_of(attr)?;
    let class = original.schema()[a].class;
    if privatized.schema()[b].class != class {
        return Err(Error::ClassMismatch(attr.to_string()));
    }
    match class {
        DataClass::Continuous => {
            let (x, y) = (original.numbers(a), privatized.numbers(b));
            if x.is_empty() || y.is_empty() {
                return Err(Error::EmptyColumn(attr.to_string()));
            }
            Ok(ks_statistic(&x, &y))
        }
        DataClass::Categorical => {
            let (x, y) = (frequencies(original, a), frequencies(privatized, b));
            if x.is_empty() || y.is_empty() {
                return Err(Error::EmptyColumn(attr.to_string()));
            }
            Ok(total_variation(&x, &y))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeResult {
    pub baseline_accuracy: f64,
    pub privatized_accuracy: f64,
    /// Records with a label and every feature present in both tables.
    pub records: usize,
}

/// 1-nearest-neighbour classification accuracy, by k-fold cross-validation,
/// on the original and on the privatized table.
///
/// Features are standardized with the original table's means and standard
/// deviations for both tables. Both tables use the same fold assignment: the
/// usable records are shuffled with `seed` and dealt round-robin into
/// `folds` folds (`folds` equal to the record count is leave-one-out).
/// Distance ties go to the lowest row index.
pub fn separability_gauge<S: AsRef<str>>(
    original: &Table,
    privatized: &Table,
    label_attr: &str,
    feature_attrs: &[S],
    folds: usize,
    seed: u64,
) -> Result<GaugeResult> {
    if original.len() != privatized.len() {
        return Err(Error::SchemaMismatch(
            "the gauge needs both tables to hold the same records".into(),
        ));
    }
    if feature_attrs.is_empty() {
        return Err(Error::InvalidParameter(
            "the gauge needs at least one feature".into(),
        ));
    }
    let label_cols = [
        original.index_of(label_attr)?,
        privatized.index_of(label_attr)?,
    ];
    if original.schema()[label_cols[0]].class != DataClass::Categorical {
        return Err(Error::NotCategorical(label_attr.to_string()));
    }
    let feature_cols = [
        features_of(original, feature_attrs)?,
        features_of(privatized, feature_attrs)?,
    ];

    let usable: Vec<usize> = (0..original.len())
        .filter(|&r| {
            [original, privatized].iter().enumerate().all(|(i, t)| {
                !t.cell(r, label_cols[i]).is_missing()
                    && feature_cols[i].iter().all(|&c| !t.cell(r, c).is_missing())
            })
        })
        .collect();
    let classes: BTreeSet<&Cell> = usable
        .iter()
        .map(|&r| original.cell(r, label_cols[0]))
        .collect();
    if classes.len() < 2 {
        return Err(Error::TooFewClasses(classes.len()));
    }
    if folds < 2 || usable.len() < folds {
        return Err(Error::InvalidParameter(alloc::format!(
            "need 2 <= folds <= usable records, got {folds} folds for {} records",
            usable.len()
        )));
    }

    // Standardization from the original table only.
    let scales: Vec<(f64, f64)> = feature_cols[0]
        .iter()
        .map(|&c| {
            let values: Vec<f64> = usable
                .iter()
                .filter_map(|&r| original.cell(r, c).as_f64())
                .collect();
            let mean = stats::mean(&values).unwrap_or(0.0);
            let sd = stats::sample_std(&values)
                .filter(|s| *s > 0.0)
                .unwrap_or(1.0);
            (mean, sd)
        })
        .collect();

    let mut order = usable.clone();
    Rng::seed_from_u64(seed).shuffle(&mut order);
    let mut fold_of = BTreeMap::new();
    for (i, &r) in order.iter().enumerate() {
        fold_of.insert(r, i % folds);
    }
    let fold: Vec<usize> = usable.iter().map(|r| fold_of[r]).collect();

    let accuracy = |t: &Table, side: usize| -> f64 {
        let points: Vec<Vec<f64>> = usable
            .iter()
            .map(|&r| {
                feature_cols[side]
                    .iter()
                    .zip(&scales)
                    .map(|(&c, (m, s))| (t.cell(r, c).as_f64().unwrap_or(0.0) - m) / s)
                    .collect()
            })
            .collect();
        let labels: Vec<&Cell> = usable
            .iter()
            .map(|&r| t.cell(r, label_cols[side]))
            .collect();
        let mut correct = 0usize;
        for i in 0..points.len() {
            let mut best: Option<(f64, usize)> = None;
            for j in 0..points.len() {
                if fold[j] == fold[i] {
                    continue;
                }
                let d: f64 = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
            if let Some((_, j)) = best {
                if labels[j] == labels[i] {
                    correct += 1;
                }
            }
        }
        correct as f64 / points.len() as f64
    };

    Ok(GaugeResult {
        baseline_accuracy: accuracy(original, 0),
        privatized_accuracy: accuracy(privatized, 1),
        records: usable.len(),
    })
}

fn features_of<S: AsRef<str>>(t: &Table, names: &[S]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| t.continuous_index(n.as_ref()))
        .collect()
}

/// `(x, y, label)`; a missing coordinate is `None`.
pub type ScatterPoint = (Option<f64>, Option<f64>, String);

/// Points in row order, for external plotting.
pub fn scatter_points(
    t: &Table,
    x_attr: &str,
    y_attr: &str,
    label_attr: &str,
) -> Result<Vec<ScatterPoint>> {
    let x = t.continuous_index(x_attr)?;
    let y = t.continuous_index(y_attr)?;
    let label = t.index_of(label_attr)?;
    Ok(t.rows()
        .iter()
        .map(|row| (row[x].as_f64(), row[y].as_f64(), row[label].to_string()))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeUtility {
    Continuous {
        mean_delta: Option<f64>,
        std_delta: Option<f64>,
        ks: Option<f64>,
    },
    Categorical {
        tv: Option<f64>,
    },
    ClassChanged {
        from: DataClass,
        to: DataClass,
    },
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnonymitySummary {
    pub quasi: Vec<String>,
    pub k_achieved: Option<usize>,
    pub l_achieved: Vec<(String, Option<usize>)>,
}

/// What to include in a [`UtilityReport`] beyond the per-attribute metrics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportConfig {
    /// Quasi-identifiers for the anonymity section; empty skips it.
    pub quasi: Vec<String>,
    /// Sensitive attributes whose l is reported; defaults to those tagged
    /// sensitive in the privatized schema.
    pub sensitive: Vec<String>,
    /// Label for the separability gauge; `None` skips it.
    pub label: Option<String>,
    pub features: Vec<String>,
    pub folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityReport {
    pub records_original: usize,
    pub records_privatized: usize,
    pub records_suppressed: usize,
    pub cells_suppressed: usize,
    pub attributes: Vec<(String, AttributeUtility)>,
    pub gauge: Option<GaugeResult>,
    pub anonymity: Option<AnonymitySummary>,
}

/// Compares `privatized` against `original`. Every privatized attribute must
/// exist in the original; original attributes absent from the privatized
/// table are reported as dropped.
///
/// Suppressed records are `original − privatized` record counts. Suppressed
/// cells are counted position by position when the record counts agree, and
/// as the growth in missing cells otherwise.
pub fn build_report(
    original: &Table,
    privatized: &Table,
    config: &ReportConfig,
) -> Result<UtilityReport> {
    for name in privatized.names() {
        if original.index_of(name).is_err() {
            return Err(Error::SchemaMismatch(alloc::format!(
                "privatized attribute `{name}` is not in the original table"
            )));
        }
    }
    let mut attributes = Vec::new();
    let mut cells_suppressed = 0usize;
    let mut missing_growth = 0isize;
    for (a, meta) in original.schema().iter().enumerate() {
        let Ok(b) = privatized.index_of(&meta.name) else {
            attributes.push((meta.name.clone(), AttributeUtility::Dropped));
            continue;
        };
        if original.len() == privatized.len() {
            cells_suppressed += original
                .column(a)
                .zip(privatized.column(b))
                .filter(|(x, y)| !x.is_missing() && y.is_missing())
                .count();
        } else {
            let missing =
                |t: &Table, c: usize| t.column(c).filter(|x| x.is_missing()).count() as isize;
            missing_growth += missing(privatized, b) - missing(original, a);
        }
        let to = privatized.schema()[b].class;
        let utility = match (meta.class, to) {
            (DataClass::Continuous, DataClass::Continuous) => {
                let (x, y) = (original.numbers(a), privatized.numbers(b));
                let delta = |f: fn(&[f64]) -> Option<f64>| Some(f(&y)? - f(&x)?);
                AttributeUtility::Continuous {
                    mean_delta: delta(stats::mean),
                    std_delta: delta(stats::sample_std),
                    ks: (!x.is_empty() && !y.is_empty()).then(|| ks_statistic(&x, &y)),
                }
            }
            (DataClass::Categorical, DataClass::Categorical) => {
                let (x, y) = (frequencies(original, a), frequencies(privatized, b));
                AttributeUtility::Categorical {
                    tv: (!x.is_empty() && !y.is_empty()).then(|| total_variation(&x, &y)),
                }
            }
            (from, to) => AttributeUtility::ClassChanged { from, to },
        };
        attributes.push((meta.name.clone(), utility));
    }
    if original.len() != privatized.len() {
        cells_suppressed = missing_growth.max(0) as usize;
    }

    let gauge = match &config.label {
        Some(label) if original.len() == privatized.len() => Some(separability_gauge(
            original,
            privatized,
            label,
            &config.features,
            config.folds,
            config.seed,
        )?),
        _ => None,
    };

    let anonymity = if config.quasi.is_empty() {
        None
    } else {
        let verdict = verify_k_anonymity(privatized, &config.quasi, 1)?;
        let assessment = verdict.assessment;
        let sensitive: Vec<String> = if config.sensitive.is_empty() {
            assessment.sensitive.clone()
        } else {
            config.sensitive.clone()
        };
        let with_sensitive = crate::nonperturbative::assess(privatized, &config.quasi, &sensitive)?;
        Some(AnonymitySummary {
            quasi: config.quasi.clone(),
            k_achieved: assessment.k_achieved,
            l_achieved: sensitive
                .iter()
                .cloned()
                .zip(with_sensitive.l_achieved)
                .collect(),
        })
    };

    Ok(UtilityReport {
        records_original: original.len(),
        records_privatized: privatized.len(),
        records_suppressed: original.len().saturating_sub(privatized.len()),
        cells_suppressed,
        attributes,
        gauge,
        anonymity,
    })
}

struct Value<T>(Option<T>);

impl<T: fmt::Display> fmt::Display for Value<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Some(v) => v.fmt(f),
            None => f.write_str("NA"),
        }
    }
}

struct Fixed(Option<f64>);

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v:.4}"),
            None => f.write_str("n/a"),
        }
    }
}

impl UtilityReport {
    /// The `key=value` lines of the machine-readable block, in order.
    pub fn metrics(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: String, v: String| out.push((k, v));
        put("records.original".into(), self.records_original.to_string());
        put(
            "records.privatized".into(),
            self.records_privatized.to_string(),
        );
        put(
            "records.suppressed".into(),
            self.records_suppressed.to_string(),
        );
        put("cells.suppressed".into(), self.cells_suppressed.to_string());
        for (name, u) in &self.attributes {
            let key = |field: &str| alloc::format!("attr.{name}.{field}");
            match u {
                AttributeUtility::Continuous {
                    mean_delta,
                    std_delta,
                    ks,
                } => {
                    put(key("class"), "continuous".into());
                    put(key("mean_delta"), Value(*mean_delta).to_string());
                    put(key("std_delta"), Value(*std_delta).to_string());
                    put(key("ks"), Value(*ks).to_string());
                }
                AttributeUtility::Categorical { tv } => {
                    put(key("class"), "categorical".into());
                    put(key("tv"), Value(*tv).to_string());
                }
                AttributeUtility::ClassChanged { from, to } => {
                    put(
                        key("class"),
                        alloc::format!("{}->{}", from.as_str(), to.as_str()),
                    );
                }
                AttributeUtility::Dropped => put(key("class"), "dropped".into()),
            }
        }
        if let Some(g) = &self.gauge {
            put("gauge.records".into(), g.records.to_string());
            put(
                "gauge.baseline_accuracy".into(),
                g.baseline_accuracy.to_string(),
            );
            put(
                "gauge.privatized_accuracy".into(),
                g.privatized_accuracy.to_string(),
            );
        }
        if let Some(a) = &self.anonymity {
            put("anonymity.quasi".into(), a.quasi.join(","));
            put(
                "anonymity.k_achieved".into(),
                Value(a.k_achieved).to_string(),
            );
            for (name, l) in &a.l_achieved {
                put(alloc::format!("anonymity.l.{name}"), Value(*l).to_string());
            }
        }
        out
    }

    /// Human-readable summary followed by a `[metrics]` block of
    /// `key=value` lines.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = self.write_text(&mut s);
        s.push_str("\n[metrics]\n");
        for (k, v) in self.metrics() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    fn write_text(&self, s: &mut String) -> fmt::Result {
        writeln!(s, "Utility report")?;
        writeln!(
            s,
            "records: {} original, {} privatized, {} suppressed; {} cells suppressed",
            self.records_original,
            self.records_privatized,
            self.records_suppressed,
            self.cells_suppressed
        )?;
        writeln!(s)?;
        for (name, u) in &self.attributes {
            match u {
                AttributeUtility::Continuous {
                    mean_delta,
                    std_delta,
                    ks,
                } => writeln!(
                    s,
                    "  {name}: mean delta {}, std delta {}, KS {}",
                    Fixed(*mean_delta),
                    Fixed(*std_delta),
                    Fixed(*ks)
                )?,
                AttributeUtility::Categorical { tv } => {
                    writeln!(s, "  {name}: total variation {}", Fixed(*tv))?
                }
                AttributeUtility::ClassChanged { from, to } => writeln!(
                    s,
                    "  {name}: recoded from {} to {}",
                    from.as_str(),
                    to.as_str()
                )?,
                AttributeUtility::Dropped => writeln!(s, "  {name}: dropped")?,
            }
        }
        if let Some(g) = &self.gauge {
            writeln!(s)?;
            writeln!(
                s,
                "1-NN separability over {} records: baseline {:.4}, privatized {:.4}",
                g.records, g.baseline_accuracy, g.privatized_accuracy
            )?;
        }
        if let Some(a) = &self.anonymity {
            writeln!(s)?;
            writeln!(
                s,
                "anonymity over [{}]: k = {}",
                a.quasi.join(", "),
                Value(a.k_achieved)
            )?;
            for (name, l) in &a.l_achieved {
                writeln!(s, "  l({name}) = {}", Value(*l))?;
            }
        }
        Ok(())
    }
}
