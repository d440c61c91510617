//! Methods that coarsen or remove values without altering them:
//! suppression, hierarchy generalization, k-anonymity and l-diversity.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::table::{AttributeKind, AttributeMeta, Cell, DataClass, Table};

/// Blanks every cell the selector picks. The selector sees the row index,
/// the column's metadata and the current cell.
pub fn suppress_cells<F>(t: &Table, mut selector: F) -> Table
where
    F: FnMut(usize, &AttributeMeta, &Cell) -> bool,
{
    let rows = t
        .rows()
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .zip(t.schema())
                .map(|(cell, meta)| {
                    if selector(r, meta, cell) {
                        Cell::Missing
                    } else {
                        cell.clone()
                    }
                })
                .collect()
        })
        .collect();
    Table::from_parts(t.schema().to_vec(), rows)
}

/// Removes the listed records; survivors keep their relative order.
pub fn suppress_records(t: &Table, rows: &[usize]) -> Result<Table> {
    let doomed = checked_index_set(rows, t.len())?;
    Ok(t.select_rows((0..t.len()).filter(|r| !doomed.contains(r))))
}

pub(crate) fn checked_index_set(rows: &[usize], len: usize) -> Result<BTreeSet<usize>> {
    rows.iter()
        .map(|&index| {
            if index < len {
                Ok(index)
            } else {
                Err(Error::IndexOutOfRange { index, len })
            }
        })
        .collect()
}

/// Replaces every cell of `attr` by its label at hierarchy level `level`.
///
/// Levels are absolute: a column already generalized to level 1 can be
/// raised to 2 but not lowered back to 0. Generalized continuous columns
/// become categorical.
pub fn generalize(t: &Table, attr: &str, level: usize) -> Result<Table> {
    let col = t.index_of(attr)?;
    let meta = &t.schema()[col];
    let hierarchy = meta
        .hierarchy
        .as_ref()
        .ok_or_else(|| Error::NoHierarchy(attr.to_string()))?;
    if level < meta.level || level > hierarchy.depth() {
        return Err(Error::LevelOutOfRange {
            attribute: attr.to_string(),
            level,
            current: meta.level,
            depth: hierarchy.depth(),
        });
    }
    if level == meta.level {
        return Ok(t.clone());
    }
    let mut cells = Vec::with_capacity(t.len());
    for cell in t.column(col) {
        cells.push(match cell {
            Cell::Missing => Cell::Missing,
            other => {
                let label = other.to_string();
                let lifted = hierarchy.lift(&label, meta.level, level).ok_or_else(|| {
                    Error::NotInHierarchy {
                        attribute: attr.to_string(),
                        value: label.clone(),
                    }
                })?;
                Cell::text(lifted)
            }
        });
    }
    let mut new_meta = meta.clone();
    new_meta.level = level;
    new_meta.class = DataClass::Categorical;
    Ok(t.with_column(col, new_meta, cells))
}

/// Records sharing one quasi-identifier tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceClass {
    pub key: Vec<Cell>,
    pub members: Vec<usize>,
    /// Distinct non-missing values per sensitive attribute, parallel to
    /// [`AnonymityAssessment::sensitive`].
    pub sensitive_distinct: Vec<usize>,
}

impl EquivalenceClass {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnonymityAssessment {
    pub quasi: Vec<String>,
    pub sensitive: Vec<String>,
    /// Classes ordered by their first member's row index.
    pub classes: Vec<EquivalenceClass>,
    /// Smallest class size; `None` for a table without records.
    pub k_achieved: Option<usize>,
    /// Per sensitive attribute, the smallest distinct-value count over classes.
    pub l_achieved: Vec<Option<usize>>,
}

impl AnonymityAssessment {
    pub fn l_for(&self, sensitive: &str) -> Option<usize> {
        let i = self.sensitive.iter().position(|s| s == sensitive)?;
        self.l_achieved[i]
    }
}

/// Outcome of a k-anonymity or l-diversity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub assessment: AnonymityAssessment,
    pub k: usize,
    pub l: Option<usize>,
    pub passed: bool,
    /// Indices into `assessment.classes` of the classes that violate.
    pub failing_classes: Vec<usize>,
}

/// Groups records by their quasi tuple. Missing quasi values form their own
/// group rather than matching anything.
pub fn assess<S: AsRef<str>>(
    t: &Table,
    quasi: &[S],
    sensitive: &[String],
) -> Result<AnonymityAssessment> {
    let quasi_cols = t.indices_of(quasi)?;
    let sensitive_cols = t.indices_of(sensitive)?;
    let mut index: BTreeMap<Vec<Cell>, usize> = BTreeMap::new();
    let mut classes: Vec<EquivalenceClass> = Vec::new();
    let mut values: Vec<Vec<BTreeSet<&Cell>>> = Vec::new();
    for (r, row) in t.rows().iter().enumerate() {
        let key: Vec<Cell> = quasi_cols.iter().map(|&c| row[c].clone()).collect();
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            classes.push(EquivalenceClass {
                key,
                members: Vec::new(),
                sensitive_distinct: Vec::new(),
            });
            values.push(sensitive_cols.iter().map(|_| BTreeSet::new()).collect());
            classes.len() - 1
        });
        classes[slot].members.push(r);
        for (set, &c) in values[slot].iter_mut().zip(&sensitive_cols) {
            if !row[c].is_missing() {
                set.insert(&row[c]);
            }
        }
    }
    for (class, sets) in classes.iter_mut().zip(&values) {
        class.sensitive_distinct = sets.iter().map(BTreeSet::len).collect();
    }
    let k_achieved = classes.iter().map(EquivalenceClass::size).min();
    let l_achieved = (0..sensitive_cols.len())
        .map(|i| classes.iter().map(|c| c.sensitive_distinct[i]).min())
        .collect();
    Ok(AnonymityAssessment {
        quasi: quasi.iter().map(|q| q.as_ref().to_string()).collect(),
        sensitive: sensitive.to_vec(),
        classes,
        k_achieved,
        l_achieved,
    })
}

fn default_sensitive<S: AsRef<str>>(t: &Table, quasi: &[S], first: Option<&str>) -> Vec<String> {
    let mut out: Vec<String> = first.map(ToString::to_string).into_iter().collect();
    for meta in t.schema() {
        if meta.kind == AttributeKind::Sensitive
            && Some(meta.name.as_str()) != first
            && !quasi.iter().any(|q| q.as_ref() == meta.name)
        {
            out.push(meta.name.clone());
        }
    }
    out
}

/// Passes iff every equivalence class over `quasi` has at least `k` members.
/// The assessment also reports distinct counts for every attribute tagged
/// sensitive that is not part of `quasi`.
pub fn verify_k_anonymity<S: AsRef<str>>(t: &Table, quasi: &[S], k: usize) -> Result<Verdict> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let sensitive = default_sensitive(t, quasi, None);
    let assessment = assess(t, quasi, &sensitive)?;
    let failing_classes: Vec<usize> = assessment
        .classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.size() < k)
        .map(|(i, _)| i)
        .collect();
    Ok(Verdict {
        passed: failing_classes.is_empty(),
        assessment,
        k,
        l: None,
        failing_classes,
    })
}

/// Distinct l-diversity: k-anonymity at `k` plus at least `l` distinct
/// non-missing values of `sensitive` in every class.
pub fn verify_l_diversity<S: AsRef<str>>(
    t: &Table,
    quasi: &[S],
    sensitive: &str,
    k: usize,
    l: usize,
) -> Result<Verdict> {
    if k == 0 || l == 0 {
        return Err(Error::InvalidParameter("k and l must be at least 1".into()));
    }
    t.index_of(sensitive)?;
    if quasi.iter().any(|q| q.as_ref() == sensitive) {
        return Err(Error::SensitiveInQuasi(sensitive.to_string()));
    }
    let sensitive_list = default_sensitive(t, quasi, Some(sensitive));
    let assessment = assess(t, quasi, &sensitive_list)?;
    let failing_classes: Vec<usize> = assessment
        .classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.size() < k || c.sensitive_distinct[0] < l)
        .map(|(i, _)| i)
        .collect();
    Ok(Verdict {
        passed: failing_classes.is_empty(),
        assessment,
        k,
        l: Some(l),
        failing_classes,
    })
}

/// What the k-anonymity enforcer did.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EnforcementReport {
    /// Final hierarchy level of each quasi attribute, in the order given.
    pub levels: Vec<(String, usize)>,
    /// Attributes raised one level at a time, in the order applied.
    pub raised: Vec<String>,
    /// Input row indices removed after generalization, ascending.
    pub suppressed: Vec<usize>,
}

fn violating_rows<S: AsRef<str>>(t: &Table, quasi: &[S], k: usize) -> Result<Vec<usize>> {
    let assessment = assess(t, quasi, &[])?;
    let mut rows: Vec<usize> = assessment
        .classes
        .into_iter()
        .filter(|c| c.size() < k)
        .flat_map(|c| c.members)
        .collect();
    rows.sort_unstable();
    Ok(rows)
}

/// Greedy full-domain generalization followed by suppression.
///
/// While violating records remain and some quasi attribute can still be
/// raised, the attribute whose one-level raise leaves the fewest violating
/// records is raised (ties go to the attribute earliest in the schema).
/// Records still in undersized classes are then suppressed.
pub fn enforce_k_anonymity<S: AsRef<str>>(
    t: &Table,
    quasi: &[S],
    k: usize,
) -> Result<(Table, EnforcementReport)> {
    if k < 2 {
        return Err(Error::InvalidParameter(
            "k-anonymity enforcement needs k >= 2".into(),
        ));
    }
    let mut cols = t.indices_of(quasi)?;
    if k > t.len() {
        return Err(Error::KAnonymityUnachievable {
            k,
            records: t.len(),
        });
    }
    // Candidates are scanned in schema order so ties go to the leftmost.
    cols.sort_unstable();
    cols.dedup();

    let mut current = t.clone();
    let mut raised = Vec::new();
    let mut violating = violating_rows(&current, quasi, k)?;
    while !violating.is_empty() {
        let mut best: Option<(usize, Table, Vec<usize>)> = None;
        for &col in &cols {
            let meta = &current.schema()[col];
            let Some(h) = &meta.hierarchy else { continue };
            if meta.level >= h.depth() {
                continue;
            }
            let candidate = generalize(&current, &meta.name, meta.level + 1)?;
            let remaining = violating_rows(&candidate, quasi, k)?;
            if best
                .as_ref()
                .is_none_or(|(_, _, fewest)| remaining.len() < fewest.len())
            {
                best = Some((col, candidate, remaining));
            }
        }
        let Some((col, table, remaining)) = best else {
            break;
        };
        raised.push(t.schema()[col].name.clone());
        current = table;
        violating = remaining;
    }

    if violating.len() == current.len() {
        return Err(Error::KAnonymityUnachievable {
            k,
            records: t.len(),
        });
    }
    let result = suppress_records(&current, &violating)?;
    let levels = quasi
        .iter()
        .map(|q| {
            let name = q.as_ref();
            Ok((name.to_string(), result.attribute(name)?.level))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        result,
        EnforcementReport {
            levels,
            raised,
            suppressed: violating,
        },
    ))
}
