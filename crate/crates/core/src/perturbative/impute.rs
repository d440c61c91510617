use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::nonperturbative::{assess, checked_index_set};
use crate::stats;
use crate::table::{Cell, DataClass, Table};

/// Blanks the selected cells of `attr` and fills them with the mean
/// (continuous) or mode (categorical, ties to the lexicographically least
/// label) of the cells that were not selected.
pub fn blank_and_impute(t: &Table, attr: &str, rows: &[usize]) -> Result<Table> {
    let col = t.index_of(attr)?;
    let selected = checked_index_set(rows, t.len())?;
    if selected.is_empty() {
        return Ok(t.clone());
    }
    let donors = t
        .column(col)
        .enumerate()
        .filter(|(r, c)| !selected.contains(r) && !c.is_missing())
        .map(|(_, c)| c);
    let fill = match t.schema()[col].class {
        DataClass::Continuous => {
            let values: Vec<f64> = donors.filter_map(Cell::as_f64).collect();
            stats::mean(&values).map(Cell::Number)
        }
        DataClass::Categorical => {
            let mut counts: BTreeMap<&Cell, usize> = BTreeMap::new();
            for cell in donors {
                *counts.entry(cell).or_insert(0) += 1;
            }
            // Iteration is in ascending label order, so the strict `>` keeps
            // the least label among ties.
            counts
                .into_iter()
                .fold(None, |best: Option<(&Cell, usize)>, (cell, n)| match best {
                    Some((_, m)) if m >= n => best,
                    _ => Some((cell, n)),
                })
                .map(|(cell, _)| cell.clone())
        }
    }
    .ok_or_else(|| Error::NoDonors(attr.to_string()))?;
    let cells = t
        .column(col)
        .enumerate()
        .map(|(r, cell)| {
            if selected.contains(&r) && !cell.is_missing() {
                fill.clone()
            } else {
                cell.clone()
            }
        })
        .collect();
    Ok(t.with_column(col, t.schema()[col].clone(), cells))
}

/// Replaces each selected cell of `attr` by the mean of `attr` over its
/// equivalence class on `quasi` (itself included). When the class holds no
/// other value the global mean is used instead.
pub fn blur<S: AsRef<str>>(t: &Table, attr: &str, quasi: &[S], rows: &[usize]) -> Result<Table> {
    let col = t.continuous_index(attr)?;
    let selected = checked_index_set(rows, t.len())?;
    let assessment = assess(t, quasi, &[])?;
    let global = stats::mean(&t.numbers(col));
    let mut class_of = alloc::vec![0usize; t.len()];
    let class_means: Vec<Option<f64>> = assessment
        .classes
        .iter()
        .enumerate()
        .map(|(i, class)| {
            let values: Vec<f64> = class
                .members
                .iter()
                .filter_map(|&r| {
                    class_of[r] = i;
                    t.cell(r, col).as_f64()
                })
                .collect();
            if values.len() > 1 {
                stats::mean(&values)
            } else {
                global
            }
        })
        .collect();
    let cells = t
        .column(col)
        .enumerate()
        .map(|(r, cell)| match (cell, class_means[class_of[r]]) {
            (Cell::Number(_), Some(m)) if selected.contains(&r) => Cell::Number(m),
            _ => cell.clone(),
        })
        .collect();
    Ok(t.with_column(col, t.schema()[col].clone(), cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{AttributeKind, AttributeMeta};
    use alloc::vec;

    fn table(rows: &[(&str, &str)]) -> Table {
        let schema = vec![
            AttributeMeta::new("g", AttributeKind::Quasi, DataClass::Categorical),
            AttributeMeta::new("v", AttributeKind::Sensitive, DataClass::Continuous),
        ];
        Table::parse(schema, rows.iter().map(|(g, v)| vec![*g, *v])).unwrap()
    }

    #[test]
    fn imputes_mean_of_unselected() {
        let t = table(&[("a", "1"), ("a", "2"), ("a", "3")]);
        let out = blank_and_impute(&t, "v", &[2]).unwrap();
        assert_eq!(out.numbers(1), [1.0, 2.0, 1.5]);
        assert_eq!(blank_and_impute(&t, "v", &[]).unwrap(), t);
        assert_eq!(
            blank_and_impute(&t, "v", &[0, 1, 2]).unwrap_err(),
            Error::NoDonors("v".into())
        );
    }

    #[test]
    fn imputes_least_mode() {
        let t = table(&[("b", "1"), ("a", "1"), ("c", "1"), ("x", "1")]);
        let out = blank_and_impute(&t, "g", &[3]).unwrap();
        assert_eq!(out.cell(3, 0), &Cell::text("a"));
    }

    #[test]
    fn blur_uses_class_mean() {
        let t = table(&[("a", "1"), ("a", "3"), ("b", "10"), ("c", "4")]);
        let out = blur(&t, "v", &["g"], &[0, 2]).unwrap();
        assert_eq!(out.numbers(1), [2.0, 3.0, 4.5, 4.0]);
    }

    #[test]
    fn blur_of_uniform_class_is_identity() {
        let t = table(&[("a", "5"), ("a", "5")]);
        assert_eq!(blur(&t, "v", &["g"], &[0, 1]).unwrap(), t);
        assert!(blur(&t, "g", &["v"], &[0]).is_err());
    }
}
