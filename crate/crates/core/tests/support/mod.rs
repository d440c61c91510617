//! Random tables and brute-force anonymity oracles shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use sdc_core::rng::Rng;
use sdc_core::{AttributeKind, AttributeMeta, Cell, DataClass, GeneralizationHierarchy, Table};

const VALUES: [&str; 4] = ["a", "b", "c", "d"];
const SENSITIVE: [&str; 3] = ["x", "y", "z"];

/// Two-level hierarchy over `VALUES`: a,b → ab; c,d → cd; both → *.
pub fn letter_hierarchy(attribute: &str) -> GeneralizationHierarchy {
    GeneralizationHierarchy::from_chains(
        attribute,
        [
            ["a", "ab", "*"],
            ["b", "ab", "*"],
            ["c", "cd", "*"],
            ["d", "cd", "*"],
        ],
    )
    .unwrap()
}

pub fn quasi_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("q{i}")).collect()
}

/// A table with `quasi` categorical quasi attributes q0.. (with hierarchies)
/// and one sensitive attribute `s`. Cells are missing with probability
/// `missing`.
pub fn random_table(seed: u64, max_rows: usize, quasi: usize, missing: f64) -> Table {
    let mut rng = Rng::seed_from_u64(seed);
    let rows = rng.index(max_rows + 1);
    // Narrow alphabets make classes larger and the checks less trivial.
    let width: Vec<usize> = (0..quasi).map(|_| 1 + rng.index(VALUES.len())).collect();
    let mut schema: Vec<AttributeMeta> = quasi_names(quasi)
        .into_iter()
        .map(|n| {
            let h = letter_hierarchy(&n);
            AttributeMeta::new(n, AttributeKind::Quasi, DataClass::Categorical).with_hierarchy(h)
        })
        .collect();
    schema.push(AttributeMeta::new(
        "s",
        AttributeKind::Sensitive,
        DataClass::Categorical,
    ));
    let records = (0..rows)
        .map(|_| {
            let mut row: Vec<Cell> = width
                .iter()
                .map(|&w| {
                    if rng.bernoulli(missing) {
                        Cell::Missing
                    } else {
                        Cell::text(VALUES[rng.index(w)])
                    }
                })
                .collect();
            row.push(if rng.bernoulli(missing) {
                Cell::Missing
            } else {
                Cell::text(SENSITIVE[rng.index(SENSITIVE.len())])
            });
            row
        })
        .collect();
    Table::new(schema, records).unwrap()
}

fn same_quasi(t: &Table, cols: &[usize], i: usize, j: usize) -> bool {
    cols.iter().all(|&c| t.cell(i, c) == t.cell(j, c))
}

/// Size of each row's class, by pairwise comparison.
pub fn class_sizes(t: &Table, quasi: &[String]) -> Vec<usize> {
    let cols: Vec<usize> = quasi.iter().map(|q| t.index_of(q).unwrap()).collect();
    (0..t.len())
        .map(|i| (0..t.len()).filter(|&j| same_quasi(t, &cols, i, j)).count())
        .collect()
}

/// Distinct non-missing sensitive values in each row's class.
pub fn class_diversity(t: &Table, quasi: &[String], sensitive: &str) -> Vec<usize> {
    let cols: Vec<usize> = quasi.iter().map(|q| t.index_of(q).unwrap()).collect();
    let s = t.index_of(sensitive).unwrap();
    (0..t.len())
        .map(|i| {
            (0..t.len())
                .filter(|&j| same_quasi(t, &cols, i, j))
                .map(|j| t.cell(j, s))
                .filter(|c| !c.is_missing())
                .collect::<BTreeSet<_>>()
                .len()
        })
        .collect()
}

pub fn brute_k(t: &Table, quasi: &[String]) -> Option<usize> {
    class_sizes(t, quasi).into_iter().min()
}

pub fn brute_l(t: &Table, quasi: &[String], sensitive: &str) -> Option<usize> {
    class_diversity(t, quasi, sensitive).into_iter().min()
}

/// Rows that violate k (and l when given).
pub fn brute_violators(
    t: &Table,
    quasi: &[String],
    k: usize,
    l: Option<(&str, usize)>,
) -> BTreeSet<usize> {
    let sizes = class_sizes(t, quasi);
    let diversity = l.map(|(s, _)| class_diversity(t, quasi, s));
    (0..t.len())
        .filter(|&r| {
            sizes[r] < k
                || match (&diversity, l) {
                    (Some(d), Some((_, l))) => d[r] < l,
                    _ => false,
                }
        })
        .collect()
}
