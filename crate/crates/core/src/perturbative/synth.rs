use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::rng::Rng;
use crate::stats;
use crate::table::{Cell, DataClass, Table};

const ROW_RETRIES: usize = 32;

enum Marginal {
    Normal {
        missing_rate: f64,
        mean: f64,
        std_dev: f64,
    },
    AllMissing,
    Empirical(Vec<Cell>),
}

impl Marginal {
    fn fit(t: &Table, col: usize) -> Self {
        match t.schema()[col].class {
            DataClass::Continuous => {
                let values = t.numbers(col);
                match stats::mean(&values) {
                    None => Marginal::AllMissing,
                    Some(mean) => Marginal::Normal {
                        missing_rate: (t.len() - values.len()) as f64 / t.len() as f64,
                        mean,
                        std_dev: stats::sample_std(&values).unwrap_or(0.0),
                    },
                }
            }
            DataClass::Categorical => Marginal::Empirical(t.column(col).cloned().collect()),
        }
    }

    fn sample(&self, rng: &mut Rng) -> Cell {
        match self {
            Marginal::AllMissing => Cell::Missing,
            Marginal::Normal {
                missing_rate,
                mean,
                std_dev,
            } => {
                if *missing_rate > 0.0 && rng.bernoulli(*missing_rate) {
                    Cell::Missing
                } else {
                    Cell::Number(rng.normal(*mean, *std_dev))
                }
            }
            Marginal::Empirical(cells) => cells[rng.index(cells.len())].clone(),
        }
    }
}

/// Fully-synthetic replacement with the same schema and record count.
///
/// Attributes are modelled independently: continuous ones as
/// `N(mean, sample-std²)` of the source column, categorical ones by their
/// empirical frequencies (missing included), so joint structure is not
/// preserved. A generated row equal to a source row is redrawn up to 32
/// times, then altered one categorical cell at a time until it is new. Only
/// a table whose every possible row exists in the source (constant columns,
/// for instance) can still yield a source row.
pub fn synthesize(t: &Table, seed: u64) -> Table {
    let mut rng = Rng::seed_from_u64(seed);
    if t.is_empty() {
        return t.clone();
    }
    let marginals: Vec<Marginal> = (0..t.width()).map(|c| Marginal::fit(t, c)).collect();
    let source: BTreeSet<&[Cell]> = t.rows().iter().map(Vec::as_slice).collect();
    let alternatives: Vec<BTreeSet<&Cell>> = (0..t.width())
        .map(|c| match t.schema()[c].class {
            DataClass::Categorical => t.column(c).collect(),
            DataClass::Continuous => BTreeSet::new(),
        })
        .collect();

    let mut rows = Vec::with_capacity(t.len());
    for _ in 0..t.len() {
        let mut row: Vec<Cell> = marginals.iter().map(|m| m.sample(&mut rng)).collect();
        let mut tries = 0;
        while source.contains(row.as_slice()) && tries < ROW_RETRIES {
            row = marginals.iter().map(|m| m.sample(&mut rng)).collect();
            tries += 1;
        }
        if source.contains(row.as_slice()) {
            'perturb: for (c, options) in alternatives.iter().enumerate() {
                let original = row[c].clone();
                for &option in options {
                    row[c] = option.clone();
                    if !source.contains(row.as_slice()) {
                        break 'perturb;
                    }
                }
                row[c] = original;
            }
        }
        rows.push(row);
    }

    let mut schema = t.schema().to_vec();
    for (c, meta) in schema.iter_mut().enumerate() {
        if let Some((lo, hi)) = meta.bounds {
            let fits = rows
                .iter()
                .filter_map(|r| r[c].as_f64())
                .all(|v| v >= lo && v <= hi);
            if !fits {
                meta.bounds = None;
            }
        }
    }
    Table::from_parts(schema, rows)
}
