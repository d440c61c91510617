use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::table::Table;

/// Exchanges the cells of every attribute in `attrs` between the two rows of
/// each pair. Pairs must be disjoint.
pub fn swap_values<S: AsRef<str>>(
    t: &Table,
    attrs: &[S],
    pairs: &[(usize, usize)],
) -> Result<Table> {
    let cols = t.indices_of(attrs)?;
    let mut used = alloc::vec![false; t.len()];
    for &(a, b) in pairs {
        for i in [a, b] {
            if i >= t.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: t.len(),
                });
            }
            if core::mem::replace(&mut used[i], true) {
                return Err(Error::OverlappingPairs(i));
            }
        }
    }
    let (schema, mut rows) = t.clone().into_parts();
    for &(a, b) in pairs {
        for &c in &cols {
            let tmp = core::mem::replace(&mut rows[a][c], crate::table::Cell::Missing);
            rows[a][c] = core::mem::replace(&mut rows[b][c], tmp);
        }
    }
    Ok(Table::from_parts(schema, rows))
}

/// Picks `⌊fraction · n / 2⌋` disjoint row pairs uniformly at random (by
/// shuffling the row indices and pairing them off in order) and swaps them.
pub fn random_swap<S: AsRef<str>>(
    t: &Table,
    attrs: &[S],
    fraction: f64,
    seed: u64,
) -> Result<Table> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(alloc::format!(
            "swap fraction {fraction} is outside [0, 1]"
        )));
    }
    let count = libm::floor(fraction * t.len() as f64 / 2.0) as usize;
    let mut order: Vec<usize> = (0..t.len()).collect();
    Rng::seed_from_u64(seed).shuffle(&mut order);
    let pairs: Vec<(usize, usize)> = order
        .chunks_exact(2)
        .take(count)
        .map(|p| (p[0], p[1]))
        .collect();
    swap_values(t, attrs, &pairs)
}
