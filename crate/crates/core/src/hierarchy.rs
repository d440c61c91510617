//! Domain generalization hierarchies.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Ordered levels of increasingly coarse labels for one attribute.
///
/// Level 0 holds the raw values. Each step up is a total function from the
/// labels of one level to the labels of the next, so a group formed at a
/// lower level is never split at a higher one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralizationHierarchy {
    attribute: String,
    labels: Vec<BTreeSet<String>>,
    steps: Vec<BTreeMap<String, String>>,
}

impl GeneralizationHierarchy {
    /// Builds a hierarchy from one chain per raw value, each listing that
    /// value's labels from level 0 up to the top level.
    pub fn from_chains<I, C, S>(attribute: impl Into<String>, chains: I) -> Result<Self>
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let attribute = attribute.into();
        let mut labels: Vec<BTreeSet<String>> = Vec::new();
        let mut steps: Vec<BTreeMap<String, String>> = Vec::new();
        let mut width = None;
        for chain in chains {
            let chain: Vec<String> = chain.into_iter().map(Into::into).collect();
            if chain.is_empty() {
                return Err(Error::InvalidParameter(alloc::format!(
                    "hierarchy for `{attribute}` contains an empty chain"
                )));
            }
            match width {
                None => {
                    width = Some(chain.len());
                    labels.resize_with(chain.len(), BTreeSet::new);
                    steps.resize_with(chain.len() - 1, BTreeMap::new);
                }
                Some(w) if w != chain.len() => {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "hierarchy for `{attribute}`: chain for `{}` has {} levels, expected {w}",
                        chain[0],
                        chain.len()
                    )));
                }
                Some(_) => {}
            }
            for (level, label) in chain.iter().enumerate() {
                labels[level].insert(label.clone());
                if let Some(parent) = chain.get(level + 1) {
                    match steps[level].get(label) {
                        Some(existing) if existing != parent => {
                            return Err(Error::HierarchyConflict {
                                attribute,
                                level: level + 1,
                                label: label.clone(),
                            });
                        }
                        Some(_) => {}
                        None => {
                            steps[level].insert(label.clone(), parent.clone());
                        }
                    }
                }
            }
        }
        if width.is_none() {
            return Err(Error::InvalidParameter(alloc::format!(
                "hierarchy for `{attribute}` is empty"
            )));
        }
        Ok(Self {
            attribute,
            labels,
            steps,
        })
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    /// Number of generalization steps above level 0.
    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    pub fn contains(&self, level: usize, label: &str) -> bool {
        self.labels
            .get(level)
            .is_some_and(|set| set.contains(label))
    }

    /// Maps a label at level `from` to its ancestor at level `to`.
    pub fn lift<'a>(&'a self, label: &'a str, from: usize, to: usize) -> Option<&'a str> {
        if from > to || to > self.depth() || !self.contains(from, label) {
            return None;
        }
        let mut current = label;
        for step in &self.steps[from..to] {
            current = step.get(current)?.as_str();
        }
        Some(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn birthdates() -> GeneralizationHierarchy {
        GeneralizationHierarchy::from_chains(
            "DOB",
            vec![
                vec!["1961-01-01", "1961-01", "1961"],
                vec!["1961-01-15", "1961-01", "1961"],
                vec!["1961-03-02", "1961-03", "1961"],
            ],
        )
        .unwrap()
    }

    #[test]
    fn lifts_through_levels() {
        let h = birthdates();
        assert_eq!(h.depth(), 2);
        assert_eq!(h.lift("1961-01-01", 0, 0), Some("1961-01-01"));
        assert_eq!(h.lift("1961-01-01", 0, 1), Some("1961-01"));
        assert_eq!(h.lift("1961-01-01", 0, 2), Some("1961"));
        assert_eq!(h.lift("1961-03", 1, 2), Some("1961"));
        assert_eq!(h.lift("1961-01-01", 0, 3), None);
        assert_eq!(h.lift("1962-01-01", 0, 1), None);
    }

    #[test]
    fn rejects_split_groups() {
        let err = GeneralizationHierarchy::from_chains(
            "DOB",
            vec![vec!["a", "x", "top"], vec!["b", "x", "other"]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::HierarchyConflict { level: 2, .. }));
    }

    #[test]
    fn rejects_ragged_chains() {
        assert!(
            GeneralizationHierarchy::from_chains("A", vec![vec!["a", "b"], vec!["c"]]).is_err()
        );
        assert!(GeneralizationHierarchy::from_chains("A", Vec::<Vec<&str>>::new()).is_err());
    }
}
