//! Schema descriptor and hierarchy files.
//!
//! A schema descriptor has one line per attribute, in column order:
//!
//! ```text
//! # name, kind, class [, option]...
//! Zip Code, quasi, categorical, hierarchy=zip.tsv
//! Age, quasi, continuous, bounds=0:120
//! ```
//!
//! Kinds are `pii`, `quasi`, `sensitive`, `non_sensitive`; classes are
//! `categorical` and `continuous`. Options are `hierarchy=<path>` (relative
//! to the descriptor's directory), `level=<n>` (the hierarchy level the
//! column's values sit at, default 0) and `bounds=<min>:<max>`. Blank lines
//! and lines starting with `#` are ignored.
//!
//! A hierarchy file has one line per raw value: tab-separated labels from
//! level 0 (the value itself) up to the coarsest level.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sdc_core::{AttributeKind, AttributeMeta, DataClass, GeneralizationHierarchy};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub attributes: Vec<AttributeMeta>,
    hierarchy_paths: BTreeMap<String, PathBuf>,
}

impl Schema {
    pub fn new(attributes: Vec<AttributeMeta>) -> Self {
        Self {
            attributes,
            hierarchy_paths: BTreeMap::new(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn parse(text: &str, origin: &str, base_dir: &Path) -> Result<Self> {
        let mut attributes = Vec::new();
        let mut hierarchy_paths = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| Error::syntax(origin, line_no, m);
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 3 {
                return Err(err("expected `name, kind, class [, option]...`".into()));
            }
            let kind: AttributeKind = fields[1]
                .parse()
                .map_err(|e: sdc_core::Error| err(e.to_string()))?;
            let class: DataClass = fields[2]
                .parse()
                .map_err(|e: sdc_core::Error| err(e.to_string()))?;
            let mut meta = AttributeMeta::new(fields[0], kind, class);
            for option in &fields[3..] {
                let (key, value) = option
                    .split_once('=')
                    .ok_or_else(|| err(format!("option `{option}` is not key=value")))?;
                match key.trim() {
                    "hierarchy" => {
                        let path = base_dir.join(value.trim());
                        let h = read_hierarchy(&path, &meta.name)?;
                        meta = meta.with_hierarchy(h);
                        hierarchy_paths.insert(meta.name.clone(), path);
                    }
                    "level" => {
                        meta.level = value
                            .trim()
                            .parse()
                            .map_err(|_| err(format!("level `{value}` is not a count")))?;
                    }
                    "bounds" => {
                        let parsed = value.split_once(':').and_then(|(lo, hi)| {
                            Some((
                                lo.trim().parse::<f64>().ok()?,
                                hi.trim().parse::<f64>().ok()?,
                            ))
                        });
                        let (lo, hi) = parsed
                            .ok_or_else(|| err(format!("bounds `{value}` are not `min:max`")))?;
                        meta = meta.with_bounds(lo, hi);
                    }
                    other => return Err(err(format!("unknown option `{other}`"))),
                }
            }
            attributes.push(meta);
        }
        // Catch duplicates and bad bounds before any data is read.
        sdc_core::Table::empty(attributes.clone())?;
        Ok(Self {
            attributes,
            hierarchy_paths,
        })
    }

    /// Renders a descriptor for `attributes` (typically a transformed
    /// table's schema), pointing at this schema's hierarchy files by
    /// absolute path.
    pub fn render(&self, attributes: &[AttributeMeta]) -> String {
        let mut out = String::from("# name, kind, class [, option]...\n");
        for meta in attributes {
            let _ = write!(
                out,
                "{}, {}, {}",
                meta.name,
                meta.kind.as_str(),
                meta.class.as_str()
            );
            if let Some(path) = self.hierarchy_paths.get(&meta.name) {
                if meta.hierarchy.is_some() {
                    let path = fs::canonicalize(path).unwrap_or_else(|_| path.clone());
                    let _ = write!(out, ", hierarchy={}", path.display());
                    if meta.level > 0 {
                        let _ = write!(out, ", level={}", meta.level);
                    }
                }
            }
            if let Some((lo, hi)) = meta.bounds {
                let _ = write!(out, ", bounds={lo}:{hi}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn parse_hierarchy(text: &str, attribute: &str) -> Result<GeneralizationHierarchy> {
    let chains = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split('\t').map(str::trim).collect::<Vec<_>>());
    Ok(GeneralizationHierarchy::from_chains(attribute, chains)?)
}

pub fn read_hierarchy(path: &Path, attribute: &str) -> Result<GeneralizationHierarchy> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_hierarchy(&text, attribute)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_kinds_classes_and_bounds() {
        let text = "# comment\n\nFName, pii, categorical\nAge, quasi, continuous, bounds=0:120\n";
        let s = Schema::parse(text, "t", Path::new(".")).unwrap();
        assert_eq!(s.attributes.len(), 2);
        assert_eq!(s.attributes[0].kind, AttributeKind::Pii);
        assert_eq!(s.attributes[1].bounds, Some((0.0, 120.0)));
        assert_eq!(
            s.render(&s.attributes),
            "# name, kind, class [, option]...\nFName, pii, categorical\nAge, quasi, continuous, bounds=0:120\n"
        );
    }

    #[test]
    fn reports_line_numbers() {
        let err = Schema::parse(
            "A, quasi, categorical\nB, secret, categorical\n",
            "s.txt",
            Path::new("."),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, .. }), "{err}");
        let err = Schema::parse("A, quasi\n", "s.txt", Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, .. }));
        assert!(Schema::parse(
            "A, quasi, categorical\nA, pii, categorical\n",
            "s",
            Path::new(".")
        )
        .is_err());
        assert!(Schema::parse("A, quasi, continuous, bounds=3:1\n", "s", Path::new(".")).is_err());
    }

    #[test]
    fn hierarchy_from_tab_separated_text() {
        let h = parse_hierarchy(
            "1961-01-01\t1961-01\t1961\n1961-02-03\t1961-02\t1961\n",
            "DOB",
        )
        .unwrap();
        assert_eq!(h.depth(), 2);
        assert_eq!(h.lift("1961-02-03", 0, 2), Some("1961"));
    }
}
