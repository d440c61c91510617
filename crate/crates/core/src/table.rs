//! The microdata model: typed, role-tagged attributes over ordered records.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::hierarchy::GeneralizationHierarchy;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataClass {
    Categorical,
    Continuous,
}

impl DataClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DataClass::Categorical => "categorical",
            DataClass::Continuous => "continuous",
        }
    }
}

impl FromStr for DataClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "categorical" => Ok(DataClass::Categorical),
            "continuous" => Ok(DataClass::Continuous),
            other => Err(Error::InvalidParameter(alloc::format!(
                "unknown data class `{other}`"
            ))),
        }
    }
}

/// Disclosure role of an attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttributeKind {
    Pii,
    Quasi,
    Sensitive,
    NonSensitive,
}

impl AttributeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeKind::Pii => "pii",
            AttributeKind::Quasi => "quasi",
            AttributeKind::Sensitive => "sensitive",
            AttributeKind::NonSensitive => "non_sensitive",
        }
    }
}

impl FromStr for AttributeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pii" => Ok(AttributeKind::Pii),
            "quasi" => Ok(AttributeKind::Quasi),
            "sensitive" => Ok(AttributeKind::Sensitive),
            "non_sensitive" | "non-sensitive" => Ok(AttributeKind::NonSensitive),
            other => Err(Error::InvalidParameter(alloc::format!(
                "unknown attribute kind `{other}`"
            ))),
        }
    }
}

/// One table cell. Continuous columns hold `Number` or `Missing`;
/// categorical columns hold `Text` or `Missing`. `Text` is never empty.
#[derive(Debug, Clone)]
pub enum Cell {
    Missing,
    Text(String),
    Number(f64),
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        let s = s.into();
        if s.is_empty() {
            Cell::Missing
        } else {
            Cell::Text(s)
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Cell::Missing => 0,
            Cell::Number(_) => 1,
            Cell::Text(_) => 2,
        }
    }
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Numbers are finite by construction, so `partial_cmp` is total here and
// treats -0.0 and 0.0 as one value.
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Cell::Number(a), Cell::Number(b)) => a.partial_cmp(b).unwrap_or(Ordering::Equal),
            (Cell::Text(a), Cell::Text(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Missing => Ok(()),
            Cell::Text(s) => f.write_str(s),
            Cell::Number(v) => write!(f, "{v}"),
        }
    }
}

/// Parses a continuous cell; surrounding whitespace is ignored.
pub fn parse_number(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeMeta {
    pub name: String,
    pub kind: AttributeKind,
    pub class: DataClass,
    pub hierarchy: Option<Arc<GeneralizationHierarchy>>,
    /// Hierarchy level the column's values currently sit at.
    pub level: usize,
    pub bounds: Option<(f64, f64)>,
}

impl AttributeMeta {
    pub fn new(name: impl Into<String>, kind: AttributeKind, class: DataClass) -> Self {
        Self {
            name: name.into(),
            kind,
            class,
            hierarchy: None,
            level: 0,
            bounds: None,
        }
    }

    pub fn with_hierarchy(mut self, hierarchy: GeneralizationHierarchy) -> Self {
        self.hierarchy = Some(Arc::new(hierarchy));
        self
    }

    pub fn with_bounds(mut self, min: f64, max: f64) -> Self {
        self.bounds = Some((min, max));
        self
    }

    pub fn is_continuous(&self) -> bool {
        self.class == DataClass::Continuous
    }
}

/// Rectangular microdata. Immutable once built; every transforming operation
/// returns a fresh table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    schema: Vec<AttributeMeta>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Builds a table, checking every schema and cell invariant.
    pub fn new(schema: Vec<AttributeMeta>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        validate_schema(&schema)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::RaggedRow {
                    record: r + 1,
                    expected: schema.len(),
                    found: row.len(),
                });
            }
        }
        let table = Self { schema, rows };
        for c in 0..table.width() {
            table.validate_column(c)?;
        }
        Ok(table)
    }

    pub fn empty(schema: Vec<AttributeMeta>) -> Result<Self> {
        Self::new(schema, Vec::new())
    }

    /// Types raw text records against `schema`. Empty fields become
    /// [`Cell::Missing`]; continuous fields must parse as finite numbers.
    pub fn parse<I, R, S>(schema: Vec<AttributeMeta>, records: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut rows = Vec::new();
        for (r, record) in records.into_iter().enumerate() {
            let fields: Vec<S> = record.into_iter().collect();
            if fields.len() != schema.len() {
                return Err(Error::RaggedRow {
                    record: r + 1,
                    expected: schema.len(),
                    found: fields.len(),
                });
            }
            let mut row = Vec::with_capacity(fields.len());
            for (meta, field) in schema.iter().zip(&fields) {
                let raw = field.as_ref();
                let cell = if raw.is_empty() {
                    Cell::Missing
                } else if meta.is_continuous() {
                    Cell::Number(parse_number(raw).ok_or_else(|| Error::NotNumeric {
                        record: r + 1,
                        attribute: meta.name.clone(),
                        value: raw.to_string(),
                    })?)
                } else {
                    Cell::Text(raw.to_string())
                };
                row.push(cell);
            }
            rows.push(row);
        }
        Self::new(schema, rows)
    }

    /// Assembles a table from parts an operation has already kept valid.
    pub(crate) fn from_parts(schema: Vec<AttributeMeta>, rows: Vec<Vec<Cell>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == schema.len()));
        Self { schema, rows }
    }

    pub(crate) fn into_parts(self) -> (Vec<AttributeMeta>, Vec<Vec<Cell>>) {
        (self.schema, self.rows)
    }

    pub fn schema(&self) -> &[AttributeMeta] {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.schema.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.schema.iter().map(|m| m.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.schema
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn attribute(&self, name: &str) -> Result<&AttributeMeta> {
        Ok(&self.schema[self.index_of(name)?])
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.rows[row][col]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = &Cell> + '_ {
        self.rows.iter().map(move |r| &r[col])
    }

    /// Non-missing numeric values of a column, in row order.
    pub fn numbers(&self, col: usize) -> Vec<f64> {
        self.column(col).filter_map(Cell::as_f64).collect()
    }

    pub(crate) fn continuous_index(&self, name: &str) -> Result<usize> {
        let col = self.index_of(name)?;
        if !self.schema[col].is_continuous() {
            return Err(Error::NotContinuous(name.to_string()));
        }
        Ok(col)
    }

    /// Resolves a list of names to column indices, in the given order.
    pub fn indices_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.index_of(n.as_ref())).collect()
    }

    fn validate_column(&self, col: usize) -> Result<()> {
        let meta = &self.schema[col];
        for (r, row) in self.rows.iter().enumerate() {
            let cell = &row[col];
            match (meta.class, cell) {
                (_, Cell::Missing) => continue,
                (DataClass::Continuous, Cell::Number(v)) => {
                    if !v.is_finite() {
                        return Err(Error::CellClassMismatch {
                            row: r,
                            attribute: meta.name.clone(),
                        });
                    }
                    if let Some((lo, hi)) = meta.bounds {
                        if *v < lo || *v > hi {
                            return Err(Error::OutOfBounds {
                                row: r,
                                attribute: meta.name.clone(),
                                value: *v,
                            });
                        }
                    }
                }
                (DataClass::Categorical, Cell::Text(s)) if !s.is_empty() => {}
                _ => {
                    return Err(Error::CellClassMismatch {
                        row: r,
                        attribute: meta.name.clone(),
                    })
                }
            }
            if let Some(h) = &meta.hierarchy {
                let label = cell.to_string();
                if !h.contains(meta.level, &label) {
                    return Err(Error::NotInHierarchy {
                        attribute: meta.name.clone(),
                        value: label,
                    });
                }
            }
        }
        Ok(())
    }

    /// Replaces one column's cells and metadata, keeping declared bounds only
    /// while every new value still satisfies them.
    pub(crate) fn with_column(
        &self,
        col: usize,
        mut meta: AttributeMeta,
        cells: Vec<Cell>,
    ) -> Table {
        debug_assert_eq!(cells.len(), self.len());
        if let Some((lo, hi)) = meta.bounds {
            let fits = cells
                .iter()
                .filter_map(Cell::as_f64)
                .all(|v| v >= lo && v <= hi);
            if !fits || meta.class != DataClass::Continuous {
                meta.bounds = None;
            }
        }
        let mut schema = self.schema.clone();
        schema[col] = meta;
        let rows = self
            .rows
            .iter()
            .zip(cells)
            .map(|(row, cell)| {
                let mut row = row.clone();
                row[col] = cell;
                row
            })
            .collect();
        Table::from_parts(schema, rows)
    }

    /// Maps the non-missing numeric cells of a continuous column, leaving
    /// every other cell untouched.
    pub(crate) fn map_numbers<F>(&self, col: usize, mut f: F) -> Result<Table>
    where
        F: FnMut(usize, f64) -> Result<f64>,
    {
        let mut cells = Vec::with_capacity(self.len());
        for (r, cell) in self.column(col).enumerate() {
            cells.push(match cell {
                Cell::Number(v) => Cell::Number(f(r, *v)?),
                other => other.clone(),
            });
        }
        Ok(self.with_column(col, self.schema[col].clone(), cells))
    }

    /// Keeps the listed rows, in the given order.
    pub(crate) fn select_rows(&self, rows: impl IntoIterator<Item = usize>) -> Table {
        let rows = rows.into_iter().map(|r| self.rows[r].clone()).collect();
        Table::from_parts(self.schema.clone(), rows)
    }

    /// Projects the listed columns, in the given order.
    pub(crate) fn select_columns(&self, cols: &[usize]) -> Table {
        let schema = cols.iter().map(|&c| self.schema[c].clone()).collect();
        let rows = self
            .rows
            .iter()
            .map(|row| cols.iter().map(|&c| row[c].clone()).collect())
            .collect();
        Table::from_parts(schema, rows)
    }
}

fn validate_schema(schema: &[AttributeMeta]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for meta in schema {
        if !seen.insert(meta.name.as_str()) {
            return Err(Error::DuplicateAttribute(meta.name.clone()));
        }
        if let Some((lo, hi)) = meta.bounds {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidBounds {
                    attribute: meta.name.clone(),
                });
            }
        }
        if let Some(h) = &meta.hierarchy {
            if h.attribute() != meta.name {
                return Err(Error::HierarchyAttributeMismatch {
                    attribute: meta.name.clone(),
                    hierarchy: h.attribute().to_string(),
                });
            }
            if meta.level > h.depth() {
                return Err(Error::LevelOutOfRange {
                    attribute: meta.name.clone(),
                    level: meta.level,
                    current: meta.level,
                    depth: h.depth(),
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub axis: Axis,
    pub pieces: Vec<Table>,
}

impl Partition {
    /// Concatenates the pieces back into one table.
    pub fn reassemble(&self) -> Result<Table> {
        let Some(first) = self.pieces.first() else {
            return Err(Error::InvalidParameter("partition has no pieces".into()));
        };
        match self.axis {
            Axis::Horizontal => {
                let mut rows = Vec::new();
                for piece in &self.pieces {
                    if piece.schema != first.schema {
                        return Err(Error::SchemaMismatch(
                            "horizontal pieces have different schemas".into(),
                        ));
                    }
                    rows.extend(piece.rows.iter().cloned());
                }
                Ok(Table::from_parts(first.schema.clone(), rows))
            }
            Axis::Vertical => {
                let n = first.len();
                let mut schema = Vec::new();
                let mut rows: Vec<Vec<Cell>> = (0..n).map(|_| Vec::new()).collect();
                for piece in &self.pieces {
                    if piece.len() != n {
                        return Err(Error::SchemaMismatch(
                            "vertical pieces have different record counts".into(),
                        ));
                    }
                    schema.extend(piece.schema.iter().cloned());
                    for (row, src) in rows.iter_mut().zip(&piece.rows) {
                        row.extend(src.iter().cloned());
                    }
                }
                Table::new(schema, rows)
            }
        }
    }
}

/// Splits rows into consecutive pieces of the given sizes.
pub fn partition_horizontal(t: &Table, piece_sizes: &[usize]) -> Result<Partition> {
    let total: usize = piece_sizes.iter().sum();
    if total != t.len() {
        return Err(Error::PartitionSizeMismatch {
            expected: t.len(),
            found: total,
        });
    }
    let mut start = 0;
    let pieces = piece_sizes
        .iter()
        .map(|&size| {
            let piece = t.select_rows(start..start + size);
            start += size;
            piece
        })
        .collect();
    Ok(Partition {
        axis: Axis::Horizontal,
        pieces,
    })
}

/// Splits columns into the given groups. Groups must cover the schema
/// exactly once; each piece lists its attributes in schema order.
pub fn partition_vertical<S: AsRef<str>>(t: &Table, groups: &[Vec<S>]) -> Result<Partition> {
    let mut owner = alloc::vec![None; t.width()];
    for (g, group) in groups.iter().enumerate() {
        for name in group {
            let col = t.index_of(name.as_ref())?;
            if owner[col].replace(g).is_some() {
                return Err(Error::PartitionCoverage(alloc::format!(
                    "attribute `{}` appears in more than one group",
                    name.as_ref()
                )));
            }
        }
    }
    if let Some(col) = owner.iter().position(Option::is_none) {
        return Err(Error::PartitionCoverage(alloc::format!(
            "attribute `{}` is not in any group",
            t.schema[col].name
        )));
    }
    let pieces = (0..groups.len())
        .map(|g| {
            let cols: Vec<usize> = (0..t.width()).filter(|&c| owner[c] == Some(g)).collect();
            t.select_columns(&cols)
        })
        .collect();
    Ok(Partition {
        axis: Axis::Vertical,
        pieces,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnSummary {
    Continuous {
        count: usize,
        missing: usize,
        mean: Option<f64>,
        std_dev: Option<f64>,
        min: Option<f64>,
        max: Option<f64>,
    },
    Categorical {
        count: usize,
        missing: usize,
        frequencies: BTreeMap<String, usize>,
    },
}

impl ColumnSummary {
    pub fn count(&self) -> usize {
        match self {
            ColumnSummary::Continuous { count, .. } | ColumnSummary::Categorical { count, .. } => {
                *count
            }
        }
    }

    pub fn missing(&self) -> usize {
        match self {
            ColumnSummary::Continuous { missing, .. }
            | ColumnSummary::Categorical { missing, .. } => *missing,
        }
    }
}

pub fn column_stats(t: &Table, attr: &str) -> Result<ColumnSummary> {
    let col = t.index_of(attr)?;
    let missing = t.column(col).filter(|c| c.is_missing()).count();
    Ok(match t.schema[col].class {
        DataClass::Continuous => {
            let values = t.numbers(col);
            ColumnSummary::Continuous {
                count: values.len(),
                missing,
                mean: stats::mean(&values),
                std_dev: stats::sample_std(&values),
                min: values.iter().copied().reduce(f64::min),
                max: values.iter().copied().reduce(f64::max),
            }
        }
        DataClass::Categorical => {
            let mut frequencies = BTreeMap::new();
            for cell in t.column(col) {
                if let Cell::Text(s) = cell {
                    *frequencies.entry(s.clone()).or_insert(0) += 1;
                }
            }
            ColumnSummary::Categorical {
                count: t.len() - missing,
                missing,
                frequencies,
            }
        }
    })
}
