use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Every failure the toolkit's operations can report.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    UnknownAttribute(String),
    DuplicateAttribute(String),
    /// `record` is the 1-based data record number (header excluded).
    RaggedRow {
        record: usize,
        expected: usize,
        found: usize,
    },
    /// `record` is the 1-based data record number (header excluded).
    NotNumeric {
        record: usize,
        attribute: String,
        value: String,
    },
    CellClassMismatch {
        row: usize,
        attribute: String,
    },
    OutOfBounds {
        row: usize,
        attribute: String,
        value: f64,
    },
    InvalidBounds {
        attribute: String,
    },
    NotInHierarchy {
        attribute: String,
        value: String,
    },
    HierarchyConflict {
        attribute: String,
        level: usize,
        label: String,
    },
    HierarchyAttributeMismatch {
        attribute: String,
        hierarchy: String,
    },
    NoHierarchy(String),
    LevelOutOfRange {
        attribute: String,
        level: usize,
        current: usize,
        depth: usize,
    },
    NotContinuous(String),
    NotCategorical(String),
    IndexOutOfRange {
        index: usize,
        len: usize,
    },
    OverlappingPairs(usize),
    PartitionSizeMismatch {
        expected: usize,
        found: usize,
    },
    PartitionCoverage(String),
    SensitiveInQuasi(String),
    KAnonymityUnachievable {
        k: usize,
        records: usize,
    },
    NonPositive {
        row: usize,
        attribute: String,
        value: f64,
    },
    OutsideRecodeRange {
        row: usize,
        attribute: String,
        value: f64,
    },
    NoDonors(String),
    EmptyColumn(String),
    ClassMismatch(String),
    BudgetExhausted {
        requested: f64,
        remaining: f64,
    },
    NotNeighbors,
    SchemaMismatch(String),
    TooFewClasses(usize),
    InvalidParameter(String),
    ParseQuery(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownAttribute(a) => write!(f, "unknown attribute `{a}`"),
            Error::DuplicateAttribute(a) => write!(f, "attribute `{a}` declared more than once"),
            Error::RaggedRow {
                record,
                expected,
                found,
            } => write!(
                f,
                "record {record} has {found} fields, expected {expected}"
            ),
            Error::NotNumeric {
                record,
                attribute,
                value,
            } => write!(
                f,
                "record {record}, column `{attribute}`: `{value}` is not a finite number"
            ),
            Error::CellClassMismatch { row, attribute } => write!(
                f,
                "row {row}, column `{attribute}`: cell does not match the attribute's data class"
            ),
            Error::OutOfBounds {
                row,
                attribute,
                value,
            } => write!(
                f,
                "row {row}, column `{attribute}`: {value} lies outside the declared bounds"
            ),
            Error::InvalidBounds { attribute } => {
                write!(f, "attribute `{attribute}`: bounds must be finite with min <= max")
            }
            Error::NotInHierarchy { attribute, value } => write!(
                f,
                "attribute `{attribute}`: value `{value}` is not covered by its hierarchy"
            ),
            Error::HierarchyConflict {
                attribute,
                level,
                label,
            } => write!(
                f,
                "hierarchy for `{attribute}`: label `{label}` maps to two different labels at level {level}"
            ),
            Error::HierarchyAttributeMismatch {
                attribute,
                hierarchy,
            } => write!(
                f,
                "hierarchy for `{hierarchy}` attached to attribute `{attribute}`"
            ),
            Error::NoHierarchy(a) => write!(f, "attribute `{a}` has no generalization hierarchy"),
            Error::LevelOutOfRange {
                attribute,
                level,
                current,
                depth,
            } => write!(
                f,
                "attribute `{attribute}`: level {level} not reachable (current level {current}, depth {depth})"
            ),
            Error::NotContinuous(a) => write!(f, "attribute `{a}` is not continuous"),
            Error::NotCategorical(a) => write!(f, "attribute `{a}` is not categorical"),
            Error::IndexOutOfRange { index, len } => {
                write!(f, "row index {index} out of range for {len} records")
            }
            Error::OverlappingPairs(i) => write!(f, "row {i} appears in more than one swap pair"),
            Error::PartitionSizeMismatch { expected, found } => write!(
                f,
                "piece sizes sum to {found}, table has {expected} records"
            ),
            Error::PartitionCoverage(msg) => write!(f, "vertical partition: {msg}"),
            Error::SensitiveInQuasi(a) => {
                write!(f, "sensitive attribute `{a}` is also in the quasi-identifier set")
            }
            Error::KAnonymityUnachievable { k, records } => write!(
                f,
                "k={k} cannot be achieved on {records} records without suppressing every record"
            ),
            Error::NonPositive {
                row,
                attribute,
                value,
            } => write!(
                f,
                "row {row}, column `{attribute}`: logarithm of non-positive value {value}"
            ),
            Error::OutsideRecodeRange {
                row,
                attribute,
                value,
            } => write!(
                f,
                "row {row}, column `{attribute}`: {value} falls outside the recode breakpoints"
            ),
            Error::NoDonors(a) => write!(f, "attribute `{a}`: no donor values left to impute from"),
            Error::EmptyColumn(a) => write!(f, "attribute `{a}` has no non-missing values"),
            Error::ClassMismatch(a) => {
                write!(f, "attribute `{a}` has a different data class in the two tables")
            }
            Error::BudgetExhausted {
                requested,
                remaining,
            } => write!(
                f,
                "privacy budget exhausted: requested epsilon {requested}, remaining {remaining}"
            ),
            Error::NotNeighbors => {
                write!(f, "tables do not differ by exactly one added or removed record")
            }
            Error::SchemaMismatch(msg) => write!(f, "schema mismatch: {msg}"),
            Error::TooFewClasses(n) => write!(f, "label attribute has {n} class(es), need at least 2"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::ParseQuery(msg) => write!(f, "cannot parse query: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
