//! The Laplace mechanism over count, sum and mean queries.
//!
//! Neighbouring databases differ by one added or removed record. A query `f`
//! with sensitivity `Δf = max |f(D1) − f(D2)|` over such neighbours is
//! answered as `f(D) + Laplace(0, b)` with `b = Δf / ε`, which bounds the
//! ratio `P[M(D1) ∈ R] / P[M(D2) ∈ R]` by `e^ε` for every outcome set `R`.
//!
//! [`BudgetLedger`] charges ε sequentially (spent budgets add up). It is the
//! one stateful object here and is single-writer: callers must serialize
//! every [`dp_answer`] against one ledger.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::table::{parse_number, Cell, Table};

/// Slack when comparing spent budget against the total, so that charges
/// like 0.4 + 0.4 + 0.2 exactly exhaust a budget of 1.
const BUDGET_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    Count,
    Sum,
    Mean,
}

impl QueryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryKind::Count => "count",
            QueryKind::Sum => "sum",
            QueryKind::Mean => "mean",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    fn as_str(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "=" | "==" => CompareOp::Eq,
            "!=" => CompareOp::Ne,
            "<" => CompareOp::Lt,
            "<=" => CompareOp::Le,
            ">" => CompareOp::Gt,
            ">=" => CompareOp::Ge,
            _ => return None,
        })
    }

    fn holds(self, ord: core::cmp::Ordering) -> bool {
        use core::cmp::Ordering::*;
        match self {
            CompareOp::Eq => ord == Equal,
            CompareOp::Ne => ord != Equal,
            CompareOp::Lt => ord == Less,
            CompareOp::Le => ord != Greater,
            CompareOp::Gt => ord == Greater,
            CompareOp::Ge => ord != Less,
        }
    }
}

/// One `attribute op value` condition of a row filter. Numbers compare
/// numerically against continuous cells, text compares lexicographically;
/// a missing cell never matches.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub attribute: String,
    pub op: CompareOp,
    pub value: String,
}

impl Clause {
    fn matches(&self, cell: &Cell) -> bool {
        let ord = match cell {
            Cell::Missing => return false,
            Cell::Number(x) => match parse_number(&self.value) {
                Some(v) => x.partial_cmp(&v),
                None => return false,
            },
            Cell::Text(s) => Some(s.as_str().cmp(self.value.as_str())),
        };
        ord.is_some_and(|o| self.op.holds(o))
    }
}

/// An aggregate query: its kind, target attribute, conjunctive row filter,
/// declared value bounds and (for means) the public record count.
#[derive(Debug, Clone, PartialEq)]
pub struct DpQuery {
    pub kind: QueryKind,
    pub attribute: Option<String>,
    pub filter: Vec<Clause>,
    pub bounds: Option<(f64, f64)>,
    pub n_hint: Option<usize>,
}

impl DpQuery {
    pub fn count() -> Self {
        Self {
            kind: QueryKind::Count,
            attribute: None,
            filter: Vec::new(),
            bounds: None,
            n_hint: None,
        }
    }

    pub fn sum(attribute: impl Into<String>, min: f64, max: f64) -> Self {
        Self {
            kind: QueryKind::Sum,
            attribute: Some(attribute.into()),
            bounds: Some((min, max)),
            ..Self::count()
        }
    }

    pub fn mean(attribute: impl Into<String>, min: f64, max: f64, n_hint: usize) -> Self {
        Self {
            kind: QueryKind::Mean,
            attribute: Some(attribute.into()),
            bounds: Some((min, max)),
            n_hint: Some(n_hint),
            ..Self::count()
        }
    }

    pub fn filtered(
        mut self,
        attribute: impl Into<String>,
        op: CompareOp,
        value: impl Into<String>,
    ) -> Self {
        self.filter.push(Clause {
            attribute: attribute.into(),
            op,
            value: value.into(),
        });
        self
    }

    fn checked_bounds(&self) -> Result<(f64, f64)> {
        match self.bounds {
            Some((lo, hi)) if lo.is_finite() && hi.is_finite() && lo <= hi => Ok((lo, hi)),
            Some(_) => Err(Error::InvalidParameter(
                "query bounds must be finite with min <= max".into(),
            )),
            None => Err(Error::InvalidParameter(alloc::format!(
                "{} query needs declared bounds",
                self.kind.as_str()
            ))),
        }
    }

    /// Checks the query against a table's schema.
    pub fn validate(&self, t: &Table) -> Result<()> {
        for clause in &self.filter {
            t.index_of(&clause.attribute)?;
        }
        if self.kind != QueryKind::Count {
            let attr = self.attribute.as_deref().ok_or_else(|| {
                Error::InvalidParameter(alloc::format!(
                    "{} query needs an attribute",
                    self.kind.as_str()
                ))
            })?;
            t.continuous_index(attr)?;
            self.checked_bounds()?;
        }
        Ok(())
    }

    /// The exact (non-private) answer. Values are clamped to the declared
    /// bounds; the mean of an empty selection is the bounds' midpoint.
    pub fn evaluate(&self, t: &Table) -> Result<f64> {
        self.validate(t)?;
        let filter_cols = self
            .filter
            .iter()
            .map(|c| t.index_of(&c.attribute))
            .collect::<Result<Vec<_>>>()?;
        let selected = t.rows().iter().filter(|row| {
            self.filter
                .iter()
                .zip(&filter_cols)
                .all(|(clause, &c)| clause.matches(&row[c]))
        });
        if self.kind == QueryKind::Count {
            return Ok(selected.count() as f64);
        }
        let col = t.index_of(self.attribute.as_deref().unwrap_or_default())?;
        let (lo, hi) = self.checked_bounds()?;
        let values: Vec<f64> = selected
            .filter_map(|row| row[col].as_f64())
            .map(|v| v.clamp(lo, hi))
            .collect();
        let sum: f64 = values.iter().sum();
        Ok(match self.kind {
            QueryKind::Sum => sum,
            _ if values.is_empty() => (lo + hi) / 2.0,
            _ => sum / values.len() as f64,
        })
    }
}

fn quote_if_needed(s: &str) -> String {
    if s.is_empty() || s.contains(|c: char| c.is_whitespace() || matches!(c, '"' | '[' | ']' | ','))
    {
        alloc::format!("\"{}\"", s.replace('"', "\\\""))
    } else {
        s.to_string()
    }
}

impl fmt::Display for DpQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.as_str())?;
        if let Some(a) = &self.attribute {
            write!(f, " {}", quote_if_needed(a))?;
        }
        if self.kind != QueryKind::Count {
            if let Some((lo, hi)) = self.bounds {
                write!(f, " in [{lo}, {hi}]")?;
            }
        }
        if let Some(n) = self.n_hint {
            write!(f, " n={n}")?;
        }
        for (i, c) in self.filter.iter().enumerate() {
            let joiner = if i == 0 { "where" } else { "and" };
            write!(
                f,
                " {joiner} {} {} {}",
                quote_if_needed(&c.attribute),
                c.op.as_str(),
                quote_if_needed(&c.value)
            )?;
        }
        Ok(())
    }
}

fn tokenize(s: &str) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut token = String::new();
            loop {
                match chars.next() {
                    Some('\\') => token.extend(chars.next()),
                    Some('"') => break,
                    Some(ch) => token.push(ch),
                    None => return Err(Error::ParseQuery("unterminated quote".into())),
                }
            }
            tokens.push(token);
        } else if matches!(c, '[' | ']' | ',') {
            chars.next();
            tokens.push(c.to_string());
        } else {
            let mut token = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || matches!(ch, '[' | ']' | ',' | '"') {
                    break;
                }
                token.push(ch);
                chars.next();
            }
            tokens.push(token);
        }
    }
    Ok(tokens)
}

/// Grammar, tokens separated by whitespace (double quotes group words):
///
/// ```text
/// query  := "count" [where]
///         | ("sum" | "mean") ATTR ["in" "[" MIN "," MAX "]"] ["n=" N] [where]
/// where  := "where" clause ("and" clause)*
/// clause := ATTR ("=" | "!=" | "<" | "<=" | ">" | ">=") VALUE
/// ```
impl FromStr for DpQuery {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens = tokenize(s)?;
        let mut it = tokens.into_iter().peekable();
        let err = |m: &str| Error::ParseQuery(m.to_string());
        let kind = match it.next().as_deref() {
            Some("count") => QueryKind::Count,
            Some("sum") => QueryKind::Sum,
            Some("mean") => QueryKind::Mean,
            Some(other) => {
                return Err(Error::ParseQuery(alloc::format!("unknown query `{other}`")))
            }
            None => return Err(err("empty query")),
        };
        let mut q = DpQuery {
            kind,
            ..DpQuery::count()
        };
        if kind != QueryKind::Count {
            q.attribute = Some(it.next().ok_or_else(|| err("missing attribute"))?);
            if it.peek().map(String::as_str) == Some("in") {
                it.next();
                fn number(tok: Option<String>, what: &str) -> Result<f64> {
                    let tok = tok.ok_or_else(|| Error::ParseQuery(what.to_string()))?;
                    parse_number(&tok)
                        .ok_or_else(|| Error::ParseQuery(alloc::format!("`{tok}` is not a number")))
                }
                if it.next().as_deref() != Some("[") {
                    return Err(err("expected `[` after `in`"));
                }
                let lo = number(it.next(), "missing lower bound")?;
                if it.next().as_deref() != Some(",") {
                    return Err(err("expected `,` between bounds"));
                }
                let hi = number(it.next(), "missing upper bound")?;
                if it.next().as_deref() != Some("]") {
                    return Err(err("expected `]` after bounds"));
                }
                q.bounds = Some((lo, hi));
            }
        }
        if let Some(n) = it.peek().and_then(|t| t.strip_prefix("n=")) {
            q.n_hint = Some(
                n.parse()
                    .map_err(|_| err("n= needs a non-negative integer"))?,
            );
            it.next();
        }
        match it.next().as_deref() {
            None => return Ok(q),
            Some("where") => {}
            Some(other) => return Err(Error::ParseQuery(alloc::format!("unexpected `{other}`"))),
        }
        loop {
            let attribute = it.next().ok_or_else(|| err("missing filter attribute"))?;
            let op_tok = it
                .next()
                .ok_or_else(|| err("missing comparison operator"))?;
            let op = CompareOp::parse(&op_tok)
                .ok_or_else(|| Error::ParseQuery(alloc::format!("unknown operator `{op_tok}`")))?;
            let value = it.next().ok_or_else(|| err("missing filter value"))?;
            q.filter.push(Clause {
                attribute,
                op,
                value,
            });
            match it.next().as_deref() {
                None => return Ok(q),
                Some("and") => {}
                Some(other) => {
                    return Err(Error::ParseQuery(alloc::format!("unexpected `{other}`")))
                }
            }
        }
    }
}

/// `Δf`, the largest change one added or removed record can cause.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Sensitivity(f64);

impl Sensitivity {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "sensitivity must be finite and >= 0, got {delta}"
            )));
        }
        Ok(Self(delta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Count → 1; sum → `max(|min|, |max|)`; mean → `(max − min) / n_hint`,
/// where `n_hint` is the public record count the mean is taken over.
pub fn sensitivity(q: &DpQuery, n_hint: usize) -> Result<Sensitivity> {
    match q.kind {
        QueryKind::Count => Sensitivity::new(1.0),
        QueryKind::Sum => {
            let (lo, hi) = q.checked_bounds()?;
            Sensitivity::new(libm::fabs(lo).max(libm::fabs(hi)))
        }
        QueryKind::Mean => {
            let (lo, hi) = q.checked_bounds()?;
            if n_hint == 0 {
                return Err(Error::InvalidParameter(
                    "mean sensitivity needs a public record count n_hint > 0".into(),
                ));
            }
            Sensitivity::new((hi - lo) / n_hint as f64)
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!(
            "epsilon must be finite and > 0, got {epsilon}"
        )))
    }
}

/// `b = Δf / ε`.
pub fn laplace_scale(s: Sensitivity, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok(s.value() / epsilon)
}

/// One Laplace(0, `scale`) draw from a fresh generator seeded with `seed`.
pub fn sample_laplace(scale: f64, seed: u64) -> Result<f64> {
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "Laplace scale must be finite and >= 0, got {scale}"
        )));
    }
    Ok(Rng::seed_from_u64(seed).laplace(scale))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub query: String,
    pub epsilon: f64,
    pub answer: f64,
}

/// Sequential-composition accounting of a total ε budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetLedger {
    total: f64,
    spent: f64,
    log: Vec<LedgerEntry>,
}

impl BudgetLedger {
    pub fn new(total: f64) -> Result<Self> {
        check_epsilon(total)?;
        Ok(Self {
            total,
            spent: 0.0,
            log: Vec::new(),
        })
    }

    /// Rebuilds a ledger from previously logged charges.
    pub fn from_entries(total: f64, entries: Vec<LedgerEntry>) -> Result<Self> {
        let mut ledger = Self::new(total)?;
        for entry in entries {
            ledger.charge(entry)?;
        }
        Ok(ledger)
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn remaining(&self) -> f64 {
        (self.total - self.spent).max(0.0)
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.log
    }

    pub fn can_afford(&self, epsilon: f64) -> bool {
        self.spent + epsilon <= self.total + BUDGET_SLACK
    }

    fn charge(&mut self, entry: LedgerEntry) -> Result<()> {
        check_epsilon(entry.epsilon)?;
        if !self.can_afford(entry.epsilon) {
            return Err(Error::BudgetExhausted {
                requested: entry.epsilon,
                remaining: self.remaining(),
            });
        }
        self.spent += entry.epsilon;
        self.log.push(entry);
        Ok(())
    }
}

/// Answers `q` on `t` with the Laplace mechanism and charges `epsilon`.
/// A refused or invalid query leaves the ledger untouched.
pub fn dp_answer(
    t: &Table,
    q: &DpQuery,
    epsilon: f64,
    ledger: &mut BudgetLedger,
    seed: u64,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    q.validate(t)?;
    let scale = laplace_scale(sensitivity(q, q.n_hint.unwrap_or(0))?, epsilon)?;
    if !ledger.can_afford(epsilon) {
        return Err(Error::BudgetExhausted {
            requested: epsilon,
            remaining: ledger.remaining(),
        });
    }
    let answer = q.evaluate(t)? + sample_laplace(scale, seed)?;
    ledger.charge(LedgerEntry {
        query: q.to_string(),
        epsilon,
        answer,
    })?;
    Ok(answer)
}

/// Two tables differing by exactly one added or removed record.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborPair {
    first: Table,
    second: Table,
}

impl NeighborPair {
    pub fn new(first: Table, second: Table) -> Result<Self> {
        if first.schema() != second.schema() {
            return Err(Error::NotNeighbors);
        }
        let (small, large) = if first.len() < second.len() {
            (&first, &second)
        } else {
            (&second, &first)
        };
        if large.len() != small.len() + 1 {
            return Err(Error::NotNeighbors);
        }
        let mut a: Vec<&Vec<Cell>> = small.rows().iter().collect();
        let mut b: Vec<&Vec<Cell>> = large.rows().iter().collect();
        a.sort();
        b.sort();
        // `a` must be `b` with one element removed.
        let mut skipped = false;
        let mut j = 0;
        for row in &b {
            if j < a.len() && a[j] == *row {
                j += 1;
            } else if skipped {
                return Err(Error::NotNeighbors);
            } else {
                skipped = true;
            }
        }
        Ok(Self { first, second })
    }

    pub fn first(&self) -> &Table {
        &self.first
    }

    pub fn second(&self) -> &Table {
        &self.second
    }
}

/// Outcome of the empirical ratio test.
#[derive(Debug, Clone, PartialEq)]
pub struct IndistinguishabilityReport {
    pub epsilon: f64,
    pub trials: usize,
    pub bin_width: f64,
    /// Bins with at least [`MIN_BIN_MASS`] samples from both tables.
    pub bins_compared: usize,
    /// Largest `max(p1/p2, p2/p1)` over compared bins.
    pub max_ratio: f64,
    /// Lower edge of the bin holding the largest ratio.
    pub worst_bin: Option<f64>,
    /// Largest amount by which a bin's log-ratio exceeded `ε` plus its
    /// sampling slack; positive means failure.
    pub worst_excess: f64,
    pub passed: bool,
}

impl IndistinguishabilityReport {
    pub const NOTE: &'static str = "outcome sets R are histogram bins; passing only means no \
violation was observed (a falsifier, not a proof)";
}

pub const MIN_BIN_MASS: u64 = 50;
/// Standard errors of sampling slack allowed per bin.
pub const SLACK_Z: f64 = 4.5;
pub const MIN_TRIALS: usize = 10_000;

/// Runs the Laplace mechanism `trials` times on each table of the pair and
/// compares binned outcome frequencies against `e^ε`.
pub fn check_indistinguishability(
    pair: &NeighborPair,
    q: &DpQuery,
    epsilon: f64,
    trials: usize,
    bin_width: f64,
    seed: u64,
) -> Result<IndistinguishabilityReport> {
    check_indistinguishability_with(pair, q, epsilon, trials, bin_width, seed, |f, b, rng| {
        f + rng.laplace(b)
    })
}

/// As [`check_indistinguishability`], with the mechanism supplied as
/// `(exact answer, calibrated scale, generator) -> released answer`.
pub fn check_indistinguishability_with<M>(
    pair: &NeighborPair,
    q: &DpQuery,
    epsilon: f64,
    trials: usize,
    bin_width: f64,
    seed: u64,
    mechanism: M,
) -> Result<IndistinguishabilityReport>
where
    M: Fn(f64, f64, &mut Rng) -> f64,
{
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(alloc::format!(
            "at least {MIN_TRIALS} trials are needed, got {trials}"
        )));
    }
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::InvalidParameter("bin width must be positive".into()));
    }
    let scale = laplace_scale(sensitivity(q, q.n_hint.unwrap_or(0))?, epsilon)?;
    let exact = [q.evaluate(pair.first())?, q.evaluate(pair.second())?];
    let mut bins: BTreeMap<i64, [u64; 2]> = BTreeMap::new();
    for (side, &f) in exact.iter().enumerate() {
        let mut rng = Rng::seed_from_u64(seed.wrapping_add(side as u64));
        for _ in 0..trials {
            let x = mechanism(f, scale, &mut rng);
            let bin = libm::floor(x / bin_width) as i64;
            bins.entry(bin).or_insert([0, 0])[side] += 1;
        }
    }

    let n = trials as f64;
    let mut report = IndistinguishabilityReport {
        epsilon,
        trials,
        bin_width,
        bins_compared: 0,
        max_ratio: 1.0,
        worst_bin: None,
        worst_excess: f64::NEG_INFINITY,
        passed: true,
    };
    for (&bin, &[c1, c2]) in &bins {
        if c1 < MIN_BIN_MASS || c2 < MIN_BIN_MASS {
            continue;
        }
        report.bins_compared += 1;
        let (c1, c2) = (c1 as f64, c2 as f64);
        let log_ratio = libm::fabs(libm::log(c1 / c2));
        let se = libm::sqrt((1.0 / c1 - 1.0 / n + 1.0 / c2 - 1.0 / n).max(0.0));
        let excess = log_ratio - (epsilon + SLACK_Z * se);
        let ratio = libm::exp(log_ratio);
        if ratio > report.max_ratio {
            report.max_ratio = ratio;
            report.worst_bin = Some(bin as f64 * bin_width);
        }
        if excess > report.worst_excess {
            report.worst_excess = excess;
        }
        if excess > 0.0 {
            report.passed = false;
        }
    }
    if report.bins_compared == 0 {
        return Err(Error::InvalidParameter(
            "no bin collected enough samples from both tables; widen the bins".into(),
        ));
    }
    Ok(report)
}
