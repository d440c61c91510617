//! On-disk privacy budget ledger.
//!
//! ```text
//! total_epsilon=1
//! 1760000000\tcount where Gender = F\t0.4\t5.8312
//! ```
//!
//! The first non-comment line fixes the total budget. Each later line is one
//! answered query: unix timestamp, query text, ε, noisy answer, separated by
//! tabs. Lines are only ever appended.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sdc_core::dp::{dp_answer, BudgetLedger, DpQuery, LedgerEntry};
use sdc_core::Table;

use crate::error::{Error, Result};

const TOTAL_KEY: &str = "total_epsilon=";

/// An open ledger file, held under an exclusive advisory lock until dropped.
#[derive(Debug)]
pub struct LedgerFile {
    path: PathBuf,
    file: File,
    ledger: BudgetLedger,
}

impl LedgerFile {
    /// Opens `path`, creating it with `budget` as total ε when it does not
    /// exist. An existing file keeps its own total.
    pub fn open(path: &Path, budget: f64) -> Result<Self> {
        let io = |e| Error::io(path, e);
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(io)?;
        file.lock().map_err(io)?;
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(io)?;
        let ledger = if text.trim().is_empty() {
            let ledger = BudgetLedger::new(budget)?;
            file.seek(SeekFrom::End(0)).map_err(io)?;
            writeln!(file, "{TOTAL_KEY}{budget}").map_err(io)?;
            file.sync_data().map_err(io)?;
            ledger
        } else {
            parse(&text, &path.display().to_string())?
        };
        Ok(Self {
            path: path.to_owned(),
            file,
            ledger,
        })
    }

    pub fn ledger(&self) -> &BudgetLedger {
        &self.ledger
    }

    /// Answers `q` and appends the charge. A refused query writes nothing.
    pub fn answer(&mut self, t: &Table, q: &DpQuery, epsilon: f64, seed: u64) -> Result<f64> {
        let mut next = self.ledger.clone();
        let answer = dp_answer(t, q, epsilon, &mut next, seed)?;
        let entry = next.entries().last().expect("dp_answer logs every charge");
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let line = format!(
            "{stamp}\t{}\t{}\t{}\n",
            entry.query.replace(['\t', '\n', '\r'], " "),
            entry.epsilon,
            entry.answer
        );
        let io = |e| Error::io(&self.path, e);
        self.file.write_all(line.as_bytes()).map_err(io)?;
        self.file.sync_data().map_err(io)?;
        self.ledger = next;
        Ok(answer)
    }
}

fn parse(text: &str, origin: &str) -> Result<BudgetLedger> {
    let mut total = None;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: &str| Error::syntax(origin, line_no, m);
        if total.is_none() {
            let value = line
                .trim()
                .strip_prefix(TOTAL_KEY)
                .ok_or_else(|| err("expected `total_epsilon=<number>`"))?;
            total = Some(
                value
                    .parse::<f64>()
                    .map_err(|_| err("total ε is not a number"))?,
            );
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [_, query, epsilon, answer] = fields[..] else {
            return Err(err("expected four tab-separated fields"));
        };
        entries.push(LedgerEntry {
            query: query.to_owned(),
            epsilon: epsilon.parse().map_err(|_| err("ε is not a number"))?,
            answer: answer.parse().map_err(|_| err("answer is not a number"))?,
        });
    }
    let total = total.ok_or_else(|| Error::syntax(origin, 1, "missing `total_epsilon=` line"))?;
    Ok(BudgetLedger::from_entries(total, entries)?)
}
