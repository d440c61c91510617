//! The `sdc` command line.
//!
//! Exit codes: 0 success or verification pass, 1 runtime failure or
//! verification fail, 2 usage or validation error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use sdc_core::dp::DpQuery;
use sdc_core::nonperturbative::{verify_k_anonymity, verify_l_diversity, Verdict};
use sdc_core::table::{column_stats, ColumnSummary};
use sdc_core::utility::{build_report, scatter_points};
use sdc_core::Table;

use crate::config::PipelineConfig;
use crate::error::Error;
use crate::iris;
use crate::ledger::LedgerFile;
use crate::pipeline::{execute, render_outputs, report_config, validate, write_all_or_nothing};
use crate::schema::Schema;
use crate::tabular::{emit_scatter, emit_table, read_table};

pub const SEED_ENV: &str = "SDC_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "sdc",
    version,
    about = "Statistical disclosure control for CSV microdata"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the schema and per-column statistics of a table.
    Inspect {
        table: PathBuf,
        #[arg(long)]
        schema: PathBuf,
    },
    /// Run a pipeline config and write the privatized table and report.
    Anonymize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check k-anonymity, and l-diversity when --l is given.
    Verify {
        table: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        quasi: Vec<String>,
        /// Defaults to the one attribute tagged sensitive.
        #[arg(long)]
        sensitive: Option<String>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: Option<usize>,
    },
    /// Answer a query with the Laplace mechanism, charging a budget ledger.
    DpQuery {
        table: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// e.g. `count where Gender = F` or `mean Age in [0, 120] n=10`.
        #[arg(long)]
        query: String,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        ledger: PathBuf,
        /// Total ε when the ledger file is created.
        #[arg(long, default_value_t = 1.0)]
        budget: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare an original and a privatized table.
    Report {
        original: PathBuf,
        privatized: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Schema of the privatized table; defaults to `<privatized>.schema`
        /// when present, else --schema.
        #[arg(long)]
        privatized_schema: Option<PathBuf>,
        /// Takes quasi, sensitive, label, features and folds from a config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Add per-attribute normal noise to Iris and compare separability.
    IrisDemo {
        iris: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Noise σ as a multiple of each attribute's sample std.
        #[arg(long, default_value_t = 1.0)]
        sigma_factor: f64,
    },
}

struct Failure {
    code: i32,
    message: String,
}

type Outcome = Result<i32, Failure>;

trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: EXIT_USAGE,
            message: e.into().to_string(),
        })
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: EXIT_FAILURE,
            message: e.into().to_string(),
        })
    }
}

fn usage_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage_error(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// `--seed`, then the config's seed, then `SDC_SEED`, then 0.
fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64, Failure> {
    match flag.or(config) {
        Some(s) => Ok(s),
        None => Ok(env_seed()?.unwrap_or(0)),
    }
}

fn load(table: &Path, schema: &Path) -> Result<(Schema, Table), Failure> {
    let schema = Schema::read(schema).usage()?;
    let t = read_table(table, schema.attributes.clone()).usage()?;
    Ok((schema, t))
}

/// Parses `args` (program name first) and runs the command, writing normal
/// output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<'a, I, T>(args: I, out: &'a mut dyn Write, err: &'a mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if code == EXIT_OK { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Inspect { table, schema } => inspect(&table, &schema, out),
        Command::Anonymize {
            config,
            seed,
            out: dest,
        } => anonymize(&config, seed, dest, out, err),
        Command::Verify {
            table,
            schema,
            quasi,
            sensitive,
            k,
            l,
        } => verify(&table, &schema, &quasi, sensitive, k, l, out),
        Command::DpQuery {
            table,
            schema,
            query,
            epsilon,
            ledger,
            budget,
            seed,
        } => dp_query(
            &table, &schema, &query, epsilon, &ledger, budget, seed, out, err,
        ),
        Command::Report {
            original,
            privatized,
            schema,
            privatized_schema,
            config,
            seed,
            out: dest,
        } => report(
            &original,
            &privatized,
            &schema,
            privatized_schema,
            config,
            seed,
            dest,
            out,
        ),
        Command::IrisDemo {
            iris,
            out: dir,
            seed,
            sigma_factor,
        } => iris_demo(&iris, &dir, seed, sigma_factor, out, err),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn inspect(table: &Path, schema: &Path, out: &mut dyn Write) -> Outcome {
    let (_, t) = load(table, schema)?;
    let mut text = format!("records: {}\nattributes: {}\n", t.len(), t.width());
    for meta in t.schema() {
        text.push_str(&format!(
            "  {}: {}, {}",
            meta.name,
            meta.kind.as_str(),
            meta.class.as_str()
        ));
        if let Some((lo, hi)) = meta.bounds {
            text.push_str(&format!(", bounds [{lo}, {hi}]"));
        }
        if let Some(h) = &meta.hierarchy {
            text.push_str(&format!(", hierarchy depth {}", h.depth()));
        }
        text.push('\n');
    }
    text.push_str("statistics:\n");
    let na = |v: Option<f64>| v.map_or_else(|| "NA".to_owned(), |x| x.to_string());
    for name in t.names() {
        match column_stats(&t, name).runtime()? {
            ColumnSummary::Continuous {
                count,
                missing,
                mean,
                std_dev,
                min,
                max,
            } => text.push_str(&format!(
                "  {name}: count={count} missing={missing} mean={} std={} min={} max={}\n",
                na(mean),
                na(std_dev),
                na(min),
                na(max)
            )),
            ColumnSummary::Categorical {
                count,
                missing,
                frequencies,
            } => {
                text.push_str(&format!(
                    "  {name}: count={count} missing={missing} distinct={}\n",
                    frequencies.len()
                ));
                for (value, n) in frequencies {
                    text.push_str(&format!("    {value}: {n}\n"));
                }
            }
        }
    }
    out.write_all(text.as_bytes()).runtime()?;
    Ok(EXIT_OK)
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, Failure> {
    p.as_deref()
        .ok_or_else(|| usage_error(format!("config does not set `{key}`")))
}

fn anonymize(
    config_path: &Path,
    seed_flag: Option<u64>,
    dest: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let mut config = PipelineConfig::read(config_path).usage()?;
    if dest.is_some() {
        config.output = dest;
    }
    let seed = resolve_seed(seed_flag, config.seed)?;
    let schema = Schema::read(required(&config.schema, "schema")?).usage()?;
    let input = required(&config.input, "input")?;
    let output = required(&config.output, "output")?.to_owned();
    let report_path = required(&config.report, "report")?.to_owned();
    let schema_path = config.output_schema.clone().unwrap_or_else(|| {
        let mut s = output.clone().into_os_string();
        s.push(".schema");
        s.into()
    });
    validate(&config, &schema.attributes).usage()?;
    let original = read_table(input, schema.attributes.clone()).usage()?;

    let outputs = execute(&config, &original, seed).runtime()?;
    let (csv, schema_text, report) = render_outputs(&outputs, &schema).runtime()?;
    write_all_or_nothing(&[
        (output.as_path(), csv),
        (schema_path.as_path(), schema_text),
        (report_path.as_path(), report),
    ])
    .runtime()?;
    let _ = writeln!(
        err,
        "{} steps applied (seed {seed}); {} of {} records written to {}",
        config.steps.len(),
        outputs.table.len(),
        original.len(),
        output.display()
    );
    let _ = writeln!(out, "report written to {}", report_path.display());
    Ok(EXIT_OK)
}

fn print_verdict(verdict: &Verdict, out: &mut dyn Write) -> std::io::Result<()> {
    let a = &verdict.assessment;
    let na = |v: Option<usize>| v.map_or_else(|| "NA".to_owned(), |x| x.to_string());
    writeln!(out, "quasi: {}", a.quasi.join(", "))?;
    writeln!(out, "classes: {}", a.classes.len())?;
    writeln!(
        out,
        "k_achieved: {} (required {})",
        na(a.k_achieved),
        verdict.k
    )?;
    for (name, l) in a.sensitive.iter().zip(&a.l_achieved) {
        writeln!(out, "l_achieved[{name}]: {}", na(*l))?;
    }
    if let Some(l) = verdict.l {
        writeln!(out, "l required: {l}")?;
    }
    for &i in &verdict.failing_classes {
        let class = &a.classes[i];
        let key: Vec<String> = class.key.iter().map(ToString::to_string).collect();
        write!(
            out,
            "failing class ({}): size {}",
            key.join(", "),
            class.size()
        )?;
        for (name, distinct) in a.sensitive.iter().zip(&class.sensitive_distinct) {
            write!(out, ", {name} distinct {distinct}")?;
        }
        writeln!(out, ", rows {:?}", class.members)?;
    }
    writeln!(out, "{}", if verdict.passed { "PASS" } else { "FAIL" })
}

fn verify(
    table: &Path,
    schema: &Path,
    quasi: &[String],
    sensitive: Option<String>,
    k: usize,
    l: Option<usize>,
    out: &mut dyn Write,
) -> Outcome {
    let (_, t) = load(table, schema)?;
    let verdict = match (l, sensitive) {
        (None, None) => verify_k_anonymity(&t, quasi, k),
        (l, Some(s)) => verify_l_diversity(&t, quasi, &s, k, l.unwrap_or(1)),
        (Some(l), None) => {
            let tagged: Vec<&str> = t
                .schema()
                .iter()
                .filter(|m| {
                    m.kind == sdc_core::AttributeKind::Sensitive && !quasi.contains(&m.name)
                })
                .map(|m| m.name.as_str())
                .collect();
            let [s] = tagged[..] else {
                return Err(usage_error(format!(
                    "--l needs --sensitive: {} attributes are tagged sensitive",
                    tagged.len()
                )));
            };
            verify_l_diversity(&t, quasi, s, k, l)
        }
    }
    .usage()?;
    print_verdict(&verdict, out).runtime()?;
    Ok(if verdict.passed {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

#[allow(clippy::too_many_arguments)]
fn dp_query(
    table: &Path,
    schema: &Path,
    query: &str,
    epsilon: f64,
    ledger: &Path,
    budget: f64,
    seed: Option<u64>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let seed = resolve_seed(seed, None)?;
    let (_, t) = load(table, schema)?;
    let q: DpQuery = query.parse().usage()?;
    q.validate(&t).usage()?;
    let mut ledger = LedgerFile::open(ledger, budget).usage()?;
    match ledger.answer(&t, &q, epsilon, seed) {
        Ok(answer) => {
            let l = ledger.ledger();
            let _ = writeln!(err, "epsilon spent {} of {}", l.spent(), l.total());
            writeln!(out, "{answer}").runtime()?;
            Ok(EXIT_OK)
        }
        Err(Error::Core(sdc_core::Error::BudgetExhausted {
            requested,
            remaining,
        })) => {
            let _ = writeln!(
                err,
                "refused: query needs epsilon {requested} but only {remaining} remains"
            );
            Ok(EXIT_FAILURE)
        }
        Err(e @ Error::Core(sdc_core::Error::InvalidParameter(_))) => Err(e).usage(),
        Err(e) => Err(e).runtime(),
    }
}

#[allow(clippy::too_many_arguments)]
fn report(
    original: &Path,
    privatized: &Path,
    schema: &Path,
    privatized_schema: Option<PathBuf>,
    config: Option<PathBuf>,
    seed: Option<u64>,
    dest: Option<PathBuf>,
    out: &mut dyn Write,
) -> Outcome {
    let (_, orig) = load(original, schema)?;
    let privatized_schema = privatized_schema.unwrap_or_else(|| {
        let mut s = privatized.to_owned().into_os_string();
        s.push(".schema");
        let candidate = PathBuf::from(s);
        if candidate.exists() {
            candidate
        } else {
            schema.to_owned()
        }
    });
    let (_, priv_t) = load(privatized, &privatized_schema)?;
    let config = match config {
        Some(p) => PipelineConfig::read(&p).usage()?,
        None => PipelineConfig::default(),
    };
    let seed = resolve_seed(seed, config.seed)?;
    let text = build_report(&orig, &priv_t, &report_config(&config, orig.len(), seed))
        .usage()?
        .render();
    match dest {
        Some(path) => write_all_or_nothing(&[(path.as_path(), text.into_bytes())]).runtime()?,
        None => out.write_all(text.as_bytes()).runtime()?,
    }
    Ok(EXIT_OK)
}

fn iris_demo(
    path: &Path,
    dir: &Path,
    seed: Option<u64>,
    sigma_factor: f64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    if !(sigma_factor.is_finite() && sigma_factor >= 0.0) {
        return Err(usage_error(format!(
            "--sigma-factor must be >= 0, got {sigma_factor}"
        )));
    }
    let seed = resolve_seed(seed, None)?;
    let file = File::open(path).map_err(|e| Error::io(path, e)).usage()?;
    let original = iris::load_iris(file).usage()?;
    if original.len() != iris::EXPECTED_ROWS {
        let _ = writeln!(
            err,
            "warning: expected {} records, found {}",
            iris::EXPECTED_ROWS,
            original.len()
        );
    }
    let privatized = iris::privatize(&original, sigma_factor, seed).runtime()?;
    let (report, skipped) = iris::report(&original, &privatized, seed).runtime()?;
    if let Some(reason) = skipped {
        let _ = writeln!(err, "warning: separability gauge skipped: {reason}");
    }

    let scatter = |t: &Table| -> crate::error::Result<Vec<u8>> {
        let mut buf = Vec::new();
        emit_scatter(
            &scatter_points(t, "petal_length", "petal_width", iris::LABEL)?,
            &mut buf,
        )?;
        Ok(buf)
    };
    let mut table_csv = Vec::new();
    emit_table(&privatized, &mut table_csv).runtime()?;
    fs::create_dir_all(dir)
        .map_err(|e| Error::io(dir, e))
        .runtime()?;
    let paths = [
        "original_scatter.csv",
        "privatized_scatter.csv",
        "privatized.csv",
        "report.txt",
    ]
    .map(|f| dir.join(f));
    write_all_or_nothing(&[
        (paths[0].as_path(), scatter(&original).runtime()?),
        (paths[1].as_path(), scatter(&privatized).runtime()?),
        (paths[2].as_path(), table_csv),
        (paths[3].as_path(), report.render().into_bytes()),
    ])
    .runtime()?;
    if let Some(g) = &report.gauge {
        let _ = writeln!(
            out,
            "1-NN accuracy on petal features: original {:.4}, privatized {:.4}",
            g.baseline_accuracy, g.privatized_accuracy
        );
    }
    let _ = writeln!(out, "wrote {}", dir.display());
    Ok(EXIT_OK)
}
