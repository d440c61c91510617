//! Pipeline configuration files.
//!
//! The format is line oriented. Global settings come first as `key = value`
//! lines; each `method: <name>` line opens a step whose parameters follow as
//! `key = value` lines. `#` starts a comment line. List values are
//! comma-separated. See `docs/pipeline-config.md` for the full grammar.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sdc_core::perturbative::{RecodeSpec, Threshold};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseScale {
    Sigma(f64),
    Variance(f64),
    /// Multiple of the attribute's sample standard deviation.
    SigmaFactor(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    SuppressCells {
        attributes: Vec<String>,
        rows: Vec<usize>,
        equals: Option<String>,
        below: Option<f64>,
        above: Option<f64>,
    },
    SuppressRecords {
        rows: Vec<usize>,
    },
    Generalize {
        attribute: String,
        level: usize,
    },
    KAnonymity {
        quasi: Vec<String>,
        k: usize,
    },
    AddNoise {
        attribute: String,
        scale: NoiseScale,
    },
    MultiplyNoise {
        attribute: String,
        scale: NoiseScale,
    },
    LogNoise {
        attribute: String,
        scale: NoiseScale,
    },
    Swap {
        attributes: Vec<String>,
        pairs: Vec<(usize, usize)>,
    },
    RandomSwap {
        attributes: Vec<String>,
        fraction: f64,
    },
    CodeExtremes {
        attribute: String,
        low: Option<(Threshold, String)>,
        high: Option<(Threshold, String)>,
    },
    Round {
        attribute: String,
        base: f64,
    },
    Recode(RecodeSpec),
    BlankImpute {
        attribute: String,
        rows: Vec<usize>,
    },
    Blur {
        attribute: String,
        quasi: Vec<String>,
        rows: Option<Vec<usize>>,
    },
    Synthesize,
}

impl Step {
    pub fn method(&self) -> &'static str {
        match self {
            Step::SuppressCells { .. } => "suppress_cells",
            Step::SuppressRecords { .. } => "suppress_records",
            Step::Generalize { .. } => "generalize",
            Step::KAnonymity { .. } => "k_anonymity",
            Step::AddNoise { .. } => "add_noise",
            Step::MultiplyNoise { .. } => "multiply_noise",
            Step::LogNoise { .. } => "log_noise",
            Step::Swap { .. } => "swap",
            Step::RandomSwap { .. } => "random_swap",
            Step::CodeExtremes { .. } => "code_extremes",
            Step::Round { .. } => "round",
            Step::Recode(_) => "recode",
            Step::BlankImpute { .. } => "blank_impute",
            Step::Blur { .. } => "blur",
            Step::Synthesize => "synthesize",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
    /// Where the privatized table's schema descriptor goes; defaults to the
    /// output path with `.schema` appended.
    pub output_schema: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quasi: Vec<String>,
    pub sensitive: Vec<String>,
    pub label: Option<String>,
    pub features: Vec<String>,
    pub folds: Option<usize>,
    pub steps: Vec<Step>,
}

impl PipelineConfig {
    /// Reads a config; relative paths resolve against its directory.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut config.input,
            &mut config.schema,
            &mut config.output,
            &mut config.report,
            &mut config.output_schema,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut config = PipelineConfig::default();
        let mut open: Option<Block> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(method) = line.strip_prefix("method:") {
                if let Some(block) = open.take() {
                    config.steps.push(block.finish(&config, origin)?);
                }
                open = Some(Block::new(method.trim(), line_no));
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::syntax(
                    origin,
                    line_no,
                    "expected `key = value` or `method: <name>`",
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            match &mut open {
                Some(block) => {
                    if block
                        .params
                        .insert(key.to_owned(), (line_no, value.to_owned()))
                        .is_some()
                    {
                        return Err(Error::syntax(
                            origin,
                            line_no,
                            format!("`{key}` given twice"),
                        ));
                    }
                }
                None => config
                    .set_global(key, value)
                    .map_err(|m| Error::syntax(origin, line_no, m))?,
            }
        }
        if let Some(block) = open.take() {
            config.steps.push(block.finish(&config, origin)?);
        }
        Ok(config)
    }

    fn set_global(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "input" => self.input = Some(value.into()),
            "schema" => self.schema = Some(value.into()),
            "output" => self.output = Some(value.into()),
            "report" => self.report = Some(value.into()),
            "output_schema" => self.output_schema = Some(value.into()),
            "seed" => self.seed = Some(parse_num(key, value)?),
            "quasi" => self.quasi = list(value),
            "sensitive" => self.sensitive = list(value),
            "label" => self.label = Some(value.to_owned()),
            "features" => self.features = list(value),
            "folds" => self.folds = Some(parse_num(key, value)?),
            other => return Err(format!("unknown setting `{other}`")),
        }
        Ok(())
    }
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{key}` has an invalid value `{value}`"))
}

struct Block {
    method: String,
    line: usize,
    params: BTreeMap<String, (usize, String)>,
}

impl Block {
    fn new(method: &str, line: usize) -> Self {
        Self {
            method: method.to_owned(),
            line,
            params: BTreeMap::new(),
        }
    }

    fn finish(mut self, config: &PipelineConfig, origin: &str) -> Result<Step> {
        let line = self.line;
        let step = self
            .build(config)
            .map_err(|(l, m)| Error::syntax(origin, l.unwrap_or(line), m))?;
        if let Some((key, (l, _))) = self.params.iter().next() {
            return Err(Error::syntax(
                origin,
                *l,
                format!("`{}` does not take `{key}`", self.method),
            ));
        }
        Ok(step)
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.params.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<String, (Option<usize>, String)> {
        self.take(key)
            .map(|(_, v)| v)
            .ok_or_else(|| (None, format!("`{}` needs `{key}`", self.method)))
    }

    fn number<T: std::str::FromStr>(
        &mut self,
        key: &str,
    ) -> Result<Option<T>, (Option<usize>, String)> {
        match self.take(key) {
            None => Ok(None),
            Some((l, v)) => parse_num(key, &v).map(Some).map_err(|m| (Some(l), m)),
        }
    }

    fn rows(&mut self, key: &str) -> Result<Option<Vec<usize>>, (Option<usize>, String)> {
        match self.take(key) {
            None => Ok(None),
            Some((l, v)) => list(&v)
                .iter()
                .map(|r| parse_num(key, r))
                .collect::<Result<_, _>>()
                .map(Some)
                .map_err(|m| (Some(l), m)),
        }
    }

    fn scale(
        &mut self,
        default: Option<NoiseScale>,
    ) -> Result<NoiseScale, (Option<usize>, String)> {
        let given = [
            self.number("sigma")?.map(NoiseScale::Sigma),
            self.number("variance")?.map(NoiseScale::Variance),
            self.number("sigma_factor")?.map(NoiseScale::SigmaFactor),
        ];
        let mut given = given.into_iter().flatten();
        match (given.next(), given.next()) {
            (Some(_), Some(_)) => Err((
                None,
                "give only one of sigma, variance, sigma_factor".into(),
            )),
            (Some(s), None) => Ok(s),
            (None, _) => {
                default.ok_or_else(|| (None, format!("`{}` needs sigma or variance", self.method)))
            }
        }
    }

    fn threshold(&mut self, key: &str) -> Result<Option<Threshold>, (Option<usize>, String)> {
        let Some((l, v)) = self.take(key) else {
            return Ok(None);
        };
        let parsed = match v.strip_prefix('p') {
            Some(p) => parse_num(key, p).map(Threshold::Percentile),
            None => parse_num(key, &v).map(Threshold::Value),
        };
        parsed.map(Some).map_err(|m| (Some(l), m))
    }

    fn build(&mut self, config: &PipelineConfig) -> Result<Step, (Option<usize>, String)> {
        let quasi_or_global = |b: &mut Self| {
            b.take("quasi")
                .map(|(_, v)| list(&v))
                .unwrap_or_else(|| config.quasi.clone())
        };
        Ok(match self.method.as_str() {
            "suppress_cells" => Step::SuppressCells {
                attributes: list(&self.required("attributes")?),
                rows: self.rows("rows")?.unwrap_or_default(),
                equals: self.take("equals").map(|(_, v)| v),
                below: self.number("below")?,
                above: self.number("above")?,
            },
            "suppress_records" => Step::SuppressRecords {
                rows: self
                    .rows("rows")?
                    .ok_or((None, "`suppress_records` needs `rows`".into()))?,
            },
            "generalize" => Step::Generalize {
                attribute: self.required("attribute")?,
                level: self.number("level")?.unwrap_or(1),
            },
            "k_anonymity" => Step::KAnonymity {
                quasi: quasi_or_global(self),
                k: self
                    .number("k")?
                    .ok_or((None, "`k_anonymity` needs `k`".into()))?,
            },
            "add_noise" => Step::AddNoise {
                attribute: self.required("attribute")?,
                scale: self.scale(Some(NoiseScale::SigmaFactor(0.1)))?,
            },
            "multiply_noise" => Step::MultiplyNoise {
                attribute: self.required("attribute")?,
                scale: self.scale(None)?,
            },
            "log_noise" => Step::LogNoise {
                attribute: self.required("attribute")?,
                scale: self.scale(None)?,
            },
            "swap" => {
                let attributes = list(&self.required("attributes")?);
                let (l, v) = self
                    .take("pairs")
                    .ok_or((None, "`swap` needs `pairs`".into()))?;
                let pairs = list(&v)
                    .iter()
                    .map(|p| {
                        let (a, b) = p
                            .split_once(':')
                            .ok_or(format!("pair `{p}` is not `a:b`"))?;
                        Ok((parse_num("pairs", a.trim())?, parse_num("pairs", b.trim())?))
                    })
                    .collect::<Result<_, String>>()
                    .map_err(|m| (Some(l), m))?;
                Step::Swap { attributes, pairs }
            }
            "random_swap" => Step::RandomSwap {
                attributes: list(&self.required("attributes")?),
                fraction: self.number("fraction")?.unwrap_or(1.0),
            },
            "code_extremes" => {
                let attribute = self.required("attribute")?;
                let low = self.threshold("low")?;
                let high = self.threshold("high")?;
                let low_label = self.take("low_label").map(|(_, v)| v);
                let high_label = self.take("high_label").map(|(_, v)| v);
                if low.is_none() && high.is_none() {
                    return Err((None, "`code_extremes` needs `low` or `high`".into()));
                }
                let pair = |t: Option<Threshold>, label: Option<String>, key: &str| match (t, label)
                {
                    (Some(t), Some(l)) => Ok(Some((t, l))),
                    (None, None) => Ok(None),
                    (Some(_), None) => Err((None, format!("`{key}` needs `{key}_label`"))),
                    (None, Some(_)) => Err((None, format!("`{key}_label` needs `{key}`"))),
                };
                Step::CodeExtremes {
                    low: pair(low, low_label, "low")?,
                    high: pair(high, high_label, "high")?,
                    attribute,
                }
            }
            "round" => Step::Round {
                attribute: self.required("attribute")?,
                base: self
                    .number("base")?
                    .ok_or((None, "`round` needs `base`".into()))?,
            },
            "recode" => {
                let attribute = self.required("attribute")?;
                let (l, v) = self
                    .take("breaks")
                    .ok_or((None, "`recode` needs `breaks`".into()))?;
                let breaks = list(&v)
                    .iter()
                    .map(|b| parse_num("breaks", b))
                    .collect::<Result<Vec<f64>, _>>()
                    .map_err(|m| (Some(l), m))?;
                let spec = match self.take("labels") {
                    Some((_, labels)) => RecodeSpec::new(
                        attribute,
                        breaks,
                        labels.split(';').map(|s| s.trim().to_owned()).collect(),
                    ),
                    None => RecodeSpec::with_range_labels(attribute, breaks),
                };
                Step::Recode(spec.map_err(|e| (Some(l), e.to_string()))?)
            }
            "blank_impute" => Step::BlankImpute {
                attribute: self.required("attribute")?,
                rows: self
                    .rows("rows")?
                    .ok_or((None, "`blank_impute` needs `rows`".into()))?,
            },
            "blur" => Step::Blur {
                attribute: self.required("attribute")?,
                quasi: quasi_or_global(self),
                rows: self.rows("rows")?,
            },
            "synthesize" => Step::Synthesize,
            other => return Err((None, format!("unknown method `{other}`"))),
        })
    }
}
