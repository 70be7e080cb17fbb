//! Audit configuration, the end-to-end pipeline and report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bias::{self, BiasSummary, PrbmModel};
use crate::corpus::{
    load_split, spr_reference_counts, validate_manifest, DatasetSplit, InputFormat, Label, LabelCounts,
    ManifestReport, SplitName,
};
use crate::error::{Error, Result, Stage};
use crate::lexical::{self, CountingMode, LexicalEntry, LexicalOptions};
use crate::protorole::{tag_split, ProtoRole, RuleSet, TaggedSplit};
use crate::stats::{self, format_p_value, ChiSquareResult, ContingencyTable};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DEFAULT_TOP_K: usize = 10;
pub const DEFAULT_MIN_FREQ: u64 = 5;
pub const DEFAULT_ROLE_FLAG_THRESHOLD: f64 = 0.85;
pub const DEFAULT_WORD_FLAG_THRESHOLD: f64 = 0.70;

/// Published train-split majority baseline that disagrees with the published
/// train label counts.
const PUBLISHED_TRAIN_MAJ: f64 = 0.6635;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Tsv,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "tsv" => Ok(OutputFormat::Tsv),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            other => Err(format!("unknown output format {other:?}")),
        }
    }
}

/// Which expected label counts, if any, splits are checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestMode {
    #[default]
    None,
    Spr,
}

impl FromStr for ManifestMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(ManifestMode::None),
            "spr" => Ok(ManifestMode::Spr),
            other => Err(format!("unknown manifest {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitInput {
    pub path: PathBuf,
    /// `None` means detect from the file extension.
    pub format: Option<InputFormat>,
}

impl SplitInput {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        SplitInput {
            path: path.into(),
            format: None,
        }
    }

    pub fn resolved_format(&self) -> InputFormat {
        self.format.unwrap_or_else(|| InputFormat::from_path(&self.path))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub train: Option<SplitInput>,
    pub dev: Option<SplitInput>,
    pub test: Option<SplitInput>,
    /// `None` uses the bundled rule table.
    pub rules: Option<PathBuf>,
    pub alpha: f64,
    pub top_k: usize,
    pub min_freq: u64,
    pub counting: CountingMode,
    pub prefer_metadata: bool,
    pub stoplist: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub output: Option<PathBuf>,
    pub role_flag_threshold: f64,
    pub word_flag_threshold: f64,
    pub manifest: ManifestMode,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            train: None,
            dev: None,
            test: None,
            rules: None,
            alpha: stats::DEFAULT_ALPHA,
            top_k: DEFAULT_TOP_K,
            min_freq: DEFAULT_MIN_FREQ,
            counting: CountingMode::Presence,
            prefer_metadata: false,
            stoplist: None,
            output_format: OutputFormat::Json,
            output: None,
            role_flag_threshold: DEFAULT_ROLE_FLAG_THRESHOLD,
            word_flag_threshold: DEFAULT_WORD_FLAG_THRESHOLD,
            manifest: ManifestMode::None,
        }
    }
}

fn parse_flag<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| Error::Config(format!("{key}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::Config(format!("{key}: expected a boolean, got {other:?}"))),
    }
}

fn split_slot<'a>(cfg: &'a mut AuditConfig, name: &str) -> &'a mut Option<SplitInput> {
    match name {
        "train" => &mut cfg.train,
        "dev" => &mut cfg.dev,
        _ => &mut cfg.test,
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.top_k < 1 {
            return Err(Error::Config("top-k must be at least 1".into()));
        }
        if self.min_freq < 1 {
            return Err(Error::Config("min-freq must be at least 1".into()));
        }
        for (k, v) in [
            ("role-flag-threshold", self.role_flag_threshold),
            ("word-flag-threshold", self.word_flag_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{k} must be in [0, 1], got {v}")));
            }
        }
        if self.train.is_none() {
            return Err(Error::Config("a train split is required".into()));
        }
        Ok(())
    }

    /// Set one option by its kebab-case (or snake_case) name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let v = value.trim();
        let path = || Some(PathBuf::from(v));
        match key.as_str() {
            "train" | "dev" | "test" => {
                let slot = split_slot(self, &key);
                let format = slot.as_ref().and_then(|s| s.format);
                *slot = Some(SplitInput {
                    path: PathBuf::from(v),
                    format,
                });
            }
            "train-format" | "dev-format" | "test-format" => {
                let name = key.trim_end_matches("-format").to_string();
                let format: InputFormat = parse_flag(&key, v)?;
                match split_slot(self, &name) {
                    Some(s) => s.format = Some(format),
                    None => {
                        return Err(Error::Config(format!("{key} given before {name}")));
                    }
                }
            }
            "rules" => self.rules = path(),
            "alpha" => self.alpha = parse_flag(&key, v)?,
            "top-k" => self.top_k = parse_flag(&key, v)?,
            "min-freq" => self.min_freq = parse_flag(&key, v)?,
            "counting" => self.counting = parse_flag(&key, v)?,
            "prefer-metadata" => self.prefer_metadata = parse_bool(&key, v)?,
            "stoplist" => self.stoplist = path(),
            "output-format" => self.output_format = parse_flag(&key, v)?,
            "output" => self.output = path(),
            "role-flag-threshold" => self.role_flag_threshold = parse_flag(&key, v)?,
            "word-flag-threshold" => self.word_flag_threshold = parse_flag(&key, v)?,
            "manifest" => self.manifest = parse_flag(&key, v)?,
            other => return Err(Error::Config(format!("unknown option {other:?}"))),
        }
        Ok(())
    }

    /// Apply a `key = value` config file (UTF-8, `#` comments).
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggingSummary {
    pub role_counts: BTreeMap<ProtoRole, u64>,
    pub unmatched: u64,
    pub unknown_metadata: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalSummary {
    pub vocabulary: u64,
    pub top_entailed: Vec<LexicalEntry>,
    pub top_not_entailed: Vec<LexicalEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub name: SplitName,
    pub records: u64,
    pub malformed_lines: u64,
    pub label_counts: LabelCounts,
    pub manifest: Option<ManifestReport>,
    pub tagging: TaggingSummary,
    pub contingency: ContingencyTable,
    pub chi_square: ChiSquareResult,
    pub significant: bool,
    pub bias: BiasSummary,
    pub lexical: LexicalSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAccuracy {
    pub split: SplitName,
    pub accuracy: f64,
    pub accuracy_matched: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrbmSection {
    pub model: PrbmModel,
    pub accuracies: Vec<SplitAccuracy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedRole {
    pub split: SplitName,
    pub role: ProtoRole,
    pub majority_label: Label,
    pub maj_pr: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedWord {
    pub split: SplitName,
    pub word: String,
    pub label: Label,
    pub p_label_given_word: f64,
    pub total_freq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub policy: String,
    pub role_threshold: f64,
    pub word_threshold: f64,
    pub min_freq: u64,
    pub roles: Vec<FlaggedRole>,
    pub words: Vec<FlaggedWord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: AuditConfig,
    pub splits: Vec<SplitReport>,
    pub prbm: PrbmSection,
    pub flags: Flags,
    pub warnings: Vec<String>,
}

impl AuditReport {
    pub fn split(&self, name: &SplitName) -> Option<&SplitReport> {
        self.splits.iter().find(|s| &s.name == name)
    }
}

struct Prepared {
    split: DatasetSplit,
    tagged: TaggedSplit,
}

fn staged<T>(stage: Stage, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.at(stage))
}

fn analyze_split(
    p: &Prepared,
    model: &PrbmModel,
    config: &AuditConfig,
    lex_opts: &LexicalOptions,
    warnings: &mut Vec<String>,
) -> Result<(SplitReport, Vec<LexicalEntry>)> {
    let name = &p.split.name;
    let manifest = match config.manifest {
        ManifestMode::Spr => spr_reference_counts(name).map(|c| validate_manifest(&p.split, c)),
        ManifestMode::None => None,
    };

    let contingency = staged(Stage::Stats, stats::build_contingency(&p.tagged))?;
    let chi = staged(Stage::Stats, stats::chi_square(&contingency))?;
    if !chi.dropped_rows.is_empty() || !chi.dropped_cols.is_empty() {
        let mut dropped = chi.dropped_rows.clone();
        dropped.extend(chi.dropped_cols.iter().cloned());
        warnings.push(format!(
            "{name}: chi-square dropped zero-marginal rows/columns [{}]; df = {}",
            dropped.join(", "),
            chi.df
        ));
    }
    let bias = staged(Stage::Bias, bias::summarize(&p.tagged, model))?;
    let entries = staged(Stage::Lexical, lexical::word_label_stats_with(&p.split, lex_opts))?;

    let lexical = LexicalSummary {
        vocabulary: entries.len() as u64,
        top_entailed: lexical::top_k_by_label(&entries, Label::Entailed, config.top_k, config.min_freq),
        top_not_entailed: lexical::top_k_by_label(&entries, Label::NotEntailed, config.top_k, config.min_freq),
    };

    let report = SplitReport {
        name: name.clone(),
        records: p.split.len() as u64,
        malformed_lines: p.split.malformed_lines as u64,
        label_counts: p.split.label_counts(),
        manifest,
        tagging: TaggingSummary {
            role_counts: ProtoRole::ALL
                .iter()
                .map(|r| (*r, p.tagged.role_counts[r.index()]))
                .collect(),
            unmatched: p.tagged.unmatched,
            unknown_metadata: p.tagged.unknown_metadata,
        },
        significant: chi.is_significant(config.alpha),
        contingency,
        chi_square: chi,
        bias,
        lexical,
    };
    Ok((report, entries))
}

/// Load, tag, test and summarize every configured split.
pub fn run_audit(config: &AuditConfig) -> Result<AuditReport> {
    staged(Stage::Config, config.validate())?;

    let rules = match &config.rules {
        Some(p) => staged(Stage::Protorole, RuleSet::load(p))?,
        None => RuleSet::default(),
    };
    let lex_opts = LexicalOptions {
        counting: config.counting,
        stop_words: match &config.stoplist {
            Some(p) => staged(Stage::Lexical, lexical::load_stop_words(p))?,
            None => Default::default(),
        },
    };

    let inputs = [
        (SplitName::Train, &config.train),
        (SplitName::Dev, &config.dev),
        (SplitName::Test, &config.test),
    ];
    let mut prepared = Vec::new();
    for (name, input) in inputs {
        let Some(input) = input else { continue };
        let split = staged(
            Stage::Corpus,
            load_split(&input.path, input.resolved_format(), name),
        )?;
        let tagged = tag_split(&split, &rules, config.prefer_metadata);
        prepared.push(Prepared { split, tagged });
    }

    let train = &prepared[0];
    let fallback = bias::global_majority(&train.split.label_counts());
    let model = staged(Stage::Bias, bias::train_prbm(&train.tagged, fallback))?;

    let mut warnings = Vec::new();
    let mut splits = Vec::new();
    let mut flagged_words = Vec::new();
    for p in &prepared {
        let name = &p.split.name;
        if p.split.malformed_lines > 0 {
            warnings.push(format!("{name}: skipped {} malformed lines", p.split.malformed_lines));
        }
        if p.tagged.unmatched > 0 {
            warnings.push(format!(
                "{name}: {} records matched no proto-role; excluded from chi-square and per-role bias, predicted with fallback by PRBM",
                p.tagged.unmatched
            ));
        }
        if p.tagged.unknown_metadata > 0 {
            warnings.push(format!(
                "{name}: {} records carried unrecognized proto-role metadata",
                p.tagged.unknown_metadata
            ));
        }
        let (report, entries) = analyze_split(p, &model, config, &lex_opts, &mut warnings)?;
        for e in entries {
            let (label, prob) = e.p_label_given_word.max();
            if prob >= config.word_flag_threshold && e.total_freq >= config.min_freq {
                flagged_words.push(FlaggedWord {
                    split: name.clone(),
                    word: e.word,
                    label,
                    p_label_given_word: prob,
                    total_freq: e.total_freq,
                });
            }
        }
        splits.push(report);
    }

    if config.manifest == ManifestMode::Spr {
        if let Some(train) = splits.iter().find(|s| s.name == SplitName::Train) {
            let reference = spr_reference_counts(&SplitName::Train).expect("train reference");
            let implied = reference.not_entailed as f64 / reference.total() as f64;
            warnings.push(format!(
                "train: the published SPR train majority baseline ({PUBLISHED_TRAIN_MAJ:.4}) is inconsistent with the published train label counts ({}/{} = {implied:.4}); MAJ here is computed from data ({:.4})",
                reference.not_entailed,
                reference.total(),
                train.bias.maj
            ));
        }
        for s in &splits {
            if let Some(m) = &s.manifest {
                if m.status == crate::corpus::ValidationStatus::Fail {
                    warnings.push(format!(
                        "{}: label counts differ from the SPR manifest (entailed {:+}, not-entailed {:+})",
                        s.name, m.delta_entailed, m.delta_not_entailed
                    ));
                }
            }
        }
    }

    let flagged_roles = splits
        .iter()
        .flat_map(|s| {
            s.bias
                .per_role
                .iter()
                .filter(|e| e.maj_pr >= config.role_flag_threshold)
                .map(|e| FlaggedRole {
                    split: s.name.clone(),
                    role: e.role,
                    majority_label: e.majority_label,
                    maj_pr: e.maj_pr,
                    support: e.support,
                })
        })
        .collect();

    let accuracies = splits
        .iter()
        .map(|s| SplitAccuracy {
            split: s.name.clone(),
            accuracy: s.bias.prbm_accuracy,
            accuracy_matched: s.bias.prbm_accuracy_matched,
        })
        .collect();

    Ok(AuditReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        config: config.clone(),
        splits,
        prbm: PrbmSection { model, accuracies },
        flags: Flags {
            policy: "give-away thresholds are tool policy, not statistical tests".to_string(),
            role_threshold: config.role_flag_threshold,
            word_threshold: config.word_flag_threshold,
            min_freq: config.min_freq,
            roles: flagged_roles,
            words: flagged_words,
        },
        warnings,
    })
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn display_entries(entries: &[LexicalEntry], label: Label) -> Value {
    Value::Array(
        entries
            .iter()
            .map(|e| {
                json!({
                    "word": e.word,
                    "p_label_given_word": round4(e.p_label_given_word.get(label)),
                    "freq": e.freq_per_label.get(label),
                })
            })
            .collect(),
    )
}

fn display_section(report: &AuditReport) -> Value {
    let mut splits = serde_json::Map::new();
    for s in &report.splits {
        let per_role: serde_json::Map<String, Value> = s
            .bias
            .per_role
            .iter()
            .map(|e| (e.role.name().to_string(), json!(round4(e.maj_pr))))
            .collect();
        splits.insert(
            s.name.to_string(),
            json!({
                "chi_square": {
                    "statistic": round4(s.chi_square.statistic),
                    "df": s.chi_square.df,
                    "p_value": format_p_value(s.chi_square.p_value),
                    "significant": s.significant,
                },
                "maj": round4(s.bias.maj),
                "prbm": round4(s.bias.prbm_accuracy),
                "overall_proto_role_bias": round4(s.bias.overall_proto_role_bias),
                "proto_role_bias": per_role,
                "lexical": {
                    "entailed": display_entries(&s.lexical.top_entailed, Label::Entailed),
                    "not-entailed": display_entries(&s.lexical.top_not_entailed, Label::NotEntailed),
                },
            }),
        );
    }
    Value::Object(splits)
}

pub fn to_json(report: &AuditReport) -> Result<String> {
    let doc = json!({
        "schema_version": report.schema_version,
        "raw": serde_json::to_value(report)?,
        "display": display_section(report),
    });
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

/// Parse a JSON report produced by [`to_json`].
pub fn from_json(text: &str) -> Result<AuditReport> {
    let mut doc: Value = serde_json::from_str(text)?;
    let raw = doc
        .get_mut("raw")
        .map(Value::take)
        .ok_or_else(|| Error::InvalidArgument("report has no \"raw\" section".into()))?;
    Ok(serde_json::from_value(raw)?)
}

fn role_value(s: &SplitReport, role: ProtoRole) -> Option<f64> {
    s.bias.per_role.iter().find(|e| e.role == role).map(|e| e.maj_pr)
}

fn fmt4(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

pub fn to_tsv(report: &AuditReport) -> String {
    let mut out = String::new();
    let names: Vec<&str> = report.splits.iter().map(|s| s.name.as_str()).collect();

    out.push_str("# chi_square\nsplit\tstatistic\tdf\tp_value\tsignificant\n");
    for s in &report.splits {
        let _ = writeln!(
            out,
            "{}\t{:.4}\t{}\t{}\t{}",
            s.name,
            s.chi_square.statistic,
            s.chi_square.df,
            format_p_value(s.chi_square.p_value),
            s.significant
        );
    }

    let _ = writeln!(out, "\n# baselines\nmetric\t{}", names.join("\t"));
    let row = |label: &str, f: &dyn Fn(&SplitReport) -> f64| {
        let vals: Vec<String> = report.splits.iter().map(|s| format!("{:.4}", f(s))).collect();
        format!("{label}\t{}\n", vals.join("\t"))
    };
    out.push_str(&row("MAJ", &|s| s.bias.maj));
    out.push_str(&row("PRBM", &|s| s.bias.prbm_accuracy));
    out.push_str(&row("OVERALL_PROTO_ROLE_BIAS", &|s| s.bias.overall_proto_role_bias));

    let _ = writeln!(out, "\n# proto_role_bias\nrole\t{}", names.join("\t"));
    for role in ProtoRole::ALL {
        let vals: Vec<String> = report.splits.iter().map(|s| fmt4(role_value(s, role))).collect();
        let _ = writeln!(out, "{}\t{}", role.name(), vals.join("\t"));
    }

    for s in &report.splits {
        for (label, entries) in [
            (Label::NotEntailed, &s.lexical.top_not_entailed),
            (Label::Entailed, &s.lexical.top_entailed),
        ] {
            let _ = writeln!(out, "\n# lexical\t{}\t{}\nword\tp_label_given_word\tfreq", s.name, label);
            for e in entries.iter() {
                let _ = writeln!(
                    out,
                    "{}\t{:.4}\t{}",
                    e.word,
                    e.p_label_given_word.get(label),
                    e.freq_per_label.get(label)
                );
            }
        }
    }

    out.push_str("\n# flagged_roles\nsplit\trole\tmajority_label\tmaj_pr\tsupport\n");
    for f in &report.flags.roles {
        let _ = writeln!(out, "{}\t{}\t{}\t{:.4}\t{}", f.split, f.role, f.majority_label, f.maj_pr, f.support);
    }
    out.push_str("\n# flagged_words\nsplit\tword\tlabel\tp_label_given_word\ttotal_freq\n");
    for f in &report.flags.words {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.4}\t{}",
            f.split, f.word, f.label, f.p_label_given_word, f.total_freq
        );
    }
    out
}

const MARKDOWN_WORD_LIMIT: usize = 25;

pub fn to_markdown(report: &AuditReport) -> String {
    let mut out = String::new();
    let names: Vec<&str> = report.splits.iter().map(|s| s.name.as_str()).collect();
    let header = |first: &str| {
        format!(
            "| {first} | {} |\n|---|{}\n",
            names.join(" | "),
            "---|".repeat(names.len())
        )
    };

    let _ = writeln!(out, "# Hypothesis bias audit\n\nhypaudit {}\n", report.tool_version);

    out.push_str("## Chi-square test of independence (role × label)\n\n");
    out.push_str(&header(""));
    let cells = |f: &dyn Fn(&SplitReport) -> String| {
        report.splits.iter().map(f).collect::<Vec<_>>().join(" | ")
    };
    let _ = writeln!(out, "| χ² | {} |", cells(&|s| format!("{:.4}", s.chi_square.statistic)));
    let _ = writeln!(out, "| df | {} |", cells(&|s| s.chi_square.df.to_string()));
    let _ = writeln!(out, "| p | {} |", cells(&|s| format_p_value(s.chi_square.p_value)));
    let _ = writeln!(
        out,
        "| reject independence (α = {}) | {} |\n",
        report.config.alpha,
        cells(&|s| s.significant.to_string())
    );

    out.push_str("## Majority baseline and proto-role biased model\n\n");
    out.push_str(&header(""));
    let _ = writeln!(out, "| MAJ | {} |", cells(&|s| format!("{:.4}", s.bias.maj)));
    let _ = writeln!(out, "| PRBM | {} |", cells(&|s| format!("{:.4}", s.bias.prbm_accuracy)));
    let _ = writeln!(
        out,
        "| Overall proto-role bias | {} |\n",
        cells(&|s| format!("{:.4}", s.bias.overall_proto_role_bias))
    );

    out.push_str("## Proto-role bias\n\n");
    out.push_str(&header("Proto-role property"));
    for role in ProtoRole::ALL {
        let _ = writeln!(out, "| {} | {} |", role.title(), cells(&|s| fmt4(role_value(s, role))));
    }
    out.push('\n');

    for s in &report.splits {
        for (label, entries) in [
            (Label::NotEntailed, &s.lexical.top_not_entailed),
            (Label::Entailed, &s.lexical.top_entailed),
        ] {
            let _ = writeln!(out, "## Lexical analysis: {} / {}\n", s.name, label);
            out.push_str("| Word | P(l|w) | Freq |\n|---|---|---|\n");
            for e in entries.iter() {
                let _ = writeln!(
                    out,
                    "| {} | {:.4} | {} |",
                    e.word,
                    e.p_label_given_word.get(label),
                    e.freq_per_label.get(label)
                );
            }
            out.push('\n');
        }
    }

    let _ = writeln!(
        out,
        "## Flagged give-away features\n\nPolicy: {} (role maj_pr ≥ {}, word P(l|w) ≥ {} with freq ≥ {}).\n",
        report.flags.policy, report.flags.role_threshold, report.flags.word_threshold, report.flags.min_freq
    );
    out.push_str("| Split | Role | Label | maj_pr | Support |\n|---|---|---|---|---|\n");
    for f in &report.flags.roles {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {:.4} | {} |",
            f.split,
            f.role.title(),
            f.majority_label,
            f.maj_pr,
            f.support
        );
    }
    let mut words: Vec<&FlaggedWord> = report.flags.words.iter().collect();
    words.sort_by(|a, b| {
        b.total_freq
            .cmp(&a.total_freq)
            .then_with(|| a.split.as_str().cmp(b.split.as_str()))
            .then_with(|| a.word.cmp(&b.word))
    });
    let _ = writeln!(
        out,
        "\n{} flagged words; the {} most frequent:\n",
        words.len(),
        words.len().min(MARKDOWN_WORD_LIMIT)
    );
    out.push_str("| Split | Word | Label | P(l|w) | Freq |\n|---|---|---|---|---|\n");
    for f in words.into_iter().take(MARKDOWN_WORD_LIMIT) {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {:.4} | {} |",
            f.split, f.word, f.label, f.p_label_given_word, f.total_freq
        );
    }

    if !report.warnings.is_empty() {
        out.push_str("\n## Warnings\n\n");
        for w in &report.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    out
}

pub fn render(report: &AuditReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => to_json(report),
        OutputFormat::Tsv => Ok(to_tsv(report)),
        OutputFormat::Markdown => Ok(to_markdown(report)),
    }
}

pub fn emit(report: &AuditReport, format: OutputFormat, path: &Path) -> Result<()> {
    let text = staged(Stage::Report, render(report, format))?;
    fs::write(path, text).map_err(|e| Error::io(path, e).at(Stage::Report))
}
