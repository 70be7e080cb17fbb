//! Dataset loading, serialization and manifest checks.
//!
//! Two on-disk layouts are understood:
//!
//! * TSV, one record per line: `premise<TAB>hypothesis<TAB>label`. A first
//!   line reading `premise<TAB>hypothesis<TAB>label` is treated as a header.
//! * JSON lines, one object per line with `context`, `hypothesis`, `label`
//!   and an optional `proto_role`.
//!
//! Lines that cannot be interpreted (wrong field count, invalid JSON, empty
//! hypothesis) are counted as malformed and skipped. A well-formed line with a
//! label outside the two known values is a hard error.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "entailed")]
    Entailed,
    #[serde(rename = "not-entailed")]
    NotEntailed,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Entailed, Label::NotEntailed];

    pub fn index(self) -> usize {
        match self {
            Label::Entailed => 0,
            Label::NotEntailed => 1,
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Entailed => Label::NotEntailed,
            Label::NotEntailed => Label::Entailed,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entailed => "entailed",
            Label::NotEntailed => "not-entailed",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "entailed" => Ok(Label::Entailed),
            "not-entailed" | "not_entailed" | "non-entailed" => Ok(Label::NotEntailed),
            _ => Err(s.to_string()),
        }
    }
}

/// Per-label counts. Also used for word frequencies in the lexical module.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub entailed: u64,
    pub not_entailed: u64,
}

impl LabelCounts {
    pub fn new(entailed: u64, not_entailed: u64) -> Self {
        LabelCounts {
            entailed,
            not_entailed,
        }
    }

    pub fn get(&self, label: Label) -> u64 {
        match label {
            Label::Entailed => self.entailed,
            Label::NotEntailed => self.not_entailed,
        }
    }

    pub fn add(&mut self, label: Label, n: u64) {
        match label {
            Label::Entailed => self.entailed += n,
            Label::NotEntailed => self.not_entailed += n,
        }
    }

    pub fn total(&self) -> u64 {
        self.entailed + self.not_entailed
    }

    /// The strictly larger label, `None` on a tie (including 0/0).
    pub fn majority(&self) -> Option<Label> {
        use std::cmp::Ordering::*;
        match self.entailed.cmp(&self.not_entailed) {
            Greater => Some(Label::Entailed),
            Less => Some(Label::NotEntailed),
            Equal => None,
        }
    }

    pub fn swapped(&self) -> Self {
        LabelCounts::new(self.not_entailed, self.entailed)
    }
}

impl std::ops::AddAssign for LabelCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.entailed += rhs.entailed;
        self.not_entailed += rhs.not_entailed;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliRecord {
    pub premise: String,
    pub hypothesis: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proto_role_meta: Option<String>,
}

impl NliRecord {
    pub fn new(premise: impl Into<String>, hypothesis: impl Into<String>, label: Label) -> Self {
        NliRecord {
            premise: premise.into(),
            hypothesis: hypothesis.into(),
            label,
            proto_role_meta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum SplitName {
    Train,
    Dev,
    Test,
    Custom(String),
}

impl SplitName {
    pub fn as_str(&self) -> &str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
            SplitName::Custom(s) => s,
        }
    }
}

impl From<String> for SplitName {
    fn from(s: String) -> Self {
        match s.as_str() {
            "train" => SplitName::Train,
            "dev" => SplitName::Dev,
            "test" => SplitName::Test,
            _ => SplitName::Custom(s),
        }
    }
}

impl From<&str> for SplitName {
    fn from(s: &str) -> Self {
        SplitName::from(s.to_string())
    }
}

impl From<SplitName> for String {
    fn from(s: SplitName) -> Self {
        s.as_str().to_string()
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Tsv,
    Jsonl,
}

impl InputFormat {
    /// `.jsonl`/`.json`/`.ndjson` are JSON lines, everything else TSV.
    pub fn from_path(path: &Path) -> InputFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") | Some("ndjson") => InputFormat::Jsonl,
            _ => InputFormat::Tsv,
        }
    }
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tsv" => Ok(InputFormat::Tsv),
            "jsonl" | "json-lines" | "json_lines" => Ok(InputFormat::Jsonl),
            other => Err(format!("unknown input format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub records: Vec<NliRecord>,
    /// Lines skipped because they could not be parsed into a record.
    pub malformed_lines: usize,
}

impl DatasetSplit {
    pub fn new(name: impl Into<SplitName>, records: Vec<NliRecord>) -> Self {
        DatasetSplit {
            name: name.into(),
            records,
            malformed_lines: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn label_counts(&self) -> LabelCounts {
        let mut counts = LabelCounts::default();
        for r in &self.records {
            counts.add(r.label, 1);
        }
        counts
    }
}

#[derive(Deserialize)]
struct JsonLine {
    #[serde(default)]
    context: Option<String>,
    hypothesis: String,
    label: String,
    #[serde(default)]
    proto_role: Option<String>,
}

#[derive(Serialize)]
struct JsonLineOut<'a> {
    context: &'a str,
    hypothesis: &'a str,
    label: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    proto_role: Option<&'a str>,
}

enum Parsed {
    Record(NliRecord),
    Skip,
    Malformed,
}

fn parse_tsv_line(line: &str, lineno: usize, path: &Path) -> Result<Parsed> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Ok(Parsed::Malformed);
    }
    if lineno == 1
        && fields[0].trim().eq_ignore_ascii_case("premise")
        && fields[1].trim().eq_ignore_ascii_case("hypothesis")
        && fields[2].trim().eq_ignore_ascii_case("label")
    {
        return Ok(Parsed::Skip);
    }
    let hypothesis = fields[1].trim();
    if hypothesis.is_empty() {
        return Ok(Parsed::Malformed);
    }
    let label = fields[2].parse::<Label>().map_err(|value| Error::UnknownLabel {
        path: path.to_path_buf(),
        line: lineno,
        value,
    })?;
    Ok(Parsed::Record(NliRecord::new(
        fields[0].trim(),
        hypothesis,
        label,
    )))
}

fn parse_jsonl_line(line: &str, lineno: usize, path: &Path) -> Result<Parsed> {
    let Ok(obj) = serde_json::from_str::<JsonLine>(line) else {
        return Ok(Parsed::Malformed);
    };
    let hypothesis = obj.hypothesis.trim();
    if hypothesis.is_empty() {
        return Ok(Parsed::Malformed);
    }
    let label = obj.label.parse::<Label>().map_err(|value| Error::UnknownLabel {
        path: path.to_path_buf(),
        line: lineno,
        value,
    })?;
    Ok(Parsed::Record(NliRecord {
        premise: obj.context.as_deref().unwrap_or("").trim().to_string(),
        hypothesis: hypothesis.to_string(),
        label,
        proto_role_meta: obj.proto_role,
    }))
}

/// Load one split from disk, preserving line order.
pub fn load_split(path: &Path, format: InputFormat, name: impl Into<SplitName>) -> Result<DatasetSplit> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);

    let mut records = Vec::new();
    let mut malformed = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let parsed = match format {
            InputFormat::Tsv => parse_tsv_line(line, i + 1, path)?,
            InputFormat::Jsonl => parse_jsonl_line(line, i + 1, path)?,
        };
        match parsed {
            Parsed::Record(r) => records.push(r),
            Parsed::Skip => {}
            Parsed::Malformed => malformed += 1,
        }
    }

    if records.is_empty() {
        return Err(Error::NoRecords {
            path: path.to_path_buf(),
        });
    }
    Ok(DatasetSplit {
        name: name.into(),
        records,
        malformed_lines: malformed,
    })
}

/// Write a split in either format. TSV cannot carry `proto_role_meta`, and
/// tabs or newlines inside text fields are replaced with spaces.
pub fn write_split(split: &DatasetSplit, path: &Path, format: InputFormat) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let clean = |s: &str| s.replace(['\t', '\n', '\r'], " ");
    let res: std::io::Result<()> = (|| {
        for r in &split.records {
            match format {
                InputFormat::Tsv => {
                    writeln!(
                        w,
                        "{}\t{}\t{}",
                        clean(&r.premise),
                        clean(&r.hypothesis),
                        r.label
                    )?;
                }
                InputFormat::Jsonl => {
                    let line = JsonLineOut {
                        context: &r.premise,
                        hypothesis: &r.hypothesis,
                        label: r.label.as_str(),
                        proto_role: r.proto_role_meta.as_deref(),
                    };
                    serde_json::to_writer(&mut w, &line)?;
                    w.write_all(b"\n")?;
                }
            }
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ValidationStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestReport {
    pub status: ValidationStatus,
    pub expected: LabelCounts,
    pub observed: LabelCounts,
    /// observed minus expected
    pub delta_entailed: i64,
    pub delta_not_entailed: i64,
}

pub fn validate_manifest(split: &DatasetSplit, expected: LabelCounts) -> ManifestReport {
    let observed = split.label_counts();
    let delta_entailed = observed.entailed as i64 - expected.entailed as i64;
    let delta_not_entailed = observed.not_entailed as i64 - expected.not_entailed as i64;
    let status = if delta_entailed == 0 && delta_not_entailed == 0 {
        ValidationStatus::Pass
    } else {
        ValidationStatus::Fail
    };
    ManifestReport {
        status,
        expected,
        observed,
        delta_entailed,
        delta_not_entailed,
    }
}

/// Published label counts of the recast SPR splits.
pub fn spr_reference_counts(name: &SplitName) -> Option<LabelCounts> {
    match name {
        SplitName::Train => Some(LabelCounts::new(43_148, 80_707)),
        SplitName::Dev => Some(LabelCounts::new(5_313, 9_983)),
        SplitName::Test => Some(LabelCounts::new(5_341, 10_115)),
        SplitName::Custom(_) => None,
    }
}
