//! `hypaudit` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hypaudit::corpus::{load_split, spr_reference_counts, validate_manifest, ValidationStatus};
use hypaudit::report::{self, AuditConfig};
use hypaudit::synth::{self, RoleSpec, SynthSpec, WordSpec};
use hypaudit::{Error, InputFormat, LabelCounts, ProtoRole, SplitName, Stage};
use sha2::{Digest, Sha256};

const SPR_ARCHIVE_URL: &str =
    "https://github.com/decompositional-semantics-initiative/DNC/raw/master/inference_is_everything.zip";

#[derive(Parser)]
#[command(name = "hypaudit", version, about = "Audit NLI datasets for hypothesis-side biases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full audit and write a report
    Audit(Box<AuditArgs>),
    /// Download the recast SPR archive and record its checksum
    Fetch(FetchArgs),
    /// Write a synthetic split with known statistics
    Synth(SynthArgs),
    /// Check a split's label counts against expected values
    Validate(ValidateArgs),
}

#[derive(Args)]
struct AuditArgs {
    /// key=value config file; flags given on the command line override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: Option<String>,
    #[arg(long)]
    dev: Option<String>,
    #[arg(long)]
    test: Option<String>,
    #[arg(long, value_name = "tsv|jsonl")]
    train_format: Option<String>,
    #[arg(long, value_name = "tsv|jsonl")]
    dev_format: Option<String>,
    #[arg(long, value_name = "tsv|jsonl")]
    test_format: Option<String>,
    #[arg(long)]
    rules: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    top_k: Option<String>,
    #[arg(long)]
    min_freq: Option<String>,
    #[arg(long, value_name = "presence|token")]
    counting: Option<String>,
    #[arg(long)]
    prefer_metadata: bool,
    #[arg(long)]
    stoplist: Option<String>,
    #[arg(long, value_name = "json|tsv|markdown")]
    output_format: Option<String>,
    /// Report destination; stdout when omitted
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    role_flag_threshold: Option<String>,
    #[arg(long)]
    word_flag_threshold: Option<String>,
    /// Expected label counts to validate against
    #[arg(long, value_name = "none|spr")]
    manifest: Option<String>,
}

impl AuditArgs {
    fn into_config(self) -> Result<AuditConfig, Error> {
        let mut config = AuditConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            config.apply_file(&text)?;
        }
        let pairs = [
            ("train", self.train),
            ("dev", self.dev),
            ("test", self.test),
            ("train-format", self.train_format),
            ("dev-format", self.dev_format),
            ("test-format", self.test_format),
            ("rules", self.rules),
            ("alpha", self.alpha),
            ("top-k", self.top_k),
            ("min-freq", self.min_freq),
            ("counting", self.counting),
            ("stoplist", self.stoplist),
            ("output-format", self.output_format),
            ("output", self.output),
            ("role-flag-threshold", self.role_flag_threshold),
            ("word-flag-threshold", self.word_flag_threshold),
            ("manifest", self.manifest),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                config.set(key, &v)?;
            }
        }
        if self.prefer_metadata {
            config.prefer_metadata = true;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct FetchArgs {
    #[arg(long, default_value = SPR_ARCHIVE_URL)]
    url: String,
    /// Where to write the archive; a `.sha256` file is written next to it
    #[arg(long, default_value = "inference_is_everything.zip")]
    out: PathBuf,
    /// Fail if the downloaded archive has a different SHA-256
    #[arg(long)]
    expect_sha256: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON synthetic spec; --role/--word flags are appended to it
    #[arg(long)]
    spec: Option<PathBuf>,
    /// ROLE:COUNT:ENTAILED_RATE, repeatable
    #[arg(long = "role", value_name = "ROLE:COUNT:RATE")]
    roles: Vec<String>,
    /// WORD:COUNT:ENTAILED_RATE, repeatable
    #[arg(long = "word", value_name = "WORD:COUNT:RATE")]
    words: Vec<String>,
    #[arg(long)]
    unmatched: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the output file extension
    #[arg(long, value_name = "tsv|jsonl")]
    format: Option<String>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    split: PathBuf,
    #[arg(long, value_name = "tsv|jsonl")]
    format: Option<String>,
    /// Split name (train, dev, test or custom)
    #[arg(long, default_value = "custom")]
    name: String,
    /// Use the published SPR counts for the named split
    #[arg(long, value_name = "spr")]
    manifest: Option<String>,
    #[arg(long)]
    entailed: Option<u64>,
    #[arg(long)]
    not_entailed: Option<u64>,
}

fn exit_code(err: &Error) -> u8 {
    if err.stage() == Some(Stage::Config) {
        return 1;
    }
    match err.root() {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::RuleSyntax { .. }
        | Error::InvalidRules(_)
        | Error::Synth(_) => 1,
        Error::Numeric(_) => 3,
        _ => 2,
    }
}

fn parse_format(s: Option<&str>, path: &Path) -> Result<InputFormat, Error> {
    match s {
        Some(s) => s.parse().map_err(Error::Config),
        None => Ok(InputFormat::from_path(path)),
    }
}

fn triple(s: &str) -> Result<(&str, u64, f64), Error> {
    let bad = || Error::Config(format!("expected NAME:COUNT:RATE, got {s:?}"));
    let mut parts = s.rsplitn(3, ':');
    let rate = parts.next().ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?;
    let count = parts.next().ok_or_else(bad)?.parse::<u64>().map_err(|_| bad())?;
    let name = parts.next().ok_or_else(bad)?;
    Ok((name, count, rate))
}

fn run_audit_cmd(args: AuditArgs) -> Result<(), Error> {
    let config = args.into_config().map_err(|e| match e {
        e @ Error::Stage { .. } => e,
        e => Error::Stage {
            stage: Stage::Config,
            source: Box::new(e),
        },
    })?;
    let audit = report::run_audit(&config)?;
    match &config.output {
        Some(path) => report::emit(&audit, config.output_format, path)?,
        None => {
            let text = report::render(&audit, config.output_format)?;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                })?;
        }
    }
    for w in &audit.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn run_fetch(args: FetchArgs) -> Result<(), Error> {
    eprintln!("fetching {}", args.url);
    let download_err = |e: ureq::Error| Error::Io {
        path: args.url.clone().into(),
        source: std::io::Error::other(e.to_string()),
    };
    let mut response = ureq::get(&args.url).call().map_err(download_err)?;
    let bytes = response
        .body_mut()
        .with_config()
        .limit(1 << 31)
        .read_to_vec()
        .map_err(download_err)?;
    let digest = hex::encode(Sha256::digest(&bytes));
    if let Some(expected) = &args.expect_sha256 {
        if !expected.eq_ignore_ascii_case(&digest) {
            return Err(Error::InvalidArgument(format!(
                "checksum mismatch: expected {expected}, got {digest}"
            )));
        }
    }
    fs::write(&args.out, &bytes).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    let mut sum_path = args.out.clone().into_os_string();
    sum_path.push(".sha256");
    let file_name = args.out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    fs::write(&sum_path, format!("{digest}  {file_name}\n{}\n", args.url)).map_err(|e| Error::Io {
        path: sum_path.clone().into(),
        source: e,
    })?;
    println!("{digest}  {}", args.out.display());
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<(), Error> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            synth::parse_spec(&text)?
        }
        None => SynthSpec::new(Vec::new(), 0),
    };
    for r in &args.roles {
        let (name, count, rate) = triple(r)?;
        spec.roles.push(RoleSpec {
            role: name.parse::<ProtoRole>().map_err(Error::Config)?,
            count,
            entailed_rate: rate,
        });
    }
    for w in &args.words {
        let (word, count, rate) = triple(w)?;
        spec.words.push(WordSpec {
            word: word.to_string(),
            count,
            entailed_rate: rate,
        });
    }
    if let Some(n) = args.unmatched {
        spec.unmatched = n;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(n) = args.name {
        spec.split_name = n;
    }
    if spec.roles.is_empty() && spec.unmatched == 0 {
        return Err(Error::Config("synthetic spec has no records".into()));
    }
    let format = parse_format(args.format.as_deref(), &args.out)?;
    let split = synth::write_synthetic(&spec, &args.out, format)?;
    eprintln!("wrote {} records to {}", split.len(), args.out.display());
    Ok(())
}

/// Returns whether the split passed.
fn run_validate(args: ValidateArgs) -> Result<bool, Error> {
    let name = SplitName::from(args.name.clone());
    let expected = match (&args.manifest, args.entailed, args.not_entailed) {
        (Some(m), None, None) if m.eq_ignore_ascii_case("spr") => spr_reference_counts(&name)
            .ok_or_else(|| Error::Config(format!("no SPR manifest for split {name}")))?,
        (None, Some(e), Some(n)) => LabelCounts::new(e, n),
        _ => {
            return Err(Error::Config(
                "give either --manifest spr or both --entailed and --not-entailed".into(),
            ))
        }
    };
    let format = parse_format(args.format.as_deref(), &args.split)?;
    let split = load_split(&args.split, format, name)?;
    let r = validate_manifest(&split, expected);
    let status = match r.status {
        ValidationStatus::Pass => "PASS",
        ValidationStatus::Fail => "FAIL",
    };
    println!("{status}\t{}", args.split.display());
    println!(
        "entailed\texpected {}\tobserved {}\tdelta {:+}",
        r.expected.entailed, r.observed.entailed, r.delta_entailed
    );
    println!(
        "not-entailed\texpected {}\tobserved {}\tdelta {:+}",
        r.expected.not_entailed, r.observed.not_entailed, r.delta_not_entailed
    );
    if split.malformed_lines > 0 {
        println!("malformed lines\t{}", split.malformed_lines);
    }
    Ok(r.status == ValidationStatus::Pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Audit(a) => run_audit_cmd(*a).map(|_| true),
        Command::Fetch(a) => run_fetch(a).map(|_| true),
        Command::Synth(a) => run_synth(a).map(|_| true),
        Command::Validate(a) => run_validate(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
