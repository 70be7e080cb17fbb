//! Deterministic synthetic NLI splits with known role and word statistics.
//!
//! Label counts are allocated exactly (`round(count * entailed_rate)`
//! entailed records per role); the seed only decides which filler nouns,
//! predicates and hypotheses receive each vocabulary word.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_split, DatasetSplit, InputFormat, Label, NliRecord, SplitName};
use crate::error::{Error, Result};
use crate::lexical::tokenize;
use crate::protorole::ProtoRole;

const NOUNS: [&str; 10] = [
    "clerk", "farmer", "river", "engine", "teacher", "pilot", "garden", "lawyer", "singer", "vendor",
];
const PREDICATES: [&str; 8] = [
    "meeting", "sale", "journey", "repair", "election", "concert", "harvest", "trial",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleSpec {
    pub role: ProtoRole,
    pub count: u64,
    pub entailed_rate: f64,
}

/// `count` hypotheses receive `word`, split between labels by `entailed_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordSpec {
    pub word: String,
    pub count: u64,
    pub entailed_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub roles: Vec<RoleSpec>,
    #[serde(default)]
    pub words: Vec<WordSpec>,
    /// Records whose hypothesis matches no role template.
    #[serde(default)]
    pub unmatched: u64,
    #[serde(default = "half")]
    pub unmatched_entailed_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_split_name")]
    pub split_name: String,
}

fn half() -> f64 {
    0.5
}

fn default_split_name() -> String {
    "custom".to_string()
}

impl SynthSpec {
    pub fn new(roles: Vec<RoleSpec>, seed: u64) -> Self {
        SynthSpec {
            roles,
            words: Vec::new(),
            unmatched: 0,
            unmatched_entailed_rate: 0.5,
            seed,
            split_name: default_split_name(),
        }
    }
}

/// Number of entailed records out of `count` at `rate`.
pub fn entailed_share(count: u64, rate: f64) -> u64 {
    (count as f64 * rate).round() as u64
}

fn check_rate(what: &str, rate: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Synth(format!("{what}: rate {rate} outside [0, 1]")));
    }
    Ok(())
}

fn reserved_tokens() -> HashSet<String> {
    let mut set: HashSet<String> = ProtoRole::ALL
        .iter()
        .flat_map(|r| tokenize(r.template()))
        .collect();
    set.extend(NOUNS.iter().chain(&PREDICATES).map(|s| s.to_string()));
    set.extend(["the", "no", "one", "noticed", "took", "part", "in", "arg", "pred"].map(String::from));
    set
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<DatasetSplit> {
    for r in &spec.roles {
        check_rate(r.role.name(), r.entailed_rate)?;
    }
    check_rate("unmatched", spec.unmatched_entailed_rate)?;
    let reserved = reserved_tokens();
    let mut seen = HashSet::new();
    for w in &spec.words {
        check_rate(&w.word, w.entailed_rate)?;
        let toks = tokenize(&w.word);
        if toks.len() != 1 || toks[0] != w.word {
            return Err(Error::Synth(format!(
                "vocabulary word {:?} must be a single lowercase token",
                w.word
            )));
        }
        if reserved.contains(&w.word) {
            return Err(Error::Synth(format!(
                "vocabulary word {:?} collides with generated text",
                w.word
            )));
        }
        if !seen.insert(&w.word) {
            return Err(Error::Synth(format!("duplicate vocabulary word {:?}", w.word)));
        }
    }

    // (role, label) skeleton in deterministic order
    let mut skeleton: Vec<(Option<ProtoRole>, Label)> = Vec::new();
    let mut push = |role: Option<ProtoRole>, count: u64, rate: f64| {
        let e = entailed_share(count, rate);
        skeleton.extend(std::iter::repeat_n((role, Label::Entailed), e as usize));
        skeleton.extend(std::iter::repeat_n((role, Label::NotEntailed), (count - e) as usize));
    };
    for r in &spec.roles {
        push(Some(r.role), r.count, r.entailed_rate);
    }
    push(None, spec.unmatched, spec.unmatched_entailed_rate);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut extra: Vec<Vec<&str>> = vec![Vec::new(); skeleton.len()];
    for label in Label::ALL {
        let slots: Vec<usize> = (0..skeleton.len()).filter(|&i| skeleton[i].1 == label).collect();
        for w in &spec.words {
            let e = entailed_share(w.count, w.entailed_rate);
            let need = if label == Label::Entailed { e } else { w.count - e } as usize;
            if need > slots.len() {
                return Err(Error::Synth(format!(
                    "word {:?} needs {need} {label} hypotheses but only {} exist",
                    w.word,
                    slots.len()
                )));
            }
            for k in sample(&mut rng, slots.len(), need) {
                extra[slots[k]].push(&w.word);
            }
        }
    }

    let records = skeleton
        .iter()
        .zip(extra)
        .map(|(&(role, label), words)| {
            let noun = NOUNS[rng.random_range(0..NOUNS.len())];
            let pred = PREDICATES[rng.random_range(0..PREDICATES.len())];
            let mut arg = String::from("the ");
            for w in &words {
                arg.push_str(w);
                arg.push(' ');
            }
            arg.push_str(noun);
            let body = match role {
                Some(r) => r.template().replace("PRED", pred).replace("ARG", &arg),
                None => format!("{arg} took part in the {pred} and no one noticed"),
            };
            let mut rec = NliRecord::new(
                format!("The {noun} took part in the {pred}."),
                format!("{}.", capitalize(&body)),
                label,
            );
            rec.proto_role_meta = role.map(|r| r.name().to_string());
            rec
        })
        .collect();

    Ok(DatasetSplit::new(SplitName::from(spec.split_name.clone()), records))
}

/// Parse a JSON synthetic spec.
pub fn parse_spec(text: &str) -> Result<SynthSpec> {
    serde_json::from_str(text).map_err(|e| Error::Synth(e.to_string()))
}

pub fn write_synthetic(spec: &SynthSpec, path: &Path, format: InputFormat) -> Result<DatasetSplit> {
    let split = generate_synthetic(spec)?;
    write_split(&split, path, format)?;
    Ok(split)
}
