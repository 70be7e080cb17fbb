//! Proto-role properties and cue-phrase tagging of hypotheses.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{DatasetSplit, Label, SplitName};
use crate::error::{Error, Result};

/// Rules file shipped with the crate.
pub const DEFAULT_RULES: &str = include_str!("../rules/default.rules");

/// The sixteen proto-role properties, declared in annotation-question order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtoRole {
    Instigation,
    Volition,
    Awareness,
    Sentient,
    ChangeOfLocation,
    ExistsAsPhysical,
    ExistedBefore,
    ExistedDuring,
    ExistedAfter,
    ChangeOfPossession,
    ChangeOfState,
    Stationary,
    LocationOfEvent,
    PhysicalContact,
    WasUsed,
    PredChangedArg,
}

impl ProtoRole {
    pub const COUNT: usize = 16;

    pub const ALL: [ProtoRole; 16] = [
        ProtoRole::Instigation,
        ProtoRole::Volition,
        ProtoRole::Awareness,
        ProtoRole::Sentient,
        ProtoRole::ChangeOfLocation,
        ProtoRole::ExistsAsPhysical,
        ProtoRole::ExistedBefore,
        ProtoRole::ExistedDuring,
        ProtoRole::ExistedAfter,
        ProtoRole::ChangeOfPossession,
        ProtoRole::ChangeOfState,
        ProtoRole::Stationary,
        ProtoRole::LocationOfEvent,
        ProtoRole::PhysicalContact,
        ProtoRole::WasUsed,
        ProtoRole::PredChangedArg,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Machine name, e.g. `change_of_location`.
    pub fn name(self) -> &'static str {
        match self {
            ProtoRole::Instigation => "instigation",
            ProtoRole::Volition => "volition",
            ProtoRole::Awareness => "awareness",
            ProtoRole::Sentient => "sentient",
            ProtoRole::ChangeOfLocation => "change_of_location",
            ProtoRole::ExistsAsPhysical => "exists_as_physical",
            ProtoRole::ExistedBefore => "existed_before",
            ProtoRole::ExistedDuring => "existed_during",
            ProtoRole::ExistedAfter => "existed_after",
            ProtoRole::ChangeOfPossession => "change_of_possession",
            ProtoRole::ChangeOfState => "change_of_state",
            ProtoRole::Stationary => "stationary",
            ProtoRole::LocationOfEvent => "location_of_event",
            ProtoRole::PhysicalContact => "physical_contact",
            ProtoRole::WasUsed => "was_used",
            ProtoRole::PredChangedArg => "pred_changed_arg",
        }
    }

    /// Human-facing name, e.g. `Change of location`.
    pub fn title(self) -> String {
        let spaced = self.name().replace('_', " ");
        let mut chars = spaced.chars();
        match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => spaced,
        }
    }

    /// Declarative hypothesis template with `ARG` and `PRED` slots.
    pub fn template(self) -> &'static str {
        match self {
            ProtoRole::Instigation => "ARG caused the PRED to happen",
            ProtoRole::Volition => "ARG chose to be involved in the PRED",
            ProtoRole::Awareness => "ARG was aware of being involved in the PRED",
            ProtoRole::Sentient => "ARG was sentient",
            ProtoRole::ChangeOfLocation => "ARG changed location during the PRED",
            ProtoRole::ExistsAsPhysical => "ARG existed as a physical object",
            ProtoRole::ExistedBefore => "ARG existed before the PRED began",
            ProtoRole::ExistedDuring => "ARG existed during the PRED",
            ProtoRole::ExistedAfter => "ARG existed after the PRED stopped",
            ProtoRole::ChangeOfPossession => "ARG changed possession during the PRED",
            ProtoRole::ChangeOfState => {
                "ARG was altered or somehow changed during or by the end of the PRED"
            }
            ProtoRole::Stationary => "ARG was stationary during the PRED",
            ProtoRole::LocationOfEvent => "ARG described the location of the PRED",
            ProtoRole::PhysicalContact => {
                "ARG made physical contact with someone or something else involved in the PRED"
            }
            ProtoRole::WasUsed => "ARG was used in carrying out the PRED",
            ProtoRole::PredChangedArg => "The PRED caused a change in ARG",
        }
    }
}

impl fmt::Display for ProtoRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtoRole {
    type Err = String;

    /// Accepts the machine name with `_`, `-` or spaces as separators, any case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .chars()
            .map(|c| match c {
                '-' | ' ' => '_',
                c => c.to_ascii_lowercase(),
            })
            .collect();
        ProtoRole::ALL
            .into_iter()
            .find(|r| r.name() == key)
            .ok_or_else(|| format!("unknown proto-role {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleRule {
    pub role: ProtoRole,
    /// Lowercased literal phrases, all of which must occur.
    pub cues: Vec<String>,
    pub precedence: i64,
}

impl RoleRule {
    fn matches(&self, lowered: &str) -> bool {
        self.cues.iter().all(|c| lowered.contains(c.as_str()))
    }
}

/// A validated rule list, sorted by ascending precedence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<RoleRule>,
}

impl RuleSet {
    /// Validates that precedences are unique and every role is covered.
    pub fn new(mut rules: Vec<RoleRule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::InvalidRules("no rules".into()));
        }
        rules.sort_by_key(|r| r.precedence);
        for w in rules.windows(2) {
            if w[0].precedence == w[1].precedence {
                return Err(Error::InvalidRules(format!(
                    "duplicate precedence {}",
                    w[0].precedence
                )));
            }
        }
        let missing: Vec<&str> = ProtoRole::ALL
            .iter()
            .filter(|r| !rules.iter().any(|rule| rule.role == **r))
            .map(|r| r.name())
            .collect();
        if !missing.is_empty() {
            return Err(Error::InvalidRules(format!(
                "no rule for {}",
                missing.join(", ")
            )));
        }
        for r in &mut rules {
            for c in &mut r.cues {
                *c = c.to_lowercase();
            }
            if r.cues.is_empty() || r.cues.iter().any(|c| c.is_empty()) {
                return Err(Error::InvalidRules(format!("empty cue for {}", r.role)));
            }
        }
        Ok(RuleSet { rules })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |message: String| Error::RuleSyntax {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 tab-separated fields, got {}", fields.len())));
            }
            let precedence = fields[0]
                .trim()
                .parse::<i64>()
                .map_err(|e| err(format!("bad precedence: {e}")))?;
            let role = fields[1].parse::<ProtoRole>().map_err(err)?;
            let cues = fields[2].split('|').map(|c| c.trim().to_string()).collect();
            rules.push(RoleRule {
                role,
                cues,
                precedence,
            });
        }
        RuleSet::new(rules)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RuleSet::parse(&text)
    }

    pub fn rules(&self) -> &[RoleRule] {
        &self.rules
    }
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::parse(DEFAULT_RULES).expect("bundled rules file is valid")
    }
}

/// Role of the first rule (by precedence) whose cues all occur, or `None`.
pub fn tag_hypothesis(hypothesis: &str, rules: &RuleSet) -> Option<ProtoRole> {
    let lowered = hypothesis.to_lowercase();
    rules
        .rules
        .iter()
        .find(|r| r.matches(&lowered))
        .map(|r| r.role)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedSplit {
    pub name: SplitName,
    pub labels: Vec<Label>,
    /// Parallel to `labels`; `None` is UNMATCHED.
    pub tags: Vec<Option<ProtoRole>>,
    pub role_counts: [u64; ProtoRole::COUNT],
    pub unmatched: u64,
    /// Records whose metadata named no known role.
    pub unknown_metadata: u64,
}

impl TaggedSplit {
    /// Build from precomputed assignments.
    pub fn from_assignments(
        name: impl Into<SplitName>,
        assignments: Vec<(Option<ProtoRole>, Label)>,
    ) -> Self {
        let (tags, labels): (Vec<_>, Vec<_>) = assignments.into_iter().unzip();
        let mut role_counts = [0u64; ProtoRole::COUNT];
        let mut unmatched = 0;
        for t in &tags {
            match t {
                Some(r) => role_counts[r.index()] += 1,
                None => unmatched += 1,
            }
        }
        TaggedSplit {
            name: name.into(),
            labels,
            tags,
            role_counts,
            unmatched,
            unknown_metadata: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn matched(&self) -> u64 {
        self.role_counts.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Option<ProtoRole>, Label)> + '_ {
        self.tags.iter().copied().zip(self.labels.iter().copied())
    }
}

pub fn tag_split(split: &DatasetSplit, rules: &RuleSet, prefer_metadata: bool) -> TaggedSplit {
    let results: Vec<(Option<ProtoRole>, bool)> = split
        .records
        .par_iter()
        .map(|r| {
            if prefer_metadata {
                if let Some(meta) = &r.proto_role_meta {
                    return match meta.parse::<ProtoRole>() {
                        Ok(role) => (Some(role), false),
                        Err(_) => (None, true),
                    };
                }
            }
            (tag_hypothesis(&r.hypothesis, rules), false)
        })
        .collect();

    let unknown_metadata = results.iter().filter(|(_, bad)| *bad).count() as u64;
    let assignments = results
        .into_iter()
        .zip(&split.records)
        .map(|((tag, _), r)| (tag, r.label))
        .collect();
    let mut tagged = TaggedSplit::from_assignments(split.name.clone(), assignments);
    tagged.unknown_metadata = unknown_metadata;
    tagged
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::NliRecord;

    #[test]
    fn default_rules_cover_every_role() {
        let rules = RuleSet::default();
        assert_eq!(rules.rules().len(), 16);
        assert_eq!(rules.rules()[0].role, ProtoRole::PredChangedArg);
    }

    #[test]
    fn tags_from_default_table() {
        let rules = RuleSet::default();
        assert_eq!(tag_hypothesis("The cat was sentient.", &rules), Some(ProtoRole::Sentient));
        assert_eq!(
            tag_hypothesis("The increasing caused a change in 14 members", &rules),
            Some(ProtoRole::PredChangedArg)
        );
        assert_eq!(tag_hypothesis("xyzzy", &rules), None);
        assert_eq!(
            tag_hypothesis("The Dog CAUSED THE barking TO HAPPEN", &rules),
            Some(ProtoRole::Instigation)
        );
    }

    #[test]
    fn every_template_tags_as_its_own_role() {
        let rules = RuleSet::default();
        for role in ProtoRole::ALL {
            let h = role.template().replace("ARG", "the clerk").replace("PRED", "meeting");
            assert_eq!(tag_hypothesis(&h, &rules), Some(role), "{h}");
        }
    }

    #[test]
    fn role_names_round_trip() {
        for role in ProtoRole::ALL {
            assert_eq!(role.name().parse::<ProtoRole>().unwrap(), role);
            assert_eq!(role.title().parse::<ProtoRole>().unwrap(), role);
        }
        assert_eq!("Change-Of-Possession".parse::<ProtoRole>().unwrap(), ProtoRole::ChangeOfPossession);
        assert!("agentivity".parse::<ProtoRole>().is_err());
    }

    #[test]
    fn rule_parse_errors() {
        let err = RuleSet::parse("1\tsentient\n").unwrap_err();
        assert!(matches!(err, Error::RuleSyntax { line: 1, .. }));

        let mut dup = DEFAULT_RULES.to_string();
        dup.push_str("3\tsentient\tfeels\n");
        assert!(matches!(RuleSet::parse(&dup), Err(Error::InvalidRules(_))));

        let missing: String = DEFAULT_RULES
            .lines()
            .filter(|l| !l.contains("\twas_used\t"))
            .map(|l| format!("{l}\n"))
            .collect();
        let err = RuleSet::parse(&missing).unwrap_err();
        assert!(err.to_string().contains("was_used"));
    }

    #[test]
    fn uniform_split_counts() {
        let records = (0..3)
            .map(|i| NliRecord::new("", format!("Item {i} changed possession during the sale"), Label::Entailed))
            .collect();
        let split = DatasetSplit::new("train", records);
        let tagged = tag_split(&split, &RuleSet::default(), false);
        assert_eq!(tagged.role_counts[ProtoRole::ChangeOfPossession.index()], 3);
        assert_eq!(tagged.matched(), 3);
        assert_eq!(tagged.unmatched, 0);
    }

    #[test]
    fn metadata_wins_when_preferred() {
        let mut r = NliRecord::new("", "ARG existed before", Label::Entailed);
        r.proto_role_meta = Some("stationary".into());
        let mut bad = NliRecord::new("", "ARG existed before", Label::Entailed);
        bad.proto_role_meta = Some("agentivity".into());
        let split = DatasetSplit::new("train", vec![r, bad]);
        let rules = RuleSet::default();

        let tagged = tag_split(&split, &rules, true);
        assert_eq!(tagged.tags, vec![Some(ProtoRole::Stationary), None]);
        assert_eq!(tagged.unknown_metadata, 1);
        assert_eq!(tagged.unmatched, 1);

        let by_rules = tag_split(&split, &rules, false);
        assert_eq!(by_rules.tags, vec![Some(ProtoRole::ExistedBefore); 2]);
    }
}
