//! Majority baselines, per-role majority bias and the proto-role biased
//! lookup model (PRBM).
//!
//! For a role `pr`, `maj_pr = count(l*, pr) / count(pr)` where `l*` is the
//! label that occurs most among records tagged `pr`. The overall bias is the
//! support-weighted mean of `maj_pr`, which is exactly the training accuracy
//! of a model that predicts each role's majority label.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{DatasetSplit, Label, LabelCounts, SplitName};
use crate::error::{Error, Result};
use crate::protorole::{ProtoRole, TaggedSplit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtoRoleBiasEntry {
    pub role: ProtoRole,
    pub majority_label: Label,
    pub maj_pr: f64,
    pub support: u64,
    pub counts: LabelCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrbmModel {
    pub role_to_label: BTreeMap<ProtoRole, Label>,
    pub fallback: Label,
    pub trained_on: SplitName,
}

impl PrbmModel {
    pub fn predict(&self, tag: Option<ProtoRole>) -> Label {
        tag.and_then(|r| self.role_to_label.get(&r).copied())
            .unwrap_or(self.fallback)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSummary {
    pub maj: f64,
    /// Accuracy of the train-fitted PRBM on this split, UNMATCHED included.
    pub prbm_accuracy: f64,
    /// Same, restricted to matched records.
    pub prbm_accuracy_matched: Option<f64>,
    pub per_role: Vec<ProtoRoleBiasEntry>,
    pub overall_proto_role_bias: f64,
    pub total: u64,
    pub matched: u64,
}

fn label_counts(labels: impl IntoIterator<Item = Label>) -> LabelCounts {
    let mut c = LabelCounts::default();
    for l in labels {
        c.add(l, 1);
    }
    c
}

/// Label a tie falls back to: the strict majority, else `Entailed`.
pub fn global_majority(counts: &LabelCounts) -> Label {
    counts.majority().unwrap_or(Label::Entailed)
}

pub fn majority_baseline(split: &DatasetSplit) -> Result<f64> {
    majority_baseline_of(&split.label_counts())
}

pub fn majority_baseline_of(counts: &LabelCounts) -> Result<f64> {
    if counts.total() == 0 {
        return Err(Error::EmptyInput("majority baseline of an empty split"));
    }
    Ok(counts.entailed.max(counts.not_entailed) as f64 / counts.total() as f64)
}

fn per_role_counts(tagged: &TaggedSplit) -> [LabelCounts; ProtoRole::COUNT] {
    let mut counts = [LabelCounts::default(); ProtoRole::COUNT];
    for (tag, label) in tagged.iter() {
        if let Some(r) = tag {
            counts[r.index()].add(label, 1);
        }
    }
    counts
}

/// One entry per role with non-zero support, in role order. A within-role tie
/// reports `maj_pr = 0.5` with the split's global majority label.
pub fn proto_role_bias(tagged: &TaggedSplit) -> Result<Vec<ProtoRoleBiasEntry>> {
    let global = global_majority(&label_counts(tagged.labels.iter().copied()));
    let entries: Vec<_> = ProtoRole::ALL
        .iter()
        .zip(per_role_counts(tagged))
        .filter(|(_, c)| c.total() > 0)
        .map(|(&role, counts)| {
            let majority_label = counts.majority().unwrap_or(global);
            ProtoRoleBiasEntry {
                role,
                majority_label,
                maj_pr: counts.get(majority_label) as f64 / counts.total() as f64,
                support: counts.total(),
                counts,
            }
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptyInput("no records matched a proto-role"));
    }
    Ok(entries)
}

pub fn overall_proto_role_bias(entries: &[ProtoRoleBiasEntry]) -> Result<f64> {
    let support: u64 = entries.iter().map(|e| e.support).sum();
    if support == 0 {
        return Err(Error::EmptyInput("no proto-role bias entries"));
    }
    let weighted: f64 = entries.iter().map(|e| e.maj_pr * e.support as f64).sum();
    Ok(weighted / support as f64)
}

/// Roles unseen in training, and roles tied within training, map to `fallback`.
pub fn train_prbm(tagged_train: &TaggedSplit, fallback: Label) -> Result<PrbmModel> {
    if tagged_train.is_empty() {
        return Err(Error::EmptyInput("PRBM training split"));
    }
    let counts = per_role_counts(tagged_train);
    let role_to_label = ProtoRole::ALL
        .iter()
        .map(|&r| (r, counts[r.index()].majority().unwrap_or(fallback)))
        .collect();
    Ok(PrbmModel {
        role_to_label,
        fallback,
        trained_on: tagged_train.name.clone(),
    })
}

/// Accuracy over all records; UNMATCHED records get the fallback prediction.
pub fn evaluate_prbm(model: &PrbmModel, tagged: &TaggedSplit) -> Result<f64> {
    if tagged.is_empty() {
        return Err(Error::EmptyInput("PRBM evaluation split"));
    }
    let correct = tagged
        .iter()
        .filter(|&(tag, label)| model.predict(tag) == label)
        .count();
    Ok(correct as f64 / tagged.len() as f64)
}

/// Accuracy over matched records only, `None` when nothing matched.
pub fn evaluate_prbm_matched(model: &PrbmModel, tagged: &TaggedSplit) -> Option<f64> {
    let (mut correct, mut total) = (0usize, 0usize);
    for (tag, label) in tagged.iter() {
        if tag.is_some() {
            total += 1;
            if model.predict(tag) == label {
                correct += 1;
            }
        }
    }
    (total > 0).then(|| correct as f64 / total as f64)
}

pub fn summarize(tagged: &TaggedSplit, model: &PrbmModel) -> Result<BiasSummary> {
    let counts = label_counts(tagged.labels.iter().copied());
    let per_role = proto_role_bias(tagged)?;
    Ok(BiasSummary {
        maj: majority_baseline_of(&counts)?,
        prbm_accuracy: evaluate_prbm(model, tagged)?,
        prbm_accuracy_matched: evaluate_prbm_matched(model, tagged),
        overall_proto_role_bias: overall_proto_role_bias(&per_role)?,
        per_role,
        total: tagged.len() as u64,
        matched: tagged.matched(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::NliRecord;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn role_block(role: ProtoRole, entailed: usize, not_entailed: usize) -> Vec<(Option<ProtoRole>, Label)> {
        let mut v = vec![(Some(role), Label::Entailed); entailed];
        v.extend(vec![(Some(role), Label::NotEntailed); not_entailed]);
        v
    }

    fn worked_example() -> TaggedSplit {
        // 110 of 200 not-entailed: 40 instigation, 70 awareness
        let mut a = role_block(ProtoRole::Instigation, 60, 40);
        a.extend(role_block(ProtoRole::Awareness, 30, 70));
        TaggedSplit::from_assignments("train", a)
    }

    #[test]
    fn worked_example_values() {
        let t = worked_example();
        let counts = label_counts(t.labels.iter().copied());
        assert_relative_eq!(majority_baseline_of(&counts).unwrap(), 0.55, epsilon = 1e-15);

        let entries = proto_role_bias(&t).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].role, ProtoRole::Instigation);
        assert_eq!(entries[0].majority_label, Label::Entailed);
        assert_relative_eq!(entries[0].maj_pr, 0.6, epsilon = 1e-15);
        assert_eq!(entries[1].majority_label, Label::NotEntailed);
        assert_relative_eq!(entries[1].maj_pr, 0.7, epsilon = 1e-15);
        assert_relative_eq!(overall_proto_role_bias(&entries).unwrap(), 0.65, epsilon = 1e-15);

        let model = train_prbm(&t, Label::NotEntailed).unwrap();
        assert_relative_eq!(evaluate_prbm(&model, &t).unwrap(), 0.65, epsilon = 1e-15);
    }

    #[test]
    fn majority_baseline_published_ratios() {
        assert_eq!(format!("{:.4}", majority_baseline_of(&LabelCounts::new(5_313, 9_983)).unwrap()), "0.6527");
        assert_eq!(format!("{:.4}", majority_baseline_of(&LabelCounts::new(5_341, 10_115)).unwrap()), "0.6544");
        assert_eq!(format!("{:.4}", majority_baseline_of(&LabelCounts::new(43_148, 80_707)).unwrap()), "0.6516");
    }

    #[test]
    fn majority_baseline_edge_cases() {
        let all_e = DatasetSplit::new("train", vec![NliRecord::new("", "h", Label::Entailed); 4]);
        assert_eq!(majority_baseline(&all_e).unwrap(), 1.0);
        assert!(majority_baseline_of(&LabelCounts::default()).is_err());
    }

    #[test]
    fn tie_uses_global_majority() {
        let mut a = role_block(ProtoRole::Volition, 5, 5);
        a.extend(role_block(ProtoRole::Sentient, 1, 9));
        let entries = proto_role_bias(&TaggedSplit::from_assignments("dev", a)).unwrap();
        assert_eq!(entries[0].maj_pr, 0.5);
        assert_eq!(entries[0].majority_label, Label::NotEntailed);
    }

    #[test]
    fn single_entry_identity() {
        let e = ProtoRoleBiasEntry {
            role: ProtoRole::Stationary,
            majority_label: Label::NotEntailed,
            maj_pr: 0.9,
            support: 10,
            counts: LabelCounts::new(1, 9),
        };
        assert_eq!(overall_proto_role_bias(&[e]).unwrap(), 0.9);
        assert!(overall_proto_role_bias(&[]).is_err());
    }

    #[test]
    fn prbm_fallbacks() {
        let mut a = role_block(ProtoRole::Awareness, 39, 61);
        a.extend(role_block(ProtoRole::Sentient, 3, 3));
        let t = TaggedSplit::from_assignments("train", a);
        let m = train_prbm(&t, Label::Entailed).unwrap();
        assert_eq!(m.role_to_label[&ProtoRole::Awareness], Label::NotEntailed);
        assert_eq!(m.role_to_label[&ProtoRole::Sentient], Label::Entailed);
        assert_eq!(m.role_to_label[&ProtoRole::WasUsed], Label::Entailed);
        assert_eq!(m.role_to_label.len(), 16);
        assert_eq!(m.predict(None), Label::Entailed);
    }

    #[test]
    fn prbm_memorizes_single_role() {
        let t = TaggedSplit::from_assignments("train", role_block(ProtoRole::Stationary, 0, 7));
        let m = train_prbm(&t, Label::Entailed).unwrap();
        assert_eq!(evaluate_prbm(&m, &t).unwrap(), 1.0);
    }

    #[test]
    fn unmatched_counted_in_denominator() {
        let mut a = role_block(ProtoRole::Stationary, 0, 3);
        a.push((None, Label::Entailed));
        let t = TaggedSplit::from_assignments("dev", a);
        let m = train_prbm(&t, Label::NotEntailed).unwrap();
        assert_eq!(evaluate_prbm(&m, &t).unwrap(), 0.75);
        assert_eq!(evaluate_prbm_matched(&m, &t), Some(1.0));
    }

    #[test]
    fn empty_inputs_error() {
        let empty = TaggedSplit::from_assignments("train", vec![]);
        assert!(proto_role_bias(&empty).is_err());
        assert!(train_prbm(&empty, Label::Entailed).is_err());
        let unmatched = TaggedSplit::from_assignments("train", vec![(None, Label::Entailed)]);
        assert!(proto_role_bias(&unmatched).is_err());
    }

    fn arb_tagged() -> impl Strategy<Value = Vec<(Option<ProtoRole>, Label)>> {
        prop::collection::vec(
            (0usize..16, any::<bool>()).prop_map(|(r, e)| {
                (Some(ProtoRole::ALL[r]), if e { Label::Entailed } else { Label::NotEntailed })
            }),
            1..300,
        )
    }

    proptest! {
        #[test]
        fn prbm_training_accuracy_is_overall_bias(a in arb_tagged()) {
            let t = TaggedSplit::from_assignments("train", a);
            let fallback = global_majority(&label_counts(t.labels.iter().copied()));
            let m = train_prbm(&t, fallback).unwrap();
            let entries = proto_role_bias(&t).unwrap();
            let overall = overall_proto_role_bias(&entries).unwrap();
            let acc = evaluate_prbm(&m, &t).unwrap();
            prop_assert!((acc - overall).abs() <= 1e-12);

            let maj = majority_baseline_of(&label_counts(t.labels.iter().copied())).unwrap();
            prop_assert!(acc >= maj - 1e-12);

            let lo = entries.iter().map(|e| e.maj_pr).fold(f64::INFINITY, f64::min);
            let hi = entries.iter().map(|e| e.maj_pr).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(entries.iter().all(|e| (0.5..=1.0).contains(&e.maj_pr)));
            prop_assert!(overall >= lo - 1e-12 && overall <= hi + 1e-12);
        }

        #[test]
        fn label_swap_symmetry(a in arb_tagged()) {
            let swapped: Vec<_> = a.iter().map(|&(r, l)| (r, l.other())).collect();
            let t = TaggedSplit::from_assignments("train", a);
            let s = TaggedSplit::from_assignments("train", swapped);
            let fb = global_majority(&label_counts(t.labels.iter().copied()));
            let fs = global_majority(&label_counts(s.labels.iter().copied()));
            let et = proto_role_bias(&t).unwrap();
            let es = proto_role_bias(&s).unwrap();
            for (x, y) in et.iter().zip(&es) {
                prop_assert_eq!(x.maj_pr, y.maj_pr);
            }
            prop_assert_eq!(overall_proto_role_bias(&et).unwrap(), overall_proto_role_bias(&es).unwrap());
            let at = evaluate_prbm(&train_prbm(&t, fb).unwrap(), &t).unwrap();
            let as_ = evaluate_prbm(&train_prbm(&s, fs).unwrap(), &s).unwrap();
            prop_assert_eq!(at, as_);
        }
    }
}
