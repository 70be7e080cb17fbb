//! Per-label word statistics and P(label | word) rankings.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{DatasetSplit, Label, LabelCounts};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountingMode {
    /// Each hypothesis counts a word at most once.
    #[default]
    Presence,
    /// Every token occurrence counts.
    Token,
}

impl FromStr for CountingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "presence" => Ok(CountingMode::Presence),
            "token" => Ok(CountingMode::Token),
            other => Err(format!("unknown counting mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelProbs {
    pub entailed: f64,
    pub not_entailed: f64,
}

impl LabelProbs {
    pub fn get(&self, label: Label) -> f64 {
        match label {
            Label::Entailed => self.entailed,
            Label::NotEntailed => self.not_entailed,
        }
    }

    /// The more probable label and its probability; ties go to `Entailed`.
    pub fn max(&self) -> (Label, f64) {
        if self.not_entailed > self.entailed {
            (Label::NotEntailed, self.not_entailed)
        } else {
            (Label::Entailed, self.entailed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalEntry {
    pub word: String,
    pub freq_per_label: LabelCounts,
    pub p_label_given_word: LabelProbs,
    pub total_freq: u64,
}

impl LexicalEntry {
    fn from_counts(word: String, freq: LabelCounts) -> Self {
        let total = freq.total();
        let p = if total == 0 {
            LabelProbs::default()
        } else {
            LabelProbs {
                entailed: freq.entailed as f64 / total as f64,
                not_entailed: freq.not_entailed as f64 / total as f64,
            }
        };
        LexicalEntry {
            word,
            freq_per_label: freq,
            p_label_given_word: p,
            total_freq: total,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LexicalOptions {
    pub counting: CountingMode,
    pub stop_words: HashSet<String>,
}

/// Lowercase, split on whitespace, strip non-alphanumeric characters from
/// both ends of each token, drop empties. Interior punctuation is kept.
pub fn tokenize(hypothesis: &str) -> Vec<String> {
    hypothesis
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// One token per line; blank lines and `#` comments ignored. Entries are
/// normalized the same way as hypothesis tokens.
pub fn load_stop_words(path: &Path) -> Result<HashSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(tokenize)
        .collect())
}

/// Presence counting with no stop words.
pub fn word_label_stats(split: &DatasetSplit) -> Result<Vec<LexicalEntry>> {
    word_label_stats_with(split, &LexicalOptions::default())
}

/// Entries sorted by word.
pub fn word_label_stats_with(split: &DatasetSplit, opts: &LexicalOptions) -> Result<Vec<LexicalEntry>> {
    if split.is_empty() {
        return Err(Error::EmptyInput("lexical statistics of an empty split"));
    }
    let merged: HashMap<String, LabelCounts> = split
        .records
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<String, LabelCounts>, r| {
            let mut tokens = tokenize(&r.hypothesis);
            tokens.retain(|t| !opts.stop_words.contains(t));
            if opts.counting == CountingMode::Presence {
                tokens.sort_unstable();
                tokens.dedup();
            }
            for t in tokens {
                acc.entry(t).or_default().add(r.label, 1);
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, std::mem::take(&mut a)) };
            for (w, c) in small {
                *big.entry(w).or_default() += c;
            }
            big
        });

    let sorted: BTreeMap<String, LabelCounts> = merged.into_iter().collect();
    Ok(sorted
        .into_iter()
        .map(|(w, c)| LexicalEntry::from_counts(w, c))
        .collect())
}

/// Entries with `freq_per_label[label] >= min_freq`, by that frequency
/// descending then word ascending, truncated to `k`.
pub fn top_k_by_label(entries: &[LexicalEntry], label: Label, k: usize, min_freq: u64) -> Vec<LexicalEntry> {
    let mut picked: Vec<&LexicalEntry> = entries
        .iter()
        .filter(|e| e.freq_per_label.get(label) >= min_freq)
        .collect();
    picked.sort_by(|a, b| {
        b.freq_per_label
            .get(label)
            .cmp(&a.freq_per_label.get(label))
            .then_with(|| a.word.cmp(&b.word))
    });
    picked.into_iter().take(k).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::NliRecord;
    use proptest::prelude::*;

    fn split(rows: &[(&str, Label)]) -> DatasetSplit {
        DatasetSplit::new(
            "dev",
            rows.iter().map(|(h, l)| NliRecord::new("", *h, *l)).collect(),
        )
    }

    fn entry<'a>(entries: &'a [LexicalEntry], w: &str) -> &'a LexicalEntry {
        entries.iter().find(|e| e.word == w).unwrap()
    }

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize("The market, rose."), vec!["the", "market", "rose"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Stock--stock STOCK"), vec!["stock--stock", "stock"]);
        assert_eq!(tokenize("  \"they're\"  ... "), vec!["they're"]);
    }

    #[test]
    fn presence_counting() {
        let s = split(&[
            ("stock stock rose", Label::NotEntailed),
            ("the stock fell", Label::Entailed),
            ("stock", Label::NotEntailed),
        ]);
        let e = word_label_stats(&s).unwrap();
        let stock = entry(&e, "stock");
        assert_eq!(stock.freq_per_label, LabelCounts::new(1, 2));
        assert_eq!(stock.total_freq, 3);
        assert!((stock.p_label_given_word.not_entailed - 2.0 / 3.0).abs() < 1e-15);

        let tok = word_label_stats_with(
            &s,
            &LexicalOptions {
                counting: CountingMode::Token,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(entry(&tok, "stock").freq_per_label, LabelCounts::new(1, 3));
    }

    #[test]
    fn single_occurrence() {
        let s = split(&[("zork", Label::Entailed), ("other", Label::NotEntailed)]);
        let e = word_label_stats(&s).unwrap();
        let z = entry(&e, "zork");
        assert_eq!(z.p_label_given_word.entailed, 1.0);
        assert_eq!(z.total_freq, 1);
    }

    #[test]
    fn stop_words_are_removed() {
        let s = split(&[("the cat", Label::Entailed)]);
        let opts = LexicalOptions {
            stop_words: ["the".to_string()].into_iter().collect(),
            ..Default::default()
        };
        let e = word_label_stats_with(&s, &opts).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].word, "cat");
    }

    #[test]
    fn ranking_and_truncation() {
        let s = split(&[
            ("b a", Label::NotEntailed),
            ("b a c", Label::NotEntailed),
            ("c", Label::NotEntailed),
            ("d", Label::Entailed),
        ]);
        let e = word_label_stats(&s).unwrap();
        let top = top_k_by_label(&e, Label::NotEntailed, 2, 1);
        let words: Vec<_> = top.iter().map(|e| e.word.as_str()).collect();
        assert_eq!(words, vec!["a", "b"]);
        assert_eq!(top_k_by_label(&e, Label::NotEntailed, 100, 1).len(), 3);
        assert_eq!(top_k_by_label(&e, Label::NotEntailed, 100, 3).len(), 0);
        assert_eq!(top_k_by_label(&e, Label::Entailed, 100, 1).len(), 1);
    }

    #[test]
    fn empty_split_errors() {
        assert!(word_label_stats(&DatasetSplit::new("dev", vec![])).is_err());
    }

    fn arb_split() -> impl Strategy<Value = Vec<(Vec<usize>, bool)>> {
        prop::collection::vec((prop::collection::vec(0usize..12, 0..8), any::<bool>()), 1..60)
    }

    fn build(rows: &[(Vec<usize>, bool)], swap: bool, dup: bool) -> DatasetSplit {
        const WORDS: [&str; 12] = [
            "market", "that", "stock", "company", "they", "some", "making", "the", "rose", "fell",
            "Stock.", "(they)",
        ];
        let records = rows
            .iter()
            .map(|(ws, e)| {
                let mut h: Vec<&str> = ws.iter().map(|&i| WORDS[i]).collect();
                if dup {
                    h.extend(ws.iter().map(|&i| WORDS[i]));
                }
                let label = if *e ^ swap { Label::Entailed } else { Label::NotEntailed };
                NliRecord::new("", h.join(" "), label)
            })
            .collect();
        DatasetSplit::new("dev", records)
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(rows in arb_split()) {
            let s = build(&rows, false, false);
            let counts = s.label_counts();
            for e in word_label_stats(&s).unwrap() {
                let p = e.p_label_given_word;
                prop_assert!((p.entailed + p.not_entailed - 1.0).abs() <= 1e-9);
                prop_assert!(e.freq_per_label.entailed <= counts.entailed);
                prop_assert!(e.freq_per_label.not_entailed <= counts.not_entailed);
            }
        }

        #[test]
        fn duplication_does_not_change_presence_counts(rows in arb_split()) {
            let a = word_label_stats(&build(&rows, false, false)).unwrap();
            let b = word_label_stats(&build(&rows, false, true)).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn label_swap_swaps_counts(rows in arb_split()) {
            let a = word_label_stats(&build(&rows, false, false)).unwrap();
            let b = word_label_stats(&build(&rows, true, false)).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(&x.word, &y.word);
                prop_assert_eq!(x.freq_per_label, y.freq_per_label.swapped());
            }
        }
    }
}
