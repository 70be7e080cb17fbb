//! Hypothesis-side bias auditing for labeled NLI datasets.
//!
//! The pipeline tags each hypothesis with a proto-role property via cue
//! phrases, tests role/label independence with Pearson's chi-square, measures
//! per-role majority bias and the accuracy of a role lookup model, and ranks
//! words by P(label | word).
//!
//! ```
//! use hypaudit::{bias, protorole::{ProtoRole, TaggedSplit}, Label};
//!
//! let mut rows = vec![(Some(ProtoRole::Instigation), Label::Entailed); 60];
//! rows.extend(vec![(Some(ProtoRole::Instigation), Label::NotEntailed); 40]);
//! rows.extend(vec![(Some(ProtoRole::Awareness), Label::Entailed); 30]);
//! rows.extend(vec![(Some(ProtoRole::Awareness), Label::NotEntailed); 70]);
//! let tagged = TaggedSplit::from_assignments("train", rows);
//!
//! let entries = bias::proto_role_bias(&tagged).unwrap();
//! let overall = bias::overall_proto_role_bias(&entries).unwrap();
//! assert!((overall - 0.65).abs() < 1e-12);
//! ```

pub mod bias;
pub mod corpus;
pub mod error;
pub mod lexical;
pub mod protorole;
pub mod report;
pub mod special;
pub mod stats;
pub mod synth;

pub use bias::{BiasSummary, PrbmModel, ProtoRoleBiasEntry};
pub use corpus::{DatasetSplit, InputFormat, Label, LabelCounts, NliRecord, SplitName};
pub use error::{Error, Result, Stage};
pub use lexical::{CountingMode, LexicalEntry};
pub use protorole::{ProtoRole, RoleRule, RuleSet, TaggedSplit};
pub use report::{run_audit, AuditConfig, AuditReport, OutputFormat};
pub use stats::{ChiSquareResult, ContingencyTable};
pub use synth::{generate_synthetic, SynthSpec};
