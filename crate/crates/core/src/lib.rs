//! Harm measurement for masked-language-model completions about LGBTQIA+
//! subjects.
//!
//! The pipeline has three stages:
//!
//! 1. [`templates`] × [`subjects`] produce a dataset of masked sentences.
//! 2. [`predictor`] collects top-k mask completions from a prediction source
//!    (the fill-mask sidecar, or a replay file).
//! 3. [`benchmark`] scores the completions with AFINN and HurtLex
//!    ([`lexical`]) and a Perspective-style analyzer ([`perspective`]), and
//!    averages the three tool scores into the QueerBench score.

pub mod benchmark;
pub mod lexical;
pub mod perspective;
pub mod predictor;
pub mod retry;
pub mod subjects;
pub mod templates;

pub use benchmark::{queerbench_score, GroupResult, QueerBenchScore, ToolScores};
pub use subjects::{Subject, SubjectGroup, SubjectSet};
pub use templates::{Dataset, MaskedSentence, Template};
