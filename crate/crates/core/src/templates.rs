//! Template parsing and template × subject instantiation.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::subjects::{SlotCase, Subject, SubjectGroup, SubjectSet};

pub const SUBJECT: &str = "[SUBJECT]";
pub const MASK: &str = "[MASK]";
pub const BE: &str = "<be>";

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template {id}: empty line")]
    Empty { id: usize },
    #[error("template {id}: missing {placeholder}")]
    Missing { id: usize, placeholder: &'static str },
    #[error("template {id}: {placeholder} appears {count} times")]
    Duplicated {
        id: usize,
        placeholder: &'static str,
        count: usize,
    },
    #[error("template {id}: unknown placeholder {token:?}")]
    Unknown { id: usize, token: String },
    #[error("cannot build a dataset from an empty {0} set")]
    EmptyInput(&'static str),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub id: usize,
    pub raw: String,
}

impl Template {
    fn subject_leads(&self) -> bool {
        self.raw.starts_with(SUBJECT)
    }
}

/// One instantiated sentence that still carries its `[MASK]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedSentence {
    pub sentence_id: usize,
    pub template_id: usize,
    pub subject_term: String,
    pub subject_group: SubjectGroup,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub sentences: Vec<MaskedSentence>,
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Every `[...]` and `<...>` span in `s`.
fn placeholder_tokens(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = s;
    while let Some(start) = rest.find(['[', '<']) {
        let close = if rest[start..].starts_with('[') { ']' } else { '>' };
        match rest[start..].find(close) {
            Some(len) => {
                out.push(&rest[start..start + len + 1]);
                rest = &rest[start + len + 1..];
            }
            None => {
                out.push(&rest[start..]);
                break;
            }
        }
    }
    out
}

pub fn parse_template(line: &str, id: usize) -> Result<Template, TemplateError> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return Err(TemplateError::Empty { id });
    }
    let tokens = placeholder_tokens(trimmed);
    if let Some(bad) = tokens.iter().find(|t| ![SUBJECT, MASK, BE].contains(t)) {
        return Err(TemplateError::Unknown {
            id,
            token: bad.to_string(),
        });
    }
    for placeholder in [SUBJECT, MASK] {
        match tokens.iter().filter(|t| **t == placeholder).count() {
            0 => return Err(TemplateError::Missing { id, placeholder }),
            1 => {}
            count => {
                return Err(TemplateError::Duplicated {
                    id,
                    placeholder,
                    count,
                })
            }
        }
    }
    let mut raw = trimmed.to_owned();
    if !raw.ends_with(is_terminal) {
        raw.push('.');
    }
    Ok(Template { id, raw })
}

/// Reads a template file: one template per line, `#` comments and blank lines
/// skipped. Ids are assigned in order of appearance starting at 0.
pub fn load_templates(path: &Path) -> Result<Vec<Template>, TemplateError> {
    let io = |source| TemplateError::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::open(path).map_err(io)?;
    let mut templates = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        templates.push(parse_template(trimmed, templates.len())?);
    }
    Ok(templates)
}

/// Renders `template` for `subject`. The subject slot always takes the
/// nominative form; `<be>` becomes "are" for plural-agreement subjects.
pub fn instantiate(template: &Template, subject: &Subject, sentence_id: usize) -> MaskedSentence {
    let surface = subject.surface_form(SlotCase::Nominative, template.subject_leads());
    let be = if subject.plural_agreement() { "are" } else { "is" };
    let text = template.raw.replace(SUBJECT, &surface).replace(BE, be);
    MaskedSentence {
        sentence_id,
        template_id: template.id,
        subject_term: subject.term().to_owned(),
        subject_group: subject.group(),
        text,
    }
}

/// Template-major Cartesian product; `sentence_id` is the position in that order.
pub fn build_dataset(templates: &[Template], subjects: &SubjectSet) -> Result<Dataset, TemplateError> {
    if templates.is_empty() {
        return Err(TemplateError::EmptyInput("template"));
    }
    if subjects.is_empty() {
        return Err(TemplateError::EmptyInput("subject"));
    }
    let subjects: Vec<Subject> = subjects.subjects().collect();
    let sentences = templates
        .iter()
        .flat_map(|t| subjects.iter().map(move |s| (t, s)))
        .enumerate()
        .map(|(i, (t, s))| instantiate(t, s, i))
        .collect();
    Ok(Dataset { sentences })
}

impl MaskedSentence {
    pub fn mask_count(&self) -> usize {
        self.text.matches(MASK).count()
    }
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, sentence_id: usize) -> Option<&MaskedSentence> {
        self.sentences
            .get(sentence_id)
            .filter(|s| s.sentence_id == sentence_id)
            .or_else(|| self.sentences.iter().find(|s| s.sentence_id == sentence_id))
    }

    /// Keeps only the sentences accepted by `keep`, preserving order and ids.
    pub fn filter(&self, mut keep: impl FnMut(&MaskedSentence) -> bool) -> Dataset {
        Dataset {
            sentences: self.sentences.iter().filter(|s| keep(s)).cloned().collect(),
        }
    }

    pub fn write_jsonl<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        for s in &self.sentences {
            serde_json::to_writer(&mut out, s)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<(), TemplateError> {
        let io = |source| TemplateError::Io {
            path: path.to_owned(),
            source,
        };
        self.write_jsonl(File::create(path).map_err(io)?).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Dataset, TemplateError> {
        let io = |source| TemplateError::Io {
            path: path.to_owned(),
            source,
        };
        let file = File::open(path).map_err(io)?;
        let mut sentences = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let record = |message: String| TemplateError::Record {
                path: path.to_owned(),
                line: i + 1,
                message,
            };
            let s: MaskedSentence =
                serde_json::from_str(&line).map_err(|e| record(e.to_string()))?;
            if s.mask_count() != 1 {
                return Err(record(format!("expected exactly one {MASK}")));
            }
            sentences.push(s);
        }
        Ok(Dataset { sentences })
    }
}
