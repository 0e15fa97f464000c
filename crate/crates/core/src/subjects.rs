//! Noun and pronoun subjects injected into the neutral templates.
//!
//! Nouns carry a queer/non-queer label and a coarse category; pronouns carry
//! their nominative/accusative forms and whether they take plural verb
//! agreement (only singular "they" does in the shipped set).

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SubjectError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed row: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Invalid {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Queerness {
    Queer,
    NonQueer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NounCategory {
    GenderIdentity,
    Orientation,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PronounCategory {
    Binary,
    Neutral,
    Neo,
}

/// Reporting unit over which every score is aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubjectGroup {
    Neo,
    Neutral,
    Binary,
    Queer,
    NonQueer,
}

impl SubjectGroup {
    /// Column order used in reports: pronoun groups first, then nouns.
    pub const ALL: [SubjectGroup; 5] = [
        SubjectGroup::Neo,
        SubjectGroup::Neutral,
        SubjectGroup::Binary,
        SubjectGroup::Queer,
        SubjectGroup::NonQueer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SubjectGroup::Neo => "neo",
            SubjectGroup::Neutral => "neutral",
            SubjectGroup::Binary => "binary",
            SubjectGroup::Queer => "queer",
            SubjectGroup::NonQueer => "non-queer",
        }
    }

    pub fn is_pronoun(self) -> bool {
        matches!(
            self,
            SubjectGroup::Neo | SubjectGroup::Neutral | SubjectGroup::Binary
        )
    }
}

impl fmt::Display for SubjectGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubjectGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SubjectGroup::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| format!("unknown subject group {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounSubject {
    pub term: String,
    pub queerness: Queerness,
    pub category: NounCategory,
    /// Whether the rendered form appends "person" ("The trans person").
    pub needs_person: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PronounSubject {
    pub nominative: String,
    pub accusative: String,
    pub category: PronounCategory,
    pub plural_agreement: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotCase {
    Nominative,
    Accusative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subject {
    Noun(NounSubject),
    Pronoun(PronounSubject),
}

impl Subject {
    /// Identifying term: the noun itself or the nominative pronoun.
    pub fn term(&self) -> &str {
        match self {
            Subject::Noun(n) => &n.term,
            Subject::Pronoun(p) => &p.nominative,
        }
    }

    pub fn group(&self) -> SubjectGroup {
        match self {
            Subject::Noun(n) => match n.queerness {
                Queerness::Queer => SubjectGroup::Queer,
                Queerness::NonQueer => SubjectGroup::NonQueer,
            },
            Subject::Pronoun(p) => match p.category {
                PronounCategory::Binary => SubjectGroup::Binary,
                PronounCategory::Neutral => SubjectGroup::Neutral,
                PronounCategory::Neo => SubjectGroup::Neo,
            },
        }
    }

    pub fn plural_agreement(&self) -> bool {
        match self {
            Subject::Noun(_) => false,
            Subject::Pronoun(p) => p.plural_agreement,
        }
    }

    /// Text substituted for `[SUBJECT]`.
    ///
    /// Nouns get a definite article that is capitalized only at the start of
    /// a sentence. Pronouns are always lowercase, sentence-initial or not.
    pub fn surface_form(&self, case: SlotCase, sentence_initial: bool) -> String {
        match self {
            Subject::Noun(n) => {
                let article = if sentence_initial { "The" } else { "the" };
                if n.needs_person {
                    format!("{article} {} person", n.term)
                } else {
                    format!("{article} {}", n.term)
                }
            }
            Subject::Pronoun(p) => match case {
                SlotCase::Nominative => p.nominative.to_lowercase(),
                SlotCase::Accusative => p.accusative.to_lowercase(),
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubjectSet {
    pub nouns: Vec<NounSubject>,
    pub pronouns: Vec<PronounSubject>,
}

impl SubjectSet {
    pub fn len(&self) -> usize {
        self.nouns.len() + self.pronouns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nouns first, then pronouns, each in file order.
    pub fn subjects(&self) -> impl Iterator<Item = Subject> + '_ {
        self.nouns
            .iter()
            .cloned()
            .map(Subject::Noun)
            .chain(self.pronouns.iter().cloned().map(Subject::Pronoun))
    }

    pub fn pronouns_only(&self) -> SubjectSet {
        SubjectSet {
            nouns: Vec::new(),
            pronouns: self.pronouns.clone(),
        }
    }

    pub fn nouns_only(&self) -> SubjectSet {
        SubjectSet {
            nouns: self.nouns.clone(),
            pronouns: Vec::new(),
        }
    }

    /// Partition into the five reporting groups, in [`SubjectGroup::ALL`]
    /// order. Groups without members are still present.
    pub fn groups(&self) -> Vec<(SubjectGroup, Vec<Subject>)> {
        SubjectGroup::ALL
            .into_iter()
            .map(|g| (g, self.subjects().filter(|s| s.group() == g).collect()))
            .collect()
    }

    pub fn write_nouns<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for n in &self.nouns {
            w.serialize(n)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_pronouns<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.pronouns {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Same as [`SubjectSet::groups`], as a free function.
pub fn subject_groups(set: &SubjectSet) -> Vec<(SubjectGroup, Vec<Subject>)> {
    set.groups()
}

pub fn load_subjects(noun_path: &Path, pronoun_path: &Path) -> Result<SubjectSet, SubjectError> {
    let nouns = parse_nouns(open(noun_path)?, noun_path)?;
    let pronouns = parse_pronouns(open(pronoun_path)?, pronoun_path)?;
    Ok(SubjectSet { nouns, pronouns })
}

fn open(path: &Path) -> Result<File, SubjectError> {
    File::open(path).map_err(|source| SubjectError::Io {
        path: path.to_owned(),
        source,
    })
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn row_line(pos: Option<&csv::Position>) -> u64 {
    pos.map(|p| p.line()).unwrap_or(0)
}

pub fn parse_nouns<R: Read>(input: R, path: &Path) -> Result<Vec<NounSubject>, SubjectError> {
    let mut rdr = reader(input);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|source| SubjectError::Parse {
            path: path.to_owned(),
            source,
        })?;
        let line = row_line(record.position());
        let noun: NounSubject =
            record
                .deserialize(None)
                .map_err(|e| SubjectError::Invalid {
                    path: path.to_owned(),
                    line,
                    message: e.to_string(),
                })?;
        if noun.term.is_empty() {
            return Err(SubjectError::Invalid {
                path: path.to_owned(),
                line,
                message: "empty term".into(),
            });
        }
        if !seen.insert(noun.term.to_lowercase()) {
            return Err(SubjectError::Invalid {
                path: path.to_owned(),
                line,
                message: format!("duplicate term {:?}", noun.term),
            });
        }
        out.push(noun);
    }
    Ok(out)
}

pub fn parse_pronouns<R: Read>(input: R, path: &Path) -> Result<Vec<PronounSubject>, SubjectError> {
    let mut rdr = reader(input);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|source| SubjectError::Parse {
            path: path.to_owned(),
            source,
        })?;
        let line = row_line(record.position());
        let p: PronounSubject = record
            .deserialize(None)
            .map_err(|e| SubjectError::Invalid {
                path: path.to_owned(),
                line,
                message: e.to_string(),
            })?;
        if p.nominative.is_empty() || p.accusative.is_empty() {
            return Err(SubjectError::Invalid {
                path: path.to_owned(),
                line,
                message: "empty pronoun form".into(),
            });
        }
        if !seen.insert(p.nominative.to_lowercase()) {
            return Err(SubjectError::Invalid {
                path: path.to_owned(),
                line,
                message: format!("duplicate pronoun {:?}", p.nominative),
            });
        }
        out.push(p);
    }
    Ok(out)
}
