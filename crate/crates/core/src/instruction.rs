//! Deterministic parsing of short style instructions such as
//! "try on the shirt tucked in, jacket open".
//!
//! Text is split into clauses on punctuation and "and"; each clause is matched
//! longest-first against a closed phrase lexicon and a list of garment nouns.
//! Anything else lands in the residual, which callers may route to a VLM.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::io::{read_json, IoError};
use crate::rules::{Classification, Closure, ClosureState, GarmentSpec, Sleeves, StyleInstruction, Tuck};

/// The single field mutation a canonical phrase performs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleSetting {
    Sleeves(Sleeves),
    ClosureState(ClosureState),
    Tuck(Tuck),
}

impl StyleSetting {
    pub fn apply(self, s: &mut StyleInstruction) {
        match self {
            StyleSetting::Sleeves(v) => s.sleeves = v,
            StyleSetting::ClosureState(v) => s.closure_state = v,
            StyleSetting::Tuck(v) => s.tuck = v,
        }
    }

    /// Whether a garment can carry this setting at all.
    pub fn admits(self, g: &GarmentSpec) -> bool {
        match self {
            StyleSetting::Sleeves(_) => g.classification != Classification::Lower,
            StyleSetting::Tuck(_) => g.classification == Classification::Upper,
            StyleSetting::ClosureState(_) => g.closure != Closure::None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("invalid lexicon: {0}")]
    Invalid(String),
}

#[derive(Deserialize)]
struct LexiconDoc {
    #[allow(dead_code)]
    version: u32,
    phrases: BTreeMap<String, StyleSetting>,
    surface_forms: BTreeMap<String, String>,
    garment_nouns: Vec<String>,
    fillers: Vec<String>,
}

/// Phrase lexicon, garment nouns and filler words.
#[derive(Clone, Debug)]
pub struct Lexicon {
    phrases: BTreeMap<String, StyleSetting>,
    surface_forms: BTreeMap<String, String>,
    /// Tokenized surface form -> phrase id.
    phrase_seqs: HashMap<Vec<String>, String>,
    noun_seqs: HashMap<Vec<String>, String>,
    fillers: BTreeSet<String>,
    max_len: usize,
}

const BUILTIN_LEXICON: &str = include_str!("../data/lexicon.json");
const BUILTIN_SYNONYMS: &str = include_str!("../data/synonyms.json");

impl Default for Lexicon {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Lexicon {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_LEXICON).expect("built-in lexicon is valid")
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let value: serde_json::Value = read_json(path)?;
        Self::from_json(&value.to_string())
    }

    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        let doc: LexiconDoc =
            serde_json::from_str(text).map_err(|e| LexiconError::Invalid(e.to_string()))?;
        let mut phrase_seqs = HashMap::new();
        let mut max_len = 1;
        for (surface, id) in &doc.surface_forms {
            if !doc.phrases.contains_key(id) {
                return Err(LexiconError::Invalid(format!(
                    "surface form `{surface}` names unknown phrase `{id}`"
                )));
            }
            let seq = single_clause_tokens(surface)?;
            max_len = max_len.max(seq.len());
            phrase_seqs.insert(seq, id.clone());
        }
        for id in doc.phrases.keys() {
            if !doc.surface_forms.values().any(|v| v == id) {
                return Err(LexiconError::Invalid(format!("phrase `{id}` has no surface form")));
            }
        }
        let mut noun_seqs = HashMap::new();
        for noun in &doc.garment_nouns {
            let seq = single_clause_tokens(noun)?;
            max_len = max_len.max(seq.len());
            noun_seqs.insert(seq, noun.clone());
        }
        Ok(Self {
            phrases: doc.phrases,
            surface_forms: doc.surface_forms,
            phrase_seqs,
            noun_seqs,
            fillers: doc.fillers.into_iter().collect(),
            max_len,
        })
    }

    pub fn phrases(&self) -> &BTreeMap<String, StyleSetting> {
        &self.phrases
    }

    pub fn surface_forms(&self) -> &BTreeMap<String, String> {
        &self.surface_forms
    }

    pub fn setting(&self, phrase_id: &str) -> Option<StyleSetting> {
        self.phrases.get(phrase_id).copied()
    }

    fn longest<'a>(
        &self,
        table: &'a HashMap<Vec<String>, String>,
        words: &[String],
    ) -> Option<(usize, &'a String)> {
        (1..=self.max_len.min(words.len()))
            .rev()
            .find_map(|n| table.get(&words[..n]).map(|v| (n, v)))
    }

    /// Parses free text. Never fails: unknown words end up in the residual.
    pub fn parse(&self, text: &str) -> ParsedInstruction {
        let mut clauses = Vec::new();
        let mut residual_parts = Vec::new();
        for words in tokenize(text) {
            let mut clause = Clause::default();
            let mut residual = Vec::new();
            let mut i = 0;
            while i < words.len() {
                let rest = &words[i..];
                if let Some((n, id)) = self.longest(&self.phrase_seqs, rest) {
                    clause.style_phrases.push(id.clone());
                    i += n;
                } else if let Some((n, noun)) = self.longest(&self.noun_seqs, rest) {
                    if clause.garment_binding.is_none() {
                        clause.garment_binding = Some(noun.clone());
                    } else {
                        residual.extend_from_slice(&rest[..n]);
                    }
                    i += n;
                } else {
                    if !self.fillers.contains(&words[i]) {
                        residual.push(words[i].clone());
                    }
                    i += 1;
                }
            }
            if !residual.is_empty() {
                residual_parts.push(residual.join(" "));
            }
            if clause.garment_binding.is_some() || !clause.style_phrases.is_empty() {
                clauses.push(clause);
            }
        }
        ParsedInstruction {
            clauses,
            residual: residual_parts.join(", "),
        }
    }
}

fn single_clause_tokens(text: &str) -> Result<Vec<String>, LexiconError> {
    let mut clauses = tokenize(text);
    match clauses.len() {
        1 => Ok(clauses.remove(0)),
        _ => Err(LexiconError::Invalid(format!("`{text}` is not a single clause"))),
    }
}

/// Lowercased words grouped by clause. Hyphens and apostrophes stay inside
/// words; `, ; . : ! ?` and the word "and" end a clause.
pub fn tokenize(text: &str) -> Vec<Vec<String>> {
    let mut clauses = Vec::new();
    let mut words: Vec<String> = Vec::new();
    let mut word = String::new();
    let end_word = |word: &mut String, words: &mut Vec<String>, clauses: &mut Vec<Vec<String>>| {
        let w = word.trim_matches(|c| c == '-' || c == '\'').to_string();
        word.clear();
        if w == "and" {
            if !words.is_empty() {
                clauses.push(std::mem::take(words));
            }
        } else if !w.is_empty() {
            words.push(w);
        }
    };
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() || c == '-' || c == '\'' {
            word.push(c);
            continue;
        }
        end_word(&mut word, &mut words, &mut clauses);
        if matches!(c, ',' | ';' | '.' | ':' | '!' | '?') && !words.is_empty() {
            clauses.push(std::mem::take(&mut words));
        }
    }
    end_word(&mut word, &mut words, &mut clauses);
    if !words.is_empty() {
        clauses.push(words);
    }
    clauses
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    /// Garment noun the clause names, if any.
    pub garment_binding: Option<String>,
    /// Canonical phrase ids, in text order.
    pub style_phrases: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedInstruction {
    pub clauses: Vec<Clause>,
    /// Unrecognized words, clauses joined by ", ". Empty when fully parsed.
    pub residual: String,
}

impl ParsedInstruction {
    pub fn is_partial(&self) -> bool {
        !self.residual.is_empty()
    }
}

/// Instruction nouns that should match a differently named garment, e.g.
/// `{"trousers": "pants"}`. Empty by default.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Synonyms(pub BTreeMap<String, String>);

impl Synonyms {
    pub fn builtin() -> Self {
        serde_json::from_str(BUILTIN_SYNONYMS).expect("built-in synonym table is valid")
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        read_json(path)
    }

    fn canonical<'a>(&'a self, noun: &'a str) -> &'a str {
        self.0.get(noun).map_or(noun, String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BindingError {
    #[error("garments `{first}` and `{second}` share the noun `{noun}`; instruction nouns would be ambiguous")]
    DuplicateNoun {
        noun: String,
        first: String,
        second: String,
    },
    #[error("duplicate garment id `{0}`")]
    DuplicateId(String),
    #[error("instruction names `{0}` but no garment has that noun")]
    UnknownNoun(String),
    #[error("cannot tell which garment `{phrase}` refers to (candidates: {candidates:?}); name the garment or configure a VLM backend")]
    Ambiguous {
        phrase: String,
        candidates: Vec<String>,
    },
    #[error("unknown phrase id `{0}`")]
    UnknownPhrase(String),
}

/// Attaches parsed clauses to garments, keyed by garment id.
///
/// A clause naming a noun binds to the garment with that `category_noun`
/// (after synonym mapping). A clause without a noun binds to the single garment
/// admitting its phrases. Later clauses override earlier ones field by field.
pub fn resolve_bindings(
    parsed: &ParsedInstruction,
    garments: &[GarmentSpec],
    lexicon: &Lexicon,
    synonyms: &Synonyms,
) -> Result<BTreeMap<String, StyleInstruction>, BindingError> {
    let mut by_noun: BTreeMap<&str, &GarmentSpec> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for g in garments {
        if out.insert(g.id.clone(), StyleInstruction::default()).is_some() {
            return Err(BindingError::DuplicateId(g.id.clone()));
        }
        if let Some(prev) = by_noun.insert(g.category_noun.as_str(), g) {
            return Err(BindingError::DuplicateNoun {
                noun: g.category_noun.clone(),
                first: prev.id.clone(),
                second: g.id.clone(),
            });
        }
    }
    for clause in &parsed.clauses {
        let settings = clause
            .style_phrases
            .iter()
            .map(|p| lexicon.setting(p).ok_or_else(|| BindingError::UnknownPhrase(p.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let target = match &clause.garment_binding {
            Some(noun) => by_noun
                .get(synonyms.canonical(noun))
                .copied()
                .ok_or_else(|| BindingError::UnknownNoun(noun.clone()))?,
            None => {
                let candidates: Vec<&GarmentSpec> = garments
                    .iter()
                    .filter(|g| settings.iter().all(|s| s.admits(g)))
                    .collect();
                match candidates.as_slice() {
                    [only] => *only,
                    _ => {
                        return Err(BindingError::Ambiguous {
                            phrase: clause.style_phrases.join(" "),
                            candidates: candidates.iter().map(|g| g.id.clone()).collect(),
                        })
                    }
                }
            }
        };
        let instr = out.get_mut(&target.id).expect("every garment has an entry");
        for s in settings {
            if !s.admits(target) {
                log::warn!("garment `{}` cannot carry {:?}; applying anyway", target.id, s);
            }
            s.apply(instr);
        }
    }
    Ok(out)
}
