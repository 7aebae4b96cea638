//! Versioned parts-inclusion rule table, evaluated first-match-wins.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::garment::{
    Classification, Closure, ClosureState, GarmentSpec, LegLength, SleeveLength, Sleeves,
    StyleInstruction, Tuck,
};
use super::RuleError;
use crate::names::named_enum;
use crate::raster::io::read_json;
use crate::raster::BodyPart;

named_enum! {
    /// Shape operations applied to the trace union, in table order.
    pub enum PostOp {
        ConvexifyLegs => "convexify_legs",
        OpenChestStripe => "open_chest_stripe",
    }
}

/// A single value or a list of accepted values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: PartialEq> OneOrMany<T> {
    pub fn accepts(&self, value: &T) -> bool {
        match self {
            OneOrMany::One(v) => v == value,
            OneOrMany::Many(vs) => vs.contains(value),
        }
    }
}

fn accepts<T: PartialEq>(field: &Option<OneOrMany<T>>, value: &T) -> bool {
    field.as_ref().is_none_or(|f| f.accepts(value))
}

/// Match clause of a row. Absent fields match anything.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleMatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<OneOrMany<Classification>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sleeve_length: Option<OneOrMany<SleeveLength>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leg_length: Option<OneOrMany<LegLength>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<OneOrMany<Closure>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outerwear: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_noun: Option<OneOrMany<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sleeves: Option<OneOrMany<Sleeves>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure_state: Option<OneOrMany<ClosureState>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuck: Option<OneOrMany<Tuck>>,
}

impl RuleMatch {
    pub fn is_catch_all(&self) -> bool {
        *self == RuleMatch::default()
    }

    pub fn matches(&self, g: &GarmentSpec, s: &StyleInstruction) -> bool {
        accepts(&self.classification, &g.classification)
            && accepts(&self.sleeve_length, &g.sleeve_length)
            && accepts(&self.leg_length, &g.leg_length)
            && accepts(&self.closure, &g.closure)
            && self.outerwear.is_none_or(|o| o == g.outerwear)
            && accepts(&self.category_noun, &g.category_noun)
            && accepts(&self.sleeves, &s.sleeves)
            && accepts(&self.closure_state, &s.closure_state)
            && accepts(&self.tuck, &s.tuck)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleRow {
    pub id: String,
    #[serde(rename = "match")]
    pub when: RuleMatch,
    #[serde(default)]
    pub include_parts: Vec<BodyPart>,
    #[serde(default)]
    pub exclude_parts: Vec<BodyPart>,
    #[serde(default)]
    pub exposed_parts: Vec<BodyPart>,
    #[serde(default)]
    pub post_ops: Vec<PostOp>,
    /// A matching reject row turns the lookup into an "unmatched combination" error.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reject: bool,
}

/// Evaluated row: the body-part trace, the parts the style needs bare, and post-ops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleOutcome {
    pub row_id: String,
    pub parts: BTreeSet<BodyPart>,
    pub exposed: BTreeSet<BodyPart>,
    pub post_ops: Vec<PostOp>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TableDoc {
    Versioned { version: u32, rules: Vec<RuleRow> },
    Bare(Vec<RuleRow>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuleTable {
    version: u32,
    rules: Vec<RuleRow>,
}

const BUILTIN_RULES: &str = include_str!("../../data/rules.json");

impl Default for RuleTable {
    fn default() -> Self {
        Self::builtin()
    }
}

impl RuleTable {
    /// The table shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_RULES).expect("built-in rule table is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, RuleError> {
        let doc: TableDoc =
            serde_json::from_str(text).map_err(|e| RuleError::InvalidTable(e.to_string()))?;
        let (version, rules) = match doc {
            TableDoc::Versioned { version, rules } => (version, rules),
            TableDoc::Bare(rules) => (1, rules),
        };
        Self::new(version, rules)
    }

    pub fn load(path: &Path) -> Result<Self, RuleError> {
        let value: serde_json::Value = read_json(path)?;
        Self::from_json(&value.to_string())
    }

    pub fn new(version: u32, rules: Vec<RuleRow>) -> Result<Self, RuleError> {
        match rules.last() {
            Some(last) if last.when.is_catch_all() => {}
            _ => {
                return Err(RuleError::InvalidTable(
                    "the last row must be a catch-all default row".into(),
                ))
            }
        }
        let mut ids = HashSet::new();
        for row in &rules {
            if !ids.insert(row.id.as_str()) {
                return Err(RuleError::InvalidTable(format!("duplicate row id `{}`", row.id)));
            }
            let distinct: HashSet<_> = row.post_ops.iter().collect();
            if distinct.len() != row.post_ops.len() {
                return Err(RuleError::InvalidTable(format!(
                    "row `{}` lists a post-op twice",
                    row.id
                )));
            }
        }
        Ok(Self { version, rules })
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn rows(&self) -> &[RuleRow] {
        &self.rules
    }

    /// First matching row, evaluated to part sets. Identity parts (face, hands,
    /// feet) and anything exposed are removed from the included parts.
    pub fn evaluate(
        &self,
        garment: &GarmentSpec,
        instruction: &StyleInstruction,
    ) -> Result<RuleOutcome, RuleError> {
        garment.validate().map_err(RuleError::InvalidGarment)?;
        let row = self
            .rules
            .iter()
            .find(|r| r.when.matches(garment, instruction))
            .expect("catch-all row always matches");
        if row.reject {
            return Err(RuleError::Unmatched {
                key: rule_key(garment, instruction),
            });
        }
        let exposed: BTreeSet<BodyPart> = row
            .exposed_parts
            .iter()
            .copied()
            .filter(|&p| p != BodyPart::Background)
            .collect();
        let parts = row
            .include_parts
            .iter()
            .copied()
            .filter(|p| {
                *p != BodyPart::Background
                    && !BodyPart::IDENTITY.contains(p)
                    && !row.exclude_parts.contains(p)
                    && !exposed.contains(p)
            })
            .collect();
        Ok(RuleOutcome {
            row_id: row.id.clone(),
            parts,
            exposed,
            post_ops: row.post_ops.clone(),
        })
    }
}

/// Human-readable lookup key used in "unmatched" errors.
pub fn rule_key(g: &GarmentSpec, s: &StyleInstruction) -> String {
    format!(
        "classification={} sleeve_length={} leg_length={} closure={} outerwear={} category_noun={} sleeves={} closure_state={} tuck={}",
        g.classification,
        g.sleeve_length,
        g.leg_length,
        g.closure,
        g.outerwear,
        g.category_noun,
        s.sleeves,
        s.closure_state,
        s.tuck
    )
}
