use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::image_ref::ImageRef;
use crate::names::named_enum;
use crate::raster::io::{read_json, IoError};
use crate::raster::ClothingCategory;

named_enum! {
    /// Coarse garment class driving the parts-inclusion rules.
    pub enum Classification {
        Upper => "upper",
        Lower => "lower",
        Overall => "overall",
    }
}

named_enum! {
    pub enum SleeveLength {
        Sleeveless => "sleeveless",
        Short => "short",
        ThreeQuarter => "three_quarter",
        Long => "long",
        NotApplicable => "not_applicable",
    }
}

named_enum! {
    pub enum LegLength {
        Short => "short",
        Long => "long",
        NotApplicable => "not_applicable",
    }
}

named_enum! {
    pub enum Closure {
        None => "none",
        Buttons => "buttons",
        Zipper => "zipper",
    }
}

named_enum! {
    #[derive(Default)]
    pub enum Sleeves {
        #[default]
        Default => "default",
        RolledUp => "rolled_up",
        RolledDown => "rolled_down",
    }
}

named_enum! {
    #[derive(Default)]
    pub enum ClosureState {
        #[default]
        Default => "default",
        Open => "open",
        Closed => "closed",
    }
}

named_enum! {
    #[derive(Default)]
    pub enum Tuck {
        #[default]
        Default => "default",
        Tucked => "tucked",
        Untucked => "untucked",
    }
}

/// Structured description of a target garment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GarmentSpec {
    pub id: String,
    pub classification: Classification,
    pub sleeve_length: SleeveLength,
    pub leg_length: LegLength,
    pub closure: Closure,
    #[serde(default)]
    pub outerwear: bool,
    pub category_noun: String,
    pub image_ref: ImageRef,
}

impl GarmentSpec {
    /// `sleeve_length` is `not_applicable` exactly for lower garments and
    /// `leg_length` exactly for upper garments.
    pub fn validate(&self) -> Result<(), String> {
        let sleeve_na = self.sleeve_length == SleeveLength::NotApplicable;
        let leg_na = self.leg_length == LegLength::NotApplicable;
        if sleeve_na != (self.classification == Classification::Lower) {
            return Err(format!(
                "garment `{}`: sleeve_length `{}` is inconsistent with classification `{}`",
                self.id, self.sleeve_length, self.classification
            ));
        }
        if leg_na != (self.classification == Classification::Upper) {
            return Err(format!(
                "garment `{}`: leg_length `{}` is inconsistent with classification `{}`",
                self.id, self.leg_length, self.classification
            ));
        }
        if self.id.is_empty() {
            return Err("garment id must not be empty".into());
        }
        Ok(())
    }

    /// Clothing-map category a rendered instance of this garment belongs to.
    pub fn clothing_category(&self) -> ClothingCategory {
        if self.outerwear {
            return ClothingCategory::Outerwear;
        }
        match self.classification {
            Classification::Upper => ClothingCategory::UpperGarment,
            Classification::Lower => ClothingCategory::LowerGarment,
            Classification::Overall => ClothingCategory::OverallGarment,
        }
    }

    /// Loads a spec file; a relative `image_ref` is resolved against the file's directory.
    pub fn load(path: &Path) -> Result<GarmentSpec, IoError> {
        let mut spec: GarmentSpec = read_json(path)?;
        if let Some(dir) = path.parent() {
            spec.image_ref = spec.image_ref.resolved_against(dir);
        }
        Ok(spec)
    }
}

/// Structured style state for one garment. All-default is the empty instruction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StyleInstruction {
    #[serde(default)]
    pub sleeves: Sleeves,
    #[serde(default)]
    pub closure_state: ClosureState,
    #[serde(default)]
    pub tuck: Tuck,
}

impl StyleInstruction {
    pub fn is_default(&self) -> bool {
        *self == StyleInstruction::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(c: Classification, s: SleeveLength, l: LegLength) -> GarmentSpec {
        GarmentSpec {
            id: "g".into(),
            classification: c,
            sleeve_length: s,
            leg_length: l,
            closure: Closure::None,
            outerwear: false,
            category_noun: "shirt".into(),
            image_ref: ImageRef::new("g.png"),
        }
    }

    #[test]
    fn attribute_consistency() {
        use Classification::*;
        assert!(spec(Upper, SleeveLength::Long, LegLength::NotApplicable).validate().is_ok());
        assert!(spec(Lower, SleeveLength::NotApplicable, LegLength::Long).validate().is_ok());
        assert!(spec(Overall, SleeveLength::Short, LegLength::Short).validate().is_ok());
        assert!(spec(Upper, SleeveLength::Long, LegLength::Long).validate().is_err());
        assert!(spec(Lower, SleeveLength::Long, LegLength::Long).validate().is_err());
        assert!(spec(Overall, SleeveLength::NotApplicable, LegLength::Long).validate().is_err());
    }

    #[test]
    fn names_round_trip() {
        for s in SleeveLength::ALL {
            assert_eq!(s.as_str().parse::<SleeveLength>().unwrap(), *s);
        }
        assert!("knee".parse::<LegLength>().is_err());
        let json = serde_json::to_string(&StyleInstruction {
            sleeves: Sleeves::RolledUp,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(json, r#"{"sleeves":"rolled_up","closure_state":"default","tuck":"default"}"#);
        let empty: StyleInstruction = serde_json::from_str("{}").unwrap();
        assert!(empty.is_default());
    }
}
