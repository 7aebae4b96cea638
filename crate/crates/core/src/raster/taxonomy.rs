//! Fixed label vocabularies for the body-parts and clothing maps.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Label id of pixels outside the figure, in both maps.
pub const BACKGROUND: u8 = 0;

/// Label id of the unclothed area in a clothing map.
pub const UNCLOTHED: u8 = 1;

pub const BACKGROUND_NAME: &str = "background";
pub const UNCLOTHED_NAME: &str = "unclothed";

/// Body-part labels. Left and right limbs share a label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyPart {
    Background,
    Face,
    UpperTorso,
    LowerTorso,
    UpperArms,
    LowerArms,
    Hands,
    UpperLegs,
    LowerLegs,
    Feet,
}

impl BodyPart {
    pub const ALL: [BodyPart; 10] = [
        BodyPart::Background,
        BodyPart::Face,
        BodyPart::UpperTorso,
        BodyPart::LowerTorso,
        BodyPart::UpperArms,
        BodyPart::LowerArms,
        BodyPart::Hands,
        BodyPart::UpperLegs,
        BodyPart::LowerLegs,
        BodyPart::Feet,
    ];

    /// Parts that carry the subject's identity and are never masked.
    pub const IDENTITY: [BodyPart; 3] = [BodyPart::Face, BodyPart::Hands, BodyPart::Feet];

    pub const TORSO: [BodyPart; 2] = [BodyPart::UpperTorso, BodyPart::LowerTorso];

    pub const LEGS_AREA: [BodyPart; 3] =
        [BodyPart::LowerTorso, BodyPart::UpperLegs, BodyPart::LowerLegs];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<BodyPart> {
        BodyPart::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            BodyPart::Background => BACKGROUND_NAME,
            BodyPart::Face => "face",
            BodyPart::UpperTorso => "upper_torso",
            BodyPart::LowerTorso => "lower_torso",
            BodyPart::UpperArms => "upper_arms",
            BodyPart::LowerArms => "lower_arms",
            BodyPart::Hands => "hands",
            BodyPart::UpperLegs => "upper_legs",
            BodyPart::LowerLegs => "lower_legs",
            BodyPart::Feet => "feet",
        }
    }
}

impl fmt::Display for BodyPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BodyPart {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BodyPart::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown body part `{s}`"))
    }
}

/// Category tag carried by every clothing segment (labels >= 2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClothingCategory {
    UpperGarment,
    LowerGarment,
    OverallGarment,
    Outerwear,
    Footwear,
    Accessory,
}

impl ClothingCategory {
    /// Footwear and accessories are never consumed by a garment mask.
    pub fn is_maskable(self) -> bool {
        !matches!(self, ClothingCategory::Footwear | ClothingCategory::Accessory)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_stable() {
        for (i, p) in BodyPart::ALL.iter().enumerate() {
            assert_eq!(p.id() as usize, i);
            assert_eq!(BodyPart::from_id(i as u8), Some(*p));
            assert_eq!(p.name().parse::<BodyPart>().unwrap(), *p);
        }
        assert_eq!(BodyPart::from_id(10), None);
        assert_eq!(BodyPart::Background.id(), BACKGROUND);
    }
}
