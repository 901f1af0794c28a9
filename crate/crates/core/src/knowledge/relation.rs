use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The nine social-interaction relations of the commonsense graph.
///
/// Declaration order is the canonical order used for bundles, knowledge
/// matrices and checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationType {
    XAttr,
    XEffect,
    XIntent,
    XNeed,
    XReact,
    XWant,
    OEffect,
    OReact,
    OWant,
}

impl RelationType {
    pub const COUNT: usize = 9;
    pub const ALL: [RelationType; 9] = [
        RelationType::XAttr,
        RelationType::XEffect,
        RelationType::XIntent,
        RelationType::XNeed,
        RelationType::XReact,
        RelationType::XWant,
        RelationType::OEffect,
        RelationType::OReact,
        RelationType::OWant,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::XAttr => "xAttr",
            RelationType::XEffect => "xEffect",
            RelationType::XIntent => "xIntent",
            RelationType::XNeed => "xNeed",
            RelationType::XReact => "xReact",
            RelationType::XWant => "xWant",
            RelationType::OEffect => "oEffect",
            RelationType::OReact => "oReact",
            RelationType::OWant => "oWant",
        }
    }

    /// True for relations about the subject (PersonX), false for others.
    pub fn is_subject(self) -> bool {
        self.index() < RelationType::OEffect.index()
    }

    /// Connector placed before the inference inside the processed paragraph.
    /// Effects have none: the inference is a bare verb phrase.
    pub(crate) fn connector(self) -> Option<&'static str> {
        match self {
            RelationType::XAttr => Some("is"),
            RelationType::XNeed => Some("needed"),
            RelationType::XIntent => Some("intended"),
            RelationType::XWant => Some("wants"),
            RelationType::XReact => Some("feels"),
            RelationType::OWant => Some("want"),
            RelationType::OReact => Some("feel"),
            RelationType::XEffect | RelationType::OEffect => None,
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown relation {0:?}")]
pub struct UnknownRelation(pub String);

impl FromStr for RelationType {
    type Err = UnknownRelation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownRelation(s.to_string()))
    }
}

impl Serialize for RelationType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for RelationType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_relations_in_canonical_order() {
        let names: Vec<_> = RelationType::ALL.iter().map(|r| r.as_str()).collect();
        assert_eq!(
            names,
            ["xAttr", "xEffect", "xIntent", "xNeed", "xReact", "xWant", "oEffect", "oReact", "oWant"]
        );
        for (i, r) in RelationType::ALL.iter().enumerate() {
            assert_eq!(r.index(), i);
            assert_eq!(r.as_str().parse::<RelationType>().unwrap(), *r);
        }
        assert_eq!(RelationType::ALL.iter().filter(|r| r.is_subject()).count(), 6);
        assert!("isBefore".parse::<RelationType>().is_err());
    }
}
