use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Outlet-level political leaning.
///
/// The ordinal index is part of the on-disk contract (prediction files,
/// probability vectors, checkpoints):
///
/// | index | label          | canonical string |
/// |-------|----------------|------------------|
/// | 0     | `LeftCenter`   | `left-center`    |
/// | 1     | `LeastBiased`  | `least-biased`   |
/// | 2     | `RightCenter`  | `right-center`   |
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BiasLabel {
    LeftCenter,
    LeastBiased,
    RightCenter,
}

impl BiasLabel {
    pub const COUNT: usize = 3;
    pub const ALL: [BiasLabel; 3] = [
        BiasLabel::LeftCenter,
        BiasLabel::LeastBiased,
        BiasLabel::RightCenter,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<Self> {
        Self::ALL.get(idx).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BiasLabel::LeftCenter => "left-center",
            BiasLabel::LeastBiased => "least-biased",
            BiasLabel::RightCenter => "right-center",
        }
    }
}

impl fmt::Display for BiasLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown bias label {0:?}")]
pub struct UnknownLabel(pub String);

impl FromStr for BiasLabel {
    type Err = UnknownLabel;

    /// Accepts the canonical strings and the rating provider's spellings
    /// ("Left Center", "Least Biased", "Right-Center", "left_center", ...).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded: String = s
            .chars()
            .filter(|c| !matches!(c, ' ' | '-' | '_'))
            .flat_map(char::to_lowercase)
            .collect();
        match folded.as_str() {
            "leftcenter" => Ok(BiasLabel::LeftCenter),
            "leastbiased" => Ok(BiasLabel::LeastBiased),
            "rightcenter" => Ok(BiasLabel::RightCenter),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}

impl Serialize for BiasLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for BiasLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Lowercase ISO-639-1 language code.
///
/// The five corpus languages and the English pivot are built in; further
/// codes must be admitted explicitly through a [`LanguageRegistry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LanguageCode([u8; 2]);

impl LanguageCode {
    pub const CS: LanguageCode = LanguageCode(*b"cs");
    pub const FI: LanguageCode = LanguageCode(*b"fi");
    pub const RO: LanguageCode = LanguageCode(*b"ro");
    pub const SL: LanguageCode = LanguageCode(*b"sl");
    pub const SV: LanguageCode = LanguageCode(*b"sv");
    /// Retrieval pivot. Commonsense inferences are only available in English.
    pub const EN: LanguageCode = LanguageCode(*b"en");

    pub const CORPUS: [LanguageCode; 5] = [Self::CS, Self::FI, Self::RO, Self::SL, Self::SV];

    /// Shape check only: two ASCII lowercase letters.
    fn well_formed(s: &str) -> Option<LanguageCode> {
        let bytes = s.as_bytes();
        if bytes.len() == 2 && bytes.iter().all(u8::is_ascii_lowercase) {
            Some(LanguageCode([bytes[0], bytes[1]]))
        } else {
            None
        }
    }

    pub fn is_builtin(self) -> bool {
        self == Self::EN || Self::CORPUS.contains(&self)
    }

    pub fn as_str(&self) -> &str {
        // constructed only from ASCII
        std::str::from_utf8(&self.0).expect("ascii language code")
    }

    pub fn english_name(self) -> &'static str {
        match &self.0 {
            b"cs" => "Czech",
            b"fi" => "Finnish",
            b"ro" => "Romanian",
            b"sl" => "Slovenian",
            b"sv" => "Swedish",
            b"en" => "English",
            _ => "other",
        }
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown language code {0:?}")]
pub struct UnknownLanguage(pub String);

impl FromStr for LanguageCode {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LanguageRegistry::default().parse(s)
    }
}

impl Serialize for LanguageCode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for LanguageCode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Set of accepted language codes: the built-ins plus configured extensions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LanguageRegistry {
    extra: BTreeSet<LanguageCode>,
}

impl LanguageRegistry {
    pub fn with_extensions<'a>(codes: impl IntoIterator<Item = &'a str>) -> Result<Self, UnknownLanguage> {
        let mut extra = BTreeSet::new();
        for code in codes {
            let parsed =
                LanguageCode::well_formed(code).ok_or_else(|| UnknownLanguage(code.to_string()))?;
            extra.insert(parsed);
        }
        Ok(Self { extra })
    }

    pub fn parse(&self, s: &str) -> Result<LanguageCode, UnknownLanguage> {
        match LanguageCode::well_formed(s) {
            Some(code) if code.is_builtin() || self.extra.contains(&code) => Ok(code),
            _ => Err(UnknownLanguage(s.to_string())),
        }
    }
}
