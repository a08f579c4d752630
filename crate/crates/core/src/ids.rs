//! Identifier newtypes for Wikidata items and language editions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Unix time in whole seconds.
pub type UnixSeconds = i64;

pub const SECONDS_PER_DAY: i64 = 86_400;

/// A Wikidata item identifier such as `Q2462783`.
///
/// Stored as its numeric part, so the derived ordering is numeric (`Q9 < Q10`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(u64);

impl ItemId {
    pub fn new(number: u64) -> Option<Self> {
        (number > 0).then_some(Self(number))
    }

    pub fn number(self) -> u64 {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid Wikidata item id {0:?}: expected Q followed by digits without leading zeros")]
pub struct ItemIdError(pub String);

impl FromStr for ItemId {
    type Err = ItemIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ItemIdError(s.to_owned());
        let digits = s.strip_prefix('Q').ok_or_else(err)?;
        let first = digits.bytes().next().ok_or_else(err)?;
        if !(b'1'..=b'9').contains(&first) || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        digits.parse::<u64>().map(Self).map_err(|_| err())
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.0)
    }
}

impl Serialize for ItemId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ItemId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A project code such as `enwiki` or `zh_yuewiki`.
///
/// Codes are lowercase ASCII letters, digits and underscores. Whether a code
/// names a Wikipedia is decided by the ingest filter, not here.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edition(String);

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid edition code {0:?}: expected lowercase letters, digits and underscores")]
pub struct EditionError(pub String);

impl Edition {
    pub fn new(code: impl Into<String>) -> Result<Self, EditionError> {
        let code = code.into();
        let valid = !code.is_empty()
            && code
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_');
        if valid {
            Ok(Self(code))
        } else {
            Err(EditionError(code))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for Edition {
    type Err = EditionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl fmt::Display for Edition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Edition {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for Edition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Edition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Edition::new(s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn item_id_parsing() {
        assert_eq!("Q2462783".parse::<ItemId>().unwrap().number(), 2462783);
        for bad in ["2462783", "Q", "Q0", "Q012", "q12", "Q1a", "Q-1", "Q99999999999999999999999"] {
            assert!(bad.parse::<ItemId>().is_err(), "{bad}");
        }
        assert_eq!(ItemId::new(42).unwrap().to_string(), "Q42");
    }

    #[test]
    fn item_ids_order_numerically() {
        let q9: ItemId = "Q9".parse().unwrap();
        let q10: ItemId = "Q10".parse().unwrap();
        assert!(q9 < q10);
    }

    #[test]
    fn edition_codes() {
        assert!(Edition::new("zh_yuewiki").is_ok());
        assert!(Edition::new("").is_err());
        assert!(Edition::new("zh-yuewiki").is_err());
        assert!(Edition::new("EnWiki").is_err());
    }
}
