use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A bid amount: 256-bit unsigned integer held as 32 big-endian bytes.
///
/// Byte-wise ordering of fixed-width big-endian arrays is numeric ordering,
/// so the derived `Ord` compares values correctly.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BidValue(pub [u8; 32]);

impl BidValue {
    pub const ZERO: BidValue = BidValue([0u8; 32]);

    pub fn to_be_bytes(self) -> [u8; 32] {
        self.0
    }

    pub fn from_be_bytes(bytes: [u8; 32]) -> Self {
        BidValue(bytes)
    }

    pub fn to_biguint(self) -> BigUint {
        BigUint::from_bytes_be(&self.0)
    }

    pub fn from_biguint(v: &BigUint) -> Option<Self> {
        let raw = v.to_bytes_be();
        if raw.len() > 32 {
            return None;
        }
        let mut out = [0u8; 32];
        out[32 - raw.len()..].copy_from_slice(&raw);
        Some(BidValue(out))
    }
}

impl From<u64> for BidValue {
    fn from(v: u64) -> Self {
        let mut out = [0u8; 32];
        out[24..].copy_from_slice(&v.to_be_bytes());
        BidValue(out)
    }
}

impl From<u128> for BidValue {
    fn from(v: u128) -> Self {
        let mut out = [0u8; 32];
        out[16..].copy_from_slice(&v.to_be_bytes());
        BidValue(out)
    }
}

impl fmt::Display for BidValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_biguint())
    }
}

impl fmt::Debug for BidValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BidValue({self})")
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid bid value {0:?}")]
pub struct ParseBidValueError(String);

impl FromStr for BidValue {
    type Err = ParseBidValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let n = BigUint::parse_bytes(s.trim().as_bytes(), 10).ok_or_else(|| ParseBidValueError(s.to_string()))?;
        BidValue::from_biguint(&n).ok_or_else(|| ParseBidValueError(s.to_string()))
    }
}

impl Serialize for BidValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// Accepts either a decimal string or a JSON integer.
impl<'de> Deserialize<'de> for BidValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = BidValue;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer or decimal string below 2^256")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<BidValue, E> {
                Ok(v.into())
            }

            fn visit_u128<E: de::Error>(self, v: u128) -> Result<BidValue, E> {
                Ok(v.into())
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<BidValue, E> {
                u64::try_from(v).map(Into::into).map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<BidValue, E> {
                v.parse().map_err(E::custom)
            }
        }
        deserializer.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_numeric() {
        assert!(BidValue::from(10u64) > BidValue::from(7u64));
        assert!(BidValue::from(1u128 << 70) > BidValue::from(u64::MAX));
        assert_eq!(BidValue::from(0u64), BidValue::ZERO);
    }

    #[test]
    fn decimal_text_and_json() {
        let max: BidValue = "115792089237316195423570985008687907853269984665640564039457584007913129639935"
            .parse()
            .unwrap();
        assert_eq!(max, BidValue([0xff; 32]));
        assert!(
            "115792089237316195423570985008687907853269984665640564039457584007913129639936"
                .parse::<BidValue>()
                .is_err()
        );
        assert!("-1".parse::<BidValue>().is_err());
        let v: BidValue = serde_json::from_str("42").unwrap();
        assert_eq!(v, BidValue::from(42u64));
        let v: BidValue = serde_json::from_str("\"42\"").unwrap();
        assert_eq!(serde_json::to_string(&v).unwrap(), "\"42\"");
    }
}
