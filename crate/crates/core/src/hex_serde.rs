//! Serde adapter encoding byte strings as lowercase hex without a `0x` prefix.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};

pub fn serialize<S, T>(bytes: &T, serializer: S) -> Result<S::Ok, S::Error>
where
    S: Serializer,
    T: AsRef<[u8]>,
{
    serializer.serialize_str(&hex::encode(bytes))
}

pub fn deserialize<'de, D, T>(deserializer: D) -> Result<T, D::Error>
where
    D: Deserializer<'de>,
    T: TryFrom<Vec<u8>>,
{
    let s = String::deserialize(deserializer)?;
    let raw = hex::decode(&s).map_err(D::Error::custom)?;
    let len = raw.len();
    T::try_from(raw).map_err(|_| D::Error::custom(format!("unexpected byte length {len}")))
}
