//! Canonical length-prefixed encoding used for transaction digests and call arguments.
//!
//! Every field is written as a 4-byte big-endian length followed by its bytes,
//! in declaration order. Fixed-width integers are big-endian.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed encoding: {0}")]
pub struct DecodeError(pub &'static str);

#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(mut self, bytes: &[u8]) -> Self {
        let len = u32::try_from(bytes.len()).expect("field longer than 4 GiB");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn u64(self, v: u64) -> Self {
        self.field(&v.to_be_bytes())
    }

    pub fn u128(self, v: u128) -> Self {
        self.field(&v.to_be_bytes())
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug)]
pub struct Decoder<'a> {
    rest: &'a [u8],
}

impl<'a> Decoder<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { rest: bytes }
    }

    pub fn field(&mut self) -> Result<&'a [u8], DecodeError> {
        if self.rest.len() < 4 {
            return Err(DecodeError("truncated length prefix"));
        }
        let (len, rest) = self.rest.split_at(4);
        let len = u32::from_be_bytes(len.try_into().unwrap()) as usize;
        if rest.len() < len {
            return Err(DecodeError("truncated field"));
        }
        let (field, rest) = rest.split_at(len);
        self.rest = rest;
        Ok(field)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        self.field()?
            .try_into()
            .map_err(|_| DecodeError("fixed-width field has wrong length"))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        self.array::<8>().map(u64::from_be_bytes)
    }

    pub fn u128(&mut self) -> Result<u128, DecodeError> {
        self.array::<16>().map(u128::from_be_bytes)
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(DecodeError("trailing bytes"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn fields_roundtrip(fields in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..40), 0..6), n in any::<u64>()) {
            let mut enc = Encoder::new();
            for f in &fields {
                enc = enc.field(f);
            }
            let bytes = enc.u64(n).finish();
            let mut dec = Decoder::new(&bytes);
            for f in &fields {
                prop_assert_eq!(dec.field().unwrap(), &f[..]);
            }
            prop_assert_eq!(dec.u64().unwrap(), n);
            prop_assert!(dec.finish().is_ok());
        }
    }

    #[test]
    fn truncation_and_trailing_bytes_rejected() {
        let bytes = Encoder::new().field(b"abc").finish();
        assert!(Decoder::new(&bytes[..5]).field().is_err());
        assert!(Decoder::new(&bytes[..2]).field().is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        let mut dec = Decoder::new(&extra);
        dec.field().unwrap();
        assert!(dec.finish().is_err());
        assert!(Decoder::new(&Encoder::new().u64(1).finish()).array::<4>().is_err());
    }
}
