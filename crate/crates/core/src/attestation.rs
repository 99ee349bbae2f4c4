//! Simulated quoting and attestation-service verification.
//!
//! A quote is the enclave report `(measurement, user_data)` plus the platform
//! identifier, signed by the platform's device attestation key. The
//! attestation service only knows which device keys are genuine; the bidder
//! additionally checks that the quote binds the published `(t_adr, t_pk)` to
//! its own challenge nonce and that the measurement is the published one.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{sha256, verify, Address, Digest32, Signature};
use crate::hex_serde;

pub type PlatformId = [u8; 16];

/// Code identity of the genuine auction enclave.
pub const TRUSTEE_ENCLAVE_IDENTITY: &str = "trustee-enclave/1.0.0";

/// Stand-in for an enclave measurement: SHA-256 of its code identity manifest.
pub fn measurement_of(code_identity: &str) -> Digest32 {
    sha256(code_identity.as_bytes())
}

/// `sha256(t_adr || t_pk || nonce)` with raw 20-, 32- and 32-byte fields.
pub fn report_user_data(t_adr: &Address, t_pk: &[u8; 32], nonce: &[u8; 32]) -> Digest32 {
    let mut buf = Vec::with_capacity(84);
    buf.extend_from_slice(&t_adr.0);
    buf.extend_from_slice(t_pk);
    buf.extend_from_slice(nonce);
    sha256(&buf)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quote {
    pub measurement: Digest32,
    pub user_data: Digest32,
    #[serde(with = "hex_serde")]
    pub platform_id: PlatformId,
    pub signature: Signature,
}

impl Quote {
    /// Digest signed by the device key: `sha256(measurement || user_data || platform_id)`.
    pub fn body_digest(measurement: &Digest32, user_data: &Digest32, platform_id: &PlatformId) -> Digest32 {
        let mut buf = Vec::with_capacity(80);
        buf.extend_from_slice(&measurement.0);
        buf.extend_from_slice(&user_data.0);
        buf.extend_from_slice(platform_id);
        sha256(&buf)
    }

    pub fn digest(&self) -> Digest32 {
        Self::body_digest(&self.measurement, &self.user_data, &self.platform_id)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("platform {} is already registered with a different key", hex::encode(.0))]
pub struct RegistryConflict(pub PlatformId);

/// The attestation service's knowledge of genuine devices. Append-only.
#[derive(Debug, Clone, Default)]
pub struct IasRegistry {
    known_devices: BTreeMap<PlatformId, [u8; 64]>,
}

impl IasRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, platform_id: PlatformId, device_key: [u8; 64]) -> Result<(), RegistryConflict> {
        match self.known_devices.get(&platform_id) {
            Some(existing) if *existing != device_key => Err(RegistryConflict(platform_id)),
            Some(_) => Ok(()),
            None => {
                self.known_devices.insert(platform_id, device_key);
                Ok(())
            }
        }
    }

    pub fn device_key(&self, platform_id: &PlatformId) -> Option<&[u8; 64]> {
        self.known_devices.get(platform_id)
    }

    pub fn len(&self) -> usize {
        self.known_devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.known_devices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IasVerdict {
    Genuine,
    UnknownDevice,
    BadSignature,
}

pub fn ias_verify(registry: &IasRegistry, quote: &Quote) -> IasVerdict {
    match registry.device_key(&quote.platform_id) {
        None => IasVerdict::UnknownDevice,
        Some(pk) if verify(&quote.signature, &quote.digest(), pk) => IasVerdict::Genuine,
        Some(_) => IasVerdict::BadSignature,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RejectReason {
    #[serde(rename = "unknown_device")]
    UnknownDevice,
    #[serde(rename = "bad_signature")]
    BadSignature,
    #[serde(rename = "user_data mismatch")]
    UserDataMismatch,
    #[serde(rename = "measurement mismatch")]
    MeasurementMismatch,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::UnknownDevice => "unknown_device",
            RejectReason::BadSignature => "bad_signature",
            RejectReason::UserDataMismatch => "user_data mismatch",
            RejectReason::MeasurementMismatch => "measurement mismatch",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuoteCheck {
    Accept,
    Reject(RejectReason),
}

impl QuoteCheck {
    pub fn is_accept(&self) -> bool {
        matches!(self, QuoteCheck::Accept)
    }
}

/// The bidder-side decision: accept only a genuine quote whose user data
/// binds the published keys to this nonce and whose measurement is expected.
pub fn bidder_check_quote(
    quote: &Quote,
    verdict: IasVerdict,
    expected_measurement: &Digest32,
    t_adr: &Address,
    t_pk: &[u8; 32],
    nonce: &[u8; 32],
) -> QuoteCheck {
    match verdict {
        IasVerdict::Genuine => {}
        IasVerdict::UnknownDevice => return QuoteCheck::Reject(RejectReason::UnknownDevice),
        IasVerdict::BadSignature => return QuoteCheck::Reject(RejectReason::BadSignature),
    }
    if quote.user_data != report_user_data(t_adr, t_pk, nonce) {
        return QuoteCheck::Reject(RejectReason::UserDataMismatch);
    }
    if quote.measurement != *expected_measurement {
        return QuoteCheck::Reject(RejectReason::MeasurementMismatch);
    }
    QuoteCheck::Accept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{gen_account, SigningKeyPair};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct Fixture {
        device: SigningKeyPair,
        registry: IasRegistry,
        t_adr: Address,
        t_pk: [u8; 32],
        nonce: [u8; 32],
        quote: Quote,
    }

    fn fixture() -> Fixture {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let device = gen_account(&mut rng);
        let mut registry = IasRegistry::new();
        registry.register([1; 16], device.pk).unwrap();
        let t_adr = gen_account(&mut rng).address;
        let t_pk = [8; 32];
        let nonce = [5; 32];
        let measurement = measurement_of(TRUSTEE_ENCLAVE_IDENTITY);
        let user_data = report_user_data(&t_adr, &t_pk, &nonce);
        let signature = device.sign(&Quote::body_digest(&measurement, &user_data, &[1; 16]));
        let quote = Quote {
            measurement,
            user_data,
            platform_id: [1; 16],
            signature,
        };
        Fixture {
            device,
            registry,
            t_adr,
            t_pk,
            nonce,
            quote,
        }
    }

    fn check(f: &Fixture, quote: &Quote, nonce: &[u8; 32]) -> QuoteCheck {
        bidder_check_quote(
            quote,
            ias_verify(&f.registry, quote),
            &measurement_of(TRUSTEE_ENCLAVE_IDENTITY),
            &f.t_adr,
            &f.t_pk,
            nonce,
        )
    }

    #[test]
    fn genuine_quote_accepted() {
        let f = fixture();
        assert_eq!(ias_verify(&f.registry, &f.quote), IasVerdict::Genuine);
        assert_eq!(check(&f, &f.quote, &f.nonce), QuoteCheck::Accept);
    }

    #[test]
    fn flipped_user_data_bit_is_bad_signature() {
        let f = fixture();
        let mut q = f.quote.clone();
        q.user_data.0[0] ^= 1;
        assert_eq!(ias_verify(&f.registry, &q), IasVerdict::BadSignature);
        assert_eq!(check(&f, &q, &f.nonce), QuoteCheck::Reject(RejectReason::BadSignature));
    }

    #[test]
    fn unregistered_device_is_unknown() {
        let f = fixture();
        let mut q = f.quote.clone();
        q.platform_id = [2; 16];
        let rogue = gen_account(&mut ChaCha20Rng::seed_from_u64(99));
        q.signature = rogue.sign(&q.digest());
        assert_eq!(ias_verify(&f.registry, &q), IasVerdict::UnknownDevice);
    }

    #[test]
    fn substituted_keys_fail_user_data_and_other_nonce_fails() {
        let f = fixture();
        let checked = bidder_check_quote(
            &f.quote,
            IasVerdict::Genuine,
            &measurement_of(TRUSTEE_ENCLAVE_IDENTITY),
            &f.t_adr,
            &[9; 32],
            &f.nonce,
        );
        assert_eq!(checked, QuoteCheck::Reject(RejectReason::UserDataMismatch));
        assert_eq!(
            check(&f, &f.quote, &[6; 32]),
            QuoteCheck::Reject(RejectReason::UserDataMismatch)
        );
    }

    #[test]
    fn tampered_code_fails_measurement() {
        let f = fixture();
        let measurement = measurement_of("trustee-enclave/1.0.0+patched");
        let signature = f
            .device
            .sign(&Quote::body_digest(&measurement, &f.quote.user_data, &[1; 16]));
        let q = Quote {
            measurement,
            signature,
            ..f.quote.clone()
        };
        assert_eq!(
            check(&f, &q, &f.nonce),
            QuoteCheck::Reject(RejectReason::MeasurementMismatch)
        );
    }

    #[test]
    fn registry_is_append_only() {
        let mut f = fixture();
        assert!(f.registry.register([1; 16], f.device.pk).is_ok());
        assert_eq!(f.registry.register([1; 16], [0; 64]), Err(RegistryConflict([1; 16])));
        assert_eq!(f.registry.len(), 1);
    }

    #[test]
    fn quote_json_uses_hex() {
        let f = fixture();
        let json = serde_json::to_value(&f.quote).unwrap();
        assert_eq!(json["platform_id"], "01010101010101010101010101010101");
        let back: Quote = serde_json::from_value(json).unwrap();
        assert_eq!(back, f.quote);
        assert_eq!(
            serde_json::to_string(&RejectReason::UserDataMismatch).unwrap(),
            "\"user_data mismatch\""
        );
    }
}
