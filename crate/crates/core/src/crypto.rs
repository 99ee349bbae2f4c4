//! Cryptographic primitives shared by every participant of the auction.
//!
//! * Keccak-256 and SHA-256 digests.
//! * secp256k1 accounts: key generation, deterministic (RFC 6979) signing,
//!   verification, and Ethereum-style sender recovery.
//! * X25519 key agreement and HKDF-SHA-256 key derivation.
//! * AES-128-CTR with HMAC-SHA-256 in encrypt-then-MAC mode.
//!
//! Everything here is a pure function of its inputs plus an explicit
//! entropy source.

use std::fmt;

use aes::cipher::{KeyIvInit, StreamCipher};
use hkdf::Hkdf;
use hmac::{Hmac, Mac};
use k256::ecdsa::{RecoveryId, Signature as EcdsaSignature, SigningKey, VerifyingKey};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use sha3::{Digest as _, Keccak256};
use subtle::ConstantTimeEq;
use thiserror::Error;

use crate::hex_serde;

type Aes128Ctr = ctr::Ctr128BE<aes::Aes128>;
type HmacSha256 = Hmac<Sha256>;

/// HKDF `info` label for bid encryption keys.
pub const ECIES_KDF_INFO: &[u8] = b"trustee-ecies-v1";

pub const IV_LEN: usize = 16;
pub const TAG_LEN: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("invalid signing key")]
    InvalidSigningKey,
    #[error("unrecoverable signature")]
    UnrecoverableSignature,
    #[error("degenerate shared secret")]
    DegenerateSharedSecret,
    #[error("authentication failure")]
    AuthenticationFailure,
}

/// A 32-byte digest (Keccak-256 or SHA-256, depending on the producer).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Digest32(#[serde(with = "hex_serde")] pub [u8; 32]);

impl Digest32 {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for Digest32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest32({})", hex::encode(self.0))
    }
}

impl fmt::Display for Digest32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// 20-byte account address: the rightmost 20 bytes of keccak256(pubkey).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Address(#[serde(with = "hex_serde")] pub [u8; 20]);

impl Address {
    pub fn from_public_key(pk: &[u8; 64]) -> Self {
        let digest = keccak256(pk);
        let mut out = [0u8; 20];
        out.copy_from_slice(&digest.0[12..]);
        Address(out)
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", hex::encode(self.0))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// Keccak-256 with the original Keccak padding (Ethereum's hash, not SHA3-256).
pub fn keccak256(data: &[u8]) -> Digest32 {
    Digest32(Keccak256::digest(data).into())
}

pub fn sha256(data: &[u8]) -> Digest32 {
    Digest32(Sha256::digest(data).into())
}

/// secp256k1 account key pair.
#[derive(Clone, PartialEq, Eq)]
pub struct SigningKeyPair {
    sk: [u8; 32],
    /// Uncompressed public key without the 0x04 prefix (x || y).
    pub pk: [u8; 64],
    pub address: Address,
}

impl SigningKeyPair {
    /// Builds the key pair for a scalar, failing if it is zero or not below the group order.
    pub fn from_secret_bytes(sk: &[u8; 32]) -> Result<Self, CryptoError> {
        let signing = SigningKey::from_slice(sk).map_err(|_| CryptoError::InvalidSigningKey)?;
        let pk = public_key_bytes(signing.verifying_key());
        Ok(Self {
            sk: *sk,
            pk,
            address: Address::from_public_key(&pk),
        })
    }

    pub fn secret_bytes(&self) -> &[u8; 32] {
        &self.sk
    }

    pub fn sign(&self, digest: &Digest32) -> Signature {
        sign(digest, &self.sk).expect("key pair holds a validated scalar")
    }
}

impl fmt::Debug for SigningKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigningKeyPair")
            .field("address", &self.address)
            .finish_non_exhaustive()
    }
}

fn public_key_bytes(vk: &VerifyingKey) -> [u8; 64] {
    let point = vk.to_encoded_point(false);
    let mut pk = [0u8; 64];
    pk.copy_from_slice(&point.as_bytes()[1..]);
    pk
}

/// Samples a fresh account. Scalars outside `[1, n-1]` are rejected and resampled.
pub fn gen_account<R: RngCore + CryptoRng>(rng: &mut R) -> SigningKeyPair {
    loop {
        let mut sk = [0u8; 32];
        rng.fill_bytes(&mut sk);
        if let Ok(kp) = SigningKeyPair::from_secret_bytes(&sk) {
            return kp;
        }
    }
}

/// Recoverable ECDSA signature in canonical (low-s) form.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    #[serde(with = "hex_serde")]
    pub r: [u8; 32],
    #[serde(with = "hex_serde")]
    pub s: [u8; 32],
    pub recovery_id: u8,
}

impl Signature {
    /// Serialized as `r || s || v` (65 bytes).
    pub fn to_bytes(&self) -> [u8; 65] {
        let mut out = [0u8; 65];
        out[..32].copy_from_slice(&self.r);
        out[32..64].copy_from_slice(&self.s);
        out[64] = self.recovery_id;
        out
    }

    fn to_ecdsa(self) -> Result<(EcdsaSignature, RecoveryId), CryptoError> {
        let sig = EcdsaSignature::from_scalars(self.r, self.s).map_err(|_| CryptoError::UnrecoverableSignature)?;
        // high-s signatures are malleable twins of a canonical one
        if sig.normalize_s().is_some() {
            return Err(CryptoError::UnrecoverableSignature);
        }
        let recid = match self.recovery_id {
            0 | 1 => RecoveryId::from_byte(self.recovery_id).ok_or(CryptoError::UnrecoverableSignature)?,
            _ => return Err(CryptoError::UnrecoverableSignature),
        };
        Ok((sig, recid))
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Signature(r={}, s={}, v={})",
            hex::encode(self.r),
            hex::encode(self.s),
            self.recovery_id
        )
    }
}

/// Deterministic ECDSA over a prehashed 32-byte digest.
pub fn sign(digest: &Digest32, sk: &[u8; 32]) -> Result<Signature, CryptoError> {
    let key = SigningKey::from_slice(sk).map_err(|_| CryptoError::InvalidSigningKey)?;
    let (sig, recid) = key
        .sign_prehash_recoverable(&digest.0)
        .map_err(|_| CryptoError::InvalidSigningKey)?;
    // k256 already emits low-s, but normalize in case that ever changes
    let (sig, recid) = match sig.normalize_s() {
        Some(low) => (low, RecoveryId::new(!recid.is_y_odd(), recid.is_x_reduced())),
        None => (sig, recid),
    };
    if recid.is_x_reduced() {
        // r overflowed the group order; probability ~2^-128, not representable in {0,1}
        return Err(CryptoError::InvalidSigningKey);
    }
    let (r, s) = sig.split_bytes();
    Ok(Signature {
        r: r.into(),
        s: s.into(),
        recovery_id: recid.to_byte(),
    })
}

pub fn verify(sig: &Signature, digest: &Digest32, pk: &[u8; 64]) -> bool {
    let Ok((ecdsa, _)) = sig.to_ecdsa() else {
        return false;
    };
    let mut sec1 = [0u8; 65];
    sec1[0] = 0x04;
    sec1[1..].copy_from_slice(pk);
    let Ok(vk) = VerifyingKey::from_sec1_bytes(&sec1) else {
        return false;
    };
    use k256::ecdsa::signature::hazmat::PrehashVerifier;
    vk.verify_prehash(&digest.0, &ecdsa).is_ok()
}

/// Recovers the signer's address, as a chain does implicitly for every transaction.
pub fn recover_signer(digest: &Digest32, sig: &Signature) -> Result<Address, CryptoError> {
    let (ecdsa, recid) = sig.to_ecdsa()?;
    let vk = VerifyingKey::recover_from_prehash(&digest.0, &ecdsa, recid)
        .map_err(|_| CryptoError::UnrecoverableSignature)?;
    Ok(Address::from_public_key(&public_key_bytes(&vk)))
}

/// Curve25519 Diffie-Hellman key pair.
#[derive(Clone, PartialEq, Eq)]
pub struct DhKeyPair {
    sk: [u8; 32],
    pub pk: [u8; 32],
}

impl DhKeyPair {
    /// Clamps `scalar` and derives the public u-coordinate.
    pub fn from_scalar(scalar: [u8; 32]) -> Self {
        let sk = clamp(scalar);
        let pk = x25519_dalek::x25519(sk, x25519_dalek::X25519_BASEPOINT_BYTES);
        Self { sk, pk }
    }

    pub fn secret_bytes(&self) -> &[u8; 32] {
        &self.sk
    }
}

impl fmt::Debug for DhKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DhKeyPair(pk={})", hex::encode(self.pk))
    }
}

fn clamp(mut scalar: [u8; 32]) -> [u8; 32] {
    scalar[0] &= 248;
    scalar[31] &= 127;
    scalar[31] |= 64;
    scalar
}

pub fn dh_keygen<R: RngCore + CryptoRng>(rng: &mut R) -> DhKeyPair {
    let mut scalar = [0u8; 32];
    rng.fill_bytes(&mut scalar);
    DhKeyPair::from_scalar(scalar)
}

/// X25519 key agreement. An all-zero result (low-order peer point) is rejected.
pub fn dh_shared_secret(my_sk: &[u8; 32], their_pk: &[u8; 32]) -> Result<[u8; 32], CryptoError> {
    let ss = x25519_dalek::x25519(*my_sk, *their_pk);
    if bool::from(ss.ct_eq(&[0u8; 32])) {
        return Err(CryptoError::DegenerateSharedSecret);
    }
    Ok(ss)
}

/// True when `pk` is the canonical encoding of a field element: high bit clear and below 2^255 - 19.
pub fn is_canonical_dh_public(pk: &[u8; 32]) -> bool {
    if pk[31] & 0x80 != 0 {
        return false;
    }
    // p = 2^255 - 19 is 0xed, 0xff * 30, 0x7f in little-endian
    let above_floor = pk[1..31].iter().all(|&b| b == 0xff) && pk[31] == 0x7f;
    !(above_floor && pk[0] >= 0xed)
}

/// Encryption key `k1` and MAC key `k2` derived from a shared secret.
#[derive(Clone, PartialEq, Eq)]
pub struct DerivedKeys {
    pub k1: [u8; 16],
    pub k2: [u8; 32],
}

impl fmt::Debug for DerivedKeys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DerivedKeys(..)")
    }
}

/// HKDF-SHA-256 with an empty salt, expanded to 48 bytes: `k1 = okm[..16]`, `k2 = okm[16..]`.
pub fn kdf(ss: &[u8; 32]) -> DerivedKeys {
    kdf_with_info(ss, ECIES_KDF_INFO)
}

pub(crate) fn kdf_with_info(ikm: &[u8], info: &[u8]) -> DerivedKeys {
    let hk = Hkdf::<Sha256>::new(None, ikm);
    let mut okm = [0u8; 48];
    hk.expand(info, &mut okm)
        .expect("48 bytes is a valid HKDF-SHA-256 output length");
    let mut keys = DerivedKeys {
        k1: [0u8; 16],
        k2: [0u8; 32],
    };
    keys.k1.copy_from_slice(&okm[..16]);
    keys.k2.copy_from_slice(&okm[16..]);
    keys
}

/// AES-128-CTR encryption followed by HMAC-SHA-256 over `iv || ct`.
pub fn aead_encrypt(plaintext: &[u8], iv: &[u8; IV_LEN], keys: &DerivedKeys) -> (Vec<u8>, [u8; TAG_LEN]) {
    aead_encrypt_with_aad(&[], plaintext, iv, keys)
}

/// Verifies the tag in constant time, then decrypts.
pub fn aead_decrypt(
    ct: &[u8],
    iv: &[u8; IV_LEN],
    tag: &[u8; TAG_LEN],
    keys: &DerivedKeys,
) -> Result<Vec<u8>, CryptoError> {
    aead_decrypt_with_aad(&[], ct, iv, tag, keys)
}

/// The MAC input is `aad || iv || ct`; callers must use fixed-length associated data.
pub(crate) fn aead_encrypt_with_aad(
    aad: &[u8],
    plaintext: &[u8],
    iv: &[u8; IV_LEN],
    keys: &DerivedKeys,
) -> (Vec<u8>, [u8; TAG_LEN]) {
    let mut ct = plaintext.to_vec();
    let mut cipher = Aes128Ctr::new(&keys.k1.into(), iv.into());
    cipher.apply_keystream(&mut ct);
    let tag = mac(aad, iv, &ct, &keys.k2).finalize().into_bytes().into();
    (ct, tag)
}

pub(crate) fn aead_decrypt_with_aad(
    aad: &[u8],
    ct: &[u8],
    iv: &[u8; IV_LEN],
    tag: &[u8; TAG_LEN],
    keys: &DerivedKeys,
) -> Result<Vec<u8>, CryptoError> {
    mac(aad, iv, ct, &keys.k2)
        .verify_slice(tag)
        .map_err(|_| CryptoError::AuthenticationFailure)?;
    let mut pt = ct.to_vec();
    let mut cipher = Aes128Ctr::new(&keys.k1.into(), iv.into());
    cipher.apply_keystream(&mut pt);
    Ok(pt)
}

fn mac(aad: &[u8], iv: &[u8], ct: &[u8], k2: &[u8; 32]) -> HmacSha256 {
    let mut mac = <HmacSha256 as Mac>::new_from_slice(k2).expect("HMAC accepts any key length");
    mac.update(aad);
    mac.update(iv);
    mac.update(ct);
    mac
}
