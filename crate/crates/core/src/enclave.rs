//! Simulated auction enclave and the platform it runs on.
//!
//! The platform owns what real hardware would: a fused root secret from which
//! seal keys are derived per enclave measurement, a non-volatile monotonic
//! counter, and the device attestation key used by the quoting step.
//!
//! Rollback protection: `initialize` bumps the platform counter and seals its
//! value with the keys. `reveal_winner` only proceeds if the counter still
//! holds exactly that value, and bumps it in the same atomic step, so one
//! sealed state yields at most one signed result no matter how many enclave
//! instances replay it. The state handed back after a reveal is marked spent.

use std::fmt;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::attestation::{measurement_of, report_user_data, PlatformId, Quote};
use crate::bidder::BidFrame;
use crate::chain::RawTransaction;
use crate::contract::{ContractCall, SEALED_BID_LEN};
use crate::crypto::{
    aead_decrypt, aead_decrypt_with_aad, aead_encrypt_with_aad, dh_keygen, dh_shared_secret, gen_account,
    is_canonical_dh_public, kdf, kdf_with_info, keccak256, Address, CryptoError, DerivedKeys, Digest32, SigningKeyPair,
    IV_LEN, TAG_LEN,
};
use crate::value::BidValue;

const SEAL_KDF_INFO: &[u8] = b"trustee-seal-v1";
const SECRETS_LEN: usize = 32 + 32 + 8 + 1;

#[derive(Debug, Error)]
pub enum CounterError {
    #[error("counter storage: {0}")]
    Io(#[from] io::Error),
    #[error("counter file is corrupt")]
    Corrupt,
    #[error("counter exhausted")]
    Exhausted,
}

/// A non-volatile counter that never decreases.
pub trait MonotonicCounter: Send + Sync {
    fn read(&self) -> Result<u64, CounterError>;

    fn increment_and_read(&self) -> Result<u64, CounterError>;

    /// Atomically increments iff the current value equals `expected`.
    /// Returns the new value, or `None` if the value differed.
    fn compare_and_increment(&self, expected: u64) -> Result<Option<u64>, CounterError>;
}

#[derive(Debug, Default)]
pub struct MemoryCounter {
    value: Mutex<u64>,
}

impl MemoryCounter {
    pub fn new() -> Self {
        Self::default()
    }
}

impl MonotonicCounter for MemoryCounter {
    fn read(&self) -> Result<u64, CounterError> {
        Ok(*self.value.lock().unwrap())
    }

    fn increment_and_read(&self) -> Result<u64, CounterError> {
        let mut v = self.value.lock().unwrap();
        *v = v.checked_add(1).ok_or(CounterError::Exhausted)?;
        Ok(*v)
    }

    fn compare_and_increment(&self, expected: u64) -> Result<Option<u64>, CounterError> {
        let mut v = self.value.lock().unwrap();
        if *v != expected {
            return Ok(None);
        }
        *v = v.checked_add(1).ok_or(CounterError::Exhausted)?;
        Ok(Some(*v))
    }
}

/// Counter persisted as 8 big-endian bytes, updated by write-then-rename.
#[derive(Debug)]
pub struct FileCounter {
    path: PathBuf,
    lock: Mutex<()>,
}

impl FileCounter {
    /// Opens the counter at `path`, creating it with value 0 if absent.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, CounterError> {
        let counter = Self {
            path: path.into(),
            lock: Mutex::new(()),
        };
        if !counter.path.exists() {
            counter.store(0)?;
        }
        counter.load()?;
        Ok(counter)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn load(&self) -> Result<u64, CounterError> {
        let raw = fs::read(&self.path)?;
        let bytes: [u8; 8] = raw.as_slice().try_into().map_err(|_| CounterError::Corrupt)?;
        Ok(u64::from_be_bytes(bytes))
    }

    fn store(&self, value: u64) -> Result<(), CounterError> {
        let tmp = self.path.with_extension("tmp");
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&value.to_be_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, &self.path)?;
        Ok(())
    }
}

impl MonotonicCounter for FileCounter {
    fn read(&self) -> Result<u64, CounterError> {
        let _guard = self.lock.lock().unwrap();
        self.load()
    }

    fn increment_and_read(&self) -> Result<u64, CounterError> {
        let _guard = self.lock.lock().unwrap();
        let next = self.load()?.checked_add(1).ok_or(CounterError::Exhausted)?;
        self.store(next)?;
        Ok(next)
    }

    fn compare_and_increment(&self, expected: u64) -> Result<Option<u64>, CounterError> {
        let _guard = self.lock.lock().unwrap();
        let current = self.load()?;
        if current != expected {
            return Ok(None);
        }
        let next = current.checked_add(1).ok_or(CounterError::Exhausted)?;
        self.store(next)?;
        Ok(Some(next))
    }
}

/// Simulated SGX-capable host.
pub struct PlatformSim {
    platform_id: PlatformId,
    root_secret: [u8; 32],
    counter: Box<dyn MonotonicCounter>,
    device_key: SigningKeyPair,
}

impl fmt::Debug for PlatformSim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlatformSim")
            .field("platform_id", &hex::encode(self.platform_id))
            .field("device", &self.device_key.address)
            .finish_non_exhaustive()
    }
}

impl PlatformSim {
    pub fn new<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Self::with_counter(rng, Box::new(MemoryCounter::new()))
    }

    pub fn with_counter<R: RngCore + CryptoRng>(rng: &mut R, counter: Box<dyn MonotonicCounter>) -> Self {
        let mut platform_id = [0u8; 16];
        rng.fill_bytes(&mut platform_id);
        let mut root_secret = [0u8; 32];
        rng.fill_bytes(&mut root_secret);
        Self {
            platform_id,
            root_secret,
            counter,
            device_key: gen_account(rng),
        }
    }

    pub fn platform_id(&self) -> PlatformId {
        self.platform_id
    }

    /// Public half of the device attestation key, as registered with the attestation service.
    pub fn device_public_key(&self) -> [u8; 64] {
        self.device_key.pk
    }

    pub fn counter(&self) -> &dyn MonotonicCounter {
        self.counter.as_ref()
    }

    fn seal_keys(&self, measurement: &Digest32) -> DerivedKeys {
        let mut info = SEAL_KDF_INFO.to_vec();
        info.extend_from_slice(&self.platform_id);
        info.extend_from_slice(&measurement.0);
        kdf_with_info(&self.root_secret, &info)
    }

    fn seal_aad(&self, measurement: &Digest32) -> [u8; 48] {
        let mut aad = [0u8; 48];
        aad[..16].copy_from_slice(&self.platform_id);
        aad[16..].copy_from_slice(&measurement.0);
        aad
    }

    /// Quoting step: signs an enclave report with the device key.
    fn quote(&self, measurement: Digest32, user_data: Digest32) -> Quote {
        let signature = self
            .device_key
            .sign(&Quote::body_digest(&measurement, &user_data, &self.platform_id));
        Quote {
            measurement,
            user_data,
            platform_id: self.platform_id,
            signature,
        }
    }
}

#[derive(Debug, Error)]
pub enum EnclaveError {
    #[error("counter unavailable: {0}")]
    CounterUnavailable(#[from] CounterError),
    #[error("bad sealed state")]
    BadSealedState,
    #[error("unsealing failure")]
    UnsealingFailure,
    #[error("malformed bid list: {0}")]
    MalformedBids(&'static str),
}

/// Keys and freshness counter as they exist inside the enclave.
#[derive(Clone, PartialEq, Eq)]
pub struct EnclaveSecrets {
    pub t_sk: [u8; 32],
    pub t_dh: [u8; 32],
    pub ctr: u64,
    /// Set once a winner has been revealed with these keys.
    pub spent: bool,
}

impl fmt::Debug for EnclaveSecrets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnclaveSecrets")
            .field("ctr", &self.ctr)
            .field("spent", &self.spent)
            .finish_non_exhaustive()
    }
}

impl EnclaveSecrets {
    fn to_bytes(&self) -> [u8; SECRETS_LEN] {
        let mut out = [0u8; SECRETS_LEN];
        out[..32].copy_from_slice(&self.t_sk);
        out[32..64].copy_from_slice(&self.t_dh);
        out[64..72].copy_from_slice(&self.ctr.to_be_bytes());
        out[72] = u8::from(self.spent);
        out
    }

    fn from_bytes(raw: &[u8]) -> Option<Self> {
        if raw.len() != SECRETS_LEN || raw[72] > 1 {
            return None;
        }
        Some(Self {
            t_sk: raw[..32].try_into().ok()?,
            t_dh: raw[32..64].try_into().ok()?,
            ctr: u64::from_be_bytes(raw[64..72].try_into().ok()?),
            spent: raw[72] == 1,
        })
    }
}

/// Opaque sealed blob: `iv || ct || tag`.
#[derive(Clone, PartialEq, Eq)]
pub struct SealedState {
    blob: Vec<u8>,
}

impl fmt::Debug for SealedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SealedState({} bytes)", self.blob.len())
    }
}

impl SealedState {
    pub fn from_bytes(blob: Vec<u8>) -> Self {
        Self { blob }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.blob
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, &self.blob)?;
        fs::rename(tmp, path)
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        fs::read(path).map(Self::from_bytes)
    }
}

/// The signed `SetWinner` transaction, or nothing when the enclave refused.
#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum WinnerTransaction {
    Empty,
    Signed(SignedWinner),
}

impl WinnerTransaction {
    pub fn is_empty(&self) -> bool {
        matches!(self, WinnerTransaction::Empty)
    }

    pub fn signed(&self) -> Option<&SignedWinner> {
        match self {
            WinnerTransaction::Empty => None,
            WinnerTransaction::Signed(s) => Some(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedWinner {
    pub h: Digest32,
    pub index: u64,
    pub price: BidValue,
    pub tx: RawTransaction,
}

/// Public outputs of enclave initialization.
#[derive(Debug, Clone)]
pub struct Initialized {
    pub sealed: SealedState,
    pub t_adr: Address,
    pub t_pk: [u8; 32],
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OpenBidError {
    #[error("sealed bid must be {SEALED_BID_LEN} bytes")]
    Malformed,
    #[error("non-canonical ephemeral public key")]
    NonCanonicalKey,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// Decrypts one sealed bid with the enclave's DH secret.
pub fn open_bid(t_dh: &[u8; 32], b_ct: &[u8], b_pk: &[u8; 32]) -> Result<BidValue, OpenBidError> {
    let frame = BidFrame::parse(b_ct).ok_or(OpenBidError::Malformed)?;
    if !is_canonical_dh_public(b_pk) {
        return Err(OpenBidError::NonCanonicalKey);
    }
    let keys = kdf(&dh_shared_secret(t_dh, b_pk)?);
    let pt = aead_decrypt(&frame.ct, &frame.iv, &frame.tag, &keys)?;
    let bytes: [u8; 32] = pt.try_into().map_err(|_| OpenBidError::Malformed)?;
    Ok(BidValue(bytes))
}

/// Winner index and second-highest price.
///
/// The winner is the earliest maximal bid. The price is the largest bid among
/// the others, so a tie at the top prices at the tied maximum and a lone bid
/// prices at zero.
pub fn select_winner(values: &[BidValue]) -> Option<(usize, BidValue)> {
    let (first, rest) = values.split_first()?;
    let mut max = *first;
    let mut index = 0;
    let mut second = BidValue::ZERO;
    for (i, &bid) in rest.iter().enumerate() {
        if bid > max {
            second = max;
            max = bid;
            index = i + 1;
        } else if bid > second {
            second = bid;
        }
    }
    Some((index, second))
}

/// Keccak-256 over the concatenation `b_ct[0] || b_pk[0] || ... || b_ct[n-1] || b_pk[n-1]`.
pub fn input_binding_hash(b_ct: &[Vec<u8>], b_pk: &[[u8; 32]]) -> Digest32 {
    let mut preimage = Vec::with_capacity(b_ct.len() * (SEALED_BID_LEN + 32));
    for (ct, pk) in b_ct.iter().zip(b_pk) {
        preimage.extend_from_slice(ct);
        preimage.extend_from_slice(pk);
    }
    keccak256(&preimage)
}

/// One running instance of the auction enclave.
pub struct TrusteeEnclave {
    platform: Arc<PlatformSim>,
    measurement: Digest32,
    rng: ChaCha20Rng,
}

impl fmt::Debug for TrusteeEnclave {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrusteeEnclave")
            .field("platform", &self.platform)
            .field("measurement", &self.measurement)
            .finish_non_exhaustive()
    }
}

impl TrusteeEnclave {
    /// Loads the enclave built from `code_identity` on `platform`. `seed`
    /// drives the in-enclave randomness so runs are reproducible.
    pub fn launch(platform: Arc<PlatformSim>, code_identity: &str, seed: u64) -> Self {
        Self {
            platform,
            measurement: measurement_of(code_identity),
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn measurement(&self) -> Digest32 {
        self.measurement
    }

    pub fn platform(&self) -> &Arc<PlatformSim> {
        &self.platform
    }

    /// Generates the auction key pairs, binds them to a fresh counter value and seals them.
    pub fn initialize(&mut self) -> Result<Initialized, EnclaveError> {
        let dh = dh_keygen(&mut self.rng);
        let account = gen_account(&mut self.rng);
        let ctr = self.platform.counter.increment_and_read()?;
        let secrets = EnclaveSecrets {
            t_sk: *account.secret_bytes(),
            t_dh: *dh.secret_bytes(),
            ctr,
            spent: false,
        };
        Ok(Initialized {
            sealed: self.seal(&secrets),
            t_adr: account.address,
            t_pk: dh.pk,
        })
    }

    pub fn seal(&mut self, secrets: &EnclaveSecrets) -> SealedState {
        let keys = self.platform.seal_keys(&self.measurement);
        let aad = self.platform.seal_aad(&self.measurement);
        let mut iv = [0u8; IV_LEN];
        self.rng.fill_bytes(&mut iv);
        let (ct, tag) = aead_encrypt_with_aad(&aad, &secrets.to_bytes(), &iv, &keys);
        let mut blob = Vec::with_capacity(IV_LEN + ct.len() + TAG_LEN);
        blob.extend_from_slice(&iv);
        blob.extend_from_slice(&ct);
        blob.extend_from_slice(&tag);
        SealedState { blob }
    }

    pub fn unseal(&self, sealed: &SealedState) -> Result<EnclaveSecrets, EnclaveError> {
        let blob = &sealed.blob;
        if blob.len() != IV_LEN + SECRETS_LEN + TAG_LEN {
            return Err(EnclaveError::UnsealingFailure);
        }
        let iv: [u8; IV_LEN] = blob[..IV_LEN].try_into().unwrap();
        let ct = &blob[IV_LEN..IV_LEN + SECRETS_LEN];
        let tag: [u8; TAG_LEN] = blob[IV_LEN + SECRETS_LEN..].try_into().unwrap();
        let keys = self.platform.seal_keys(&self.measurement);
        let aad = self.platform.seal_aad(&self.measurement);
        let pt = aead_decrypt_with_aad(&aad, ct, &iv, &tag, &keys).map_err(|_| EnclaveError::UnsealingFailure)?;
        EnclaveSecrets::from_bytes(&pt).ok_or(EnclaveError::UnsealingFailure)
    }

    /// Produces a quote binding `(t_adr, t_pk)` from `sealed` to the verifier's nonce.
    pub fn get_quote(&self, sealed: &SealedState, nonce: &[u8; 32]) -> Result<Quote, EnclaveError> {
        let secrets = self.unseal(sealed).map_err(|_| EnclaveError::BadSealedState)?;
        let account = SigningKeyPair::from_secret_bytes(&secrets.t_sk).map_err(|_| EnclaveError::BadSealedState)?;
        let t_pk = x25519_dalek::x25519(secrets.t_dh, x25519_dalek::X25519_BASEPOINT_BYTES);
        let user_data = report_user_data(&account.address, &t_pk, nonce);
        Ok(self.platform.quote(self.measurement, user_data))
    }

    /// Opens every bid and returns the signed `SetWinner` transaction for `contract`.
    ///
    /// Returns [`WinnerTransaction::Empty`] with `sealed` unchanged when the
    /// sealed state is stale or already spent. Bids that fail to decrypt count
    /// as zero but stay in the binding hash.
    pub fn reveal_winner(
        &mut self,
        contract: Address,
        b_ct: &[Vec<u8>],
        b_pk: &[[u8; 32]],
        sealed: &SealedState,
    ) -> Result<(WinnerTransaction, SealedState), EnclaveError> {
        if b_ct.is_empty() {
            return Err(EnclaveError::MalformedBids("no bids"));
        }
        if b_ct.len() != b_pk.len() {
            return Err(EnclaveError::MalformedBids("ciphertext and key lists differ in length"));
        }
        // a re-split concatenation could otherwise hash identically to the on-chain list
        if b_ct.iter().any(|ct| ct.len() != SEALED_BID_LEN) {
            return Err(EnclaveError::MalformedBids("sealed bid with wrong length"));
        }
        let secrets = self.unseal(sealed).map_err(|_| EnclaveError::BadSealedState)?;
        if secrets.spent {
            return Ok((WinnerTransaction::Empty, sealed.clone()));
        }
        let Some(ctr) = self.platform.counter.compare_and_increment(secrets.ctr)? else {
            return Ok((WinnerTransaction::Empty, sealed.clone()));
        };
        let next_state = self.seal(&EnclaveSecrets {
            ctr,
            spent: true,
            ..secrets.clone()
        });

        let values: Vec<BidValue> = b_ct
            .iter()
            .zip(b_pk)
            .map(|(ct, pk)| open_bid(&secrets.t_dh, ct, pk).unwrap_or(BidValue::ZERO))
            .collect();
        let (index, price) = select_winner(&values).expect("bid list is non-empty");
        let index = index as u64;
        let h = input_binding_hash(b_ct, b_pk);
        let account = SigningKeyPair::from_secret_bytes(&secrets.t_sk).map_err(|_| EnclaveError::BadSealedState)?;
        let tx = RawTransaction::sign(&account, contract, &ContractCall::SetWinner { h, index, price }, 0);
        Ok((
            WinnerTransaction::Signed(SignedWinner { h, index, price, tx }),
            next_state,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bidder::seal_bid_with;
    use crate::crypto::{keccak256, DhKeyPair};

    fn platform(seed: u64) -> Arc<PlatformSim> {
        Arc::new(PlatformSim::new(&mut ChaCha20Rng::seed_from_u64(seed)))
    }

    fn genuine(platform: &Arc<PlatformSim>, seed: u64) -> TrusteeEnclave {
        TrusteeEnclave::launch(platform.clone(), crate::attestation::TRUSTEE_ENCLAVE_IDENTITY, seed)
    }

    fn sealed_bids(t_pk: &[u8; 32], values: &[u64]) -> (Vec<Vec<u8>>, Vec<[u8; 32]>) {
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        values
            .iter()
            .map(|&v| {
                let eph = dh_keygen(&mut rng);
                let bid = seal_bid_with(&eph, v.into(), t_pk, &mut rng).unwrap();
                (bid.b_ct, bid.b_pk)
            })
            .unzip()
    }

    #[test]
    fn initialize_derives_consistent_fresh_keys() {
        let p = platform(1);
        let mut e = genuine(&p, 2);
        let a = e.initialize().unwrap();
        let b = e.initialize().unwrap();
        assert_ne!(a.t_pk, b.t_pk);
        let sa = e.unseal(&a.sealed).unwrap();
        let sb = e.unseal(&b.sealed).unwrap();
        assert!(sb.ctr > sa.ctr);
        let account = SigningKeyPair::from_secret_bytes(&sa.t_sk).unwrap();
        assert_eq!(account.address, a.t_adr);
        assert_eq!(a.t_adr.0, keccak256(&account.pk).0[12..]);
        assert_eq!(DhKeyPair::from_scalar(sa.t_dh).pk, a.t_pk);
    }

    struct BrokenCounter;
    impl MonotonicCounter for BrokenCounter {
        fn read(&self) -> Result<u64, CounterError> {
            Err(CounterError::Corrupt)
        }
        fn increment_and_read(&self) -> Result<u64, CounterError> {
            Err(CounterError::Corrupt)
        }
        fn compare_and_increment(&self, _: u64) -> Result<Option<u64>, CounterError> {
            Err(CounterError::Corrupt)
        }
    }

    #[test]
    fn counter_failure_emits_no_keys() {
        let p = Arc::new(PlatformSim::with_counter(
            &mut ChaCha20Rng::seed_from_u64(1),
            Box::new(BrokenCounter),
        ));
        let err = genuine(&p, 1).initialize().unwrap_err();
        assert!(matches!(err, EnclaveError::CounterUnavailable(_)));
        assert!(err.to_string().starts_with("counter unavailable"));
    }

    #[test]
    fn seal_is_bound_to_platform_and_measurement() {
        let p = platform(1);
        let mut e = genuine(&p, 2);
        let init = e.initialize().unwrap();
        let secrets = e.unseal(&init.sealed).unwrap();
        let resealed = e.seal(&secrets);
        assert_eq!(e.unseal(&resealed).unwrap(), secrets);

        let other = genuine(&platform(9), 2);
        assert!(matches!(
            other.unseal(&init.sealed),
            Err(EnclaveError::UnsealingFailure)
        ));
        let patched = TrusteeEnclave::launch(p.clone(), "trustee-enclave/evil", 2);
        assert!(matches!(
            patched.unseal(&init.sealed),
            Err(EnclaveError::UnsealingFailure)
        ));

        for i in 0..init.sealed.as_bytes().len() {
            let mut blob = init.sealed.as_bytes().to_vec();
            blob[i] ^= 0x10;
            assert!(e.unseal(&SealedState::from_bytes(blob)).is_err(), "byte {i}");
        }
        assert!(e.unseal(&SealedState::from_bytes(vec![1, 2, 3])).is_err());
    }

    #[test]
    fn quote_binds_keys_and_nonce() {
        let p = platform(1);
        let mut e = genuine(&p, 2);
        let init = e.initialize().unwrap();
        let q = e.get_quote(&init.sealed, &[1; 32]).unwrap();
        assert_eq!(q.user_data, report_user_data(&init.t_adr, &init.t_pk, &[1; 32]));
        assert_eq!(q.platform_id, p.platform_id());
        let q2 = e.get_quote(&init.sealed, &[2; 32]).unwrap();
        assert_ne!(q.user_data, q2.user_data);
        assert!(matches!(
            e.get_quote(&SealedState::from_bytes(vec![0; 121]), &[1; 32]),
            Err(EnclaveError::BadSealedState)
        ));
    }

    #[test]
    fn reveal_picks_second_price_and_signs_as_t_adr() {
        let p = platform(1);
        let mut e = genuine(&p, 2);
        let init = e.initialize().unwrap();
        let (cts, pks) = sealed_bids(&init.t_pk, &[3, 7, 10]);
        let (tw, _) = e.reveal_winner(Address([0xcc; 20]), &cts, &pks, &init.sealed).unwrap();
        let s = tw.signed().unwrap();
        assert_eq!((s.index, s.price), (2, 7u64.into()));
        assert_eq!(s.tx.sender().unwrap(), init.t_adr);
        assert_eq!(s.h, input_binding_hash(&cts, &pks));
        assert_eq!(s.tx.function, "SetWinner");
    }

    #[test]
    fn single_bid_prices_at_zero() {
        let p = platform(1);
        let mut e = genuine(&p, 2);
        let init = e.initialize().unwrap();
        let (cts, pks) = sealed_bids(&init.t_pk, &[5]);
        let (tw, _) = e.reveal_winner(Address([0xcc; 20]), &cts, &pks, &init.sealed).unwrap();
        let s = tw.signed().unwrap();
        assert_eq!((s.index, s.price), (0, BidValue::ZERO));
    }

    #[test]
    fn reveal_is_one_shot() {
        let p = platform(1);
        let mut e = genuine(&p, 2);
        let init = e.initialize().unwrap();
        let (cts, pks) = sealed_bids(&init.t_pk, &[3, 7, 10]);
        let (first, next) = e.reveal_winner(Address([0xcc; 20]), &cts, &pks, &init.sealed).unwrap();
        assert!(!first.is_empty());
        let (again, unchanged) = e.reveal_winner(Address([0xcc; 20]), &cts, &pks, &init.sealed).unwrap();
        assert!(again.is_empty());
        assert_eq!(unchanged, init.sealed);
        // the post-reveal state carries the current counter but is spent
        let secrets = e.unseal(&next).unwrap();
        assert!(secrets.spent);
        assert_eq!(secrets.ctr, p.counter().read().unwrap());
        let (chained, _) = e
            .reveal_winner(Address([0xcc; 20]), &cts[..2], &pks[..2], &next)
            .unwrap();
        assert!(chained.is_empty());
    }

    #[test]
    fn benign_restart_before_reveal_still_works() {
        let p = platform(1);
        let mut e = genuine(&p, 2);
        let init = e.initialize().unwrap();
        drop(e);
        let mut restarted = genuine(&p, 3);
        let (cts, pks) = sealed_bids(&init.t_pk, &[1, 2]);
        let (tw, _) = restarted
            .reveal_winner(Address([1; 20]), &cts, &pks, &init.sealed)
            .unwrap();
        assert!(!tw.is_empty());
    }

    #[test]
    fn garbage_bids_count_as_zero_but_stay_bound() {
        let p = platform(1);
        let mut e = genuine(&p, 2);
        let init = e.initialize().unwrap();
        let (mut cts, pks) = sealed_bids(&init.t_pk, &[9, 4, 6]);
        cts[0][0] ^= 1;
        let (tw, _) = e.reveal_winner(Address([1; 20]), &cts, &pks, &init.sealed).unwrap();
        let s = tw.signed().unwrap();
        assert_eq!((s.index, s.price), (2, 4u64.into()));
        assert_eq!(s.h, input_binding_hash(&cts, &pks));
    }

    #[test]
    fn malformed_lists_rejected_before_counter_moves() {
        let p = platform(1);
        let mut e = genuine(&p, 2);
        let init = e.initialize().unwrap();
        let (cts, pks) = sealed_bids(&init.t_pk, &[1, 2]);
        let before = p.counter().read().unwrap();
        assert!(e.reveal_winner(Address([1; 20]), &[], &[], &init.sealed).is_err());
        assert!(e
            .reveal_winner(Address([1; 20]), &cts, &pks[..1], &init.sealed)
            .is_err());
        let mut merged = cts[0].clone();
        merged.extend_from_slice(&pks[0]);
        merged.extend_from_slice(&cts[1]);
        assert!(e
            .reveal_winner(Address([1; 20]), &[merged], &pks[1..], &init.sealed)
            .is_err());
        assert_eq!(p.counter().read().unwrap(), before);
    }

    #[test]
    fn select_winner_cases() {
        let v = |xs: &[u64]| xs.iter().map(|&x| BidValue::from(x)).collect::<Vec<_>>();
        assert_eq!(select_winner(&[]), None);
        assert_eq!(select_winner(&v(&[10, 3, 7])), Some((0, 7u64.into())));
        assert_eq!(select_winner(&v(&[5, 5])), Some((0, 5u64.into())));
        assert_eq!(select_winner(&v(&[0, 0])), Some((0, 0u64.into())));
        assert_eq!(select_winner(&v(&[1, 9, 9, 2])), Some((1, 9u64.into())));
    }

    #[test]
    fn file_counter_persists_and_never_decreases() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ctr.bin");
        let c = FileCounter::open(&path).unwrap();
        assert_eq!(c.read().unwrap(), 0);
        assert_eq!(c.increment_and_read().unwrap(), 1);
        assert_eq!(c.compare_and_increment(0).unwrap(), None);
        assert_eq!(c.compare_and_increment(1).unwrap(), Some(2));
        drop(c);
        assert_eq!(fs::read(&path).unwrap(), 2u64.to_be_bytes());
        let reopened = FileCounter::open(&path).unwrap();
        assert_eq!(reopened.read().unwrap(), 2);
        fs::write(&path, [1, 2, 3]).unwrap();
        assert!(matches!(reopened.read(), Err(CounterError::Corrupt)));
    }

    #[test]
    fn sealed_state_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = platform(1);
        let mut e = genuine(&p, 2);
        let init = e.initialize().unwrap();
        let path = dir.path().join("sealed.bin");
        init.sealed.save(&path).unwrap();
        assert_eq!(SealedState::load(&path).unwrap(), init.sealed);
    }
}
