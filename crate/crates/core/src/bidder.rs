//! Bidder side: sealing a bid to the enclave key and taking part in an auction.

use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::attestation::{bidder_check_quote, ias_verify, IasRegistry, Quote, QuoteCheck, RejectReason};
use crate::chain::{ChainState, RawTransaction};
use crate::contract::{ContractCall, Phase, SEALED_BID_LEN};
use crate::crypto::{
    aead_encrypt, dh_keygen, dh_shared_secret, gen_account, kdf, CryptoError, DhKeyPair, Digest32, SigningKeyPair,
    IV_LEN, TAG_LEN,
};
use crate::value::BidValue;

/// `b_ct` split into its parts: `ct(32) || iv(16) || tag(32)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BidFrame {
    pub ct: [u8; 32],
    pub iv: [u8; IV_LEN],
    pub tag: [u8; TAG_LEN],
}

impl BidFrame {
    pub fn parse(b_ct: &[u8]) -> Option<Self> {
        if b_ct.len() != SEALED_BID_LEN {
            return None;
        }
        Some(Self {
            ct: b_ct[..32].try_into().ok()?,
            iv: b_ct[32..48].try_into().ok()?,
            tag: b_ct[48..].try_into().ok()?,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(SEALED_BID_LEN);
        out.extend_from_slice(&self.ct);
        out.extend_from_slice(&self.iv);
        out.extend_from_slice(&self.tag);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealedBid {
    pub b_ct: Vec<u8>,
    pub b_pk: [u8; 32],
}

/// ECIES-seals `value` to the enclave key `t_pk` using the given ephemeral key pair and IV.
pub fn seal_bid_with_iv(
    ephemeral: &DhKeyPair,
    value: BidValue,
    t_pk: &[u8; 32],
    iv: [u8; IV_LEN],
) -> Result<SealedBid, CryptoError> {
    let ss = dh_shared_secret(ephemeral.secret_bytes(), t_pk)?;
    let keys = kdf(&ss);
    let (ct, tag) = aead_encrypt(&value.to_be_bytes(), &iv, &keys);
    let frame = BidFrame {
        ct: ct.try_into().expect("CTR keeps the 32-byte length"),
        iv,
        tag,
    };
    Ok(SealedBid {
        b_ct: frame.to_bytes(),
        b_pk: ephemeral.pk,
    })
}

pub fn seal_bid_with<R: RngCore + CryptoRng>(
    ephemeral: &DhKeyPair,
    value: BidValue,
    t_pk: &[u8; 32],
    rng: &mut R,
) -> Result<SealedBid, CryptoError> {
    let mut iv = [0u8; IV_LEN];
    rng.fill_bytes(&mut iv);
    seal_bid_with_iv(ephemeral, value, t_pk, iv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    /// Attests the enclave, then bids with the exact deposit.
    #[default]
    Honest,
    /// Skips attestation and bids blindly.
    NoAttest,
    /// Attests, then attaches twice the deposit.
    Overdeposit,
    /// Attests and bids only after the bidding window has closed.
    Late,
}

impl Behavior {
    pub fn attests(self) -> bool {
        self != Behavior::NoAttest
    }
}

/// Whoever can pass an attestation challenge to the enclave; in practice the relay.
pub trait QuoteProvider {
    fn challenge(&mut self, nonce: &[u8; 32]) -> Option<Quote>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinOutcome {
    Submitted,
    Abstained(AbstainReason),
    RejectedByContract(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbstainReason {
    NoAuction,
    NoQuote,
    Attestation(RejectReason),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WithdrawOutcome {
    Refunded(u128),
    Rejected(String),
}

#[derive(Debug)]
pub struct BidderAgent {
    pub account: SigningKeyPair,
    pub bid_value: BidValue,
    pub behavior: Behavior,
    ephemeral: Option<DhKeyPair>,
    rng: ChaCha20Rng,
}

impl BidderAgent {
    pub fn new(bid_value: BidValue, behavior: Behavior, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        Self {
            account: gen_account(&mut rng),
            bid_value,
            behavior,
            ephemeral: None,
            rng,
        }
    }

    pub fn address(&self) -> crate::crypto::Address {
        self.account.address
    }

    /// Ephemeral key pair used for the most recent seal, if any.
    pub fn ephemeral(&self) -> Option<&DhKeyPair> {
        self.ephemeral.as_ref()
    }

    /// Seals the bid under a freshly generated ephemeral key pair. Each call
    /// replaces the previous pair, so no pair is ever used twice.
    pub fn seal_bid(&mut self, t_pk: &[u8; 32]) -> Result<SealedBid, CryptoError> {
        let ephemeral = dh_keygen(&mut self.rng);
        let sealed = seal_bid_with(&ephemeral, self.bid_value, t_pk, &mut self.rng)?;
        self.ephemeral = Some(ephemeral);
        Ok(sealed)
    }

    /// Attests the enclave (unless this agent skips attestation) and submits the sealed bid.
    pub fn join_auction(
        &mut self,
        chain: &mut ChainState,
        provider: &mut dyn QuoteProvider,
        registry: &IasRegistry,
        expected_measurement: &Digest32,
    ) -> JoinOutcome {
        let contract = chain.contract();
        let (Phase::Bidding, Some(t_adr), Some(t_pk)) = (contract.phase(), contract.t_adr(), contract.t_pk()) else {
            return JoinOutcome::Abstained(AbstainReason::NoAuction);
        };
        let deposit = contract.deposit();

        if self.behavior.attests() {
            let mut nonce = [0u8; 32];
            self.rng.fill_bytes(&mut nonce);
            let Some(quote) = provider.challenge(&nonce) else {
                return JoinOutcome::Abstained(AbstainReason::NoQuote);
            };
            let verdict = ias_verify(registry, &quote);
            if let QuoteCheck::Reject(reason) =
                bidder_check_quote(&quote, verdict, expected_measurement, &t_adr, &t_pk, &nonce)
            {
                return JoinOutcome::Abstained(AbstainReason::Attestation(reason));
            }
        }

        let sealed = match self.seal_bid(&t_pk) {
            Ok(sealed) => sealed,
            Err(e) => return JoinOutcome::RejectedByContract(e.to_string()),
        };
        let value = match self.behavior {
            Behavior::Overdeposit => deposit * 2,
            _ => deposit,
        };
        let call = ContractCall::SubmitBid {
            b_ct: sealed.b_ct,
            b_pk: sealed.b_pk,
        };
        let tx = RawTransaction::sign(&self.account, chain.contract_address(), &call, value);
        let receipt = chain.submit_transaction(&tx);
        if receipt.is_ok() {
            JoinOutcome::Submitted
        } else {
            JoinOutcome::RejectedByContract(receipt.revert_reason.unwrap_or_default())
        }
    }

    pub fn withdraw_deposit(&self, chain: &mut ChainState) -> WithdrawOutcome {
        withdraw(&self.account, chain)
    }
}

/// Sends `Withdraw` from `account` and reports the refund.
pub fn withdraw(account: &SigningKeyPair, chain: &mut ChainState) -> WithdrawOutcome {
    let before = chain.balance(&account.address);
    let tx = RawTransaction::sign(account, chain.contract_address(), &ContractCall::Withdraw, 0);
    let receipt = chain.submit_transaction(&tx);
    if receipt.is_ok() {
        WithdrawOutcome::Refunded(chain.balance(&account.address) - before)
    } else {
        WithdrawOutcome::Rejected(receipt.revert_reason.unwrap_or_default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enclave::open_bid;
    use proptest::prelude::*;

    #[test]
    fn zero_value_roundtrip() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let enclave = dh_keygen(&mut rng);
        let mut agent = BidderAgent::new(BidValue::ZERO, Behavior::Honest, 2);
        let bid = agent.seal_bid(&enclave.pk).unwrap();
        assert_eq!(bid.b_ct.len(), 80);
        assert_eq!(
            open_bid(enclave.secret_bytes(), &bid.b_ct, &bid.b_pk).unwrap(),
            BidValue::ZERO
        );
    }

    #[test]
    fn reseals_are_randomized_with_fresh_ephemerals() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let enclave = dh_keygen(&mut rng);
        let mut agent = BidderAgent::new(42u64.into(), Behavior::Honest, 2);
        let a = agent.seal_bid(&enclave.pk).unwrap();
        let eph_a = agent.ephemeral().unwrap().pk;
        let b = agent.seal_bid(&enclave.pk).unwrap();
        assert_ne!(a.b_ct, b.b_ct);
        assert_ne!(a.b_pk, b.b_pk);
        assert_ne!(eph_a, agent.ephemeral().unwrap().pk);
    }

    #[test]
    fn low_order_enclave_key_refused() {
        let mut agent = BidderAgent::new(1u64.into(), Behavior::Honest, 2);
        assert_eq!(agent.seal_bid(&[0; 32]), Err(CryptoError::DegenerateSharedSecret));
    }

    proptest! {
        #[test]
        fn frame_partitions_and_reserializes(bytes in proptest::collection::vec(any::<u8>(), 80)) {
            let frame = BidFrame::parse(&bytes).unwrap();
            prop_assert_eq!(&frame.ct[..], &bytes[..32]);
            prop_assert_eq!(&frame.iv[..], &bytes[32..48]);
            prop_assert_eq!(&frame.tag[..], &bytes[48..]);
            prop_assert_eq!(frame.to_bytes(), bytes);
        }

        #[test]
        fn wrong_frame_length_rejected(len in 0usize..200) {
            prop_assume!(len != 80);
            prop_assert!(BidFrame::parse(&vec![0u8; len]).is_none());
        }
    }
}
