//! The untrusted relay: drives an auction end to end and, depending on its
//! strategy, tries one of the known attacks on the protocol.
//!
//! * `Honest`: forwards everything faithfully.
//! * `Masquerade`: posts keys that did not come from the genuine enclave and
//!   tries to get them past bidder attestation.
//! * `Eclipse`: hands the enclave only a subset of the on-chain bids.
//! * `Replay`: launches several enclave instances on the same platform and
//!   replays one sealed state to all of them.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attestation::{measurement_of, report_user_data, IasRegistry, Quote, TRUSTEE_ENCLAVE_IDENTITY};
use crate::bidder::{withdraw, Behavior, BidderAgent, JoinOutcome, QuoteProvider, WithdrawOutcome};
use crate::chain::{ChainState, RawTransaction, Receipt};
use crate::contract::{ContractCall, Phase, StoredBid};
use crate::crypto::{dh_keygen, gen_account, Address, DhKeyPair, Digest32, SigningKeyPair};
use crate::enclave::{
    input_binding_hash, open_bid, EnclaveError, PlatformSim, SealedState, TrusteeEnclave, WinnerTransaction,
};
use crate::value::BidValue;

pub const REPORT_SCHEMA: &str = "trustee-sim/1";

/// Code identity of the modified enclave a masquerading relay may load.
pub const PATCHED_ENCLAVE_IDENTITY: &str = "trustee-enclave/1.0.0+keydump";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MasqueradeTactic {
    /// Signs a quote over its own keys with an unregistered device key.
    ForgedQuote,
    /// Answers challenges with quotes from the genuine enclave, whose keys differ from the posted ones.
    ForwardGenuineQuote,
    /// Runs modified enclave code on a genuine platform and posts the keys it leaks.
    PatchedEnclave,
}

impl MasqueradeTactic {
    pub const ALL: [MasqueradeTactic; 3] = [
        MasqueradeTactic::ForgedQuote,
        MasqueradeTactic::ForwardGenuineQuote,
        MasqueradeTactic::PatchedEnclave,
    ];
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RelayStrategy {
    #[default]
    Honest,
    Masquerade {
        tactic: MasqueradeTactic,
    },
    /// Drops the bids at these positions (in contract order) before the reveal.
    Eclipse {
        drop: Vec<usize>,
    },
    /// Replays the sealed state into this many enclave instances.
    Replay {
        instances: usize,
    },
}

impl fmt::Display for RelayStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelayStrategy::Honest => f.write_str("honest"),
            RelayStrategy::Masquerade { tactic } => write!(f, "masquerade({tactic:?})"),
            RelayStrategy::Eclipse { drop } => write!(f, "eclipse(drop={drop:?})"),
            RelayStrategy::Replay { instances } => write!(f, "replay(instances={instances})"),
        }
    }
}

#[derive(Debug, Error)]
pub enum RelayError {
    #[error("enclave: {0}")]
    Enclave(#[from] EnclaveError),
    #[error("sealed state storage: {0}")]
    Storage(#[from] std::io::Error),
    #[error("chain is not in the Init phase")]
    NotInit,
    #[error("replay needs at least one enclave instance")]
    NoInstances,
}

/// Interval lengths, in blocks, measured from the block that starts the auction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intervals {
    pub t1: u64,
    pub t2: u64,
    pub t3: u64,
}

impl Intervals {
    /// Windows wide enough for every participant to get one transaction in.
    pub fn fitting(bidders: usize) -> Self {
        let n = bidders as u64;
        let t1 = n + 2;
        let t2 = t1 + 4;
        Self { t1, t2, t3: t2 + n + 4 }
    }

    pub fn is_increasing(&self) -> bool {
        1 <= self.t1 && self.t1 < self.t2 && self.t2 < self.t3
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BidderSpec {
    pub bid_value: BidValue,
    #[serde(default)]
    pub behavior: Behavior,
}

/// Everything needed to build and run one auction.
#[derive(Debug, Clone)]
pub struct AuctionParams {
    pub seed: u64,
    pub bidders: Vec<BidderSpec>,
    pub intervals: Intervals,
    pub deposit: u128,
    pub initial_balance: u128,
    pub t_adr_funding: u128,
    pub strategy: RelayStrategy,
    /// Where the relay persists the sealed state; kept in memory if unset.
    pub state_dir: Option<PathBuf>,
}

impl AuctionParams {
    pub fn new(seed: u64, bids: &[u64], deposit: u128, strategy: RelayStrategy) -> Self {
        Self {
            seed,
            bidders: bids
                .iter()
                .map(|&v| BidderSpec {
                    bid_value: v.into(),
                    behavior: Behavior::Honest,
                })
                .collect(),
            intervals: Intervals::fitting(bids.len()),
            deposit,
            initial_balance: deposit * 10,
            t_adr_funding: 1_000_000,
            strategy,
            state_dir: None,
        }
    }
}

/// The chain, the enclave host, the attestation service and every participant.
#[derive(Debug)]
pub struct Deployment {
    pub chain: ChainState,
    pub platform: Arc<PlatformSim>,
    pub registry: IasRegistry,
    pub expected_measurement: Digest32,
    pub auctioneer: SigningKeyPair,
    pub bidders: Vec<BidderAgent>,
}

impl Deployment {
    /// Builds a deployment deterministically from `params.seed` and funds every participant.
    pub fn new(params: &AuctionParams) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
        let mut contract_address = Address::default();
        rng.fill_bytes(&mut contract_address.0);
        let mut chain = ChainState::new(contract_address);
        let platform = Arc::new(PlatformSim::new(&mut rng));
        let mut registry = IasRegistry::new();
        registry
            .register(platform.platform_id(), platform.device_public_key())
            .expect("fresh registry");
        let auctioneer = gen_account(&mut rng);
        chain.fund(auctioneer.address, params.initial_balance);
        let bidders: Vec<BidderAgent> = params
            .bidders
            .iter()
            .map(|spec| {
                let agent = BidderAgent::new(spec.bid_value, spec.behavior, rng.next_u64());
                chain.fund(agent.address(), params.initial_balance);
                agent
            })
            .collect();
        Self {
            chain,
            platform,
            registry,
            expected_measurement: measurement_of(TRUSTEE_ENCLAVE_IDENTITY),
            auctioneer,
            bidders,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BidderRecord {
    pub address: Address,
    pub bid_value: BidValue,
    pub behavior: Behavior,
    pub join: JoinOutcome,
    pub withdraw: Option<WithdrawOutcome>,
}

/// Outcome of one scripted auction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub schema: String,
    pub scenario: String,
    pub seed: u64,
    pub strategy: RelayStrategy,
    pub final_phase: Phase,
    pub winner_address: Option<Address>,
    /// Position of the winner in the configured bidder list.
    pub winner_index: Option<usize>,
    pub price: Option<BidValue>,
    pub auctioneer: Address,
    pub t_adr: Option<Address>,
    pub auctioneer_withdraw: WithdrawOutcome,
    /// Balance change per address over the run, including the funded `t_adr`.
    pub balances: BTreeMap<Address, i128>,
    pub escrow: u128,
    pub bidders: Vec<BidderRecord>,
    /// How many reveal attempts produced a signed result.
    pub non_empty_reveals: usize,
    pub events: Vec<String>,
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable") + "\n"
    }
}

enum SealedStore {
    Memory(Option<SealedState>),
    File(PathBuf),
}

impl SealedStore {
    fn save(&mut self, sealed: &SealedState) -> std::io::Result<()> {
        match self {
            SealedStore::Memory(slot) => {
                *slot = Some(sealed.clone());
                Ok(())
            }
            SealedStore::File(path) => sealed.save(path),
        }
    }

    fn load(&self) -> std::io::Result<SealedState> {
        match self {
            SealedStore::Memory(Some(s)) => Ok(s.clone()),
            SealedStore::Memory(None) => Err(std::io::Error::new(std::io::ErrorKind::NotFound, "no sealed state")),
            SealedStore::File(path) => SealedState::load(path),
        }
    }
}

/// Keys a masquerading relay posts instead of the genuine enclave's.
struct FakeIdentity {
    tactic: MasqueradeTactic,
    account: SigningKeyPair,
    dh: DhKeyPair,
    rogue_device: SigningKeyPair,
    rogue_platform_id: [u8; 16],
    patched: Option<(TrusteeEnclave, SealedState)>,
}

pub struct Relay {
    strategy: RelayStrategy,
    enclave: TrusteeEnclave,
    store: SealedStore,
    /// Bids read from the contract, in contract order.
    cached_bids: Vec<StoredBid>,
    fake: Option<FakeIdentity>,
    rng: ChaCha20Rng,
    events: Vec<String>,
}

impl fmt::Debug for Relay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Relay")
            .field("strategy", &self.strategy)
            .field("cached_bids", &self.cached_bids.len())
            .finish_non_exhaustive()
    }
}

impl QuoteProvider for Relay {
    fn challenge(&mut self, nonce: &[u8; 32]) -> Option<Quote> {
        let Some(fake) = &self.fake else {
            let sealed = self.store.load().ok()?;
            return self.enclave.get_quote(&sealed, nonce).ok();
        };
        match fake.tactic {
            MasqueradeTactic::ForgedQuote => {
                let measurement = measurement_of(TRUSTEE_ENCLAVE_IDENTITY);
                let user_data = report_user_data(&fake.account.address, &fake.dh.pk, nonce);
                let signature =
                    fake.rogue_device
                        .sign(&Quote::body_digest(&measurement, &user_data, &fake.rogue_platform_id));
                Some(Quote {
                    measurement,
                    user_data,
                    platform_id: fake.rogue_platform_id,
                    signature,
                })
            }
            MasqueradeTactic::ForwardGenuineQuote => {
                let sealed = self.store.load().ok()?;
                self.enclave.get_quote(&sealed, nonce).ok()
            }
            MasqueradeTactic::PatchedEnclave => {
                let (patched, sealed) = fake.patched.as_ref()?;
                patched.get_quote(sealed, nonce).ok()
            }
        }
    }
}

impl Relay {
    /// Loads the genuine enclave on `platform`. `seed` drives the relay's own choices.
    pub fn new(strategy: RelayStrategy, platform: Arc<PlatformSim>, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let enclave = TrusteeEnclave::launch(platform, TRUSTEE_ENCLAVE_IDENTITY, rng.next_u64());
        Self {
            strategy,
            enclave,
            store: SealedStore::Memory(None),
            cached_bids: Vec::new(),
            fake: None,
            rng,
            events: Vec::new(),
        }
    }

    /// Persists the sealed state as a file in `dir` instead of in memory.
    pub fn with_state_dir(mut self, dir: PathBuf) -> Self {
        self.store = SealedStore::File(dir.join("sealed_state.bin"));
        self
    }

    pub fn strategy(&self) -> &RelayStrategy {
        &self.strategy
    }

    pub fn cached_bids(&self) -> &[StoredBid] {
        &self.cached_bids
    }

    pub fn events(&self) -> &[String] {
        &self.events
    }

    fn log(&mut self, event: impl Into<String>) {
        self.events.push(event.into());
    }

    /// Runs enclave initialization, or the masquerade substitute, and returns the keys to post.
    fn prepare_keys(&mut self) -> Result<(Address, [u8; 32]), RelayError> {
        let init = self.enclave.initialize()?;
        self.store.save(&init.sealed)?;
        let RelayStrategy::Masquerade { tactic } = self.strategy else {
            self.log(format!("enclave initialized: t_adr={}", init.t_adr));
            return Ok((init.t_adr, init.t_pk));
        };
        let mut rogue_platform_id = [0u8; 16];
        self.rng.fill_bytes(&mut rogue_platform_id);
        let mut fake = FakeIdentity {
            tactic,
            account: gen_account(&mut self.rng),
            dh: dh_keygen(&mut self.rng),
            rogue_device: gen_account(&mut self.rng),
            rogue_platform_id,
            patched: None,
        };
        if tactic == MasqueradeTactic::PatchedEnclave {
            let mut patched = TrusteeEnclave::launch(
                self.enclave.platform().clone(),
                PATCHED_ENCLAVE_IDENTITY,
                self.rng.next_u64(),
            );
            let leaked = patched.initialize()?;
            // the patched code hands its secrets to the host
            let secrets = patched.unseal(&leaked.sealed)?;
            fake.account =
                SigningKeyPair::from_secret_bytes(&secrets.t_sk).map_err(|_| EnclaveError::BadSealedState)?;
            fake.dh = DhKeyPair::from_scalar(secrets.t_dh);
            fake.patched = Some((patched, leaked.sealed));
        }
        let keys = (fake.account.address, fake.dh.pk);
        self.log(format!(
            "masquerade({tactic:?}): posting relay-controlled t_adr={}",
            keys.0
        ));
        self.fake = Some(fake);
        Ok(keys)
    }

    /// Starts the auction on chain with relay-prepared keys. Returns `(t_adr, receipt)`.
    pub fn masquerade_start(
        &mut self,
        chain: &mut ChainState,
        auctioneer: &SigningKeyPair,
        intervals: Intervals,
        deposit: u128,
    ) -> Result<(Address, Receipt), RelayError> {
        let (t_adr, t_pk) = self.prepare_keys()?;
        let receipt = self.start_auction(chain, auctioneer, t_adr, t_pk, intervals, deposit);
        Ok((t_adr, receipt))
    }

    fn start_auction(
        &mut self,
        chain: &mut ChainState,
        auctioneer: &SigningKeyPair,
        t_adr: Address,
        t_pk: [u8; 32],
        intervals: Intervals,
        deposit: u128,
    ) -> Receipt {
        let start = chain.block_number() + 1;
        let call = ContractCall::StartAuction {
            t_adr,
            t_pk,
            t1: start + intervals.t1,
            t2: start + intervals.t2,
            t3: start + intervals.t3,
            deposit,
        };
        let tx = RawTransaction::sign(auctioneer, chain.contract_address(), &call, deposit);
        let receipt = chain.submit_transaction(&tx);
        match &receipt.revert_reason {
            None => self.log(format!("StartAuction mined in block {}", receipt.block_number)),
            Some(reason) => self.log(format!("StartAuction reverted: {reason}")),
        }
        receipt
    }

    /// Produces the winner transaction according to the strategy.
    fn reveal(&mut self, contract: Address) -> Result<Vec<WinnerTransaction>, RelayError> {
        let all_ct: Vec<Vec<u8>> = self.cached_bids.iter().map(|b| b.b_ct.clone()).collect();
        let all_pk: Vec<[u8; 32]> = self.cached_bids.iter().map(|b| b.b_pk).collect();
        match self.strategy.clone() {
            RelayStrategy::Honest => {
                let sealed = self.store.load()?;
                let (tw, next) = self.enclave.reveal_winner(contract, &all_ct, &all_pk, &sealed)?;
                self.store.save(&next)?;
                Ok(vec![tw])
            }
            RelayStrategy::Eclipse { drop } => {
                let (ct, pk): (Vec<_>, Vec<_>) = all_ct
                    .into_iter()
                    .zip(all_pk)
                    .enumerate()
                    .filter(|(i, _)| !drop.contains(i))
                    .map(|(_, pair)| pair)
                    .unzip();
                self.log(format!(
                    "eclipse: forwarding {} of {} bids to the enclave",
                    ct.len(),
                    self.cached_bids.len()
                ));
                if ct.is_empty() {
                    self.log("eclipse: nothing left to reveal");
                    return Ok(Vec::new());
                }
                let sealed = self.store.load()?;
                let (tw, next) = self.enclave.reveal_winner(contract, &ct, &pk, &sealed)?;
                self.store.save(&next)?;
                Ok(vec![tw])
            }
            RelayStrategy::Replay { instances } => self.replay(contract, instances, all_ct, all_pk),
            RelayStrategy::Masquerade { .. } => {
                let fake = self.fake.as_ref().expect("keys prepared before reveal");
                let values: Vec<BidValue> = all_ct
                    .iter()
                    .zip(&all_pk)
                    .map(|(ct, pk)| open_bid(fake.dh.secret_bytes(), ct, pk).unwrap_or(BidValue::ZERO))
                    .collect();
                let account = fake.account.clone();
                for (bid, value) in self.cached_bids.clone().iter().zip(&values) {
                    self.log(format!(
                        "privacy loss: relay decrypted bid with b_pk={} = {value}",
                        hex::encode(bid.b_pk)
                    ));
                }
                let (index, price) = crate::enclave::select_winner(&values).expect("non-empty");
                let h = input_binding_hash(&all_ct, &all_pk);
                let index = index as u64;
                let tx = RawTransaction::sign(&account, contract, &ContractCall::SetWinner { h, index, price }, 0);
                Ok(vec![WinnerTransaction::Signed(crate::enclave::SignedWinner {
                    h,
                    index,
                    price,
                    tx,
                })])
            }
        }
    }

    /// Instance 0 gets the full list, every other instance a random strict subset;
    /// calls are made in a random order.
    fn replay(
        &mut self,
        contract: Address,
        instances: usize,
        all_ct: Vec<Vec<u8>>,
        all_pk: Vec<[u8; 32]>,
    ) -> Result<Vec<WinnerTransaction>, RelayError> {
        if instances == 0 {
            return Err(RelayError::NoInstances);
        }
        let sealed = self.store.load()?;
        let n = all_ct.len();
        let mut jobs: Vec<(usize, Vec<usize>)> = (0..instances)
            .map(|j| {
                let mut keep: Vec<usize> = (0..n).collect();
                if j > 0 && n > 1 {
                    let dropped = self.rng.gen_range(0..n);
                    keep.retain(|&i| i != dropped);
                }
                (j, keep)
            })
            .collect();
        jobs.shuffle(&mut self.rng);

        let platform = self.enclave.platform().clone();
        let mut results = Vec::new();
        let mut next_state = None;
        for (j, keep) in jobs {
            let ct: Vec<Vec<u8>> = keep.iter().map(|&i| all_ct[i].clone()).collect();
            let pk: Vec<[u8; 32]> = keep.iter().map(|&i| all_pk[i]).collect();
            let mut instance = TrusteeEnclave::launch(platform.clone(), TRUSTEE_ENCLAVE_IDENTITY, self.rng.next_u64());
            let (tw, next) = instance.reveal_winner(contract, &ct, &pk, &sealed)?;
            self.log(format!(
                "replay: instance {j} given {}/{n} bids -> {}",
                ct.len(),
                if tw.is_empty() { "empty T_win" } else { "signed T_win" }
            ));
            if !tw.is_empty() {
                next_state = Some(next);
            }
            results.push(tw);
        }
        if let Some(next) = next_state {
            self.store.save(&next)?;
        }
        Ok(results)
    }

    /// Runs the whole auction lifecycle and reports what happened.
    pub fn run_auction(
        &mut self,
        name: &str,
        deployment: &mut Deployment,
        params: &AuctionParams,
    ) -> Result<ScenarioReport, RelayError> {
        let chain = &mut deployment.chain;
        if chain.contract().phase() != Phase::Init {
            return Err(RelayError::NotInit);
        }
        let before: BTreeMap<Address, u128> = chain.balances().clone();
        let holdings_before = chain.contract().holdings();

        let (t_adr, t_pk) = self.prepare_keys()?;
        let start = self.start_auction(
            chain,
            &deployment.auctioneer,
            t_adr,
            t_pk,
            params.intervals,
            params.deposit,
        );

        let mut non_empty = 0;
        let mut joins: Vec<Option<JoinOutcome>> = vec![None; deployment.bidders.len()];
        if start.is_ok() {
            let (t1, t2, _) = chain.contract().intervals();
            for (i, agent) in deployment.bidders.iter_mut().enumerate() {
                if agent.behavior == Behavior::Late {
                    continue;
                }
                joins[i] =
                    Some(agent.join_auction(chain, self, &deployment.registry, &deployment.expected_measurement));
            }
            chain.advance_to(t1);
            for (i, agent) in deployment.bidders.iter_mut().enumerate() {
                if agent.behavior == Behavior::Late {
                    joins[i] =
                        Some(agent.join_auction(chain, self, &deployment.registry, &deployment.expected_measurement));
                }
            }
            for (agent, join) in deployment.bidders.iter().zip(&joins) {
                match join {
                    Some(JoinOutcome::Submitted) => {}
                    Some(other) => self.log(format!("bidder {} did not bid: {other:?}", agent.address())),
                    None => {}
                }
            }
            chain.advance_to(t1);

            self.cached_bids = chain.contract().ordered_bids();
            let wins = if self.cached_bids.is_empty() {
                self.log("no bids on chain; nothing to reveal");
                Vec::new()
            } else {
                self.reveal(chain.contract_address())?
            };
            let signed: Vec<_> = wins.iter().filter_map(|w| w.signed()).cloned().collect();
            if signed.len() > 1 {
                self.log(format!("{} signed winner transactions produced", signed.len()));
            }
            if let Some(win) = signed.first() {
                chain.fund(t_adr, params.t_adr_funding);
                let receipt = chain.submit_transaction(&win.tx);
                match receipt.revert_reason {
                    None => self.log(format!(
                        "SetWinner accepted; contract phase {}",
                        chain.contract().phase()
                    )),
                    Some(reason) => self.log(format!("SetWinner reverted: {reason}")),
                }
                if chain.contract().phase() == Phase::Rejected {
                    self.log("detected: bid-set hash mismatch, auction rejected");
                }
            }
            non_empty = signed.len();

            chain.advance_to(t2);
        }

        let auctioneer_withdraw = withdraw(&deployment.auctioneer, chain);
        if let WithdrawOutcome::Rejected(reason) = &auctioneer_withdraw {
            self.log(format!("auctioneer withdraw rejected: {reason}"));
        }
        let mut records = Vec::with_capacity(deployment.bidders.len());
        for (agent, join) in deployment.bidders.iter().zip(joins) {
            let join = join.unwrap_or(JoinOutcome::Abstained(crate::bidder::AbstainReason::NoAuction));
            let withdraw = (join == JoinOutcome::Submitted).then(|| agent.withdraw_deposit(chain));
            records.push(BidderRecord {
                address: agent.address(),
                bid_value: agent.bid_value,
                behavior: agent.behavior,
                join,
                withdraw,
            });
        }

        let contract = chain.contract();
        let winner_address = contract.winner();
        let winner_index = winner_address.and_then(|w| records.iter().position(|r| r.address == w));
        let mut balances = BTreeMap::new();
        for (addr, after) in chain.balances() {
            let delta = *after as i128 - before.get(addr).copied().unwrap_or(0) as i128;
            balances.insert(*addr, delta);
        }
        debug_assert_eq!(
            balances.values().sum::<i128>() + (contract.holdings() as i128 - holdings_before as i128),
            if non_empty > 0 { params.t_adr_funding as i128 } else { 0 }
        );
        Ok(ScenarioReport {
            schema: REPORT_SCHEMA.to_string(),
            scenario: name.to_string(),
            seed: params.seed,
            strategy: self.strategy.clone(),
            final_phase: contract.phase(),
            winner_address,
            winner_index,
            price: contract.price(),
            auctioneer: deployment.auctioneer.address,
            t_adr: start.is_ok().then_some(t_adr),
            auctioneer_withdraw,
            balances,
            escrow: contract.escrow(),
            bidders: records,
            non_empty_reveals: non_empty,
            events: self.events.clone(),
        })
    }
}
