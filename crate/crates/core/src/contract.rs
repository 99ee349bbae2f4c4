//! The auction smart contract: a phase machine holding deposits in escrow and
//! checking that the enclave's result is bound to the complete set of bids.
//!
//! Interval guards are strict comparisons against the current block `T`:
//!
//! | function     | window          |
//! |--------------|-----------------|
//! | SubmitBid    | `T < t1`        |
//! | SetWinner    | `t1 < T < t2`   |
//! | Withdraw     | `t2 < T < t3`   |
//! | Reset        | `t3 < T`        |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{keccak256, Address, Digest32};
use crate::encoding::{DecodeError, Decoder, Encoder};
use crate::hex_serde;
use crate::value::BidValue;

/// Length of a sealed bid as produced by the bidder: `ct(32) || iv(16) || tag(32)`.
pub const SEALED_BID_LEN: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Init,
    Bidding,
    Revealed,
    Rejected,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Reasons a contract call reverts. The `Display` strings are the revert reasons
/// recorded in receipts.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Revert {
    #[error("bad phase")]
    BadPhase,
    #[error("deposit")]
    Deposit,
    #[error("intervals")]
    Intervals,
    #[error("bidding closed")]
    BiddingClosed,
    #[error("already bid")]
    AlreadyBid,
    #[error("bid format")]
    BidFormat,
    #[error("unauthorized")]
    Unauthorized,
    #[error("window")]
    Window,
    #[error("bad index")]
    BadIndex,
    #[error("ineligible")]
    Ineligible,
    #[error("already withdrawn")]
    AlreadyWithdrawn,
    #[error("unknown function")]
    UnknownFunction,
    #[error("bad arguments: {0}")]
    BadArguments(#[from] DecodeError),
}

/// A decoded contract call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContractCall {
    StartAuction {
        t_adr: Address,
        t_pk: [u8; 32],
        t1: u64,
        t2: u64,
        t3: u64,
        deposit: u128,
    },
    SubmitBid {
        b_ct: Vec<u8>,
        b_pk: [u8; 32],
    },
    SetWinner {
        h: Digest32,
        index: u64,
        price: BidValue,
    },
    Withdraw,
    Reset,
}

impl ContractCall {
    pub fn function_name(&self) -> &'static str {
        match self {
            ContractCall::StartAuction { .. } => "StartAuction",
            ContractCall::SubmitBid { .. } => "SubmitBid",
            ContractCall::SetWinner { .. } => "SetWinner",
            ContractCall::Withdraw => "Withdraw",
            ContractCall::Reset => "Reset",
        }
    }

    pub fn encode_args(&self) -> Vec<u8> {
        match self {
            ContractCall::StartAuction {
                t_adr,
                t_pk,
                t1,
                t2,
                t3,
                deposit,
            } => Encoder::new()
                .field(&t_adr.0)
                .field(t_pk)
                .u64(*t1)
                .u64(*t2)
                .u64(*t3)
                .u128(*deposit)
                .finish(),
            ContractCall::SubmitBid { b_ct, b_pk } => Encoder::new().field(b_ct).field(b_pk).finish(),
            ContractCall::SetWinner { h, index, price } => {
                Encoder::new().field(&h.0).u64(*index).field(&price.0).finish()
            }
            ContractCall::Withdraw | ContractCall::Reset => Vec::new(),
        }
    }

    pub fn decode(function: &str, args: &[u8]) -> Result<Self, Revert> {
        let mut dec = Decoder::new(args);
        let call = match function {
            "StartAuction" => ContractCall::StartAuction {
                t_adr: Address(dec.array()?),
                t_pk: dec.array()?,
                t1: dec.u64()?,
                t2: dec.u64()?,
                t3: dec.u64()?,
                deposit: dec.u128()?,
            },
            "SubmitBid" => ContractCall::SubmitBid {
                b_ct: dec.field()?.to_vec(),
                b_pk: dec.array()?,
            },
            "SetWinner" => ContractCall::SetWinner {
                h: Digest32(dec.array()?),
                index: dec.u64()?,
                price: BidValue(dec.array()?),
            },
            "Withdraw" => ContractCall::Withdraw,
            "Reset" => ContractCall::Reset,
            _ => return Err(Revert::UnknownFunction),
        };
        dec.finish()?;
        Ok(call)
    }
}

/// Who called, with how much value attached, in which block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CallContext {
    pub sender: Address,
    pub value: u128,
    pub block: u64,
}

/// Funds the contract moves between the caller's balance and its own holdings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transfer {
    None,
    /// Debit the caller; the contract has already credited its escrow.
    FromSender(u128),
    /// Credit the caller; the contract has already debited its escrow.
    ToSender(u128),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredBid {
    #[serde(with = "hex_serde")]
    pub b_ct: Vec<u8>,
    #[serde(with = "hex_serde")]
    pub b_pk: [u8; 32],
}

/// Keccak-256 over `b_ct[0] || b_pk[0] || ... || b_ct[n-1] || b_pk[n-1]`.
pub fn bid_set_hash<'a, I>(bids: I) -> Digest32
where
    I: IntoIterator<Item = &'a StoredBid>,
{
    let mut preimage = Vec::new();
    for bid in bids {
        preimage.extend_from_slice(&bid.b_ct);
        preimage.extend_from_slice(&bid.b_pk);
    }
    keccak256(&preimage)
}

/// Full contract state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionContract {
    phase: Phase,
    auctioneer: Option<Address>,
    t_adr: Option<Address>,
    t_pk: Option<[u8; 32]>,
    t1: u64,
    t2: u64,
    t3: u64,
    deposit: u128,
    escrow: u128,
    forfeited: u128,
    bidders: Vec<Address>,
    bids: BTreeMap<Address, StoredBid>,
    withdrawn: BTreeSet<Address>,
    winner: Option<Address>,
    price: Option<BidValue>,
}

impl Default for AuctionContract {
    fn default() -> Self {
        Self::new()
    }
}

impl AuctionContract {
    pub fn new() -> Self {
        Self {
            phase: Phase::Init,
            auctioneer: None,
            t_adr: None,
            t_pk: None,
            t1: 0,
            t2: 0,
            t3: 0,
            deposit: 0,
            escrow: 0,
            forfeited: 0,
            bidders: Vec::new(),
            bids: BTreeMap::new(),
            withdrawn: BTreeSet::new(),
            winner: None,
            price: None,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn auctioneer(&self) -> Option<Address> {
        self.auctioneer
    }

    pub fn t_adr(&self) -> Option<Address> {
        self.t_adr
    }

    pub fn t_pk(&self) -> Option<[u8; 32]> {
        self.t_pk
    }

    pub fn intervals(&self) -> (u64, u64, u64) {
        (self.t1, self.t2, self.t3)
    }

    pub fn deposit(&self) -> u128 {
        self.deposit
    }

    /// Deposits of the current auction not yet returned.
    pub fn escrow(&self) -> u128 {
        self.escrow
    }

    /// Deposits left behind by earlier auctions; never paid out.
    pub fn forfeited(&self) -> u128 {
        self.forfeited
    }

    /// Everything the contract holds.
    pub fn holdings(&self) -> u128 {
        self.escrow + self.forfeited
    }

    pub fn bidders(&self) -> &[Address] {
        &self.bidders
    }

    pub fn bid(&self, bidder: &Address) -> Option<&StoredBid> {
        self.bids.get(bidder)
    }

    /// Stored bids in submission order.
    pub fn ordered_bids(&self) -> Vec<StoredBid> {
        self.bidders.iter().map(|b| self.bids[b].clone()).collect()
    }

    pub fn winner(&self) -> Option<Address> {
        self.winner
    }

    pub fn price(&self) -> Option<BidValue> {
        self.price
    }

    pub fn has_withdrawn(&self, who: &Address) -> bool {
        self.withdrawn.contains(who)
    }

    /// Executes one call. On `Err` the caller must discard any partial mutation;
    /// the chain does this by running calls against a copy.
    pub fn execute(&mut self, ctx: &CallContext, call: ContractCall) -> Result<Transfer, Revert> {
        match call {
            ContractCall::StartAuction {
                t_adr,
                t_pk,
                t1,
                t2,
                t3,
                deposit,
            } => self.start_auction(ctx, t_adr, t_pk, (t1, t2, t3), deposit),
            ContractCall::SubmitBid { b_ct, b_pk } => self.submit_bid(ctx, b_ct, b_pk),
            ContractCall::SetWinner { h, index, price } => self.set_winner(ctx, h, index, price),
            ContractCall::Withdraw => self.withdraw(ctx),
            ContractCall::Reset => self.reset(ctx),
        }
    }

    fn start_auction(
        &mut self,
        ctx: &CallContext,
        t_adr: Address,
        t_pk: [u8; 32],
        (t1, t2, t3): (u64, u64, u64),
        deposit: u128,
    ) -> Result<Transfer, Revert> {
        if self.phase != Phase::Init {
            return Err(Revert::BadPhase);
        }
        if ctx.value < deposit {
            return Err(Revert::Deposit);
        }
        if !(ctx.block < t1 && t1 < t2 && t2 < t3) {
            return Err(Revert::Intervals);
        }
        self.auctioneer = Some(ctx.sender);
        self.t_adr = Some(t_adr);
        self.t_pk = Some(t_pk);
        (self.t1, self.t2, self.t3) = (t1, t2, t3);
        self.deposit = deposit;
        self.escrow += deposit;
        self.phase = Phase::Bidding;
        Ok(Transfer::FromSender(deposit))
    }

    fn submit_bid(&mut self, ctx: &CallContext, b_ct: Vec<u8>, b_pk: [u8; 32]) -> Result<Transfer, Revert> {
        if self.phase != Phase::Bidding {
            return Err(Revert::BadPhase);
        }
        if ctx.block >= self.t1 {
            return Err(Revert::BiddingClosed);
        }
        if self.bids.contains_key(&ctx.sender) {
            return Err(Revert::AlreadyBid);
        }
        // fixed framing keeps the concatenated hash preimage unambiguous
        if b_ct.len() != SEALED_BID_LEN {
            return Err(Revert::BidFormat);
        }
        if ctx.value < self.deposit {
            return Err(Revert::Deposit);
        }
        self.escrow += self.deposit;
        self.bids.insert(ctx.sender, StoredBid { b_ct, b_pk });
        self.bidders.push(ctx.sender);
        Ok(Transfer::FromSender(self.deposit))
    }

    fn set_winner(&mut self, ctx: &CallContext, h: Digest32, index: u64, price: BidValue) -> Result<Transfer, Revert> {
        if self.t_adr != Some(ctx.sender) {
            return Err(Revert::Unauthorized);
        }
        if self.phase != Phase::Bidding {
            return Err(Revert::BadPhase);
        }
        if !(self.t1 < ctx.block && ctx.block < self.t2) {
            return Err(Revert::Window);
        }
        let expected = bid_set_hash(self.bidders.iter().map(|b| &self.bids[b]));
        if expected != h {
            self.phase = Phase::Rejected;
            return Ok(Transfer::None);
        }
        let winner = usize::try_from(index)
            .ok()
            .and_then(|i| self.bidders.get(i))
            .copied()
            .ok_or(Revert::BadIndex)?;
        self.phase = Phase::Revealed;
        self.winner = Some(winner);
        self.price = Some(price);
        Ok(Transfer::None)
    }

    fn withdraw(&mut self, ctx: &CallContext) -> Result<Transfer, Revert> {
        if !(self.t2 < ctx.block && ctx.block < self.t3) {
            return Err(Revert::Window);
        }
        let is_bidder = self.bids.contains_key(&ctx.sender);
        let eligible = match self.phase {
            Phase::Revealed => (Some(ctx.sender) == self.auctioneer || is_bidder) && Some(ctx.sender) != self.winner,
            Phase::Rejected => is_bidder,
            Phase::Init | Phase::Bidding => false,
        };
        if !eligible {
            return Err(Revert::Ineligible);
        }
        if !self.withdrawn.insert(ctx.sender) {
            return Err(Revert::AlreadyWithdrawn);
        }
        self.escrow = self
            .escrow
            .checked_sub(self.deposit)
            .expect("escrow covers every eligible deposit");
        Ok(Transfer::ToSender(self.deposit))
    }

    fn reset(&mut self, ctx: &CallContext) -> Result<Transfer, Revert> {
        if self.auctioneer != Some(ctx.sender) {
            return Err(Revert::Unauthorized);
        }
        if ctx.block <= self.t3 {
            return Err(Revert::Window);
        }
        self.forfeited += std::mem::take(&mut self.escrow);
        self.phase = Phase::Init;
        self.bidders.clear();
        self.bids.clear();
        self.withdrawn.clear();
        self.winner = None;
        self.price = None;
        Ok(Transfer::None)
    }

    pub fn dump(&self) -> ContractDump {
        ContractDump {
            phase: self.phase,
            auctioneer: self.auctioneer,
            t_adr: self.t_adr,
            t_pk: self.t_pk.map(hex::encode),
            t1: self.t1,
            t2: self.t2,
            t3: self.t3,
            deposit: self.deposit,
            escrow: self.escrow,
            forfeited: self.forfeited,
            bidders: self.bidders.clone(),
            bids: self.ordered_bids(),
            winner: self.winner,
            price: self.price,
        }
    }
}

/// JSON view of the contract state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractDump {
    pub phase: Phase,
    pub auctioneer: Option<Address>,
    pub t_adr: Option<Address>,
    pub t_pk: Option<String>,
    pub t1: u64,
    pub t2: u64,
    pub t3: u64,
    pub deposit: u128,
    pub escrow: u128,
    pub forfeited: u128,
    pub bidders: Vec<Address>,
    pub bids: Vec<StoredBid>,
    pub winner: Option<Address>,
    pub price: Option<BidValue>,
}
