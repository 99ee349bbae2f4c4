//! Reference decision table for the auction contract, checked over every
//! phase, role, function and block position around the interval boundaries.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use trustee::chain::{ChainState, RawTransaction};
use trustee::contract::{bid_set_hash, ContractCall, Phase};
use trustee::crypto::{gen_account, keccak256, Address, SigningKeyPair};
use trustee::BidValue;

pub const D: u128 = 100;
pub const T1: u64 = 10;
pub const T2: u64 = 20;
pub const T3: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Auctioneer,
    Enclave,
    Loser,
    Loser2,
    Winner,
    Outsider,
}

pub const ROLES: [Role; 6] = [
    Role::Auctioneer,
    Role::Enclave,
    Role::Loser,
    Role::Loser2,
    Role::Winner,
    Role::Outsider,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Start,
    Submit,
    SetWinner,
    Withdraw,
    Reset,
}

pub const FUNCS: [Func; 5] = [Func::Start, Func::Submit, Func::SetWinner, Func::Withdraw, Func::Reset];

pub struct World {
    pub chain: ChainState,
    pub keys: Vec<SigningKeyPair>,
}

impl World {
    pub fn key(&self, role: Role) -> &SigningKeyPair {
        &self.keys[ROLES.iter().position(|r| *r == role).unwrap()]
    }

    pub fn send(&mut self, role: Role, call: &ContractCall, value: u128) -> Result<(), String> {
        let tx = RawTransaction::sign(self.key(role), self.chain.contract_address(), call, value);
        let r = self.chain.submit_transaction(&tx);
        match r.revert_reason {
            None => Ok(()),
            Some(e) => Err(e),
        }
    }
}

fn bid_for(role: Role) -> ContractCall {
    ContractCall::SubmitBid {
        b_ct: vec![role as u8; 80],
        b_pk: [role as u8; 32],
    }
}

pub fn world_in(phase: Phase) -> World {
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    let keys: Vec<_> = ROLES.iter().map(|_| gen_account(&mut rng)).collect();
    let mut chain = ChainState::new(Address([0xcc; 20]));
    for k in &keys {
        chain.fund(k.address, 10 * D);
    }
    let mut w = World { chain, keys };
    if phase == Phase::Init {
        return w;
    }
    let start = ContractCall::StartAuction {
        t_adr: w.key(Role::Enclave).address,
        t_pk: [1; 32],
        t1: T1,
        t2: T2,
        t3: T3,
        deposit: D,
    };
    w.send(Role::Auctioneer, &start, D).unwrap();
    w.send(Role::Loser, &bid_for(Role::Loser), D).unwrap();
    w.send(Role::Loser2, &bid_for(Role::Loser2), D).unwrap();
    w.send(Role::Winner, &bid_for(Role::Winner), D).unwrap();
    if phase == Phase::Bidding {
        return w;
    }
    w.chain.advance_to(T1);
    let h = match phase {
        Phase::Revealed => bid_set_hash(w.chain.contract().ordered_bids().iter()),
        _ => keccak256(b"not the bid set"),
    };
    let set = ContractCall::SetWinner {
        h,
        index: 2,
        price: BidValue::from(5u64),
    };
    w.send(Role::Enclave, &set, 0).unwrap();
    assert_eq!(w.chain.contract().phase(), phase);
    w
}

pub fn call_for(func: Func, role: Role, block: u64, w: &World) -> (ContractCall, u128) {
    match func {
        Func::Start => (
            ContractCall::StartAuction {
                t_adr: w.key(Role::Enclave).address,
                t_pk: [2; 32],
                t1: block + 10,
                t2: block + 20,
                t3: block + 30,
                deposit: D,
            },
            D,
        ),
        Func::Submit => (bid_for(role), D),
        Func::SetWinner => (
            ContractCall::SetWinner {
                h: bid_set_hash(w.chain.contract().ordered_bids().iter()),
                index: 0,
                price: BidValue::ZERO,
            },
            0,
        ),
        Func::Withdraw => (ContractCall::Withdraw, 0),
        Func::Reset => (ContractCall::Reset, 0),
    }
}

/// The decision table, written from the protocol rules rather than the contract code.
pub fn expected(phase: Phase, func: Func, role: Role, t: u64) -> Result<(), &'static str> {
    let started = phase != Phase::Init;
    let has_bid = started && matches!(role, Role::Loser | Role::Loser2 | Role::Winner);
    match func {
        Func::Start => match phase {
            Phase::Init => Ok(()),
            _ => Err("bad phase"),
        },
        Func::Submit => {
            if phase != Phase::Bidding {
                Err("bad phase")
            } else if t >= T1 {
                Err("bidding closed")
            } else if has_bid {
                Err("already bid")
            } else {
                Ok(())
            }
        }
        Func::SetWinner => {
            if !(started && role == Role::Enclave) {
                Err("unauthorized")
            } else if phase != Phase::Bidding {
                Err("bad phase")
            } else if !(T1 < t && t < T2) {
                Err("window")
            } else {
                Ok(())
            }
        }
        Func::Withdraw => {
            if !(started && T2 < t && t < T3) {
                return Err("window");
            }
            let eligible = match phase {
                Phase::Revealed => matches!(role, Role::Auctioneer | Role::Loser | Role::Loser2),
                Phase::Rejected => has_bid,
                _ => false,
            };
            if eligible {
                Ok(())
            } else {
                Err("ineligible")
            }
        }
        Func::Reset => {
            if !(started && role == Role::Auctioneer) {
                Err("unauthorized")
            } else if t <= T3 {
                Err("window")
            } else {
                Ok(())
            }
        }
    }
}

/// Runs every case; panics with the first disagreement. Returns the number of cases.
pub fn run_decision_table() -> usize {
    let blocks = [2, 5, 9, 10, 11, 12, 15, 19, 20, 21, 25, 29, 30, 31, 45];
    let mut checked = 0;
    for phase in [Phase::Init, Phase::Bidding, Phase::Revealed, Phase::Rejected] {
        let base = world_in(phase);
        for &t in &blocks {
            if t <= base.chain.block_number() {
                continue;
            }
            for func in FUNCS {
                for role in ROLES {
                    let mut w = World {
                        chain: base.chain.clone(),
                        keys: base.keys.clone(),
                    };
                    w.chain.advance_to(t - 1);
                    let supply = w.chain.total_supply();
                    let escrow = w.chain.contract().escrow();
                    let before = w.chain.clone();
                    let (call, value) = call_for(func, role, t, &w);
                    let got = w.send(role, &call, value);
                    let want = expected(phase, func, role, t).map_err(String::from);
                    assert_eq!(got, want, "{phase:?} {func:?} {role:?} at T={t}");
                    assert_eq!(w.chain.total_supply(), supply, "conservation");
                    match (&got, func) {
                        (Err(_), _) => {
                            assert_eq!(w.chain.contract(), before.contract());
                            assert_eq!(w.chain.balances(), before.balances());
                        }
                        (Ok(()), Func::Start | Func::Submit) => assert_eq!(w.chain.contract().escrow(), escrow + D),
                        (Ok(()), Func::Withdraw) => {
                            assert_eq!(w.chain.contract().escrow(), escrow - D);
                            assert_eq!(
                                w.chain.balance(&w.key(role).address),
                                before.balance(&w.key(role).address) + D
                            );
                            if t + 1 < T3 {
                                assert_eq!(
                                    w.send(role, &ContractCall::Withdraw, 0),
                                    Err("already withdrawn".into())
                                );
                            }
                        }
                        (Ok(()), Func::Reset) => {
                            assert_eq!(w.chain.contract().phase(), Phase::Init);
                            assert_eq!(w.chain.contract().escrow(), 0);
                            assert_eq!(w.chain.contract().forfeited(), escrow);
                        }
                        (Ok(()), Func::SetWinner) => assert_eq!(w.chain.contract().phase(), Phase::Revealed),
                    }
                    checked += 1;
                }
            }
        }
    }
    checked
}
