//! The contract against the reference decision table, plus randomized
//! hash-binding and conservation properties.

mod common;

use common::conformance::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use trustee::chain::{ChainState, RawTransaction};
use trustee::contract::{bid_set_hash, ContractCall, Phase, StoredBid};
use trustee::crypto::{gen_account, Address};
use trustee::BidValue;

#[test]
fn exhaustive_decision_table() {
    let checked = run_decision_table();
    assert!(checked > 1000, "{checked} cases");
}

#[test]
fn full_lifecycle_escrow_balances() {
    let mut w = world_in(Phase::Revealed);
    let supply = w.chain.total_supply();
    w.chain.advance_to(T2);
    for role in ROLES {
        let _ = w.send(role, &ContractCall::Withdraw, 0);
    }
    // only the winner's deposit remains
    assert_eq!(w.chain.contract().escrow(), D);
    w.chain.advance_to(T3);
    w.send(Role::Auctioneer, &ContractCall::Reset, 0).unwrap();
    assert_eq!(w.chain.contract().forfeited(), D);
    assert_eq!(w.chain.total_supply(), supply);
    assert_eq!(w.chain.balance(&w.key(Role::Winner).address), 9 * D);
}

fn bids_strategy() -> impl Strategy<Value = Vec<(Vec<u8>, [u8; 32])>> {
    prop::collection::vec((prop::collection::vec(any::<u8>(), 80), any::<[u8; 32]>()), 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Any hash other than the one over the exact on-chain bid sequence rejects.
    #[test]
    fn hash_binding(bids in bids_strategy(), tamper in 0usize..3, pick in any::<prop::sample::Index>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let auctioneer = gen_account(&mut rng);
        let enclave = gen_account(&mut rng);
        let mut chain = ChainState::new(Address([0xcc; 20]));
        let to = chain.contract_address();
        chain.fund(auctioneer.address, D);
        let start = ContractCall::StartAuction { t_adr: enclave.address, t_pk: [1; 32], t1: 20, t2: 30, t3: 40, deposit: D };
        prop_assert!(chain.submit_transaction(&RawTransaction::sign(&auctioneer, to, &start, D)).is_ok());
        for (ct, pk) in &bids {
            let b = gen_account(&mut rng);
            chain.fund(b.address, D);
            let call = ContractCall::SubmitBid { b_ct: ct.clone(), b_pk: *pk };
            prop_assert!(chain.submit_transaction(&RawTransaction::sign(&b, to, &call, D)).is_ok());
        }
        let on_chain: Vec<StoredBid> = chain.contract().ordered_bids();
        let mut shown = on_chain.clone();
        let i = pick.index(shown.len());
        match tamper {
            0 => { shown.remove(i); }
            1 => shown[i].b_ct[0] ^= 1,
            _ => shown.push(shown[i].clone()),
        }
        chain.advance_to(20);
        let mut honest = chain.clone();
        let set = |h| ContractCall::SetWinner { h, index: 0, price: BidValue::ZERO };
        chain.submit_transaction(&RawTransaction::sign(&enclave, to, &set(bid_set_hash(shown.iter())), 0));
        prop_assert_eq!(chain.contract().phase(), Phase::Rejected);
        honest.submit_transaction(&RawTransaction::sign(&enclave, to, &set(bid_set_hash(on_chain.iter())), 0));
        prop_assert_eq!(honest.contract().phase(), Phase::Revealed);
    }

    /// Random transaction sequences never create or destroy funds.
    #[test]
    fn random_sequences_conserve_supply(ops in prop::collection::vec((0usize..5, 0usize..5, 0u64..4), 1..40)) {
        let mut w = world_in(Phase::Init);
        let supply = w.chain.total_supply();
        let mut forfeited = 0;
        for (role, func, skip) in ops {
            if skip > 0 {
                w.chain.advance_blocks(skip * 3).unwrap();
            }
            let t = w.chain.block_number() + 1;
            let (call, value) = call_for(FUNCS[func], ROLES[role], t, &w);
            let _ = w.send(ROLES[role], &call, value);
            prop_assert_eq!(w.chain.total_supply(), supply);
            prop_assert!(w.chain.contract().forfeited() >= forfeited);
            forfeited = w.chain.contract().forfeited();
        }
    }
}
