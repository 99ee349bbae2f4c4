//! Driving the auction contract by hand through signed transactions.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use trustee::chain::{ChainState, RawTransaction};
use trustee::contract::{bid_set_hash, ContractCall, Phase};
use trustee::crypto::{gen_account, Address};
use trustee::BidValue;

pub fn run_example() -> ChainState {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut chain = ChainState::new(Address([0xc0; 20]));
    let to = chain.contract_address();
    let auctioneer = gen_account(&mut rng);
    let enclave = gen_account(&mut rng);
    let bidders: Vec<_> = (0..2).map(|_| gen_account(&mut rng)).collect();
    for who in std::iter::once(&auctioneer).chain(&bidders) {
        chain.fund(who.address, 1_000);
    }
    let send = |chain: &mut ChainState, key, call: ContractCall, value| {
        let receipt = chain.submit_transaction(&RawTransaction::sign(key, to, &call, value));
        println!(
            "block {:>2}  {:<12} {}",
            receipt.block_number,
            call.function_name(),
            receipt.revert_reason.as_deref().unwrap_or("ok")
        );
    };

    let start = ContractCall::StartAuction {
        t_adr: enclave.address,
        t_pk: [9; 32],
        t1: 5,
        t2: 10,
        t3: 15,
        deposit: 100,
    };
    send(&mut chain, &auctioneer, start, 100);
    for (i, b) in bidders.iter().enumerate() {
        let bid = ContractCall::SubmitBid {
            b_ct: vec![i as u8; 80],
            b_pk: [i as u8; 32],
        };
        send(&mut chain, b, bid, 100);
    }
    // a short ciphertext never makes it on chain
    let bad = ContractCall::SubmitBid {
        b_ct: vec![0; 79],
        b_pk: [7; 32],
    };
    send(&mut chain, &auctioneer, bad, 100);

    chain.advance_to(5);
    let h = bid_set_hash(chain.contract().ordered_bids().iter());
    let set = ContractCall::SetWinner {
        h,
        index: 1,
        price: BidValue::from(40u64),
    };
    send(&mut chain, &auctioneer, set.clone(), 0);
    send(&mut chain, &enclave, set, 0);
    assert_eq!(chain.contract().phase(), Phase::Revealed);

    chain.advance_to(10);
    send(&mut chain, &auctioneer, ContractCall::Withdraw, 0);
    send(&mut chain, &bidders[0], ContractCall::Withdraw, 0);
    send(&mut chain, &bidders[1], ContractCall::Withdraw, 0);
    chain.advance_to(15);
    send(&mut chain, &auctioneer, ContractCall::Reset, 0);
    println!(
        "escrow {}, forfeited {}",
        chain.contract().escrow(),
        chain.contract().forfeited()
    );
    chain
}

#[allow(dead_code)]
fn main() {
    run_example();
}
