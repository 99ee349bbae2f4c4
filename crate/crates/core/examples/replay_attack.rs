//! Two enclave instances on one platform are handed the same sealed state.
//! The platform's monotonic counter lets only the first reveal through.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use trustee::attestation::TRUSTEE_ENCLAVE_IDENTITY;
use trustee::bidder::BidderAgent;
use trustee::crypto::Address;
use trustee::enclave::{PlatformSim, TrusteeEnclave, WinnerTransaction};

pub fn run_example() -> (WinnerTransaction, WinnerTransaction) {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let platform = Arc::new(PlatformSim::new(&mut rng));
    let mut first = TrusteeEnclave::launch(platform.clone(), TRUSTEE_ENCLAVE_IDENTITY, 1);
    let init = first.initialize().expect("initialize");

    let mut b_ct = Vec::new();
    let mut b_pk = Vec::new();
    for (i, v) in [4u64, 9, 6].into_iter().enumerate() {
        let bid = BidderAgent::new(v.into(), Default::default(), 100 + i as u64)
            .seal_bid(&init.t_pk)
            .expect("seal");
        b_ct.push(bid.b_ct);
        b_pk.push(bid.b_pk);
    }

    // a second instance gets a subset, in the hope of a different winner
    let mut second = TrusteeEnclave::launch(platform.clone(), TRUSTEE_ENCLAVE_IDENTITY, 2);
    let contract = Address([0xc0; 20]);
    let (a, _) = first
        .reveal_winner(contract, &b_ct, &b_pk, &init.sealed)
        .expect("reveal");
    let (b, _) = second
        .reveal_winner(contract, &b_ct[..2], &b_pk[..2], &init.sealed)
        .expect("reveal");

    let a_signed = a.signed().expect("first reveal is signed");
    println!("instance 1: winner #{} at price {}", a_signed.index, a_signed.price);
    println!("instance 2: {}", if b.is_empty() { "empty" } else { "signed" });
    println!("counter now {}", platform.counter().read().unwrap());
    assert!(b.is_empty());
    (a, b)
}

#[allow(dead_code)]
fn main() {
    run_example();
}
