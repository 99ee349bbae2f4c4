//! Enclave state survives a restart through a sealed blob and a file-backed
//! counter, but a stale blob cannot be used for a second reveal.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use trustee::attestation::TRUSTEE_ENCLAVE_IDENTITY;
use trustee::bidder::BidderAgent;
use trustee::crypto::Address;
use trustee::enclave::{FileCounter, PlatformSim, SealedState, TrusteeEnclave};

pub fn run_example() -> u64 {
    let dir = std::env::temp_dir().join(format!("trustee-restart-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let counter = FileCounter::open(dir.join("counter")).unwrap();
    let platform = Arc::new(PlatformSim::with_counter(
        &mut ChaCha20Rng::seed_from_u64(8),
        Box::new(counter),
    ));

    let init = TrusteeEnclave::launch(platform.clone(), TRUSTEE_ENCLAVE_IDENTITY, 1)
        .initialize()
        .unwrap();
    let blob = dir.join("sealed");
    init.sealed.save(&blob).unwrap();
    println!("sealed state: {} bytes", init.sealed.as_bytes().len());

    // the process "restarts": a fresh enclave instance loads the blob
    let stale = SealedState::load(&blob).unwrap();
    let mut restarted = TrusteeEnclave::launch(platform.clone(), TRUSTEE_ENCLAVE_IDENTITY, 2);
    let bid = BidderAgent::new(11u64.into(), Default::default(), 3)
        .seal_bid(&init.t_pk)
        .unwrap();
    let contract = Address([1; 20]);
    let (tw, next) = restarted
        .reveal_winner(contract, std::slice::from_ref(&bid.b_ct), &[bid.b_pk], &stale)
        .unwrap();
    next.save(&blob).unwrap();
    println!("first reveal signed: {}", !tw.is_empty());

    let (again, _) = restarted
        .reveal_winner(contract, &[bid.b_ct], &[bid.b_pk], &stale)
        .unwrap();
    println!("stale replay signed: {}", !again.is_empty());
    assert!(again.is_empty());

    let ctr = platform.counter().read().unwrap();
    println!("counter on disk: {ctr}");
    std::fs::remove_dir_all(&dir).ok();
    ctr
}

#[allow(dead_code)]
fn main() {
    run_example();
}
