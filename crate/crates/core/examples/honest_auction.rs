//! A full honest auction: attestation, sealed bids, enclave reveal, withdrawals.

use trustee::contract::Phase;
use trustee::relay::{AuctionParams, RelayStrategy, ScenarioReport};
use trustee::scenario::run_params;

pub fn run_example() -> ScenarioReport {
    let params = AuctionParams::new(1, &[3, 7, 10], 100, RelayStrategy::Honest);
    let report = run_params("honest_auction", &params).expect("honest run");
    assert_eq!(report.final_phase, Phase::Revealed);

    println!("phase:  {}", report.final_phase);
    println!("winner: bidder #{}", report.winner_index.unwrap());
    println!("price:  {}", report.price.unwrap());
    for (addr, delta) in &report.balances {
        println!("  {addr}  {delta:+}");
    }
    report
}

#[allow(dead_code)]
fn main() {
    run_example();
}
