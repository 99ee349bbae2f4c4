//! The relay hides the top bid from the enclave. The contract recomputes the
//! bid-set hash over what is on chain and rejects the result.

use trustee::contract::Phase;
use trustee::relay::{AuctionParams, RelayStrategy, ScenarioReport};
use trustee::scenario::run_params;

pub fn run_example() -> ScenarioReport {
    let strategy = RelayStrategy::Eclipse { drop: vec![2] };
    let params = AuctionParams::new(2, &[3, 7, 10], 100, strategy);
    let report = run_params("eclipse_attack", &params).expect("eclipse run");
    assert_eq!(report.final_phase, Phase::Rejected);

    for event in &report.events {
        println!("{event}");
    }
    println!("final phase: {}", report.final_phase);
    report
}

#[allow(dead_code)]
fn main() {
    run_example();
}
