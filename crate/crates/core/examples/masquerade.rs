//! The relay posts keys it controls. Bidders that attest refuse to bid, each
//! for a different reason depending on the trick; a bidder that skips
//! attestation leaks its bid to the relay.

use trustee::attestation::RejectReason;
use trustee::bidder::{AbstainReason, Behavior, JoinOutcome};
use trustee::relay::{AuctionParams, MasqueradeTactic, RelayStrategy, ScenarioReport};
use trustee::scenario::run_params;

pub fn run_example() -> Vec<ScenarioReport> {
    let mut reports = Vec::new();
    for tactic in MasqueradeTactic::ALL {
        let mut params = AuctionParams::new(4, &[20, 35], 50, RelayStrategy::Masquerade { tactic });
        params.bidders[1].behavior = Behavior::NoAttest;
        let report = run_params("masquerade", &params).expect("masquerade run");

        println!("{tactic:?}");
        for b in &report.bidders {
            println!("  {:?} bidder: {:?}", b.behavior, b.join);
        }
        for e in report.events.iter().filter(|e| e.starts_with("privacy loss")) {
            println!("  {e}");
        }
        assert!(matches!(
            report.bidders[0].join,
            JoinOutcome::Abstained(AbstainReason::Attestation(
                RejectReason::UnknownDevice | RejectReason::UserDataMismatch | RejectReason::MeasurementMismatch
            ))
        ));
        reports.push(report);
    }
    reports
}

#[allow(dead_code)]
fn main() {
    run_example();
}
