//! The bid encryption pipeline on its own: X25519, HKDF, AES-CTR and HMAC.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use trustee::bidder::{seal_bid_with, BidFrame};
use trustee::crypto::dh_keygen;
use trustee::enclave::open_bid;
use trustee::BidValue;

pub fn run_example() -> BidValue {
    let mut rng = ChaCha20Rng::seed_from_u64(42);
    let enclave = dh_keygen(&mut rng);
    let ephemeral = dh_keygen(&mut rng);
    let value: BidValue = "1234567890123456789012345678901234567890".parse().unwrap();

    let sealed = seal_bid_with(&ephemeral, value, &enclave.pk, &mut rng).expect("seal");
    let frame = BidFrame::parse(&sealed.b_ct).unwrap();
    println!("ct  {}", hex::encode(frame.ct));
    println!("iv  {}", hex::encode(frame.iv));
    println!("tag {}", hex::encode(frame.tag));
    println!("b_pk {}", hex::encode(sealed.b_pk));

    let opened = open_bid(enclave.secret_bytes(), &sealed.b_ct, &sealed.b_pk).expect("open");
    println!("opened: {opened}");

    let mut tampered = sealed.b_ct.clone();
    tampered[0] ^= 1;
    println!(
        "tampered: {:?}",
        open_bid(enclave.secret_bytes(), &tampered, &sealed.b_pk).unwrap_err()
    );
    opened
}

#[allow(dead_code)]
fn main() {
    run_example();
}
