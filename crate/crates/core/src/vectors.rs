//! Deterministic golden test vectors for every cryptographic primitive and
//! the composed bid-sealing pipeline.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bidder::seal_bid_with_iv;
use crate::crypto::{aead_encrypt, dh_shared_secret, kdf, keccak256, sha256, DhKeyPair, SigningKeyPair};
use crate::enclave::input_binding_hash;
use crate::value::BidValue;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vector {
    pub name: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl Vector {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    fn input(mut self, key: &str, bytes: impl AsRef<[u8]>) -> Self {
        self.inputs.insert(key.into(), hex::encode(bytes));
        self
    }

    fn output(mut self, key: &str, bytes: impl AsRef<[u8]>) -> Self {
        self.outputs.insert(key.into(), hex::encode(bytes));
        self
    }
}

/// One JSON file of vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorFile {
    pub file_name: &'static str,
    pub vectors: Vec<Vector>,
}

impl VectorFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.vectors).expect("vectors serialize") + "\n"
    }
}

/// Repeats `seed` as a byte pattern: a cheap, readable way to get fixed inputs.
fn pattern<const N: usize>(seed: u8) -> [u8; N] {
    std::array::from_fn(|i| seed.wrapping_mul(31).wrapping_add(i as u8))
}

fn hashes() -> (VectorFile, VectorFile) {
    let messages: [(&str, Vec<u8>); 4] = [
        ("empty", Vec::new()),
        ("abc", b"abc".to_vec()),
        ("one_block", vec![0x61; 136]),
        ("pattern_200", pattern::<200>(7).to_vec()),
    ];
    let keccak = messages
        .iter()
        .map(|(n, m)| Vector::new(*n).input("msg", m).output("digest", keccak256(m).0))
        .collect();
    let sha = messages
        .iter()
        .map(|(n, m)| Vector::new(*n).input("msg", m).output("digest", sha256(m).0))
        .collect();
    (
        VectorFile {
            file_name: "keccak256.json",
            vectors: keccak,
        },
        VectorFile {
            file_name: "sha256.json",
            vectors: sha,
        },
    )
}

fn x25519() -> VectorFile {
    let vectors = (1u8..=4)
        .map(|i| {
            let a = DhKeyPair::from_scalar(pattern(i));
            let b = DhKeyPair::from_scalar(pattern(i + 100));
            let ss = dh_shared_secret(a.secret_bytes(), &b.pk).expect("non-degenerate");
            Vector::new(format!("pair_{i}"))
                .input("a_scalar", pattern::<32>(i))
                .input("b_scalar", pattern::<32>(i + 100))
                .output("a_pk", a.pk)
                .output("b_pk", b.pk)
                .output("shared_secret", ss)
        })
        .collect();
    VectorFile {
        file_name: "x25519.json",
        vectors,
    }
}

fn kdf_vectors() -> VectorFile {
    let vectors = [0x0bu8, 0x00, 0xff, 0x42]
        .into_iter()
        .map(|b| {
            let keys = kdf(&[b; 32]);
            Vector::new(format!("ss_{b:02x}"))
                .input("ss", [b; 32])
                .output("k1", keys.k1)
                .output("k2", keys.k2)
        })
        .collect();
    VectorFile {
        file_name: "kdf.json",
        vectors,
    }
}

fn aead() -> VectorFile {
    let vectors = (1u8..=3)
        .map(|i| {
            let ss: [u8; 32] = pattern(i);
            let keys = kdf(&ss);
            let iv: [u8; 16] = pattern(i + 50);
            let pt = pattern::<32>(i + 9);
            let (ct, tag) = aead_encrypt(&pt, &iv, &keys);
            Vector::new(format!("case_{i}"))
                .input("k1", keys.k1)
                .input("k2", keys.k2)
                .input("iv", iv)
                .input("plaintext", pt)
                .output("ciphertext", ct)
                .output("tag", tag)
        })
        .collect();
    VectorFile {
        file_name: "aead.json",
        vectors,
    }
}

fn secp256k1() -> VectorFile {
    let vectors = (1u8..=4)
        .map(|i| {
            let key = SigningKeyPair::from_secret_bytes(&pattern(i)).expect("pattern is a valid scalar");
            let msg = format!("trustee vector {i}");
            let digest = keccak256(msg.as_bytes());
            let sig = key.sign(&digest);
            Vector::new(format!("key_{i}"))
                .input("sk", pattern::<32>(i))
                .input("digest", digest.0)
                .output("pk", key.pk)
                .output("address", key.address.0)
                .output("signature", sig.to_bytes())
        })
        .collect();
    VectorFile {
        file_name: "secp256k1.json",
        vectors,
    }
}

fn seal_bid() -> VectorFile {
    let enclave = DhKeyPair::from_scalar(pattern(200));
    let bids: [u64; 3] = [3, 7, 10];
    let mut cts = Vec::new();
    let mut pks = Vec::new();
    let mut vectors: Vec<Vector> = bids
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let eph_scalar: [u8; 32] = pattern(210 + i as u8);
            let iv: [u8; 16] = pattern(220 + i as u8);
            let eph = DhKeyPair::from_scalar(eph_scalar);
            let sealed = seal_bid_with_iv(&eph, BidValue::from(v), &enclave.pk, iv).expect("valid key");
            cts.push(sealed.b_ct.clone());
            pks.push(sealed.b_pk);
            Vector::new(format!("bid_{v}"))
                .input("t_pk", enclave.pk)
                .input("ephemeral_scalar", eph_scalar)
                .input("iv", iv)
                .input("value", BidValue::from(v).to_be_bytes())
                .output("b_ct", &sealed.b_ct)
                .output("b_pk", sealed.b_pk)
        })
        .collect();
    let mut concat = Vec::new();
    for (ct, pk) in cts.iter().zip(&pks) {
        concat.extend_from_slice(ct);
        concat.extend_from_slice(pk);
    }
    vectors.push(
        Vector::new("bid_set_hash")
            .input("concatenation", concat)
            .output("h", input_binding_hash(&cts, &pks).0),
    );
    VectorFile {
        file_name: "seal_bid.json",
        vectors,
    }
}

/// All golden vector files, in a fixed order.
pub fn golden_vectors() -> Vec<VectorFile> {
    let (keccak, sha) = hashes();
    vec![keccak, sha, x25519(), kdf_vectors(), aead(), secp256k1(), seal_bid()]
}

/// Writes every vector file into `dir`, creating it if needed. Returns the paths written.
pub fn write_vectors(dir: &Path) -> io::Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    golden_vectors()
        .into_iter()
        .map(|file| {
            let path = dir.join(file.file_name);
            std::fs::write(&path, file.to_json())?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(golden_vectors(), golden_vectors());
    }

    #[test]
    fn known_hash_outputs() {
        let (keccak, sha) = hashes();
        assert_eq!(
            keccak.vectors[0].outputs["digest"],
            "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"
        );
        assert_eq!(
            sha.vectors[1].outputs["digest"],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
