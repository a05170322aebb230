//! Key-avalanche and wrong-key decryption properties of the cipher.

use mhdnn::cipher::{self, ckg, CipherKey};
use mhdnn::metrics::npcr_uaci;
use mhdnn::presets;
use mhdnn::testimage;

const SIDE: usize = 64;

fn chaotic_key() -> CipherKey {
    CipherKey::from_array([0.1, 0.1, 0.1, -3.4, 1.5, 4.28, 1.3, 0.2]).unwrap()
}

fn next_ulp(v: f64) -> f64 {
    f64::from_bits(if v >= 0.0 { v.to_bits() + 1 } else { v.to_bits() - 1 })
}

/// Fraction of positions where the X permutation streams of two keys differ.
fn x_divergence(a: &CipherKey, b: &CipherKey) -> f64 {
    let (ka, kb) = (ckg(a, SIDE, SIDE).unwrap(), ckg(b, SIDE, SIDE).unwrap());
    ka.x.iter().zip(&kb.x).filter(|(p, q)| p != q).count() as f64 / ka.x.len() as f64
}

fn check_avalanche(key: CipherKey) {
    let mut report = Vec::new();
    for idx in 0..8 {
        let mut v = key.to_array();
        v[idx] = next_ulp(v[idx]);
        let frac = x_divergence(&key, &CipherKey::from_array(v).unwrap());
        report.push((idx, frac));
    }
    println!("{report:?}");
    assert!(report.iter().all(|&(_, f)| f >= 0.85), "per-component X divergence {report:?}");
}

#[test]
fn one_ulp_avalanche_reference_key() {
    check_avalanche(presets::reference_key());
}

#[test]
fn one_ulp_avalanche_chaotic_key() {
    check_avalanche(chaotic_key());
}

fn wrong_key_npcr(key: CipherKey) -> f64 {
    let plain = testimage::natural(SIDE, SIDE);
    let enc = cipher::encrypt(&plain, &key).unwrap();
    let mut wrong = key;
    wrong.x0 += 1e-15;
    let dec = cipher::decrypt(&enc, &wrong).unwrap();
    npcr_uaci(&plain, &dec).unwrap().npcr
}

#[test]
fn nearby_key_decrypts_to_noise_reference_key() {
    let npcr = wrong_key_npcr(presets::reference_key());
    assert!((npcr - 0.996).abs() < 0.01, "NPCR {npcr}");
}

#[test]
fn nearby_key_decrypts_to_noise_chaotic_key() {
    let npcr = wrong_key_npcr(chaotic_key());
    assert!((npcr - 0.996).abs() < 0.01, "NPCR {npcr}");
}
