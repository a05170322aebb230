//! Chaotic keystream generation, the dynamic S-box, and the permutation/diffusion
//! image cipher with its inverse.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::neuron::{mhdnn_step, MhdnnParams, MhdnnState};
use crate::pnm::ImageBuffer;

pub const KEY_LEN: usize = 64;
pub const CKG_TRANSIENT: usize = 1000;
pub const Q_LEN: usize = 512;
pub const QUANTIZE_LIMIT: f64 = 1e7;

/// Secret key `(x0, y0, z0, a, b, c, h, m)`; `k` stays at 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CipherKey {
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub h: f64,
    pub m: f64,
}

impl CipherKey {
    pub fn from_array(v: [f64; 8]) -> Result<Self> {
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("key components must be finite".into()));
        }
        let [x0, y0, z0, a, b, c, h, m] = v;
        Ok(Self { x0, y0, z0, a, b, c, h, m })
    }

    pub fn to_array(&self) -> [f64; 8] {
        [self.x0, self.y0, self.z0, self.a, self.b, self.c, self.h, self.m]
    }

    /// Little-endian f64s in field order.
    pub fn to_bytes(&self) -> [u8; KEY_LEN] {
        let mut out = [0u8; KEY_LEN];
        for (chunk, v) in out.chunks_exact_mut(8).zip(self.to_array()) {
            chunk.copy_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != KEY_LEN {
            return Err(Error::InvalidArgument(format!(
                "key must be {KEY_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        let mut v = [0.0; 8];
        for (slot, chunk) in v.iter_mut().zip(bytes.chunks_exact(8)) {
            *slot = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        Self::from_array(v)
    }

    /// Eight decimal literals, one per line (blank lines ignored).
    pub fn parse_text(s: &str) -> Result<Self> {
        let vals: Vec<f64> = s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad key literal `{l}`"))))
            .collect::<Result<_>>()?;
        let arr: [f64; 8] = vals
            .try_into()
            .map_err(|v: Vec<f64>| Error::InvalidArgument(format!("key needs 8 values, got {}", v.len())))?;
        Self::from_array(arr)
    }

    pub fn to_text(&self) -> String {
        self.to_array().iter().map(|v| format!("{v:?}\n")).collect()
    }

    /// Text form if it parses, otherwise the 64-byte binary form.
    pub fn from_file_bytes(bytes: &[u8]) -> Result<Self> {
        if let Ok(text) = std::str::from_utf8(bytes) {
            if let Ok(k) = Self::parse_text(text) {
                return Ok(k);
            }
        }
        Self::from_bytes(bytes)
    }

    pub fn params(&self) -> MhdnnParams {
        MhdnnParams::new(self.a, self.b, self.c, self.h, self.m)
    }

    pub fn initial_state(&self) -> MhdnnState {
        MhdnnState::new(self.x0, self.y0, self.z0)
    }
}

impl fmt::Display for CipherKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_array();
        write!(f, "({}, {}, {}, {}, {}, {}, {}, {})", v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7])
    }
}

/// `mod(floor((s + 100) * 1e10), modulus) + 1`.
pub fn quantize(s: f64, modulus: usize) -> Result<usize> {
    if modulus == 0 {
        return Err(Error::InvalidArgument("modulus must be positive".into()));
    }
    if !s.is_finite() || s.abs() >= QUANTIZE_LIMIT {
        return Err(Error::InvalidArgument(format!("sample {s} outside the quantizer range")));
    }
    let scaled = ((s + 100.0) * 1e10).floor() as i64;
    Ok(scaled.rem_euclid(modulus as i64) as usize + 1)
}

/// Index streams (1-based) and the raw S-box seed samples.
#[derive(Debug, Clone, PartialEq)]
pub struct KeystreamSet {
    pub x: Vec<usize>,
    pub x1: Vec<usize>,
    pub x2: Vec<usize>,
    pub sbt: Vec<usize>,
    pub q: Vec<f64>,
}

/// Keystreams for an `m`-row, `n`-column image.
pub fn ckg(key: &CipherKey, m: usize, n: usize) -> Result<KeystreamSet> {
    let mn = m * n;
    if mn == 0 {
        return Err(Error::InvalidArgument("image must have at least one pixel".into()));
    }
    let p = key.params();
    let mut s = key.initial_state();
    for step in 1..=CKG_TRANSIENT {
        s = mhdnn_step(s, &p);
        if s.is_divergent() {
            return Err(Error::KeyRejected { step });
        }
    }
    let total = 4 * mn + Q_LEN;
    let mut samples = Vec::with_capacity(total);
    for k in 1..=total {
        s = mhdnn_step(s, &p);
        if s.is_divergent() {
            return Err(Error::KeyRejected { step: CKG_TRANSIENT + k });
        }
        samples.push(s.x);
    }
    let block = |i: usize, modulus: usize| -> Result<Vec<usize>> {
        samples[i * mn..(i + 1) * mn]
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                quantize(v, modulus).map_err(|_| Error::KeyRejected { step: CKG_TRANSIENT + i * mn + j + 1 })
            })
            .collect()
    };
    Ok(KeystreamSet {
        x: block(0, mn)?,
        x1: block(1, mn)?,
        x2: block(2, mn)?,
        sbt: block(3, 256)?,
        q: samples[4 * mn..].to_vec(),
    })
}

/// 16x16 substitution table and its column-major flattening.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SBox {
    pub table: [[u8; 16]; 16],
    pub sx: [u8; 256],
}

impl SBox {
    pub fn is_bijection(&self) -> bool {
        let mut seen = [false; 256];
        for &v in &self.sx {
            seen[v as usize] = true;
        }
        seen.iter().all(|&b| b)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.table {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

// 1-based positions of the ascending order; stable, so ties keep index order.
fn rank_indices(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    idx.into_iter().map(|i| i + 1).collect()
}

pub fn dsb(q: &[f64]) -> Result<SBox> {
    if q.len() != Q_LEN {
        return Err(Error::InvalidArgument(format!("S-box seed needs {Q_LEN} values, got {}", q.len())));
    }
    let l = rank_indices(&q[..256]);
    let l1 = rank_indices(&q[256..384]);
    let l2 = rank_indices(&q[384..]);

    // row-major reshape of L, transposed, shifted to 0..=255
    let mut s1_mat = [[0u8; 16]; 16];
    for (r, row) in s1_mat.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = (l[c * 16 + r] - 1) as u8;
        }
    }
    let mut s1 = [0u8; 256];
    for c in 0..16 {
        for r in 0..16 {
            s1[c * 16 + r] = s1_mat[r][c];
        }
    }
    for i in 0..128 {
        s1.swap(l1[i] - 1, l2[i] - 1);
    }
    let mut table = [[0u8; 16]; 16];
    for c in 0..16 {
        for r in 0..16 {
            table[r][c] = s1[c * 16 + r];
        }
    }
    Ok(SBox { table, sx: s1 })
}

fn permute(a: &mut [u8], idx: &[usize]) {
    let t = a.len();
    for i in 0..t / 2 {
        a.swap(idx[i] - 1, idx[t - 1 - i] - 1);
    }
}

fn unpermute(a: &mut [u8], idx: &[usize]) {
    let t = a.len();
    for i in (0..t / 2).rev() {
        a.swap(idx[i] - 1, idx[t - 1 - i] - 1);
    }
}

/// Keystreams and S-box bound to one image size, reusable across images.
#[derive(Debug, Clone)]
pub struct Cipher {
    rows: usize,
    cols: usize,
    keystream: KeystreamSet,
    sbox: SBox,
}

impl Cipher {
    pub fn new(key: &CipherKey, rows: usize, cols: usize) -> Result<Self> {
        let keystream = ckg(key, rows, cols)?;
        let sbox = dsb(&keystream.q)?;
        Ok(Self { rows, cols, keystream, sbox })
    }

    pub fn for_image(key: &CipherKey, img: &ImageBuffer) -> Result<Self> {
        Self::new(key, img.height(), img.width())
    }

    pub fn keystream(&self) -> &KeystreamSet {
        &self.keystream
    }

    pub fn sbox(&self) -> &SBox {
        &self.sbox
    }

    fn mask(&self, i: usize) -> u8 {
        self.sbox.sx[self.keystream.sbt[i] - 1]
    }

    pub fn encrypt_plane(&self, a: &mut [u8]) {
        let t = a.len();
        permute(a, &self.keystream.x);
        for i in 1..t {
            a[i] ^= a[i - 1] ^ self.mask(i);
        }
        for i in (0..t.saturating_sub(1)).rev() {
            a[i] ^= a[i + 1] ^ self.mask(i);
        }
        permute(a, &self.keystream.x2);
    }

    pub fn decrypt_plane(&self, c: &mut [u8]) {
        let t = c.len();
        unpermute(c, &self.keystream.x2);
        // ascending order reads C(i+1) before it is overwritten
        for i in 0..t.saturating_sub(1) {
            c[i] ^= c[i + 1] ^ self.mask(i);
        }
        for i in (1..t).rev() {
            c[i] ^= c[i - 1] ^ self.mask(i);
        }
        unpermute(c, &self.keystream.x);
    }

    fn check(&self, img: &ImageBuffer) -> Result<()> {
        if img.height() != self.rows || img.width() != self.cols {
            return Err(Error::Image(format!(
                "image is {}x{}, cipher was keyed for {}x{}",
                img.width(),
                img.height(),
                self.cols,
                self.rows
            )));
        }
        Ok(())
    }

    fn apply(&self, img: &ImageBuffer, f: impl Fn(&Self, &mut [u8]) + Sync) -> Result<ImageBuffer> {
        self.check(img)?;
        let mut planes: Vec<Vec<u8>> = (0..img.channels()).map(|ch| to_column_major(img, ch)).collect();
        planes.par_iter_mut().for_each(|p| f(self, p));
        let mut out = img.clone();
        for (ch, plane) in planes.iter().enumerate() {
            from_column_major(&mut out, ch, plane);
        }
        Ok(out)
    }

    pub fn encrypt(&self, img: &ImageBuffer) -> Result<ImageBuffer> {
        self.apply(img, Self::encrypt_plane)
    }

    pub fn decrypt(&self, img: &ImageBuffer) -> Result<ImageBuffer> {
        self.apply(img, Self::decrypt_plane)
    }
}

fn to_column_major(img: &ImageBuffer, ch: usize) -> Vec<u8> {
    let (rows, cols) = (img.height(), img.width());
    let mut v = Vec::with_capacity(rows * cols);
    for c in 0..cols {
        for r in 0..rows {
            v.push(img.get(r, c, ch));
        }
    }
    v
}

fn from_column_major(img: &mut ImageBuffer, ch: usize, v: &[u8]) {
    let rows = img.height();
    for (k, &b) in v.iter().enumerate() {
        img.set(k % rows, k / rows, ch, b);
    }
}

pub fn encrypt(img: &ImageBuffer, key: &CipherKey) -> Result<ImageBuffer> {
    Cipher::for_image(key, img)?.encrypt(img)
}

pub fn decrypt(img: &ImageBuffer, key: &CipherKey) -> Result<ImageBuffer> {
    Cipher::for_image(key, img)?.decrypt(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use proptest::prelude::*;

    fn key() -> CipherKey {
        presets::reference_key()
    }

    fn noise(w: usize, h: usize, ch: usize, seed: u64) -> ImageBuffer {
        let mut s = seed;
        let px = (0..w * h * ch)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 56) as u8
            })
            .collect();
        ImageBuffer::new(w, h, ch, px).unwrap()
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(-100.0, 7).unwrap(), 1);
        assert_eq!(quantize(0.1, 16).unwrap(), 1);
        let want = (1_001_000_000_000u64 % 256) as usize + 1;
        assert_eq!(quantize(0.1, 256).unwrap(), want);
        assert_eq!(quantize(-150.0, 10).unwrap(), ((-500_000_000_000i64).rem_euclid(10) + 1) as usize);
        assert!(quantize(1e7, 10).is_err());
        assert!(quantize(f64::NAN, 10).is_err());
        assert!(quantize(0.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn quantize_in_range(s in -1e6f64..1e6, m in 1usize..5000) {
            let v = quantize(s, m).unwrap();
            prop_assert!((1..=m).contains(&v));
        }
    }

    #[test]
    fn key_serialization() {
        let k = key();
        let bytes = k.to_bytes();
        assert_eq!(&bytes[..8], &0.1f64.to_le_bytes());
        assert_eq!(&bytes[56..], &0.5f64.to_le_bytes());
        assert_eq!(CipherKey::from_bytes(&bytes).unwrap(), k);
        assert_eq!(CipherKey::parse_text(&k.to_text()).unwrap(), k);
        assert_eq!(CipherKey::from_file_bytes(&bytes).unwrap(), k);
        assert_eq!(CipherKey::from_file_bytes(k.to_text().as_bytes()).unwrap(), k);
        assert!(CipherKey::from_bytes(&bytes[..63]).is_err());
        assert!(CipherKey::parse_text("1\n2\n3").is_err());
        assert!(CipherKey::from_array([f64::NAN; 8]).is_err());
    }

    #[test]
    fn keystream_bounds_and_determinism() {
        let ks = ckg(&key(), 4, 4).unwrap();
        assert_eq!((ks.x.len(), ks.x1.len(), ks.x2.len(), ks.sbt.len(), ks.q.len()), (16, 16, 16, 16, 512));
        for v in ks.x.iter().chain(&ks.x1).chain(&ks.x2) {
            assert!((1..=16).contains(v));
        }
        assert!(ks.sbt.iter().all(|v| (1..=256).contains(v)));
        assert_eq!(ks, ckg(&key(), 4, 4).unwrap());
    }

    #[test]
    fn keystream_matches_orbit_oracle() {
        let k = key();
        let orbit = crate::neuron::iterate(&k.params(), k.initial_state(), CKG_TRANSIENT, 4 * 16 + 512).unwrap();
        let xs = orbit.xs();
        let ks = ckg(&k, 4, 4).unwrap();
        let want: Vec<usize> = xs[..16].iter().map(|&v| quantize(v, 16).unwrap()).collect();
        assert_eq!(ks.x, want);
        let want_sbt: Vec<usize> = xs[48..64].iter().map(|&v| quantize(v, 256).unwrap()).collect();
        assert_eq!(ks.sbt, want_sbt);
        assert_eq!(ks.q, xs[64..]);
    }

    #[test]
    fn divergent_key_rejected() {
        let mut k = key();
        k.x0 = 1e9;
        assert!(matches!(ckg(&k, 2, 2), Err(Error::KeyRejected { step: 1 })));
        assert!(ckg(&key(), 0, 4).is_err());
    }

    #[test]
    fn monotone_seed_gives_identity_before_swaps() {
        let q: Vec<f64> = (0..512).map(|i| i as f64).collect();
        let sb = dsb(&q).unwrap();
        // L1 = L2 = identity: every swap is a no-op
        let want: Vec<u8> = (0..=255).collect();
        assert_eq!(&sb.sx[..], &want[..]);
        assert_eq!(sb.table[0][1], 16);
        assert_eq!(sb.table[1][0], 1);
    }

    // Straight-line version: the transpose/flatten round trip leaves s1 = L - 1.
    fn dsb_oracle(q: &[f64]) -> [u8; 256] {
        let argsort = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap().then(a.cmp(&b)));
            idx
        };
        let l = argsort(&q[..256]);
        let l1 = argsort(&q[256..384]);
        let l2 = argsort(&q[384..512]);
        let mut s: [u8; 256] = std::array::from_fn(|i| l[i] as u8);
        for i in 0..128 {
            s.swap(l1[i], l2[i]);
        }
        s
    }

    #[test]
    fn sbox_matches_oracle() {
        let q: Vec<f64> = (0..512).map(|i| ((i as f64) * 12.9898).sin() * 43758.5453 % 1.0).collect();
        let sb = dsb(&q).unwrap();
        assert_eq!(sb.sx, dsb_oracle(&q));
        assert!(sb.is_bijection());
        for c in 0..16 {
            for r in 0..16 {
                assert_eq!(sb.table[r][c], sb.sx[c * 16 + r]);
            }
        }
    }

    #[test]
    fn sbox_handles_ties() {
        let q = vec![0.5; 512];
        let sb = dsb(&q).unwrap();
        assert!(sb.is_bijection());
        assert!(dsb(&q[..511]).is_err());
    }

    #[test]
    fn one_pixel_is_identity() {
        let img = ImageBuffer::new(1, 1, 3, vec![7, 8, 9]).unwrap();
        assert_eq!(encrypt(&img, &key()).unwrap(), img);
        assert_eq!(decrypt(&img, &key()).unwrap(), img);
    }

    #[test]
    fn two_pixel_hand_trace() {
        let k = key();
        let img = ImageBuffer::new(2, 1, 1, vec![200, 17]).unwrap();
        let ks = ckg(&k, 1, 2).unwrap();
        let sx = dsb(&ks.q).unwrap().sx;
        let mut a = [200u8, 17];
        // 1: swap(A, X(1), X(2))
        a.swap(ks.x[0] - 1, ks.x[1] - 1);
        // 2: B(1) = A(1), B(2) = A(2) ^ B(1) ^ sx[SBT(2)]
        let b = [a[0], a[1] ^ a[0] ^ sx[ks.sbt[1] - 1]];
        // 3: C(2) = B(2), C(1) = B(1) ^ C(2) ^ sx[SBT(1)]
        let mut c = [b[0] ^ b[1] ^ sx[ks.sbt[0] - 1], b[1]];
        // 4: swap(C, X2(1), X2(2))
        c.swap(ks.x2[0] - 1, ks.x2[1] - 1);
        let enc = encrypt(&img, &k).unwrap();
        assert_eq!(enc.pixels(), &c);
        assert_eq!(decrypt(&enc, &k).unwrap(), img);
    }

    #[test]
    fn round_trips() {
        for (w, h) in [(1, 1), (2, 1), (1, 2), (3, 3), (32, 32), (17, 5)] {
            for ch in [1, 3] {
                let img = noise(w, h, ch, (w * 31 + h * 7 + ch) as u64);
                let c = Cipher::for_image(&key(), &img).unwrap();
                let enc = c.encrypt(&img).unwrap();
                assert_eq!(c.decrypt(&enc).unwrap(), img, "{w}x{h}x{ch}");
            }
        }
    }

    #[test]
    fn size_mismatch_rejected() {
        let c = Cipher::new(&key(), 4, 4).unwrap();
        assert!(c.encrypt(&noise(4, 5, 1, 1)).is_err());
    }

    #[test]
    fn channel_independence() {
        let img = noise(9, 7, 3, 3);
        let enc = encrypt(&img, &key()).unwrap();
        for ch in 0..3 {
            let single = encrypt(&img.channel(ch).unwrap(), &key()).unwrap();
            assert_eq!(single, enc.channel(ch).unwrap());
        }
    }

    #[test]
    fn single_byte_error_stays_local() {
        let k = key();
        let img = noise(16, 16, 1, 11);
        let c = Cipher::for_image(&k, &img).unwrap();
        let enc = c.encrypt(&img).unwrap();
        for pos in 0..256 {
            let mut bad = enc.clone();
            bad.pixels_mut()[pos] ^= 0x5A;
            let dec = c.decrypt(&bad).unwrap();
            let changed = dec.pixels().iter().zip(img.pixels()).filter(|(a, b)| a != b).count();
            assert!(changed <= 3, "byte {pos}: {changed} plaintext bytes changed");
        }
    }

    #[test]
    fn random_keys_give_bijections() {
        let mut s = 0x1234_5678u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let q: Vec<f64> = (0..512).map(|_| next()).collect();
            assert!(dsb(&q).unwrap().is_bijection());
        }
    }
}
