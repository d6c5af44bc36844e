//! Deterministic fan-out of one master seed into labelled sub-streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sub-seed for `label` and a list of integer coordinates (round, draw, ...).
pub fn derive(master: u64, label: &str, coords: &[u64]) -> u64 {
    let mut h = splitmix(master ^ fnv1a(label.as_bytes()));
    for &c in coords {
        h = splitmix(h ^ c);
    }
    h
}

pub fn rng(master: u64, label: &str, coords: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(master, label, coords))
}
