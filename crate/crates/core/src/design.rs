//! Space-filling designs on `[lo, hi]^d`: Sobol' sequences and Latin hypercubes.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeds::Rng;
use crate::types::F_MAX;

/// Largest dimension with bundled direction numbers.
pub const SOBOL_MAX_DIM: usize = 16;

const BITS: u32 = 32;

/// Primitive-polynomial data (degree, coefficients, initial m values) from the
/// Joe & Kuo `new-joe-kuo-6.21201` table, dimensions 2..=16.
const JOE_KUO: [(u32, u32, &[u32]); SOBOL_MAX_DIM - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Sobol,
    Lhc,
}

impl Generator {
    pub fn as_str(self) -> &'static str {
        match self {
            Generator::Sobol => "sobol",
            Generator::Lhc => "lhc",
        }
    }
}

/// A batch of design points with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignBatch<T> {
    pub points: Vec<Vec<T>>,
    pub generator: Generator,
    pub seed: Option<u64>,
    /// Sequence indices covered (Sobol) or `0..n` (LHC).
    pub first_index: u64,
}

impl<T: Scalar> DesignBatch<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

fn direction_numbers(d: usize) -> Vec<[u32; BITS as usize]> {
    let mut v = Vec::with_capacity(d);
    // First dimension: van der Corput.
    let mut first = [0u32; BITS as usize];
    for (k, x) in first.iter_mut().enumerate() {
        *x = 1 << (BITS - 1 - k as u32);
    }
    v.push(first);
    for &(s, a, m) in JOE_KUO.iter().take(d.saturating_sub(1)) {
        let s = s as usize;
        let mut dir = [0u32; BITS as usize];
        for k in 0..BITS as usize {
            if k < s {
                dir[k] = m[k] << (BITS - 1 - k as u32);
            } else {
                let mut x = dir[k - s] ^ (dir[k - s] >> s);
                for j in 1..s {
                    if (a >> (s - 1 - j)) & 1 == 1 {
                        x ^= dir[k - j];
                    }
                }
                dir[k] = x;
            }
        }
        v.push(dir);
    }
    v
}

/// Integer Sobol' point at Gray-code position `index` (the sequence order used
/// by most reference implementations: index 0 is the origin, index 1 is all 1/2).
fn sobol_integer(dirs: &[[u32; BITS as usize]], index: u64) -> Vec<u32> {
    let gray = index ^ (index >> 1);
    dirs.iter()
        .map(|dir| {
            let mut x = 0u32;
            let mut g = gray;
            let mut k = 0;
            while g != 0 {
                if g & 1 == 1 {
                    x ^= dir[k];
                }
                g >>= 1;
                k += 1;
            }
            x
        })
        .collect()
}

/// The `n` Sobol' points with indices `skip..skip + n`, scaled to `[0, 2)^d`.
///
/// With `scramble_seed`, every dimension gets a random digital shift (XOR),
/// which preserves the net structure.
pub fn sobol<T: Scalar>(
    n: usize,
    d: usize,
    skip: u64,
    scramble_seed: Option<u64>,
) -> Result<DesignBatch<T>> {
    if d == 0 || d > SOBOL_MAX_DIM {
        return Err(Error::Parameter(format!(
            "Sobol' dimension {d} unsupported (1..={SOBOL_MAX_DIM})"
        )));
    }
    if (skip + n as u64) > (1u64 << BITS) {
        return Err(Error::Parameter("Sobol' index exceeds 2^32".into()));
    }
    let dirs = direction_numbers(d);
    let shifts: Vec<u32> = match scramble_seed {
        Some(seed) => {
            let mut rng = crate::seeds::rng(seed, "sobol-shift", &[]);
            (0..d).map(|_| rng.gen()).collect()
        }
        None => vec![0; d],
    };
    let scale = F_MAX / (1u64 << BITS) as f64;
    let points = (0..n as u64)
        .map(|k| {
            sobol_integer(&dirs, skip + k)
                .into_iter()
                .zip(&shifts)
                .map(|(x, s)| T::lit(f64::from(x ^ s) * scale))
                .collect()
        })
        .collect();
    Ok(DesignBatch {
        points,
        generator: Generator::Sobol,
        seed: scramble_seed,
        first_index: skip,
    })
}

/// Latin hypercube of `n` points on `[lo, hi]^d`: each dimension's values
/// occupy distinct strata of width `(hi - lo) / n`, jittered uniformly.
pub fn lhc<T: Scalar>(n: usize, d: usize, lo: f64, hi: f64, rng: &mut Rng) -> DesignBatch<T> {
    let width = (hi - lo) / n as f64;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..d {
        perm.shuffle(rng);
        let col = perm
            .iter()
            .map(|&stratum| {
                let u: f64 = rng.gen();
                stratum_value(lo, width, stratum, u)
            })
            .collect();
        cols.push(col);
    }
    let points = (0..n)
        .map(|k| cols.iter().map(|c| T::lit(c[k])).collect())
        .collect();
    DesignBatch {
        points,
        generator: Generator::Lhc,
        seed: None,
        first_index: 0,
    }
}

/// One-dimensional LHC values, the form used by best-response pools.
pub fn lhc_1d(n: usize, lo: f64, hi: f64, rng: &mut Rng) -> Vec<f64> {
    let width = (hi - lo) / n as f64;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm.into_iter()
        .map(|stratum| {
            let u: f64 = rng.gen();
            stratum_value(lo, width, stratum, u)
        })
        .collect()
}

/// Stratum index of `x` for strata of `width` starting at `lo`.
pub fn stratum_of(x: f64, lo: f64, width: f64) -> usize {
    ((x - lo) / width).floor() as usize
}

fn stratum_value(lo: f64, width: f64, stratum: usize, u: f64) -> f64 {
    let mut x = lo + (stratum as f64 + u) * width;
    // Rounding can push a jittered value onto the next stratum's edge.
    while stratum_of(x, lo, width) > stratum {
        x = x.next_down();
    }
    while stratum_of(x, lo, width) < stratum {
        x = x.next_up();
    }
    x
}
