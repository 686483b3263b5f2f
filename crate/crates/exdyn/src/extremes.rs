//! Block maxima extraction and attractor-point helpers.
//!
//! A series of n values splits into consecutive, non-overlapping blocks of
//! equal length; each block contributes its maximum. A trailing partial block
//! is discarded. Long experiments stream samples through
//! [`block_maxima_stream`] so the full series never has to be materialised.

use crate::dynamics::{orbit, to_cartesian, Kind, OrbitConfig, State, SystemSpec};
use crate::{Error, Result};

/// Block maxima together with the block length that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMaxima {
    pub maxima: Vec<f64>,
    pub blocklen: u64,
}

impl BlockMaxima {
    pub fn len(&self) -> usize {
        self.maxima.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maxima.is_empty()
    }
}

/// Maxima over consecutive blocks of `blocklen` values. Yields exactly
/// floor(values.len() / blocklen) maxima.
pub fn block_maxima(values: &[f64], blocklen: u64) -> Result<BlockMaxima> {
    if blocklen == 0 {
        return Err(Error::InvalidConfig("blocklen must be at least 1".into()));
    }
    if (values.len() as u64) < blocklen {
        return Err(Error::SeriesTooShort { needed: blocklen, got: values.len() as u64 });
    }
    let bl = blocklen as usize;
    let maxima = values
        .chunks_exact(bl)
        .map(|block| block.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)))
        .collect();
    Ok(BlockMaxima { maxima, blocklen })
}

/// Streaming variant: pull exactly `n_blocks * blocklen` samples from the
/// iterator and keep one maximum per block. Sample errors and non-finite
/// values propagate; an exhausted iterator reports how much was available.
pub fn block_maxima_stream<I>(mut samples: I, blocklen: u64, n_blocks: u64) -> Result<BlockMaxima>
where
    I: Iterator<Item = Result<f64>>,
{
    if blocklen == 0 {
        return Err(Error::InvalidConfig("blocklen must be at least 1".into()));
    }
    let mut maxima = Vec::with_capacity(n_blocks as usize);
    let mut consumed: u64 = 0;
    for _ in 0..n_blocks {
        let mut m = f64::NEG_INFINITY;
        for _ in 0..blocklen {
            let v = match samples.next() {
                Some(item) => item?,
                None => {
                    return Err(Error::SeriesTooShort {
                        needed: blocklen * n_blocks,
                        got: consumed,
                    })
                }
            };
            if !v.is_finite() {
                return Err(Error::NonFiniteSample { index: consumed });
            }
            consumed += 1;
            if v > m {
                m = v;
            }
        }
        maxima.push(m);
    }
    Ok(BlockMaxima { maxima, blocklen })
}

/// Split a slice into `parts` contiguous equal-length chunks, preserving
/// order. The length must divide exactly.
pub fn partition(values: &[f64], parts: u64) -> Result<Vec<&[f64]>> {
    if parts == 0 {
        return Err(Error::InvalidConfig("cannot partition into 0 parts".into()));
    }
    let n = values.len() as u64;
    if n % parts != 0 {
        return Err(Error::NotDivisible { n, parts });
    }
    let chunk = (n / parts) as usize;
    if chunk == 0 {
        return Err(Error::NotDivisible { n, parts });
    }
    Ok(values.chunks_exact(chunk).collect())
}

/// A point effectively on the attractor: the end state of a seeded orbit
/// after a long transient (1e5 steps for maps, 1e3 time units for flows),
/// returned in Cartesian coordinates.
pub fn generic_point(sys: &SystemSpec, seed: u64) -> Result<State> {
    let transient = match sys.kind() {
        Kind::Map => 100_000,
        Kind::Flow => {
            let dt = sys.default_dt().expect("flows have a default dt");
            (1000.0 / dt).ceil() as u64
        }
    };
    let cfg = OrbitConfig { transient, n_samples: 1, seed, ..OrbitConfig::default() };
    let state = orbit(sys, &cfg)?
        .next()
        .expect("orbit yields exactly one state")?;
    Ok(to_cartesian(sys, state))
}

/// Push a point radially away from (or towards) the origin: p -> (1 + t) p.
pub fn radial_perturb(p: State, t: f64) -> State {
    let s = 1.0 + t;
    match p.dim() {
        2 => State::new2(s * p.x(), s * p.y()),
        _ => State::new3(s * p.x(), s * p.y(), s * p.z()),
    }
}
