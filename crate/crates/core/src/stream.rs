//! Per-replicate random streams and sparse contamination patterns.
//!
//! Replicate `r` of a run seeded with `s` draws from ChaCha8 keyed by `s` on
//! stream `r`, so any replicate can be regenerated in isolation and the
//! assignment of replicates to threads has no effect on the draws.
//!
//! Items are contaminated as `u_k < p` for i.i.d. uniforms `u_k`. Only the
//! uniforms below a ceiling `c >= p` are ever needed, so [`LowUniforms`]
//! materializes exactly those: the gaps between them are geometric with
//! success probability `c` and each value is uniform on `[0, c)`. Thresholding
//! the same sample at `p1 <= p2 <= c` gives nested patterns, which is the
//! monotone coupling used by the ordering checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type ReplicateRng = ChaCha8Rng;

/// Independent stream for one replicate.
pub fn replicate_rng(seed: u64, replicate: u64) -> ReplicateRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// The uniforms below `ceiling` among `len` items, by position.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LowUniforms {
    len: usize,
    ceiling: f64,
    points: Vec<(usize, f64)>,
}

impl LowUniforms {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, len: usize, ceiling: f64) -> Self {
        let mut out = Self::default();
        out.resample(rng, len, ceiling);
        out
    }

    /// Replaces the contents with a fresh draw, reusing the allocation.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R, len: usize, ceiling: f64) {
        debug_assert!((0.0..=1.0).contains(&ceiling));
        self.len = len;
        self.ceiling = ceiling;
        self.points.clear();
        if ceiling <= 0.0 {
            return;
        }
        let log_miss = (-ceiling).ln_1p();
        let mut pos = 0usize;
        while pos < len {
            if ceiling < 1.0 {
                // Failures before the next success; u in (0, 1].
                let u = 1.0 - rng.random::<f64>();
                let skip = (u.ln() / log_miss).floor();
                if skip >= (len - pos) as f64 {
                    break;
                }
                pos += skip as usize;
            }
            self.points.push((pos, ceiling * rng.random::<f64>()));
            pos += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ceiling(&self) -> f64 {
        self.ceiling
    }

    pub fn points(&self) -> &[(usize, f64)] {
        &self.points
    }

    /// Sorted positions with `u < p` among the first `prefix` items.
    pub fn positions_below(&self, p: f64, prefix: usize, out: &mut Vec<usize>) {
        debug_assert!(p <= self.ceiling || self.points.is_empty());
        out.clear();
        out.extend(
            self.points
                .iter()
                .take_while(|&&(i, _)| i < prefix)
                .filter(|&&(_, u)| u < p)
                .map(|&(i, _)| i),
        );
    }
}
