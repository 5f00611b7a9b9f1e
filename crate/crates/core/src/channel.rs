//! Rayleigh-fading channel realizations.
//!
//! Each link `(i, j)` draws from its own ChaCha stream, so any link of any
//! instance can be regenerated without touching the others.

use std::fmt::Write as _;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{BeamError, Result};
use crate::model::SystemConfig;

pub type CVector = DVector<Complex64>;

/// `h(i, j)` is the channel from transmitter `j` to receiver `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    k: usize,
    pub seed: u64,
    h: Vec<CVector>,
}

impl ChannelSet {
    /// `links[i * k + j]` becomes `h(i, j)`.
    pub fn from_links(k: usize, seed: u64, links: Vec<CVector>) -> Result<Self> {
        if links.len() != k * k {
            return Err(BeamError::Dimension {
                expected: k * k,
                got: links.len(),
            });
        }
        for v in &links {
            if v.len() != k {
                return Err(BeamError::Dimension {
                    expected: k,
                    got: v.len(),
                });
            }
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(BeamError::Domain("non-finite channel entry".into()));
            }
        }
        Ok(Self { k, seed, h: links })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn h(&self, i: usize, j: usize) -> &CVector {
        &self.h[i * self.k + j]
    }

    /// Mean squared norm of the direct links.
    pub fn direct_scale(&self) -> f64 {
        (0..self.k).map(|i| self.h(i, i).norm_squared()).sum::<f64>() / self.k as f64
    }

    /// Every link multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            k: self.k,
            seed: self.seed,
            h: self.h.iter().map(|v| v * Complex64::new(c, 0.0)).collect(),
        }
    }

    /// Text dump: a `K seed` header, then one `re im` line per coefficient
    /// ordered by receiver, transmitter, antenna.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.k, self.seed);
        for v in &self.h {
            for z in v.iter() {
                let _ = writeln!(out, "{:e} {:e}", z.re, z.im);
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let perr = |line: usize, msg: &str| BeamError::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        let (no, header) = lines.next().ok_or_else(|| perr(0, "empty channel file"))?;
        let mut tok = header.split_whitespace();
        let k: usize = tok
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(no, "expected K"))?;
        let seed: u64 = tok
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(no, "expected seed"))?;
        let mut links = Vec::with_capacity(k * k);
        for _ in 0..k * k {
            let mut v = CVector::zeros(k);
            for a in 0..k {
                let (no, l) = lines.next().ok_or_else(|| perr(usize::MAX - 1, "truncated channel file"))?;
                let nums: Vec<f64> = l
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| perr(no, "expected `re im`"))?;
                if nums.len() != 2 {
                    return Err(perr(no, "expected `re im`"));
                }
                v[a] = Complex64::new(nums[0], nums[1]);
            }
            links.push(v);
        }
        Self::from_links(k, seed, links)
    }
}

/// Draws `h(i, j)` with i.i.d. `CN(0, v)` entries, `v = direct_variance` on
/// direct links and `direct_variance / delta` otherwise.
pub fn generate_channels(cfg: &SystemConfig, seed: u64) -> ChannelSet {
    let k = cfg.k;
    let mut links = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let var = if i == j {
                cfg.direct_variance
            } else {
                cfg.cross_variance()
            };
            let sd = (var / 2.0).sqrt();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((i as u64) << 32) | j as u64);
            let v = CVector::from_fn(k, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(sd * re, sd * im)
            });
            links.push(v);
        }
    }
    ChannelSet { k, seed, h: links }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let cfg = SystemConfig::symmetric(3, 10.0, -30.0, 5.0);
        assert_eq!(generate_channels(&cfg, 7), generate_channels(&cfg, 7));
        assert_ne!(generate_channels(&cfg, 7), generate_channels(&cfg, 8));
    }

    #[test]
    fn links_do_not_depend_on_k_ordering() {
        // the stream for (i, j) is fixed, so the first antenna draws of a link
        // agree between user counts
        let a = generate_channels(&SystemConfig::symmetric(2, 10.0, -30.0, 5.0), 3);
        let b = generate_channels(&SystemConfig::symmetric(3, 10.0, -30.0, 5.0), 3);
        assert_eq!(a.h(1, 0)[0], b.h(1, 0)[0]);
    }

    #[test]
    fn text_round_trip() {
        let ch = generate_channels(&SystemConfig::symmetric(3, 10.0, -30.0, 5.0), 11);
        let back = ChannelSet::from_text(&ch.to_text()).unwrap();
        assert_eq!(back, ch);
        assert!(ChannelSet::from_text("2 1\n0 0\n").is_err());
    }
}
