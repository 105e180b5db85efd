//! Random qubit channels of prescribed Choi rank.
//!
//! Channels come from Haar isometries `V : C² → C²⊗C^r`, with
//! `V = Σ_i |i⟩ ⊗ K_i` (environment index major). Every channel draws from
//! its own ChaCha20 stream `(rank << 32) | index` under the batch seed, so
//! a channel depends only on `(seed, rank, index)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelJson, QChannel};
use crate::linalg::{c, CMatrix, C64};
use crate::{Error, Result};

const MAX_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub rank: usize,
    pub count: usize,
    pub seed: u64,
}

impl SampleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.rank) {
            return Err(Error::Precondition(format!(
                "qubit channel rank must be in 1..=4, got {}",
                self.rank
            )));
        }
        if self.count == 0 {
            return Err(Error::Precondition("count must be positive".into()));
        }
        Ok(())
    }
}

/// Haar-random isometry `C^d → C^D` (a `D×d` matrix with `V†V = 𝟙`).
///
/// Gram–Schmidt on a complex Gaussian matrix; the implicit `R` factor has a
/// positive diagonal, which makes the distribution exactly Haar.
pub fn haar_isometry(d: usize, big_d: usize, rng: &mut impl Rng) -> Result<CMatrix> {
    if big_d < d || d == 0 {
        return Err(Error::Precondition(format!(
            "isometry needs 0 < d <= D, got d={d}, D={big_d}"
        )));
    }
    loop {
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
        let mut degenerate = false;
        for _ in 0..d {
            let mut v: Vec<C64> = (0..big_d)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    c(re, im)
                })
                .collect();
            // two passes of modified Gram–Schmidt
            for _ in 0..2 {
                for q in &cols {
                    let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (x, qi) in v.iter_mut().zip(q) {
                        *x -= proj * qi;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                degenerate = true;
                break;
            }
            v.iter_mut().for_each(|z| *z /= norm);
            cols.push(v);
        }
        if !degenerate {
            return Ok(CMatrix::from_fn(big_d, d, |r, k| cols[k][r]));
        }
    }
}

/// Slices an isometry `C^{d_in} → C^{r}⊗C^{d_out}` into `r` Kraus operators.
pub fn channel_from_isometry(v: &CMatrix, d_out: usize) -> Result<QChannel> {
    if !v.rows().is_multiple_of(d_out) {
        return Err(Error::Dimension(format!(
            "isometry with {} rows cannot be split into {}-dim outputs",
            v.rows(),
            d_out
        )));
    }
    let r = v.rows() / d_out;
    let kraus = (0..r)
        .map(|i| CMatrix::from_fn(d_out, v.cols(), |a, b| v[(i * d_out + a, b)]))
        .collect();
    QChannel::new(kraus)
}

/// RNG for channel `index` of a rank-`rank` batch.
pub fn channel_rng(seed: u64, rank: usize, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((rank as u64) << 32) | index as u64);
    rng
}

/// One random qubit channel of exact Choi rank; returns it with its rejection count.
pub fn sample_one(seed: u64, rank: usize, index: usize) -> Result<(QChannel, usize)> {
    let mut rng = channel_rng(seed, rank, index);
    for rejected in 0..MAX_RESAMPLES {
        let v = haar_isometry(2, 2 * rank, &mut rng)?;
        let ch = channel_from_isometry(&v, 2)?;
        if ch.rank() == rank {
            return Ok((ch, rejected));
        }
        log::debug!("rank-{rank} channel {index}: degenerate draw rejected");
    }
    Err(Error::Precondition(format!(
        "no rank-{rank} channel after {MAX_RESAMPLES} draws"
    )))
}

/// A sampled batch plus the number of degenerate draws that were resampled.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub spec: SampleSpec,
    pub channels: Vec<QChannel>,
    pub rejections: usize,
}

/// `spec.count` random qubit channels of Choi rank `spec.rank`.
pub fn sample_channels(spec: &SampleSpec) -> Result<SampleBatch> {
    spec.validate()?;
    let drawn: Vec<(QChannel, usize)> = (0..spec.count)
        .into_par_iter()
        .map(|i| sample_one(spec.seed, spec.rank, i))
        .collect::<Result<_>>()?;
    let rejections = drawn.iter().map(|(_, r)| r).sum();
    if rejections > 0 {
        log::info!(
            "rank {}: {} degenerate draws resampled",
            spec.rank,
            rejections
        );
    }
    Ok(SampleBatch {
        spec: *spec,
        channels: drawn.into_iter().map(|(ch, _)| ch).collect(),
        rejections,
    })
}

/// `(|t|, ‖T‖_F)` of a qubit channel.
pub fn descriptors(ch: &QChannel) -> Result<(f64, f64)> {
    let a = ch.affine()?;
    Ok((a.t_norm(), a.t_frob()))
}

/// Provenance written alongside every batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchManifest {
    pub spec: SampleSpec,
    pub tool_version: String,
    pub rejections: usize,
}

/// On-disk batch: manifest plus channels in the JSON channel format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchFile {
    pub manifest: BatchManifest,
    pub channels: Vec<ChannelJson>,
}

impl SampleBatch {
    pub fn to_file(&self) -> BatchFile {
        BatchFile {
            manifest: BatchManifest {
                spec: self.spec,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                rejections: self.rejections,
            },
            channels: self.channels.iter().map(QChannel::to_json).collect(),
        }
    }
}

impl BatchFile {
    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            msg: e.to_string(),
        })
    }

    pub fn channels(&self) -> Result<Vec<QChannel>> {
        self.channels.iter().map(QChannel::from_json).collect()
    }
}
