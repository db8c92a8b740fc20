//! Radix-2 FFT, per-sequence spectral features, and the Phase-1 knowledge
//! base of per-family feature bands.
//!
//! Band construction smooths each family's per-feature training series in
//! the frequency domain: the series is zero-padded to a power of two,
//! transformed, and all but the `top_k` strongest frequency groups are
//! dropped (a group is the DC bin, a conjugate pair `{k, N-k}`, or the
//! Nyquist bin, so reconstructions stay real). The band is the retained
//! spectrum's amplitude envelope around the DC level, clamped to the raw
//! range of the series: dropping groups can only shrink it, and keeping
//! all groups recovers the exact raw range. A slack fraction widens the
//! final interval on both sides.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::featurex::{self, PhysicoFeatures};
use crate::seqio::{residue_index, LabeledCorpus, ProteinSequence};

/// Complex sample type used throughout the spectral code.
pub type Complex = Complex64;

fn is_power_of_two(n: usize) -> bool {
    n > 0 && n & (n - 1) == 0
}

fn next_power_of_two(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Forward DFT, X_k = sum_n x_n e^(-2πikn/N), iterative Cooley-Tukey.
/// The input length must be a power of two; callers pad with zeros first.
pub fn fft(x: &[Complex]) -> Result<Vec<Complex>> {
    if !is_power_of_two(x.len()) {
        return Err(Error::Config(format!(
            "fft input length {} is not a power of two",
            x.len()
        )));
    }
    let mut data = x.to_vec();
    fft_in_place(&mut data);
    Ok(data)
}

/// Inverse DFT via conjugate-forward-conjugate, scaled by 1/N.
pub fn ifft(x: &[Complex]) -> Result<Vec<Complex>> {
    let conj: Vec<Complex> = x.iter().map(|c| c.conj()).collect();
    let transformed = fft(&conj)?;
    let n = x.len() as f64;
    Ok(transformed.iter().map(|c| c.conj() / n).collect())
}

fn fft_in_place(data: &mut [Complex]) {
    let n = data.len();
    if n <= 1 {
        return;
    }

    // Bit-reversal permutation.
    let shift = (n - 1).leading_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> shift;
        if i < j {
            data.swap(i, j);
        }
    }

    // Twiddle factors for the largest stage, strided for smaller ones.
    let step = -2.0 * std::f64::consts::PI / n as f64;
    let twiddles: Vec<Complex> = (0..n / 2)
        .map(|k| Complex::from_polar(1.0, step * k as f64))
        .collect();

    let mut width = 2;
    while width <= n {
        let half = width / 2;
        let stride = n / width;
        for start in (0..n).step_by(width) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let even = data[start + k];
                let odd = data[start + k + half] * w;
                data[start + k] = even + odd;
                data[start + k + half] = even - odd;
            }
        }
        width <<= 1;
    }
}

/// Spectral magnitudes of a sequence's residue-mass signal.
///
/// The per-residue average-mass signal is mean-removed, zero-padded to a
/// power of two no smaller than `2 * m` (so bin `m` always exists), and
/// transformed; the magnitudes of bins `1..=m`, divided by L, are
/// returned.
pub fn spectral_features(seq: &ProteinSequence, m: usize) -> Result<Vec<f64>> {
    if seq.len() < 2 {
        return Err(Error::Feature(format!(
            "sequence '{}' is too short for spectral features (L = {})",
            seq.id(),
            seq.len()
        )));
    }
    if m == 0 {
        return Err(Error::Config("spectral feature count m must be >= 1".into()));
    }
    let signal: Vec<f64> = seq
        .residues()
        .bytes()
        .map(|b| {
            residue_index(b)
                .map(|i| featurex::RESIDUE_MASS[i])
                .ok_or_else(|| {
                    Error::Feature(format!(
                        "non-standard residue '{}' in sequence '{}'",
                        b as char,
                        seq.id()
                    ))
                })
        })
        .collect::<Result<_>>()?;

    let len = signal.len();
    let mean = signal.iter().sum::<f64>() / len as f64;
    let padded = next_power_of_two(len.max(2 * m));
    let mut data = vec![Complex::new(0.0, 0.0); padded];
    for (slot, &v) in data.iter_mut().zip(&signal) {
        slot.re = v - mean;
    }
    let spectrum = fft(&data)?;
    Ok(spectrum[1..=m].iter().map(|c| c.norm() / len as f64).collect())
}

/// Per-feature intervals for one family, slack already applied.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyBand {
    pub family: String,
    pub bands: Vec<(f64, f64)>,
}

/// The Phase-1 prefilter state: per-family feature bands plus the global
/// min-max scaler used to map physico vectors into [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    /// One entry per family, ordered like the corpus family list.
    pub bands: Vec<FamilyBand>,
    /// Per-dimension (min, max) over the whole training corpus.
    pub scaler: Vec<(f64, f64)>,
    pub top_k: usize,
    pub slack: f64,
}

impl KnowledgeBase {
    pub fn families(&self) -> Vec<&str> {
        self.bands.iter().map(|b| b.family.as_str()).collect()
    }

    /// Scale a feature vector into [0, 1] per dimension, clamping values
    /// outside the training range. Degenerate dimensions map to 0.5.
    pub fn scale(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.scaler)
            .map(|(&x, &(lo, hi))| {
                if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                    0.5
                } else {
                    ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
                }
            })
            .collect()
    }
}

/// Smallest number of sequences a family needs for band construction.
pub const MIN_FAMILY_SIZE: usize = 4;

/// Band of one feature series under top-k spectral truncation.
///
/// Returns the interval `[dc - h, dc + h]` clamped to the raw range of
/// the series, where `dc` is the zero-frequency level of the padded
/// series and `h` is the summed amplitude of the retained non-DC
/// frequency groups (the strongest `top_k - 1` of them; the DC group is
/// always retained). `h` grows with `top_k`, so the band widens
/// monotonically, reaching exactly the raw range when nothing is dropped.
fn series_band(series: &[f64], top_k: usize) -> (f64, f64) {
    let n = series.len();
    let raw_min = series.iter().cloned().fold(f64::INFINITY, f64::min);
    let raw_max = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let padded = next_power_of_two(n);
    let mut data = vec![Complex::new(0.0, 0.0); padded];
    for (slot, &v) in data.iter_mut().zip(series) {
        slot.re = v;
    }
    let spectrum = fft(&data).expect("padded length is a power of two");

    let dc = spectrum[0].re / padded as f64;

    // Amplitude of each non-DC frequency group in the reconstruction:
    // 2|X_k|/N for a conjugate pair, |X_{N/2}|/N for the Nyquist bin.
    let mut amplitudes: Vec<f64> = spectrum[1..padded / 2]
        .iter()
        .map(|c| 2.0 * c.norm() / padded as f64)
        .collect();
    if padded >= 2 {
        amplitudes.push(spectrum[padded / 2].norm() / padded as f64);
    }
    amplitudes.sort_by(|a, b| b.partial_cmp(a).expect("amplitudes are finite"));

    let keep = top_k.saturating_sub(1).min(amplitudes.len());
    let h: f64 = amplitudes[..keep].iter().sum();

    let lo = (dc - h).clamp(raw_min, raw_max);
    let hi = (dc + h).clamp(raw_min, raw_max);
    (lo, hi)
}

fn widen((lo, hi): (f64, f64), slack: f64) -> (f64, f64) {
    let margin = slack * (hi - lo);
    (lo - margin, hi + margin)
}

/// Build the knowledge base from a corpus, extracting physico vectors
/// internally. See [`build_family_bands_from_features`].
pub fn build_family_bands(
    corpus: &LabeledCorpus,
    top_k: usize,
    slack: f64,
) -> Result<KnowledgeBase> {
    let features: Vec<Vec<f64>> = corpus
        .records
        .iter()
        .map(|(seq, _)| featurex::physico_vector(seq).map(|f| f.to_vec()))
        .collect::<Result<_>>()?;
    build_family_bands_from_features(corpus, &features, top_k, slack)
}

/// Build the knowledge base from precomputed 43-dim feature vectors
/// (aligned with `corpus.records`).
pub fn build_family_bands_from_features(
    corpus: &LabeledCorpus,
    features: &[Vec<f64>],
    top_k: usize,
    slack: f64,
) -> Result<KnowledgeBase> {
    if top_k < 1 {
        return Err(Error::Config("top_k must be >= 1".into()));
    }
    if slack < 0.0 {
        return Err(Error::Config("slack must be >= 0".into()));
    }
    if features.len() != corpus.len() {
        return Err(Error::Dimension {
            expected: corpus.len(),
            found: features.len(),
        });
    }

    let dim = PhysicoFeatures::LEN;
    for f in features {
        if f.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: f.len(),
            });
        }
    }

    let mut scaler = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
    for f in features {
        for (slot, &v) in scaler.iter_mut().zip(f) {
            slot.0 = slot.0.min(v);
            slot.1 = slot.1.max(v);
        }
    }

    let mut bands = Vec::with_capacity(corpus.families.len());
    for family in &corpus.families {
        let member_rows: Vec<&Vec<f64>> = corpus
            .records
            .iter()
            .zip(features)
            .filter(|((_, label), _)| label == family)
            .map(|(_, f)| f)
            .collect();
        if member_rows.len() < MIN_FAMILY_SIZE {
            return Err(Error::FamilyTooSmall {
                family: family.clone(),
                size: member_rows.len(),
                min: MIN_FAMILY_SIZE,
            });
        }
        let mut feature_bands = Vec::with_capacity(dim);
        for d in 0..dim {
            let series: Vec<f64> = member_rows.iter().map(|f| f[d]).collect();
            feature_bands.push(widen(series_band(&series, top_k), slack));
        }
        bands.push(FamilyBand {
            family: family.clone(),
            bands: feature_bands,
        });
    }

    Ok(KnowledgeBase {
        bands,
        scaler,
        top_k,
        slack,
    })
}

/// Families whose bands contain at least a `theta` fraction of the
/// feature values; may be empty. The indices refer to `kb.bands` order.
pub fn candidate_families_strict(kb: &KnowledgeBase, features: &[f64], theta: f64) -> Vec<usize> {
    let dim = features.len();
    let mut survivors = Vec::new();
    for (i, family_band) in kb.bands.iter().enumerate() {
        let inside = family_band
            .bands
            .iter()
            .zip(features)
            .filter(|(&(lo, hi), &v)| lo <= v && v <= hi)
            .count();
        if inside as f64 >= theta * dim as f64 {
            survivors.push(i);
        }
    }
    survivors
}

/// Families whose bands contain at least a `theta` fraction of the
/// feature values. Fail-open: an empty result returns every family.
pub fn candidate_families(kb: &KnowledgeBase, features: &[f64], theta: f64) -> Vec<usize> {
    let survivors = candidate_families_strict(kb, features, theta);
    if survivors.is_empty() {
        (0..kb.bands.len()).collect()
    } else {
        survivors
    }
}
