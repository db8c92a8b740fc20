//! Per-sequence feature extraction.
//!
//! Computes every feature the downstream classifiers consume:
//!
//! - **Molecular weight** — sum of average residue masses plus one water
//! - **Isoelectric point** — pH of zero net charge via Henderson-Hasselbalch
//!   bisection
//! - **Amino acid composition** — 20 fractions
//! - **Hydropathy C/T/D** — composition, transition, and distribution over a
//!   3-class partition (21 values)
//! - **2-gram** — 400 normalized adjacent-pair counts
//! - **Exchange-group 2-gram** — 36 normalized pair counts over the Dayhoff
//!   6-letter alphabet

use crate::error::{Error, Result};
use crate::seqio::{residue_index, ProteinSequence};

/// Average (isotope-weighted) residue masses in daltons, Expasy values,
/// indexed by [`residue_index`].
pub const RESIDUE_MASS: [f64; 20] = [
    71.0788,  // A
    103.1388, // C
    115.0886, // D
    129.1155, // E
    147.1766, // F
    57.0519,  // G
    137.1411, // H
    113.1594, // I
    128.1741, // K
    113.1594, // L
    131.1926, // M
    114.1038, // N
    97.1167,  // P
    128.1307, // Q
    156.1875, // R
    87.0782,  // S
    101.1051, // T
    99.1326,  // V
    186.2132, // W
    163.1760, // Y
];

/// Mass of one water molecule, added once per chain.
pub const WATER_MASS: f64 = 18.01524;

// pKa values (EMBOSS set).
const PKA_NTERM: f64 = 8.6;
const PKA_CTERM: f64 = 3.6;
const PKA_C: f64 = 8.5;
const PKA_D: f64 = 3.9;
const PKA_E: f64 = 4.1;
const PKA_H: f64 = 6.5;
const PKA_K: f64 = 10.8;
const PKA_R: f64 = 12.5;
const PKA_Y: f64 = 10.1;

/// Hydropathy class of a residue: 0 hydrophobic, 1 neutral, 2 polar.
/// Kyte-Doolittle-derived 3-class partition used by C/T/D descriptors.
pub fn hydro_class(aa: u8) -> Option<usize> {
    match aa {
        b'C' | b'F' | b'I' | b'L' | b'M' | b'V' | b'W' => Some(0),
        b'A' | b'G' | b'H' | b'P' | b'S' | b'T' | b'Y' => Some(1),
        b'R' | b'K' | b'E' | b'D' | b'Q' | b'N' => Some(2),
        _ => None,
    }
}

/// Dayhoff exchange group of a residue, 0-5.
pub fn exchange_group(aa: u8) -> Option<usize> {
    match aa {
        b'H' | b'R' | b'K' => Some(0),
        b'D' | b'E' | b'N' | b'Q' => Some(1),
        b'C' => Some(2),
        b'S' | b'T' | b'P' | b'A' | b'G' => Some(3),
        b'M' | b'I' | b'L' | b'V' => Some(4),
        b'F' | b'Y' | b'W' => Some(5),
        _ => None,
    }
}

/// The physicochemical feature block: weight, pI, composition, and
/// hydropathy C/T/D, 43 values in a fixed concatenation order.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicoFeatures {
    pub weight: f64,
    pub isoelectric_point: f64,
    pub aac: [f64; 20],
    pub hydro_c: [f64; 3],
    pub hydro_t: [f64; 3],
    pub hydro_d: [f64; 15],
}

impl PhysicoFeatures {
    /// Number of values in the flattened layout.
    pub const LEN: usize = 43;

    /// Flatten in the fixed order: W, pI, aac, C, T, D.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::LEN);
        v.push(self.weight);
        v.push(self.isoelectric_point);
        v.extend_from_slice(&self.aac);
        v.extend_from_slice(&self.hydro_c);
        v.extend_from_slice(&self.hydro_t);
        v.extend_from_slice(&self.hydro_d);
        v
    }
}

/// Normalized counts of adjacent ordered residue pairs; index of pair
/// (a, b) is `20 * residue_index(a) + residue_index(b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramVector {
    pub values: Vec<f64>,
}

impl GramVector {
    pub const LEN: usize = 400;
}

/// Normalized counts of adjacent ordered exchange-group pairs; index of
/// pair (g, h) is `6 * g + h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeGramVector {
    pub values: Vec<f64>,
}

impl ExchangeGramVector {
    pub const LEN: usize = 36;
}

fn residue_indices(seq: &ProteinSequence) -> Result<Vec<usize>> {
    seq.residues()
        .bytes()
        .map(|b| {
            residue_index(b).ok_or_else(|| {
                Error::Feature(format!(
                    "non-standard residue '{}' in sequence '{}'",
                    b as char,
                    seq.id()
                ))
            })
        })
        .collect()
}

/// Molecular weight in daltons: residue masses plus one water.
pub fn molecular_weight(seq: &ProteinSequence) -> Result<f64> {
    let idx = residue_indices(seq)?;
    Ok(idx.iter().map(|&i| RESIDUE_MASS[i]).sum::<f64>() + WATER_MASS)
}

/// Henderson-Hasselbalch net charge of a sequence at the given pH.
///
/// Positive groups: N-terminus and H/K/R side chains. Negative groups:
/// C-terminus and D/E/C/Y side chains. Strictly decreasing in pH.
pub fn net_charge(seq: &ProteinSequence, ph: f64) -> f64 {
    let positive = |pka: f64| 1.0 / (1.0 + 10f64.powf(ph - pka));
    let negative = |pka: f64| -1.0 / (1.0 + 10f64.powf(pka - ph));

    let mut charge = positive(PKA_NTERM) + negative(PKA_CTERM);
    for b in seq.residues().bytes() {
        charge += match b {
            b'H' => positive(PKA_H),
            b'K' => positive(PKA_K),
            b'R' => positive(PKA_R),
            b'D' => negative(PKA_D),
            b'E' => negative(PKA_E),
            b'C' => negative(PKA_C),
            b'Y' => negative(PKA_Y),
            _ => 0.0,
        };
    }
    charge
}

/// Isoelectric point: the pH at which [`net_charge`] is zero, found by
/// bisection on [0, 14] to an interval shorter than 1e-4.
///
/// All pKa values lie inside (0, 14), so the charge is positive at pH 0
/// and negative at pH 14; the bracket is always valid.
pub fn isoelectric_point(seq: &ProteinSequence) -> Result<f64> {
    residue_indices(seq)?;
    let mut lo = 0.0f64;
    let mut hi = 14.0f64;
    while hi - lo >= 1e-4 {
        let mid = 0.5 * (lo + hi);
        if net_charge(seq, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Hydropathy composition / transition / distribution descriptors.
///
/// - C: per-class residue fractions (3 values).
/// - T: fractions of between-class adjacent pairs by unordered class pair
///   (0,1), (0,2), (1,2), normalized over the between-class pairs so the
///   three values sum to 1; all zero when no between-class pair exists
///   (single-class sequences and L = 1).
/// - D: per class, the 1-based positions of the 1st, 25th-percentile,
///   50th, 75th and last occurrence, each divided by L; zeros for absent
///   classes (15 values).
pub fn hydropathy_ctd(seq: &ProteinSequence) -> Result<([f64; 3], [f64; 3], [f64; 15])> {
    let classes: Vec<usize> = seq
        .residues()
        .bytes()
        .map(|b| {
            hydro_class(b).ok_or_else(|| {
                Error::Feature(format!(
                    "non-standard residue '{}' in sequence '{}'",
                    b as char,
                    seq.id()
                ))
            })
        })
        .collect::<Result<_>>()?;
    let len = classes.len() as f64;

    let mut comp = [0.0f64; 3];
    for &c in &classes {
        comp[c] += 1.0;
    }
    for c in comp.iter_mut() {
        *c /= len;
    }

    let mut trans_counts = [0usize; 3];
    for pair in classes.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a != b {
            let key = match (a.min(b), a.max(b)) {
                (0, 1) => 0,
                (0, 2) => 1,
                _ => 2, // (1, 2)
            };
            trans_counts[key] += 1;
        }
    }
    let total_trans: usize = trans_counts.iter().sum();
    let mut trans = [0.0f64; 3];
    if total_trans > 0 {
        for (t, &c) in trans.iter_mut().zip(&trans_counts) {
            *t = c as f64 / total_trans as f64;
        }
    }

    let mut dist = [0.0f64; 15];
    for class in 0..3 {
        let occurrences: Vec<usize> = classes
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == class)
            .map(|(i, _)| i + 1)
            .collect();
        let n = occurrences.len();
        if n == 0 {
            continue;
        }
        // Occurrence ranks for the five checkpoints: 1st, ceil(n/4),
        // ceil(n/2), ceil(3n/4), last (ranks clamped to at least 1).
        let ranks = [1, n.div_ceil(4), n.div_ceil(2), (3 * n).div_ceil(4), n];
        for (j, &rank) in ranks.iter().enumerate() {
            dist[class * 5 + j] = occurrences[rank.max(1) - 1] as f64 / len;
        }
    }

    Ok((comp, trans, dist))
}

/// Normalized adjacent ordered-pair counts over the 20-letter alphabet.
pub fn two_gram(seq: &ProteinSequence) -> Result<GramVector> {
    let idx = residue_indices(seq)?;
    if idx.len() < 2 {
        return Err(Error::Feature(format!(
            "sequence '{}' is too short for 2-gram features (L = {})",
            seq.id(),
            idx.len()
        )));
    }
    let mut values = vec![0.0f64; GramVector::LEN];
    for pair in idx.windows(2) {
        values[20 * pair[0] + pair[1]] += 1.0;
    }
    let pairs = (idx.len() - 1) as f64;
    for v in values.iter_mut() {
        *v /= pairs;
    }
    Ok(GramVector { values })
}

/// Normalized adjacent ordered-pair counts over the 6 exchange groups.
pub fn exchange_two_gram(seq: &ProteinSequence) -> Result<ExchangeGramVector> {
    let groups: Vec<usize> = seq
        .residues()
        .bytes()
        .map(|b| {
            exchange_group(b).ok_or_else(|| {
                Error::Feature(format!(
                    "non-standard residue '{}' in sequence '{}'",
                    b as char,
                    seq.id()
                ))
            })
        })
        .collect::<Result<_>>()?;
    if groups.len() < 2 {
        return Err(Error::Feature(format!(
            "sequence '{}' is too short for 2-gram features (L = {})",
            seq.id(),
            groups.len()
        )));
    }
    let mut values = vec![0.0f64; ExchangeGramVector::LEN];
    for pair in groups.windows(2) {
        values[6 * pair[0] + pair[1]] += 1.0;
    }
    let pairs = (groups.len() - 1) as f64;
    for v in values.iter_mut() {
        *v /= pairs;
    }
    Ok(ExchangeGramVector { values })
}

/// Assemble the full 43-value physicochemical block.
pub fn physico_vector(seq: &ProteinSequence) -> Result<PhysicoFeatures> {
    if seq.len() < 2 {
        return Err(Error::Feature(format!(
            "sequence '{}' is too short for the physico block (L = {})",
            seq.id(),
            seq.len()
        )));
    }
    let idx = residue_indices(seq)?;
    let weight = idx.iter().map(|&i| RESIDUE_MASS[i]).sum::<f64>() + WATER_MASS;
    let isoelectric_point = isoelectric_point(seq)?;

    let mut aac = [0.0f64; 20];
    for &i in &idx {
        aac[i] += 1.0;
    }
    for a in aac.iter_mut() {
        *a /= idx.len() as f64;
    }

    let (hydro_c, hydro_t, hydro_d) = hydropathy_ctd(seq)?;

    Ok(PhysicoFeatures {
        weight,
        isoelectric_point,
        aac,
        hydro_c,
        hydro_t,
        hydro_d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqio::AMINO_ACIDS;
    use proptest::prelude::*;

    fn seq(residues: &str) -> ProteinSequence {
        ProteinSequence::new("t", residues).unwrap()
    }

    // ── molecular weight ──

    #[test]
    fn weight_of_glycine() {
        let w = molecular_weight(&seq("G")).unwrap();
        assert!((w - 75.07).abs() < 0.01, "got {w}");
    }

    #[test]
    fn weight_of_diglycine() {
        let w = molecular_weight(&seq("GG")).unwrap();
        assert!((w - 132.12).abs() < 0.01, "got {w}");
    }

    #[test]
    fn weight_is_order_free() {
        let a = molecular_weight(&seq("ACDEFG")).unwrap();
        let b = molecular_weight(&seq("GFEDCA")).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn weight_rejects_nonstandard_residue() {
        assert!(molecular_weight(&seq("ACX")).is_err());
    }

    // ── isoelectric point ──

    #[test]
    fn charge_brackets_zero_for_every_residue() {
        for &aa in AMINO_ACIDS.iter() {
            let s = seq(&(aa as char).to_string().repeat(4));
            assert!(net_charge(&s, 0.0) > 0.0);
            assert!(net_charge(&s, 14.0) < 0.0);
        }
    }

    /// Independent oracle: scan a pH grid at step 1e-4 for the sign change.
    fn grid_scan_pi(s: &ProteinSequence) -> f64 {
        let mut ph = 0.0;
        while ph < 14.0 {
            if net_charge(s, ph + 1e-4) <= 0.0 {
                return ph + 0.5e-4;
            }
            ph += 1e-4;
        }
        panic!("no sign change found");
    }

    #[test]
    fn pi_matches_grid_scan_oracle() {
        for residues in ["GG", "DDKK", "ACDEFGHIKLMNPQRSTVWY", "HHHH"] {
            let s = seq(residues);
            let bisected = isoelectric_point(&s).unwrap();
            let scanned = grid_scan_pi(&s);
            assert!(
                (bisected - scanned).abs() < 1e-3,
                "{residues}: bisection {bisected} vs grid {scanned}"
            );
        }
    }

    #[test]
    fn acidic_pi_below_basic_pi() {
        let acidic = isoelectric_point(&seq("DDDD")).unwrap();
        let basic = isoelectric_point(&seq("KKKK")).unwrap();
        assert!(acidic < basic, "acidic {acidic} vs basic {basic}");
    }

    // ── hydropathy C/T/D ──

    #[test]
    fn ctd_all_hydrophobic() {
        let (c, t, d) = hydropathy_ctd(&seq("LLLL")).unwrap();
        assert_eq!(c, [1.0, 0.0, 0.0]);
        assert_eq!(t, [0.0, 0.0, 0.0]);
        let expected = [0.25, 0.25, 0.5, 0.75, 1.0];
        for (got, want) in d[..5].iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12, "{d:?}");
        }
        assert!(d[5..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ctd_single_class_has_zero_transitions() {
        for residues in ["CC", "AAAA", "RKEDQN"] {
            let (_, t, _) = hydropathy_ctd(&seq(residues)).unwrap();
            assert_eq!(t, [0.0, 0.0, 0.0], "{residues}");
        }
    }

    #[test]
    fn ctd_composition_invariant_under_doubling() {
        let s = "ACDLKRGHWV";
        let (c1, _, _) = hydropathy_ctd(&seq(s)).unwrap();
        let (c2, _, _) = hydropathy_ctd(&seq(&format!("{s}{s}"))).unwrap();
        for (a, b) in c1.iter().zip(&c2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ctd_length_one_is_all_zero_transitions() {
        let (c, t, _) = hydropathy_ctd(&seq("W")).unwrap();
        assert_eq!(c, [1.0, 0.0, 0.0]);
        assert_eq!(t, [0.0, 0.0, 0.0]);
    }

    // ── 2-gram ──

    #[test]
    fn two_gram_homopolymer() {
        let g = two_gram(&seq("AAA")).unwrap();
        assert!((g.values[0] - 1.0).abs() < 1e-12); // (A, A)
        assert!(g.values[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_gram_alternation() {
        let g = two_gram(&seq("ACAC")).unwrap();
        let ac = 20 * residue_index(b'A').unwrap() + residue_index(b'C').unwrap();
        let ca = 20 * residue_index(b'C').unwrap() + residue_index(b'A').unwrap();
        assert!((g.values[ac] - 2.0 / 3.0).abs() < 1e-12);
        assert!((g.values[ca] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_gram_requires_two_residues() {
        assert!(two_gram(&seq("A")).is_err());
    }

    // ── exchange 2-gram ──

    #[test]
    fn exchange_single_group() {
        let g = exchange_two_gram(&seq("KRH")).unwrap();
        assert!((g.values[0] - 1.0).abs() < 1e-12); // (e1, e1)
        assert!(g.values[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exchange_cross_group_pair() {
        let g = exchange_two_gram(&seq("KD")).unwrap();
        assert!((g.values[1] - 1.0).abs() < 1e-12); // (e1, e2) at 6*0+1
    }

    // ── physico vector ──

    #[test]
    fn physico_layout_is_43_values() {
        let v = physico_vector(&seq("ACDEFGHIKLMNPQRSTVWY")).unwrap().to_vec();
        assert_eq!(v.len(), PhysicoFeatures::LEN);
    }

    #[test]
    fn physico_is_deterministic() {
        let a = physico_vector(&seq("MNPQRSTVWY")).unwrap();
        let b = physico_vector(&seq("MNPQRSTVWY")).unwrap();
        assert_eq!(a.to_vec(), b.to_vec());
    }

    #[test]
    fn physico_gg_matches_per_feature_oracles() {
        let s = seq("GG");
        let f = physico_vector(&s).unwrap();
        assert!((f.weight - molecular_weight(&s).unwrap()).abs() < 1e-12);
        assert!((f.isoelectric_point - grid_scan_pi(&s)).abs() < 1e-3);
        assert!((f.aac[residue_index(b'G').unwrap()] - 1.0).abs() < 1e-12);
        assert_eq!(f.hydro_c, [0.0, 1.0, 0.0]);
        assert_eq!(f.hydro_t, [0.0, 0.0, 0.0]);
    }

    // ── randomized invariants ──

    fn arb_residues() -> impl Strategy<Value = String> {
        proptest::collection::vec(0usize..20, 2..120)
            .prop_map(|idx| idx.into_iter().map(|i| AMINO_ACIDS[i] as char).collect())
    }

    proptest! {
        #[test]
        fn normalization_invariants(residues in arb_residues()) {
            let s = seq(&residues);
            let f = physico_vector(&s).unwrap();
            prop_assert!(f.weight > 0.0);
            prop_assert!(f.isoelectric_point > 0.0 && f.isoelectric_point < 14.0);
            prop_assert!((f.aac.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!((f.hydro_c.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let t_sum: f64 = f.hydro_t.iter().sum();
            prop_assert!((t_sum - 1.0).abs() < 1e-9 || t_sum == 0.0);
            for class in 0..3 {
                let d = &f.hydro_d[class * 5..class * 5 + 5];
                for w in d.windows(2) {
                    prop_assert!(w[0] <= w[1] + 1e-12);
                }
                prop_assert!(d.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }

        #[test]
        fn gram_vectors_sum_to_one(residues in arb_residues()) {
            let s = seq(&residues);
            let g = two_gram(&s).unwrap();
            prop_assert!((g.values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(g.values.iter().all(|&v| v >= 0.0));
            let e = exchange_two_gram(&s).unwrap();
            prop_assert!((e.values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn charge_is_strictly_decreasing(residues in arb_residues()) {
            let s = seq(&residues);
            let mut prev = net_charge(&s, 0.0);
            let mut ph = 0.1;
            while ph <= 14.0 {
                let cur = net_charge(&s, ph);
                prop_assert!(cur < prev, "charge not decreasing at pH {ph}");
                prev = cur;
                ph += 0.1;
            }
        }

        #[test]
        fn two_gram_of_reverse_is_transpose(residues in arb_residues()) {
            let s = seq(&residues);
            let rev: String = residues.chars().rev().collect();
            let fwd = two_gram(&s).unwrap();
            let bwd = two_gram(&seq(&rev)).unwrap();
            for a in 0..20 {
                for b in 0..20 {
                    let diff = fwd.values[20 * a + b] - bwd.values[20 * b + a];
                    prop_assert!(diff.abs() < 1e-12);
                }
            }
        }
    }
}
