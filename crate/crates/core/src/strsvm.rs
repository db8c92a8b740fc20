//! String-weighted features and the one-vs-rest soft-margin linear SVM
//! (Phase 3 discriminator).
//!
//! Sequences are mapped to one score per family: the mean log-odds weight
//! of their overlapping k-mers, where a k-mer's weight for family F is
//! `ln((count in F + pc) / (count in corpus + pc * V))` with V the number
//! of distinct observed k-mers. Sequences sharing many k-mers get close
//! feature vectors. A binary soft-margin SVM per family, trained by
//! sequential minimal optimization on the dual, separates each family
//! from the rest; positive margins drive candidate pruning in the
//! cascade.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::seqio::{LabeledCorpus, ProteinSequence};

/// Per-family log-odds weights for every k-mer observed in training.
#[derive(Debug, Clone, PartialEq)]
pub struct KmerWeightTable {
    pub k: usize,
    pub pseudocount: f64,
    pub n_families: usize,
    /// Number of distinct k-mers observed in the training corpus (V).
    pub distinct_kmers: usize,
    /// k-mer string -> one weight per family, in family-index order.
    pub weights: BTreeMap<String, Vec<f64>>,
}

impl KmerWeightTable {
    /// Weight of a k-mer never seen in training: counts are zero, so the
    /// smoothed log-odds collapses to `ln(pc / (pc * V))` for every family.
    pub fn unseen_weight(&self) -> f64 {
        (self.pseudocount / (self.pseudocount * self.distinct_kmers as f64)).ln()
    }
}

/// Count k-mers with overlap (stride 1) and compute per-family log-odds.
pub fn kmer_weights(corpus: &LabeledCorpus, k: usize, pseudocount: f64) -> Result<KmerWeightTable> {
    if k < 2 {
        return Err(Error::Config("k-mer length must be >= 2".into()));
    }
    if pseudocount <= 0.0 {
        return Err(Error::Config("pseudocount must be > 0".into()));
    }
    if corpus.is_empty() {
        return Err(Error::Training("k-mer weighting needs a nonempty corpus".into()));
    }
    let n_families = corpus.families.len();

    // kmer -> (per-family counts, total count)
    let mut counts: BTreeMap<String, (Vec<u64>, u64)> = BTreeMap::new();
    let mut any_long_enough = false;
    for (seq, label) in &corpus.records {
        let fam = corpus
            .family_index(label)
            .expect("corpus labels are in the family list");
        let bytes = seq.residues().as_bytes();
        if bytes.len() < k {
            continue;
        }
        any_long_enough = true;
        for window in bytes.windows(k) {
            let kmer = std::str::from_utf8(window).expect("residues are ASCII");
            let entry = counts
                .entry(kmer.to_string())
                .or_insert_with(|| (vec![0; n_families], 0));
            entry.0[fam] += 1;
            entry.1 += 1;
        }
    }
    if !any_long_enough {
        return Err(Error::Training(format!(
            "k = {k} is larger than every sequence in the corpus"
        )));
    }

    let v = counts.len() as f64;
    let weights = counts
        .into_iter()
        .map(|(kmer, (per_family, total))| {
            let w = per_family
                .iter()
                .map(|&c| ((c as f64 + pseudocount) / (total as f64 + pseudocount * v)).ln())
                .collect();
            (kmer, w)
        })
        .collect();

    Ok(KmerWeightTable {
        k,
        pseudocount,
        n_families,
        distinct_kmers: v as usize,
        weights,
    })
}

/// Mean per-family k-mer weight over a sequence's overlapping k-mers.
/// Output length equals the family count.
pub fn weighted_feature(seq: &ProteinSequence, table: &KmerWeightTable) -> Result<Vec<f64>> {
    let bytes = seq.residues().as_bytes();
    if bytes.len() < table.k {
        return Err(Error::Feature(format!(
            "sequence '{}' is shorter than k = {} (L = {})",
            seq.id(),
            table.k,
            bytes.len()
        )));
    }
    let unseen = table.unseen_weight();
    let mut acc = vec![0.0f64; table.n_families];
    let mut windows = 0usize;
    for window in bytes.windows(table.k) {
        let kmer = std::str::from_utf8(window).expect("residues are ASCII");
        match table.weights.get(kmer) {
            Some(w) => {
                for (a, &x) in acc.iter_mut().zip(w) {
                    *a += x;
                }
            }
            None => {
                for a in acc.iter_mut() {
                    *a += unseen;
                }
            }
        }
        windows += 1;
    }
    for a in acc.iter_mut() {
        *a /= windows as f64;
    }
    Ok(acc)
}

/// One binary separator: decision value is `weights . x + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// One-vs-rest linear SVM bank, one machine per family.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub dim: usize,
    pub c: f64,
    pub machines: Vec<BinarySvm>,
}

/// KKT tolerance used by the SMO solver.
pub const SMO_TOLERANCE: f64 = 1e-3;
const SMO_STEP_EPS: f64 = 1e-10;
const SMO_MAX_SWEEPS: usize = 2000;

struct SmoProblem<'a> {
    xs: &'a [Vec<f64>],
    ys: &'a [f64],
    gram: &'a [Vec<f64>],
    c: f64,
}

struct SmoState {
    alpha: Vec<f64>,
    /// Decision values u_i = sum_j alpha_j y_j K(i, j) - b.
    u: Vec<f64>,
    b: f64,
    /// Dual objective after each successful pair update (tests only).
    trace: Option<Vec<f64>>,
}

fn dual_objective(problem: &SmoProblem, alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alpha[j] == 0.0 {
                continue;
            }
            quad += alpha[i] * alpha[j] * problem.ys[i] * problem.ys[j] * problem.gram[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

fn take_step(problem: &SmoProblem, state: &mut SmoState, i: usize, j: usize) -> bool {
    if i == j {
        return false;
    }
    let (y1, y2) = (problem.ys[i], problem.ys[j]);
    let (alph1, alph2) = (state.alpha[i], state.alpha[j]);
    let e1 = state.u[i] - y1;
    let e2 = state.u[j] - y2;
    let s = y1 * y2;
    let c = problem.c;

    let (lo, hi) = if (y1 - y2).abs() > f64::EPSILON {
        ((alph2 - alph1).max(0.0), (c + alph2 - alph1).min(c))
    } else {
        ((alph1 + alph2 - c).max(0.0), (alph1 + alph2).min(c))
    };
    if hi - lo < SMO_STEP_EPS {
        return false;
    }

    let k11 = problem.gram[i][i];
    let k12 = problem.gram[i][j];
    let k22 = problem.gram[j][j];
    let eta = k11 + k22 - 2.0 * k12;

    let mut a2 = if eta > 0.0 {
        (alph2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
    } else {
        // Objective is linear (or concave-degenerate) along the segment:
        // evaluate both endpoints and move to the better one.
        let f1 = y1 * (e1 + state.b) - alph1 * k11 - s * alph2 * k12;
        let f2 = y2 * (e2 + state.b) - s * alph1 * k12 - alph2 * k22;
        let l1 = alph1 + s * (alph2 - lo);
        let h1 = alph1 + s * (alph2 - hi);
        let obj_lo =
            l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 + s * lo * l1 * k12;
        let obj_hi =
            h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 + s * hi * h1 * k12;
        if obj_lo < obj_hi - SMO_STEP_EPS {
            lo
        } else if obj_lo > obj_hi + SMO_STEP_EPS {
            hi
        } else {
            return false;
        }
    };
    if a2 < SMO_STEP_EPS {
        a2 = 0.0;
    } else if a2 > c - SMO_STEP_EPS {
        a2 = c;
    }
    if (a2 - alph2).abs() < SMO_STEP_EPS * (a2 + alph2 + SMO_STEP_EPS) {
        return false;
    }
    let a1 = alph1 + s * (alph2 - a2);

    // Threshold update (Platt's b1/b2 rule).
    let b1 = e1 + y1 * (a1 - alph1) * k11 + y2 * (a2 - alph2) * k12 + state.b;
    let b2 = e2 + y1 * (a1 - alph1) * k12 + y2 * (a2 - alph2) * k22 + state.b;
    let new_b = if a1 > 0.0 && a1 < c {
        b1
    } else if a2 > 0.0 && a2 < c {
        b2
    } else {
        0.5 * (b1 + b2)
    };

    let (d1, d2) = (a1 - alph1, a2 - alph2);
    let db = new_b - state.b;
    for t in 0..state.u.len() {
        state.u[t] += y1 * d1 * problem.gram[i][t] + y2 * d2 * problem.gram[j][t] - db;
    }
    state.alpha[i] = a1;
    state.alpha[j] = a2;
    state.b = new_b;

    if let Some(trace) = state.trace.as_mut() {
        trace.push(dual_objective(problem, &state.alpha));
    }
    true
}

/// Deterministic SMO: sweep for KKT violators in index order; the paired
/// multiplier maximizes |E1 - E2| (ties to the lowest index), falling
/// back to an index-order scan when that step cannot move.
fn smo_solve(problem: &SmoProblem, record_trace: bool) -> SmoState {
    let n = problem.xs.len();
    let mut state = SmoState {
        alpha: vec![0.0; n],
        u: vec![0.0; n],
        b: 0.0,
        trace: record_trace.then(Vec::new),
    };

    for _ in 0..SMO_MAX_SWEEPS {
        let mut changed = 0usize;
        for i in 0..n {
            let e_i = state.u[i] - problem.ys[i];
            let r = e_i * problem.ys[i];
            let violates = (r < -SMO_TOLERANCE && state.alpha[i] < problem.c)
                || (r > SMO_TOLERANCE && state.alpha[i] > 0.0);
            if !violates {
                continue;
            }
            let mut best_j = None;
            let mut best_gap = -1.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let gap = (e_i - (state.u[j] - problem.ys[j])).abs();
                if gap > best_gap {
                    best_gap = gap;
                    best_j = Some(j);
                }
            }
            let stepped = best_j.is_some_and(|j| take_step(problem, &mut state, i, j))
                || (0..n).any(|j| j != i && take_step(problem, &mut state, i, j));
            if stepped {
                changed += 1;
            }
        }
        if changed == 0 {
            break;
        }
    }
    state
}

/// Recover the primal machine from a solved dual state.
fn machine_from_state(xs: &[Vec<f64>], ys: &[f64], c: f64, state: &SmoState) -> BinarySvm {
    let dim = xs[0].len();
    let mut weights = vec![0.0; dim];
    for ((alpha, y), x) in state.alpha.iter().zip(ys).zip(xs) {
        if *alpha > 0.0 {
            for (w, &v) in weights.iter_mut().zip(x) {
                *w += alpha * y * v;
            }
        }
    }

    // Recover the bias from free support vectors when any exist; the
    // running SMO threshold covers the all-bound case.
    let mut free_bias = 0.0;
    let mut free = 0usize;
    for ((alpha, y), x) in state.alpha.iter().zip(ys).zip(xs) {
        if *alpha > SMO_STEP_EPS && *alpha < c - SMO_STEP_EPS {
            let wx: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum();
            free_bias += y - wx;
            free += 1;
        }
    }
    let bias = if free > 0 {
        free_bias / free as f64
    } else {
        -state.b
    };

    BinarySvm { weights, bias }
}

/// Train a single binary machine on +1/-1 labels, returning the model
/// together with the dual multipliers at termination (one per sample).
pub fn train_binary_svm(xs: &[Vec<f64>], ys: &[f64], c: f64) -> Result<(BinarySvm, Vec<f64>)> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::Training(
            "SVM training needs matched, nonempty features and labels".into(),
        ));
    }
    if c <= 0.0 {
        return Err(Error::Config("C must be > 0".into()));
    }
    if ys.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::Training("binary labels must be +1 or -1".into()));
    }
    let n = xs.len();
    let mut gram = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let dot: f64 = xs[i].iter().zip(&xs[j]).map(|(a, b)| a * b).sum();
            gram[i][j] = dot;
            gram[j][i] = dot;
        }
    }
    let problem = SmoProblem {
        xs,
        ys,
        gram: &gram,
        c,
    };
    let state = smo_solve(&problem, false);
    let machine = machine_from_state(xs, ys, c, &state);
    Ok((machine, state.alpha))
}

/// Train one-vs-rest machines for every family index in `0..n_families`.
/// Requires at least two distinct labels.
pub fn train_ovr_svm(
    xs: &[Vec<f64>],
    ys: &[usize],
    n_families: usize,
    c: f64,
) -> Result<SvmModel> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::Training(
            "SVM training needs matched, nonempty features and labels".into(),
        ));
    }
    if c <= 0.0 {
        return Err(Error::Config("C must be > 0".into()));
    }
    let dim = xs[0].len();
    for x in xs {
        if x.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: x.len(),
            });
        }
    }
    let mut present = vec![false; n_families];
    for &y in ys {
        if y >= n_families {
            return Err(Error::Training(format!(
                "label index {y} out of range (families: {n_families})"
            )));
        }
        present[y] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::Training(
            "one-vs-rest SVM needs at least two distinct labels".into(),
        ));
    }

    let n = xs.len();
    let mut gram = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let dot: f64 = xs[i].iter().zip(&xs[j]).map(|(a, b)| a * b).sum();
            gram[i][j] = dot;
            gram[j][i] = dot;
        }
    }

    let machines = (0..n_families)
        .map(|fam| {
            let ys_bin: Vec<f64> = ys
                .iter()
                .map(|&y| if y == fam { 1.0 } else { -1.0 })
                .collect();
            let problem = SmoProblem {
                xs,
                ys: &ys_bin,
                gram: &gram,
                c,
            };
            let state = smo_solve(&problem, false);
            machine_from_state(xs, &ys_bin, c, &state)
        })
        .collect();

    Ok(SvmModel { dim, c, machines })
}

impl SvmModel {
    /// Margin of family `fam` for a feature vector.
    pub fn margin(&self, fam: usize, x: &[f64]) -> f64 {
        let machine = &self.machines[fam];
        machine.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + machine.bias
    }
}

/// Keep the candidates with positive one-vs-rest margins. When none is
/// positive, keep the two best margins (one if only one candidate).
/// Returns the survivors plus the margin of every input candidate.
pub fn svm_prune(model: &SvmModel, x: &[f64], candidates: &[usize]) -> (Vec<usize>, Vec<f64>) {
    let margins: Vec<f64> = candidates.iter().map(|&f| model.margin(f, x)).collect();
    let mut survivors: Vec<usize> = candidates
        .iter()
        .zip(&margins)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&f, _)| f)
        .collect();
    if survivors.is_empty() {
        let mut ranked: Vec<(usize, f64)> =
            candidates.iter().copied().zip(margins.iter().copied()).collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("margins are finite")
                .then(a.0.cmp(&b.0))
        });
        survivors = ranked.iter().take(2).map(|&(f, _)| f).collect();
        survivors.sort_unstable();
    }
    (survivors, margins)
}
