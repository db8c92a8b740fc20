//! Rough-set classifier (Phase 4): discretized decision table, positive
//! region dependency, greedy approximate reduct, reduct-based decision
//! tree rules, and Hamming-ball neighborhood analysis.
//!
//! Labels are family indices; ties that the theory leaves open are broken
//! deterministically (lowest attribute index, earliest input order,
//! lowest label index — label indices follow the sorted family list, so
//! the last tie-break is lexicographic on family names).

use std::collections::HashMap;

use crate::error::{Error, Result};

/// A discretized training table: binned attribute rows plus the bin
/// boundaries needed to map continuous vectors at inference time.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTable {
    /// (attribute bin indices, decision label index) per training row.
    pub rows: Vec<(Vec<u16>, usize)>,
    pub n_attrs: usize,
    /// Requested bin count; duplicate boundaries may leave fewer.
    pub bins: usize,
    /// Per attribute: strictly increasing cut values. A value's bin is
    /// the number of cuts at or below it, so out-of-range values clamp
    /// to the edge bins naturally.
    pub boundaries: Vec<Vec<f64>>,
}

/// Equal-frequency discretization of continuous feature vectors.
///
/// Cuts are drawn at the sorted ranks `i * n / B`; duplicates merge and
/// cuts at the attribute minimum are dropped, so a constant attribute
/// ends up with a single effective bin (index 0).
pub fn discretize(vectors: &[Vec<f64>], labels: &[usize], bins: usize) -> Result<DecisionTable> {
    if vectors.is_empty() {
        return Err(Error::Training("discretize needs at least one row".into()));
    }
    if vectors.len() != labels.len() {
        return Err(Error::Dimension {
            expected: vectors.len(),
            found: labels.len(),
        });
    }
    if bins < 2 {
        return Err(Error::Config("bin count must be >= 2".into()));
    }
    let n_attrs = vectors[0].len();
    for v in vectors {
        if v.len() != n_attrs {
            return Err(Error::Dimension {
                expected: n_attrs,
                found: v.len(),
            });
        }
    }

    let n = vectors.len();
    let mut boundaries = Vec::with_capacity(n_attrs);
    for attr in 0..n_attrs {
        let mut values: Vec<f64> = vectors.iter().map(|v| v[attr]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).expect("feature values are finite"));
        let min = values[0];
        let mut cuts: Vec<f64> = Vec::new();
        for i in 1..bins {
            let cut = values[i * n / bins];
            if cut > min && cuts.last().is_none_or(|&last| cut > last) {
                cuts.push(cut);
            }
        }
        boundaries.push(cuts);
    }

    let table = DecisionTable {
        rows: Vec::new(),
        n_attrs,
        bins,
        boundaries,
    };
    let rows = vectors
        .iter()
        .zip(labels)
        .map(|(v, &label)| (table.bin_row(v), label))
        .collect();
    Ok(DecisionTable { rows, ..table })
}

impl DecisionTable {
    /// Bin index of one value: the number of cuts at or below it.
    pub fn bin_value(&self, attr: usize, value: f64) -> u16 {
        self.boundaries[attr].iter().filter(|&&c| c <= value).count() as u16
    }

    /// Bin a full feature vector with the stored boundaries.
    pub fn bin_row(&self, values: &[f64]) -> Vec<u16> {
        values
            .iter()
            .enumerate()
            .map(|(attr, &v)| self.bin_value(attr, v))
            .collect()
    }
}

/// Rows inside decision-pure indiscernibility classes under `attrs`.
fn positive_region_count(rows: &[(Vec<u16>, usize)], attrs: &[usize]) -> usize {
    // key -> (decision of first row, class size, still pure)
    let mut classes: HashMap<Vec<u16>, (usize, usize, bool)> = HashMap::new();
    for (row, decision) in rows {
        let key: Vec<u16> = attrs.iter().map(|&a| row[a]).collect();
        let entry = classes.entry(key).or_insert((*decision, 0, true));
        entry.1 += 1;
        if entry.0 != *decision {
            entry.2 = false;
        }
    }
    classes
        .values()
        .filter(|(_, _, pure)| *pure)
        .map(|(_, size, _)| size)
        .sum()
}

/// Dependency degree gamma: the positive-region fraction of the table
/// under the given attribute subset.
pub fn dependency(table: &DecisionTable, attrs: &[usize]) -> f64 {
    positive_region_count(&table.rows, attrs) as f64 / table.rows.len() as f64
}

/// A gamma-preserving attribute subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduct {
    pub attrs: Vec<usize>,
    pub gamma: f64,
}

/// Greedy approximate reduct: add the attribute with the best gamma gain
/// (ties to the lowest index) until the full-attribute gamma is reached,
/// then drop attributes (ascending index) whose removal changes nothing.
pub fn greedy_reduct(table: &DecisionTable) -> Reduct {
    let all: Vec<usize> = (0..table.n_attrs).collect();
    let target = positive_region_count(&table.rows, &all);

    let mut selected: Vec<usize> = Vec::new();
    let mut current = positive_region_count(&table.rows, &selected);
    while current < target {
        let mut best: Option<(usize, usize)> = None; // (count, attr)
        for attr in 0..table.n_attrs {
            if selected.contains(&attr) {
                continue;
            }
            let mut probe = selected.clone();
            probe.push(attr);
            let count = positive_region_count(&table.rows, &probe);
            if best.is_none_or(|(c, _)| count > c) {
                best = Some((count, attr));
            }
        }
        let (count, attr) = best.expect("unselected attributes remain while gamma is short");
        selected.push(attr);
        current = count;
    }
    selected.sort_unstable();

    // Backward prune in ascending index order.
    let mut pruned = selected.clone();
    for &attr in &selected {
        let probe: Vec<usize> = pruned.iter().copied().filter(|&a| a != attr).collect();
        if positive_region_count(&table.rows, &probe) == target {
            pruned = probe;
        }
    }

    Reduct {
        attrs: pruned,
        gamma: target as f64 / table.rows.len() as f64,
    }
}

/// One decision rule: bin-equality conditions on reduct attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub conditions: Vec<(usize, u16)>,
    pub label: usize,
    pub support: usize,
}

/// Rules extracted from the reduct-based decision tree, in emission
/// (depth-first path) order.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleBase {
    pub rules: Vec<Rule>,
}

/// Reduct-based decision tree: ID3 splits restricted to the reduct.
#[derive(Debug, Clone, PartialEq)]
pub enum RdtNode {
    Leaf {
        label: usize,
        support: usize,
    },
    Split {
        attr: usize,
        /// (bin value, subtree), sorted by bin value.
        children: Vec<(u16, RdtNode)>,
    },
}

fn entropy(rows: &[&(Vec<u16>, usize)]) -> f64 {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for (_, d) in rows {
        *counts.entry(*d).or_default() += 1;
    }
    let n = rows.len() as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Majority label; ties go to the label appearing earliest in row order.
fn majority_label(rows: &[&(Vec<u16>, usize)]) -> usize {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for (_, d) in rows {
        *counts.entry(*d).or_default() += 1;
    }
    let best = *counts.values().max().expect("rows is nonempty");
    for (_, d) in rows {
        if counts[d] == best {
            return *d;
        }
    }
    unreachable!("some label attains the maximum count")
}

type RowRef<'a> = &'a (Vec<u16>, usize);

fn grow_tree(rows: Vec<RowRef<'_>>, available: &[usize]) -> RdtNode {
    let pure = rows.iter().all(|(_, d)| *d == rows[0].1);
    if rows.len() < 2 || pure || available.is_empty() {
        return RdtNode::Leaf {
            label: majority_label(&rows),
            support: rows.len(),
        };
    }

    let base = entropy(&rows);
    let mut best: Option<(f64, usize)> = None;
    for &attr in available {
        let mut groups: HashMap<u16, Vec<&(Vec<u16>, usize)>> = HashMap::new();
        for row in &rows {
            groups.entry(row.0[attr]).or_default().push(row);
        }
        let weighted: f64 = groups
            .values()
            .map(|g| g.len() as f64 / rows.len() as f64 * entropy(g))
            .sum();
        let gain = base - weighted;
        // Attributes are scanned in ascending order, so requiring a
        // strictly better gain breaks ties toward the lowest index.
        let better = match best {
            Some((g, _)) => gain > g + 1e-12,
            None => true,
        };
        if better {
            best = Some((gain, attr));
        }
    }
    let (_, attr) = best.expect("available is nonempty");

    let remaining: Vec<usize> = available.iter().copied().filter(|&a| a != attr).collect();
    let mut groups: Vec<(u16, Vec<RowRef<'_>>)> = Vec::new();
    for row in rows {
        let value = row.0[attr];
        match groups.iter_mut().find(|(v, _)| *v == value) {
            Some((_, g)) => g.push(row),
            None => groups.push((value, vec![row])),
        }
    }
    groups.sort_by_key(|(v, _)| *v);

    RdtNode::Split {
        attr,
        children: groups
            .into_iter()
            .map(|(v, g)| (v, grow_tree(g, &remaining)))
            .collect(),
    }
}

/// Grow the reduct-based decision tree for a table.
pub fn build_rdt_tree(table: &DecisionTable, reduct: &Reduct) -> RdtNode {
    grow_tree(table.rows.iter().collect(), &reduct.attrs)
}

fn emit_rules(node: &RdtNode, path: &mut Vec<(usize, u16)>, out: &mut Vec<Rule>) {
    match node {
        RdtNode::Leaf { label, support } => out.push(Rule {
            conditions: path.clone(),
            label: *label,
            support: *support,
        }),
        RdtNode::Split { attr, children } => {
            for (value, child) in children {
                path.push((*attr, *value));
                emit_rules(child, path, out);
                path.pop();
            }
        }
    }
}

/// Build the rule base: one rule per root-to-leaf path of the RDT.
pub fn build_rdt(table: &DecisionTable, reduct: &Reduct) -> RuleBase {
    let tree = build_rdt_tree(table, reduct);
    let mut rules = Vec::new();
    emit_rules(&tree, &mut Vec::new(), &mut rules);
    RuleBase { rules }
}

/// Follow the tree for a binned row; `None` when the row's bin value has
/// no branch.
pub fn tree_classify(node: &RdtNode, row: &[u16]) -> Option<usize> {
    match node {
        RdtNode::Leaf { label, .. } => Some(*label),
        RdtNode::Split { attr, children } => children
            .iter()
            .find(|(v, _)| *v == row[*attr])
            .and_then(|(_, child)| tree_classify(child, row)),
    }
}

/// First matching rule by support (descending), then emission order.
/// `None` means no rule path covers the row.
pub fn rule_classify(rules: &RuleBase, row: &[u16]) -> Option<usize> {
    let mut order: Vec<usize> = (0..rules.rules.len()).collect();
    order.sort_by(|&a, &b| {
        rules.rules[b]
            .support
            .cmp(&rules.rules[a].support)
            .then(a.cmp(&b))
    });
    for idx in order {
        let rule = &rules.rules[idx];
        if rule.conditions.iter().all(|&(attr, v)| row[attr] == v) {
            return Some(rule.label);
        }
    }
    None
}

/// Majority vote over the Hamming ball of radius `r` on reduct
/// attributes. An empty ball grows by 1 until it captures a neighbor
/// (guaranteed at radius `|reduct|`). Vote ties go to the label with
/// more rows in the whole table, then to the lowest label index.
/// Returns the label and the neighbor-majority fraction.
pub fn neighborhood_classify(
    table: &DecisionTable,
    reduct_attrs: &[usize],
    row: &[u16],
    r: usize,
) -> (usize, f64) {
    let distances: Vec<usize> = table
        .rows
        .iter()
        .map(|(train, _)| {
            reduct_attrs
                .iter()
                .filter(|&&a| train[a] != row[a])
                .count()
        })
        .collect();

    let mut radius = r.min(reduct_attrs.len());
    let neighbors: Vec<usize> = loop {
        let hits: Vec<usize> = distances
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= radius)
            .map(|(i, _)| i)
            .collect();
        if !hits.is_empty() {
            break hits;
        }
        radius += 1;
    };

    let mut votes: HashMap<usize, usize> = HashMap::new();
    for &i in &neighbors {
        *votes.entry(table.rows[i].1).or_default() += 1;
    }
    let mut totals: HashMap<usize, usize> = HashMap::new();
    for (_, d) in &table.rows {
        *totals.entry(*d).or_default() += 1;
    }

    let mut ranked: Vec<(usize, usize)> = votes.into_iter().collect();
    ranked.sort_by(|&(la, va), &(lb, vb)| {
        vb.cmp(&va)
            .then(totals[&lb].cmp(&totals[&la]))
            .then(la.cmp(&lb))
    });
    let (label, vote) = ranked[0];
    (label, vote as f64 / neighbors.len() as f64)
}
