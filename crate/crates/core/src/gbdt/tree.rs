use serde::{Deserialize, Serialize};

use super::binning::{BinnedMatrix, BinningTable};
use super::split::{gain_improves, BinStats, LeafHistogram, SplitCandidate, SplitParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        bin: usize,
        /// Raw-value threshold: `value <= threshold` goes left.
        threshold: f64,
        /// Direction for non-finite inputs.
        default_left: bool,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A regression tree stored as a flat node array; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, features: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                    ..
                } => {
                    let v = features[*feature];
                    let go_left = if v.is_nan() { *default_left } else { v <= *threshold };
                    i = if go_left { *left } else { *right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn leaf_values(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { value } => Some(*value),
                _ => None,
            })
            .collect()
    }
}

/// One accepted split, optionally with the rows of the leaf that was split.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitRecord {
    pub tree: usize,
    pub node: usize,
    pub feature: usize,
    pub bin: usize,
    pub gain: f64,
    pub rows: Option<Vec<u32>>,
}

pub struct GrowParams {
    pub split: SplitParams,
    pub max_leaves: usize,
    pub learning_rate: f64,
}

struct OpenLeaf {
    node: usize,
    rows: Vec<u32>,
    total: BinStats,
    best: Option<SplitCandidate>,
}

/// Result of growing one tree: the tree and the leaf membership of every training row.
pub struct Grown {
    pub tree: Tree,
    /// `(leaf value, rows)` for each final leaf.
    pub leaves: Vec<(f64, Vec<u32>)>,
}

fn open_leaf(
    node: usize,
    rows: Vec<u32>,
    binned: &BinnedMatrix,
    n_bins: &[usize],
    grad: &[f64],
    hess: &[f64],
    params: &GrowParams,
) -> OpenLeaf {
    let hist = LeafHistogram::build(binned, n_bins, &rows, grad, hess);
    let best = if params.max_leaves > 1 {
        hist.best_split(&params.split)
    } else {
        None
    };
    OpenLeaf {
        node,
        rows,
        total: hist.total,
        best,
    }
}

/// Grows one tree leaf-wise: the open leaf with the highest split gain is
/// split next (ties go to the lower node id) until `max_leaves` is reached or
/// no leaf has a positive-gain split.
pub fn grow_tree(
    binned: &BinnedMatrix,
    bins: &BinningTable,
    grad: &[f64],
    hess: &[f64],
    params: &GrowParams,
    mut on_split: impl FnMut(usize, &SplitCandidate, &[u32]),
) -> Grown {
    let n_bins: Vec<usize> = (0..bins.n_features()).map(|f| bins.n_bins(f)).collect();
    let all_rows: Vec<u32> = (0..binned.n_rows as u32).collect();
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut open = vec![open_leaf(0, all_rows, binned, &n_bins, grad, hess, params)];

    while open.len() < params.max_leaves {
        let mut pick: Option<usize> = None;
        for (i, leaf) in open.iter().enumerate() {
            let Some(cand) = leaf.best else { continue };
            let better = match pick {
                None => true,
                Some(p) => {
                    let incumbent = &open[p];
                    let inc_gain = incumbent.best.expect("picked leaf has a split").gain;
                    gain_improves(cand.gain, inc_gain)
                        || (!gain_improves(inc_gain, cand.gain) && leaf.node < incumbent.node)
                }
            };
            if better {
                pick = Some(i);
            }
        }
        let Some(i) = pick else { break };
        let leaf = open.swap_remove(i);
        let split = leaf.best.expect("picked leaf has a split");
        on_split(leaf.node, &split, &leaf.rows);

        let column = &binned.columns[split.feature];
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
            leaf.rows.iter().partition(|r| (column[**r as usize] as usize) <= split.bin);

        let left_id = nodes.len();
        let right_id = left_id + 1;
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[leaf.node] = Node::Split {
            feature: split.feature,
            bin: split.bin,
            threshold: bins.edges[split.feature][split.bin],
            default_left: split.left.count >= split.right.count,
            left: left_id,
            right: right_id,
        };
        open.push(open_leaf(left_id, left_rows, binned, &n_bins, grad, hess, params));
        open.push(open_leaf(right_id, right_rows, binned, &n_bins, grad, hess, params));
    }

    open.sort_by_key(|l| l.node);
    let mut leaves = Vec::with_capacity(open.len());
    for leaf in open {
        let value = -leaf.total.grad / (leaf.total.hess + params.split.l2) * params.learning_rate;
        nodes[leaf.node] = Node::Leaf { value };
        leaves.push((value, leaf.rows));
    }
    Grown {
        tree: Tree { nodes },
        leaves,
    }
}
