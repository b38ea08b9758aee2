//! Gradient-boosted regression trees with squared loss.
//!
//! Trees are grown level by level with exact greedy split search. Each
//! feature's rows are sorted once per fit; a level scans every feature's
//! sorted order once, accumulating left-hand sums for all frontier nodes at
//! the same time. Candidate thresholds sit midway between consecutive
//! distinct values; a candidate replaces the incumbent only on strictly
//! larger gain, so ties go to the smaller feature index, then the smaller
//! threshold.

use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub tree_count: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            tree_count: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 5,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "learning_rate {} outside (0, 1]",
                self.learning_rate
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut ix = 0;
        loop {
            match self.nodes[ix] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => ix = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], ix: usize) -> usize {
            match nodes[ix] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees {
    pub base: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl BoostedTrees {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.base
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict_row(row))
                .sum::<f64>()
    }
}

pub fn fit(rows: &FeatureMatrix, params: &TreeParams) -> Result<BoostedTrees> {
    fit_traced(rows, params, |_| {})
}

/// Fit, calling `on_stage` with the training predictions after the base
/// value and after every tree.
pub fn fit_traced(
    rows: &FeatureMatrix,
    params: &TreeParams,
    mut on_stage: impl FnMut(&[f64]),
) -> Result<BoostedTrees> {
    params.validate()?;
    let n = rows.len();
    let y = rows.targets();
    let base = y.iter().sum::<f64>() / n as f64;
    let columns = Columns::new(rows);
    let mut pred = vec![base; n];
    on_stage(&pred);
    let mut trees = Vec::with_capacity(params.tree_count);
    let mut residual = vec![0.0; n];
    let mut node_of = vec![0u32; n];
    let mut sorted_residual = vec![vec![0.0; n]; columns.order.len()];
    for _ in 0..params.tree_count {
        for ((r, t), p) in residual.iter_mut().zip(y).zip(&pred) {
            *r = t - p;
        }
        for (dst, order) in sorted_residual.iter_mut().zip(&columns.order) {
            for (d, &row) in dst.iter_mut().zip(order) {
                *d = residual[row as usize];
            }
        }
        let tree = grow(&columns, &residual, &sorted_residual, params, &mut node_of);
        for (p, &node) in pred.iter_mut().zip(&node_of) {
            if let Node::Leaf { value } = tree.nodes[node as usize] {
                *p += params.learning_rate * value;
            }
        }
        trees.push(tree);
        on_stage(&pred);
    }
    Ok(BoostedTrees {
        base,
        learning_rate: params.learning_rate,
        trees,
    })
}

/// Column-major copy of the design plus per-feature sorted row orders and
/// the column values in that order.
struct Columns {
    values: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
    sorted: Vec<Vec<f64>>,
}

impl Columns {
    fn new(rows: &FeatureMatrix) -> Self {
        let p = rows.arity();
        let values: Vec<Vec<f64>> = (0..p)
            .map(|f| rows.rows().map(|r| r[f]).collect())
            .collect();
        let order = values
            .iter()
            .map(|col| {
                let mut ix: Vec<u32> = (0..col.len() as u32).collect();
                ix.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                ix
            })
            .collect::<Vec<Vec<u32>>>();
        let sorted = values
            .iter()
            .zip(&order)
            .map(|(col, ix)| ix.iter().map(|&r| col[r as usize]).collect())
            .collect();
        Self {
            values,
            order,
            sorted,
        }
    }
}

#[derive(Clone, Copy)]
struct NodeStats {
    sum: f64,
    count: usize,
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

#[derive(Clone, Copy)]
struct Scan {
    left_sum: f64,
    left_count: usize,
    last: f64,
}

fn grow(
    columns: &Columns,
    residual: &[f64],
    sorted_residual: &[Vec<f64>],
    params: &TreeParams,
    node_of: &mut [u32],
) -> Tree {
    node_of.iter_mut().for_each(|v| *v = 0);
    let total = NodeStats {
        sum: residual.iter().sum(),
        count: residual.len(),
    };
    let mut stats = vec![total];
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut frontier: Vec<usize> = vec![0];
    let min_leaf = params.min_samples_leaf;

    for _ in 0..params.max_depth {
        // Slot in `frontier` for every node id, or u32::MAX if not splittable.
        let mut slot_of = vec![u32::MAX; nodes.len()];
        let active: Vec<usize> = frontier
            .iter()
            .copied()
            .filter(|&id| stats[id].count >= 2 * min_leaf)
            .collect();
        if active.is_empty() {
            break;
        }
        for (s, &id) in active.iter().enumerate() {
            slot_of[id] = s as u32;
        }
        let mut best: Vec<Option<Candidate>> = vec![None; active.len()];
        for (feature, order) in columns.order.iter().enumerate() {
            let col = &columns.sorted[feature];
            let res = &sorted_residual[feature];
            let mut scans = vec![
                Scan {
                    left_sum: 0.0,
                    left_count: 0,
                    last: f64::NAN,
                };
                active.len()
            ];
            for (i, &row) in order.iter().enumerate() {
                let slot = slot_of[node_of[row as usize] as usize];
                if slot == u32::MAX {
                    continue;
                }
                let s = slot as usize;
                let scan = &mut scans[s];
                let x = col[i];
                let parent = stats[active[s]];
                let right_count = parent.count - scan.left_count;
                if scan.left_count >= min_leaf && right_count >= min_leaf && x > scan.last {
                    let right_sum = parent.sum - scan.left_sum;
                    let gain = scan.left_sum * scan.left_sum / scan.left_count as f64
                        + right_sum * right_sum / right_count as f64
                        - parent.sum * parent.sum / parent.count as f64;
                    if best[s].is_none_or(|b| gain > b.gain) {
                        let mid = 0.5 * (scan.last + x);
                        let threshold = if mid < x { mid } else { scan.last };
                        best[s] = Some(Candidate {
                            gain,
                            feature,
                            threshold,
                        });
                    }
                }
                scan.left_sum += res[i];
                scan.left_count += 1;
                scan.last = x;
            }
        }

        let mut next_frontier = Vec::new();
        let mut split_of = vec![None; nodes.len()];
        for (s, &id) in active.iter().enumerate() {
            let Some(c) = best[s] else { continue };
            let parent = stats[id];
            let floor = 1e-12 * parent.sum.abs().max(1.0);
            if c.gain <= floor {
                continue;
            }
            let left = nodes.len();
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            stats.push(NodeStats { sum: 0.0, count: 0 });
            stats.push(NodeStats { sum: 0.0, count: 0 });
            nodes[id] = Node::Split {
                feature: c.feature,
                threshold: c.threshold,
                left,
                right: left + 1,
            };
            split_of[id] = Some((c.feature, c.threshold, left));
            next_frontier.push(left);
            next_frontier.push(left + 1);
        }
        if next_frontier.is_empty() {
            break;
        }
        for (row, node) in node_of.iter_mut().enumerate() {
            if let Some((feature, threshold, left)) = split_of[*node as usize] {
                let child = if columns.values[feature][row] <= threshold {
                    left
                } else {
                    left + 1
                };
                *node = child as u32;
                stats[child].sum += residual[row];
                stats[child].count += 1;
            }
        }
        frontier = next_frontier;
    }

    for (id, node) in nodes.iter_mut().enumerate() {
        if let Node::Leaf { value } = node {
            let s = stats[id];
            *value = if s.count == 0 { 0.0 } else { s.sum / s.count as f64 };
        }
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(xs: &[f64], ys: &[f64]) -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        FeatureMatrix::from_rows(1, &rows, ys).unwrap()
    }

    #[test]
    fn zero_trees_predict_the_mean() {
        let m = matrix(&[1.0, 2.0, 3.0, 4.0], &[2.0, 4.0, 6.0, 8.0]);
        let model = fit(&m, &TreeParams { tree_count: 0, ..Default::default() }).unwrap();
        assert_eq!(model.predict_row(&[100.0]), 5.0);
        assert!(model.trees.is_empty());
    }

    #[test]
    fn single_stump_on_two_clusters() {
        // Base 5, residuals -5 / +5, the optimal stump splits at x = 0 with leaves -5 / +5.
        let xs = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0];
        let ys = [0.0, 0.0, 0.0, 10.0, 10.0, 10.0];
        let m = matrix(&xs, &ys);
        for lr in [1.0, 0.5, 0.1] {
            let params = TreeParams {
                tree_count: 1,
                max_depth: 1,
                learning_rate: lr,
                min_samples_leaf: 1,
            };
            let model = fit(&m, &params).unwrap();
            match model.trees[0].nodes[0] {
                Node::Split { feature, threshold, .. } => {
                    assert_eq!(feature, 0);
                    assert_eq!(threshold, 0.0);
                }
                _ => panic!("expected a split"),
            }
            assert!((model.predict_row(&[-2.0]) - (5.0 - 5.0 * lr)).abs() < 1e-12);
            assert!((model.predict_row(&[2.0]) - (5.0 + 5.0 * lr)).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_prefer_smaller_feature() {
        // Both features separate the targets identically.
        let rows: Vec<Vec<f64>> = (0..8).map(|k| vec![k as f64, k as f64]).collect();
        let ys: Vec<f64> = (0..8).map(|k| if k < 4 { 0.0 } else { 1.0 }).collect();
        let m = FeatureMatrix::from_rows(2, &rows, &ys).unwrap();
        let params = TreeParams {
            tree_count: 1,
            max_depth: 1,
            learning_rate: 1.0,
            min_samples_leaf: 1,
        };
        let model = fit(&m, &params).unwrap();
        assert!(matches!(model.trees[0].nodes[0], Node::Split { feature: 0, threshold, .. } if threshold == 3.5));
    }

    #[test]
    fn depth_and_leaf_size_are_respected() {
        let xs: Vec<f64> = (0..40).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 0.7).sin()).collect();
        let m = matrix(&xs, &ys);
        let params = TreeParams {
            tree_count: 3,
            max_depth: 2,
            learning_rate: 0.5,
            min_samples_leaf: 7,
        };
        let model = fit(&m, &params).unwrap();
        for tree in &model.trees {
            assert!(tree.depth() <= 2);
        }
        let mut counts = std::collections::HashMap::new();
        for x in &xs {
            let mut ix = 0;
            while let Node::Split { feature: _, threshold, left, right } = model.trees[0].nodes[ix] {
                ix = if *x <= threshold { left } else { right };
            }
            *counts.entry(ix).or_insert(0) += 1;
        }
        assert!(counts.values().all(|&c| c >= 7));
    }

    #[test]
    fn constant_target_gives_no_splits() {
        let m = matrix(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[3.0; 6]);
        let model = fit(&m, &TreeParams { min_samples_leaf: 1, ..Default::default() }).unwrap();
        assert!(model.trees.iter().all(|t| t.nodes.len() == 1));
        assert_eq!(model.predict_row(&[9.0]), 3.0);
    }

    #[test]
    fn rejects_bad_learning_rate() {
        let m = matrix(&[1.0, 2.0], &[1.0, 2.0]);
        for lr in [0.0, 1.5, f64::NAN] {
            assert!(fit(&m, &TreeParams { learning_rate: lr, ..Default::default() }).is_err());
        }
    }
}
