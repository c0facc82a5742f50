//! CART classifier with Gini impurity over the five state features.

use serde::{Deserialize, Serialize};

use super::BcError;
use crate::world::{Action, FeatureVector, NUM_ACTIONS, NUM_FEATURES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Samples with `phi[feature] <= threshold` go to `left`.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { class: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub root: usize,
}

pub type LabeledSample = (FeatureVector, usize);

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn class_counts(data: &[LabeledSample], idx: &[usize]) -> Vec<usize> {
    let mut counts = vec![0; NUM_ACTIONS];
    for &i in idx {
        counts[data[i].1] += 1;
    }
    counts
}

/// Most frequent class, lowest index on ties.
fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn best_split(data: &[LabeledSample], idx: &[usize]) -> Option<SplitChoice> {
    let n = idx.len();
    let total = class_counts(data, idx);
    let mut best: Option<SplitChoice> = None;
    for feature in 0..NUM_FEATURES {
        let mut order = idx.to_vec();
        order.sort_by(|&a, &b| data[a].0 .0[feature].total_cmp(&data[b].0 .0[feature]));
        let mut left = vec![0; NUM_ACTIONS];
        let mut right = total.clone();
        for k in 0..n - 1 {
            let class = data[order[k]].1;
            left[class] += 1;
            right[class] -= 1;
            let lo = data[order[k]].0 .0[feature];
            let hi = data[order[k + 1]].0 .0[feature];
            if lo == hi {
                continue;
            }
            let nl = k + 1;
            let nr = n - nl;
            let impurity = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some(SplitChoice { feature, threshold, impurity });
            }
        }
    }
    best
}

fn grow(data: &[LabeledSample], idx: &[usize], nodes: &mut Vec<Node>) -> usize {
    let counts = class_counts(data, idx);
    let id = nodes.len();
    nodes.push(Node::Leaf { class: majority(&counts) });
    let parent = gini(&counts, idx.len());
    if parent == 0.0 {
        return id;
    }
    let Some(split) = best_split(data, idx) else {
        return id;
    };
    if split.impurity >= parent - 1e-12 {
        return id;
    }
    let (l, r): (Vec<usize>, Vec<usize>) =
        idx.iter().partition(|&&i| data[i].0 .0[split.feature] <= split.threshold);
    let left = grow(data, &l, nodes);
    let right = grow(data, &r, nodes);
    nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
    id
}

/// Greedy CART: split while a split lowers weighted Gini; leaves predict the
/// majority class. No depth limit.
pub fn fit_tree(dataset: &[LabeledSample]) -> Result<DecisionTree, BcError> {
    if dataset.is_empty() {
        return Err(BcError::EmptyDataset);
    }
    if let Some((_, c)) = dataset.iter().find(|(_, c)| *c >= NUM_ACTIONS) {
        return Err(BcError::InvalidLabel(*c));
    }
    let idx: Vec<usize> = (0..dataset.len()).collect();
    let mut nodes = Vec::new();
    let root = grow(dataset, &idx, &mut nodes);
    Ok(DecisionTree { nodes, root })
}

impl DecisionTree {
    pub fn predict_class(&self, phi: &FeatureVector) -> usize {
        let mut at = self.root;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split { feature, threshold, left, right } => {
                    at = if phi.0[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, phi: &FeatureVector) -> Action {
        Action::from_index(self.predict_class(phi)).expect("leaf classes are joint actions")
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, at: usize) -> usize {
            match t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, self.root)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Structural check for trees read from disk.
    pub fn validate(&self) -> Result<(), BcError> {
        let bad = |reason: String| Err(BcError::MalformedTree(reason));
        if self.root >= self.nodes.len() {
            return bad(format!("root {} out of range", self.root));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(at) = stack.pop() {
            if std::mem::replace(&mut seen[at], true) {
                return bad(format!("node {at} reachable twice"));
            }
            match self.nodes[at] {
                Node::Leaf { class } if class >= NUM_ACTIONS => return bad(format!("leaf class {class}")),
                Node::Leaf { .. } => {}
                Node::Split { feature, left, right, .. } => {
                    if feature >= NUM_FEATURES || left >= self.nodes.len() || right >= self.nodes.len() {
                        return bad(format!("split node {at} out of range"));
                    }
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        Ok(())
    }
}

/// Fraction of exact joint-action matches.
pub fn evaluate_bc(tree: &DecisionTree, held_out: &[LabeledSample]) -> Result<f64, BcError> {
    if held_out.is_empty() {
        return Err(BcError::EmptyDataset);
    }
    let hits = held_out.iter().filter(|(phi, c)| tree.predict_class(phi) == *c).count();
    Ok(hits as f64 / held_out.len() as f64)
}
