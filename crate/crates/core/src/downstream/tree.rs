//! CART classification tree with Gini impurity.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    /// Features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
enum Node {
    Leaf { class: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Tree over class indices `0..n_classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

/// Index of the largest count; ties go to the smallest index.
pub(crate) fn argmax_count(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Builder<'a, R: ?Sized> {
    x: &'a Matrix,
    y: &'a [usize],
    n_classes: usize,
    cfg: TreeConfig,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

impl<R: Rng + ?Sized> Builder<'_, R> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let mut counts = vec![0; self.n_classes];
        for &r in rows.iter() {
            counts[self.y[r]] += 1;
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class: argmax_count(&counts),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if depth >= self.cfg.max_depth || pure || rows.len() < 2 {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(rows, &counts) else {
            return id;
        };
        let mut split = 0;
        for i in 0..rows.len() {
            if self.x[(rows[i], feature)] <= threshold {
                rows.swap(i, split);
                split += 1;
            }
        }
        let (l, r) = rows.split_at_mut(split);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, rows: &[usize], counts: &[usize]) -> Option<(usize, f64)> {
        let d = self.x.cols();
        let k = self.cfg.max_features.unwrap_or(d).clamp(1, d);
        let mut features = index::sample(self.rng, d, k).into_vec();
        features.sort_unstable();
        let n = rows.len();
        let parent = gini(counts, n);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
        for f in features {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.x[(r, f)], self.y[r])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = vec![0; self.n_classes];
            let mut right = counts.to_vec();
            for i in 0..n - 1 {
                let (v, c) = sorted[i];
                left[c] += 1;
                right[c] -= 1;
                let next = sorted[i + 1].0;
                if next <= v {
                    continue;
                }
                let nl = i + 1;
                let child = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
                let gain = parent - child;
                if best.is_none_or(|(g, _, _)| gain > g) {
                    let mut threshold = v + (next - v) / 2.0;
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some((gain, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

impl DecisionTree {
    /// Grows a tree on `rows` of `x` (repeats allowed, as in a bootstrap).
    pub fn fit<R: Rng + ?Sized>(
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        rows: &[usize],
        cfg: TreeConfig,
        rng: &mut R,
    ) -> Self {
        let mut rows = rows.to_vec();
        let mut b = Builder {
            x,
            y,
            n_classes,
            cfg,
            rng,
            nodes: Vec::new(),
        };
        b.grow(&mut rows, 0);
        Self {
            nodes: b.nodes,
            n_features: x.cols(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Class index for one row.
    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }
}
