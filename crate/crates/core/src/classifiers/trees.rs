use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Hyperparams;

const LEAF: i8 = -1;

/// One CART tree in struct-of-arrays form. Node 0 is the root; a node with
/// `feature == -1` is a leaf whose `value` is the positive fraction of the
/// training points that reached it. Internal nodes send `x[feature] <= threshold`
/// to `left`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub feature: Vec<i8>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub value: Vec<f64>,
}

impl Tree {
    pub fn score(&self, z: [f64; 2]) -> f64 {
        let mut node = 0usize;
        while self.feature[node] != LEAF {
            let f = self.feature[node] as usize;
            node = if z[f] <= self.threshold[node] {
                self.left[node] as usize
            } else {
                self.right[node] as usize
            };
        }
        self.value[node]
    }

    pub fn n_nodes(&self) -> usize {
        self.feature.len()
    }

    fn push_leaf(&mut self, value: f64) -> usize {
        self.feature.push(LEAF);
        self.threshold.push(0.0);
        self.left.push(0);
        self.right.push(0);
        self.value.push(value);
        self.feature.len() - 1
    }
}

/// Bagged ensemble; the score is the mean of the trees' leaf values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn fit(points: &[[f64; 2]], labels: &[u8], hp: &Hyperparams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = points.len();
        let trees = (0..hp.n_trees)
            .map(|_| {
                let sample: Vec<usize> = if hp.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                grow(points, labels, sample, hp)
            })
            .collect();
        Forest { trees }
    }

    pub fn score(&self, z: [f64; 2]) -> f64 {
        self.trees.iter().map(|t| t.score(z)).sum::<f64>() / self.trees.len() as f64
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    /// Weighted Gini of the two children, n_left·G_left + n_right·G_right.
    impurity: f64,
}

fn grow(points: &[[f64; 2]], labels: &[u8], sample: Vec<usize>, hp: &Hyperparams) -> Tree {
    let mut tree = Tree {
        feature: Vec::new(),
        threshold: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
        value: Vec::new(),
    };
    build(&mut tree, points, labels, sample, 0, hp);
    tree
}

fn build(tree: &mut Tree, points: &[[f64; 2]], labels: &[u8], mut idx: Vec<usize>, depth: usize, hp: &Hyperparams) -> usize {
    let n = idx.len();
    let pos = idx.iter().filter(|&&i| labels[i] == 1).count();
    let node = tree.push_leaf(pos as f64 / n as f64);
    let pure = pos == 0 || pos == n;
    let depth_left = hp.max_depth.is_none_or(|d| depth < d);
    if pure || !depth_left || n < 2 * hp.min_leaf {
        return node;
    }
    let Some(split) = best_split(points, labels, &mut idx, hp.min_leaf) else {
        return node;
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        idx.into_iter().partition(|&i| points[i][split.feature] <= split.threshold);
    let left = build(tree, points, labels, left_idx, depth + 1, hp);
    let right = build(tree, points, labels, right_idx, depth + 1, hp);
    tree.feature[node] = split.feature as i8;
    tree.threshold[node] = split.threshold;
    tree.left[node] = left as u32;
    tree.right[node] = right as u32;
    node
}

/// Lowest weighted-Gini axis-aligned split with at least `min_leaf` points on
/// each side. Ties keep the first feature and the lowest threshold.
fn best_split(points: &[[f64; 2]], labels: &[u8], idx: &mut [usize], min_leaf: usize) -> Option<Split> {
    let n = idx.len();
    let total_pos = idx.iter().filter(|&&i| labels[i] == 1).count() as f64;
    let mut best: Option<Split> = None;
    for feature in 0..2 {
        idx.sort_unstable_by(|&a, &b| points[a][feature].total_cmp(&points[b][feature]).then(a.cmp(&b)));
        let mut left_pos = 0.0;
        for cut in 1..n {
            if labels[idx[cut - 1]] == 1 {
                left_pos += 1.0;
            }
            let lo = points[idx[cut - 1]][feature];
            let hi = points[idx[cut]][feature];
            if lo == hi || cut < min_leaf || n - cut < min_leaf {
                continue;
            }
            let nl = cut as f64;
            let nr = (n - cut) as f64;
            let right_pos = total_pos - left_pos;
            let impurity = weighted_gini(left_pos, nl) + weighted_gini(right_pos, nr);
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mid = lo + (hi - lo) / 2.0;
                // Adjacent floats can round the midpoint up onto `hi`.
                let threshold = if mid < hi { mid } else { lo };
                best = Some(Split {
                    feature,
                    threshold,
                    impurity,
                });
            }
        }
    }
    best
}

/// n·(1 − p² − q²) for a node of `n` points, `pos` of them positive.
fn weighted_gini(pos: f64, n: f64) -> f64 {
    let neg = n - pos;
    n - (pos * pos + neg * neg) / n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unlimited() -> Hyperparams {
        Hyperparams {
            n_trees: 1,
            max_depth: None,
            min_leaf: 1,
            bootstrap: false,
            ..Hyperparams::default()
        }
    }

    #[test]
    fn gini_of_pure_and_mixed_nodes() {
        assert_eq!(weighted_gini(0.0, 4.0), 0.0);
        assert_eq!(weighted_gini(4.0, 4.0), 0.0);
        // 1 − 0.25 − 0.25 = 0.5 per point.
        assert_eq!(weighted_gini(2.0, 4.0), 2.0);
    }

    #[test]
    fn single_full_tree_fits_xor() {
        // XOR has no Gini-improving first split; the tree must still separate it.
        let points = vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let labels = vec![0, 1, 1, 0];
        let forest = Forest::fit(&points, &labels, &unlimited(), 0);
        for (p, l) in points.iter().zip(&labels) {
            assert_eq!(forest.score(*p), *l as f64);
        }
    }

    #[test]
    fn split_respects_min_leaf_and_depth() {
        let points: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, 0.5 * i as f64]).collect();
        let labels: Vec<u8> = (0..20).map(|i| u8::from(i == 0)).collect();
        let hp = Hyperparams {
            min_leaf: 5,
            ..unlimited()
        };
        let forest = Forest::fit(&points, &labels, &hp, 0);
        // The lone positive cannot be isolated in a leaf of fewer than 5 points.
        assert!(forest.score([0.0, 0.0]) <= 0.2 + 1e-12);

        let stump = Hyperparams {
            max_depth: Some(1),
            ..unlimited()
        };
        let forest = Forest::fit(&points, &labels, &stump, 0);
        assert_eq!(forest.trees[0].n_nodes(), 3);
    }

    #[test]
    fn bootstrap_is_seeded() {
        let points: Vec<[f64; 2]> = (0..50).map(|i| [(i as f64).sin(), (i as f64 * 0.3).cos()]).collect();
        let labels: Vec<u8> = (0..50).map(|i| u8::from(i % 3 == 0)).collect();
        let hp = Hyperparams::default();
        assert_eq!(Forest::fit(&points, &labels, &hp, 5), Forest::fit(&points, &labels, &hp, 5));
        assert_ne!(Forest::fit(&points, &labels, &hp, 5), Forest::fit(&points, &labels, &hp, 6));
    }
}
