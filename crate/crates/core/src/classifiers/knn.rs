use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

/// Weighted k-nearest-neighbour vote in standardized feature space.
///
/// Neighbours vote with weight 1/d². If any of the k neighbours coincides
/// with the query, only the coincident ones vote, equally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub points: Vec<[f64; 2]>,
    pub labels: Vec<u8>,
    #[serde(skip)]
    index: KdTree,
}

impl KnnModel {
    pub fn fit(points: Vec<[f64; 2]>, labels: Vec<u8>, k: usize) -> Self {
        let index = KdTree::build(&points);
        KnnModel {
            k,
            points,
            labels,
            index,
        }
    }

    fn ensure_index(&self) -> std::borrow::Cow<'_, KdTree> {
        if self.index.len() == self.points.len() {
            std::borrow::Cow::Borrowed(&self.index)
        } else {
            std::borrow::Cow::Owned(KdTree::build(&self.points))
        }
    }

    /// Rebuilds the search index after deserialization.
    pub(crate) fn reindex(&mut self) {
        self.index = KdTree::build(&self.points);
    }

    pub fn score(&self, z: [f64; 2]) -> f64 {
        let k = self.k.min(self.points.len());
        let neighbours = self.ensure_index().nearest(&self.points, z, k);
        vote(&neighbours, &self.labels)
    }
}

/// `(squared distance, index)` pairs, nearest first.
pub(crate) fn vote(neighbours: &[(f64, usize)], labels: &[u8]) -> f64 {
    let exact: Vec<usize> = neighbours.iter().filter(|(d2, _)| *d2 == 0.0).map(|&(_, i)| i).collect();
    if !exact.is_empty() {
        let pos = exact.iter().filter(|&&i| labels[i] == 1).count();
        return pos as f64 / exact.len() as f64;
    }
    let (mut pos, mut total) = (0.0, 0.0);
    for &(d2, i) in neighbours {
        let w = 1.0 / d2;
        total += w;
        if labels[i] == 1 {
            pos += w;
        }
    }
    if total > 0.0 && total.is_finite() {
        pos / total
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Static 2-d tree. Neighbour ties on distance resolve to the lower point
/// index, matching a stable brute-force scan.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct KdTree {
    order: Vec<usize>,
    nodes: Vec<Node>,
}

const LEAF_SIZE: usize = 16;

impl KdTree {
    pub(crate) fn build(points: &[[f64; 2]]) -> Self {
        let mut tree = KdTree {
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build_node(points, 0, points.len(), 0);
        }
        tree
    }

    fn len(&self) -> usize {
        self.order.len()
    }

    fn build_node(&mut self, points: &[[f64; 2]], start: usize, end: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = depth % 2;
        let slice = &mut self.order[start..end];
        slice.sort_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b)));
        let mid = start + (end - start) / 2;
        let value = points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(points, start, mid, depth + 1);
        let right = self.build_node(points, mid, end, depth + 1);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    pub(crate) fn nearest(&self, points: &[[f64; 2]], q: [f64; 2], k: usize) -> Vec<(f64, usize)> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if k > 0 && !self.nodes.is_empty() {
            self.search(0, points, q, k, &mut heap);
        }
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| (c.d2, c.index)).collect()
    }

    fn search(&self, node: usize, points: &[[f64; 2]], q: [f64; 2], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &index in &self.order[start..end] {
                    let p = points[index];
                    let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                    let c = Candidate { d2, index };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("heap holds k items") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, points, q, k, heap);
                // Points equal to the split value can sit on either side, so
                // the far side is visited whenever the plane is within reach.
                if heap.len() < k || diff * diff <= heap.peek().expect("non-empty").d2 {
                    self.search(far, points, q, k, heap);
                }
            }
        }
    }
}
