//! Static R-tree over boxes, bulk loaded with Sort-Tile-Recursive packing.
//!
//! Only the query the abstraction needs is supported: the `k` boxes closest to a
//! point under Euclidean point-to-box distance, in ascending order with ties broken
//! by key.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::{Aabb, GeometryError};
use crate::scalar::Scalar;

const NODE_CAPACITY: usize = 8;

#[derive(Clone, Debug)]
enum Node<T, const D: usize> {
    Leaf { bbox: Aabb<T, D>, entries: Vec<usize> },
    Inner { bbox: Aabb<T, D>, children: Vec<Node<T, D>> },
}

impl<T: Scalar, const D: usize> Node<T, D> {
    fn bbox(&self) -> &Aabb<T, D> {
        match self {
            Node::Leaf { bbox, .. } | Node::Inner { bbox, .. } => bbox,
        }
    }
}

/// Build-once, query-many spatial index of `(box, key)` entries.
#[derive(Clone, Debug)]
pub struct SpatialIndex<T, const D: usize> {
    boxes: Vec<Aabb<T, D>>,
    keys: Vec<usize>,
    root: Option<Node<T, D>>,
}

impl<T: Scalar, const D: usize> SpatialIndex<T, D> {
    pub fn new(entries: impl IntoIterator<Item = (Aabb<T, D>, usize)>) -> Self {
        let (boxes, keys): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        let ids: Vec<usize> = (0..boxes.len()).collect();
        let root = (!ids.is_empty()).then(|| build(&boxes, ids));
        Self { boxes, keys, root }
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Keys of the `k` entries nearest to `query`, closest first.
    pub fn knn(&self, query: &[T; D], k: usize) -> Result<Vec<usize>, GeometryError> {
        let root = self.root.as_ref().ok_or(GeometryError::EmptyIndex)?;
        if k > self.len() {
            return Err(GeometryError::TooManyNeighbors { k, len: self.len() });
        }
        let mut out = Vec::with_capacity(k);
        let mut heap = BinaryHeap::new();
        heap.push(Candidate { dist: root.bbox().distance_sq_to_point(query), item: Item::Node(root) });
        while let Some(Candidate { item, .. }) = heap.pop() {
            if out.len() == k {
                break;
            }
            match item {
                Item::Entry { key, .. } => out.push(key),
                Item::Node(Node::Leaf { entries, .. }) => {
                    for &i in entries {
                        heap.push(Candidate {
                            dist: self.boxes[i].distance_sq_to_point(query),
                            item: Item::Entry { key: self.keys[i] },
                        });
                    }
                }
                Item::Node(Node::Inner { children, .. }) => {
                    for c in children {
                        heap.push(Candidate { dist: c.bbox().distance_sq_to_point(query), item: Item::Node(c) });
                    }
                }
            }
        }
        Ok(out)
    }
}

enum Item<'a, T, const D: usize> {
    Node(&'a Node<T, D>),
    Entry { key: usize },
}

struct Candidate<'a, T, const D: usize> {
    dist: T,
    item: Item<'a, T, D>,
}

impl<T: Scalar, const D: usize> Candidate<'_, T, D> {
    /// Nodes open before entries at equal distance, so every entry at a given distance
    /// is queued before the first of them pops; those then leave in key order.
    fn rank(&self) -> (u8, usize) {
        match self.item {
            Item::Node(_) => (0, 0),
            Item::Entry { key } => (1, key),
        }
    }
}

impl<T: Scalar, const D: usize> PartialEq for Candidate<'_, T, D> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar, const D: usize> Eq for Candidate<'_, T, D> {}
impl<T: Scalar, const D: usize> PartialOrd for Candidate<'_, T, D> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar, const D: usize> Ord for Candidate<'_, T, D> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.rank().cmp(&self.rank()))
    }
}

fn bbox_of<T: Scalar, const D: usize>(boxes: &[Aabb<T, D>], ids: &[usize]) -> Aabb<T, D> {
    ids[1..].iter().fold(boxes[ids[0]], |acc, &i| acc.hull(&boxes[i]))
}

fn build<T: Scalar, const D: usize>(boxes: &[Aabb<T, D>], ids: Vec<usize>) -> Node<T, D> {
    if ids.len() <= NODE_CAPACITY {
        return Node::Leaf { bbox: bbox_of(boxes, &ids), entries: ids };
    }
    let groups = str_partition(boxes, ids, 0);
    let children: Vec<Node<T, D>> = groups.into_iter().map(|g| build(boxes, g)).collect();
    let bbox = children[1..].iter().fold(*children[0].bbox(), |acc, c| acc.hull(c.bbox()));
    Node::Inner { bbox, children }
}

/// Splits `ids` into at most `NODE_CAPACITY` spatially coherent groups by slicing along
/// each dimension in turn.
fn str_partition<T: Scalar, const D: usize>(boxes: &[Aabb<T, D>], mut ids: Vec<usize>, dim: usize) -> Vec<Vec<usize>> {
    let n = ids.len();
    let leaves = n.div_ceil(NODE_CAPACITY).clamp(2, NODE_CAPACITY);
    let remaining_dims = (D - dim).max(1) as f64;
    let slabs = ((leaves as f64).powf(1.0 / remaining_dims).ceil() as usize).max(2);
    let center = |i: usize| {
        let b = &boxes[i];
        (b.lo()[dim] + b.hi()[dim]) * T::lit(0.5)
    };
    ids.sort_by(|&a, &b| center(a).partial_cmp(&center(b)).unwrap().then(a.cmp(&b)));
    let per_slab = n.div_ceil(slabs);
    let mut out = Vec::new();
    for chunk in ids.chunks(per_slab) {
        if dim + 1 < D && out.len() + 1 < NODE_CAPACITY && chunk.len() > n.div_ceil(leaves) {
            let sub = str_partition(boxes, chunk.to_vec(), dim + 1);
            if out.len() + sub.len() <= NODE_CAPACITY {
                out.extend(sub);
                continue;
            }
        }
        out.push(chunk.to_vec());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(boxes: &[Aabb<f64, 3>], q: &[f64; 3], k: usize) -> Vec<usize> {
        let mut v: Vec<(f64, usize)> = boxes.iter().enumerate().map(|(i, b)| (b.distance_sq_to_point(q), i)).collect();
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        v.into_iter().take(k).map(|(_, i)| i).collect()
    }

    #[test]
    fn single_entry() {
        let b = Aabb::new([0.0; 3], [1.0; 3]).unwrap();
        let ix = SpatialIndex::new([(b, 7)]);
        assert_eq!(ix.knn(&[5.0, -3.0, 2.0], 1).unwrap(), vec![7]);
    }

    #[test]
    fn collinear_boxes_in_order() {
        let mk = |x: f64| Aabb::new([x, 0.0, 0.0], [x, 0.0, 0.0]).unwrap();
        let ix = SpatialIndex::new([(mk(3.0), 0), (mk(1.0), 1), (mk(2.0), 2)]);
        assert_eq!(ix.knn(&[0.0; 3], 2).unwrap(), vec![1, 2]);
    }

    #[test]
    fn errors() {
        let ix = SpatialIndex::<f64, 3>::new([]);
        assert!(matches!(ix.knn(&[0.0; 3], 1), Err(GeometryError::EmptyIndex)));
        let ix = SpatialIndex::new([(Aabb::point([0.0; 3]), 0)]);
        assert!(matches!(ix.knn(&[0.0; 3], 2), Err(GeometryError::TooManyNeighbors { .. })));
    }

    #[test]
    fn ties_break_by_key() {
        let p = Aabb::point([1.0, 0.0, 0.0]);
        let ix = SpatialIndex::new((0..20).map(|i| (p, i)));
        assert_eq!(ix.knn(&[0.0; 3], 5).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn matches_brute_force_on_random_boxes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let boxes: Vec<Aabb<f64, 3>> = (0..729)
            .map(|_| {
                let lo: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let hi: [f64; 3] = std::array::from_fn(|d| lo[d] + rng.random_range(0.0..0.1));
                Aabb::new(lo, hi).unwrap()
            })
            .collect();
        let ix = SpatialIndex::new(boxes.iter().copied().enumerate().map(|(i, b)| (b, i)));
        for _ in 0..100 {
            let q: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.5..1.5));
            for k in [1, 5, 20] {
                assert_eq!(ix.knn(&q, k).unwrap(), brute(&boxes, &q, k));
            }
        }
    }
}
