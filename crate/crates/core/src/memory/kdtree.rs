//! Static kd-tree over fixed-dimension points with exact k-nearest and
//! fixed-radius queries. Ties in distance are broken by point id so results
//! are identical to an exhaustive scan sorted by `(distance, id)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone)]
pub struct KdTree<const D: usize> {
    points: Vec<[f64; D]>,
    /// Point ids in tree order; the node of slice `[lo, hi)` sits at its midpoint.
    order: Vec<u32>,
    split_dims: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist_sq: f64,
    id: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn dist_sq<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl<const D: usize> Default for KdTree<D> {
    fn default() -> Self {
        Self::build(Vec::new())
    }
}

impl<const D: usize> KdTree<D> {
    /// Builds over `points`; point ids are their positions.
    pub fn build(points: Vec<[f64; D]>) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut split_dims = vec![0u8; points.len()];
        Self::build_rec(&points, &mut order, &mut split_dims);
        Self {
            points,
            order,
            split_dims,
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn build_rec(points: &[[f64; D]], order: &mut [u32], dims: &mut [u8]) {
        let n = order.len();
        if n <= 1 {
            return;
        }
        // Split on the widest coordinate.
        let mut best_dim = 0;
        let mut best_spread = f64::NEG_INFINITY;
        for d in 0..D {
            let (lo, hi) = order.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = points[i as usize][d];
                (lo.min(v), hi.max(v))
            });
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_dim = d;
            }
        }
        let mid = n / 2;
        order.select_nth_unstable_by(mid, |&a, &b| {
            points[a as usize][best_dim]
                .total_cmp(&points[b as usize][best_dim])
                .then(a.cmp(&b))
        });
        dims[mid] = best_dim as u8;
        let (left, rest) = order.split_at_mut(mid);
        let (left_dims, rest_dims) = dims.split_at_mut(mid);
        Self::build_rec(points, left, left_dims);
        Self::build_rec(points, &mut rest[1..], &mut rest_dims[1..]);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: u32) -> &[f64; D] {
        &self.points[id as usize]
    }

    /// The `k` nearest points as `(dist_sq, id)`, ascending.
    pub fn nearest(&self, target: &[f64; D], k: usize) -> Vec<(f64, u32)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(target, k, 0, self.order.len(), &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| (c.dist_sq, c.id)).collect()
    }

    fn knn_rec(&self, target: &[f64; D], k: usize, lo: usize, hi: usize, heap: &mut BinaryHeap<Candidate>) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let id = self.order[mid];
        let p = &self.points[id as usize];
        let cand = Candidate {
            dist_sq: dist_sq(p, target),
            id,
        };
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().unwrap() {
            heap.pop();
            heap.push(cand);
        }
        if hi - lo == 1 {
            return;
        }
        let d = self.split_dims[mid] as usize;
        let diff = target[d] - p[d];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.knn_rec(target, k, near.0, near.1, heap);
        if heap.len() < k || diff * diff <= heap.peek().unwrap().dist_sq {
            self.knn_rec(target, k, far.0, far.1, heap);
        }
    }

    /// All points strictly within `radius`, as `(dist_sq, id)` ascending.
    pub fn within(&self, target: &[f64; D], radius: f64) -> Vec<(f64, u32)> {
        let mut out = Vec::new();
        if radius > 0.0 && !self.points.is_empty() {
            self.radius_rec(target, radius * radius, 0, self.order.len(), &mut out);
        }
        out.sort();
        out.into_iter().map(|c| (c.dist_sq, c.id)).collect()
    }

    fn radius_rec(&self, target: &[f64; D], r2: f64, lo: usize, hi: usize, out: &mut Vec<Candidate>) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let id = self.order[mid];
        let p = &self.points[id as usize];
        let d2 = dist_sq(p, target);
        if d2 < r2 {
            out.push(Candidate { dist_sq: d2, id });
        }
        if hi - lo == 1 {
            return;
        }
        let d = self.split_dims[mid] as usize;
        let diff = target[d] - p[d];
        if diff < 0.0 || diff * diff < r2 {
            self.radius_rec(target, r2, lo, mid, out);
        }
        if diff >= 0.0 || diff * diff < r2 {
            self.radius_rec(target, r2, mid + 1, hi, out);
        }
    }
}
