//! Brute-force Euclidean k-nearest-neighbour queries with deterministic
//! tie-breaking (lowest row index wins).

/// A borrowed reference set of m points in d dimensions.
pub struct NeighborModel<'a> {
    points: &'a [f64],
    dims: usize,
}

impl<'a> NeighborModel<'a> {
    pub fn new(points: &'a [f64], dims: usize) -> Self {
        assert!(dims > 0 && points.len() % dims == 0, "points must be m x dims");
        Self { points, dims }
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dims..(i + 1) * self.dims]
    }

    /// Indices of the k nearest reference points to `query`, nearest first.
    /// Equal distances are ordered by index. `exclude` removes one reference
    /// point (the query itself when it belongs to the set).
    pub fn k_nearest(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<usize> {
        debug_assert_eq!(query.len(), self.dims);
        // Small sorted buffer of (distance^2, index); k is tiny in practice.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for i in 0..self.len() {
            if exclude == Some(i) {
                continue;
            }
            let d2 = squared_distance(query, self.point(i));
            if best.len() == k {
                let worst = *best.last().expect("k > 0");
                if (d2, i) >= worst {
                    continue;
                }
            }
            let pos = best.partition_point(|&entry| entry < (d2, i));
            best.insert(pos, (d2, i));
            best.truncate(k);
        }
        best.into_iter().map(|(_, i)| i).collect()
    }

    /// Index of the single nearest reference point, if any.
    pub fn nearest(&self, query: &[f64], exclude: Option<usize>) -> Option<usize> {
        self.k_nearest(query, 1, exclude).into_iter().next()
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
