//! Single-linkage agglomerative clustering with a distance cutoff.
//!
//! Both the attention stage (active detector pixels, 2D) and the mapping
//! stage (waggle runs in XYT space, 3D) group points by single-linkage
//! HAC cut at a threshold distance. Cutting a single-linkage dendrogram at
//! distance `d` yields exactly the connected components of the graph whose
//! edges join points at distance ≤ `d`, so the clusters are computed with
//! a union-find over all point pairs instead of building the dendrogram.
//! A literal merge-loop oracle in the tests checks the equivalence.

/// Disjoint-set forest with path halving and union by size.
struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            self.parent[ra] = rb;
            self.size[rb] += self.size[ra];
        } else {
            self.parent[rb] = ra;
            self.size[ra] += self.size[rb];
        }
    }
}

/// Cluster `points` by single-linkage HAC with Euclidean metric, cut at
/// `threshold`. Returns clusters as lists of input indices; each cluster is
/// sorted ascending and the clusters themselves are ordered by their
/// smallest member index, so the output is independent of input order up
/// to the index labelling.
pub fn cluster_threshold<const D: usize>(points: &[[f64; D]], threshold: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut uf = UnionFind::new(n);
    let t2 = threshold * threshold;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut d2 = 0.0;
            for k in 0..D {
                let d = points[i][k] - points[j][k];
                d2 += d * d;
            }
            if d2 <= t2 {
                uf.union(i, j);
            }
        }
    }
    let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = uf.find(i);
        by_root[r].push(i);
    }
    let mut clusters: Vec<Vec<usize>> = by_root.into_iter().filter(|c| !c.is_empty()).collect();
    // Members were pushed in ascending index order; sort clusters by head.
    clusters.sort_by_key(|c| c[0]);
    clusters
}
