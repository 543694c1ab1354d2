//! Static kd-tree for fixed-radius neighbour queries.

pub(crate) struct KdTree<'a> {
    coords: &'a [f64],
    dim: usize,
    idx: Vec<u32>,
    nodes: Vec<Node>,
}

struct Node {
    lo: usize,
    hi: usize,
    left: Option<usize>,
    right: Option<usize>,
    bbox_min: Vec<f64>,
    bbox_max: Vec<f64>,
}

const LEAF: usize = 16;

impl<'a> KdTree<'a> {
    pub fn build(coords: &'a [f64], dim: usize) -> Self {
        let n = coords.len() / dim;
        let mut t = KdTree { coords, dim, idx: (0..n as u32).collect(), nodes: Vec::new() };
        if n > 0 {
            t.build_node(0, n);
        }
        t
    }

    fn build_node(&mut self, lo: usize, hi: usize) -> usize {
        let dim = self.dim;
        let mut bmin = vec![f64::INFINITY; dim];
        let mut bmax = vec![f64::NEG_INFINITY; dim];
        for &i in &self.idx[lo..hi] {
            for c in 0..dim {
                let v = self.coords[i as usize * dim + c];
                bmin[c] = bmin[c].min(v);
                bmax[c] = bmax[c].max(v);
            }
        }
        let axis = (0..dim)
            .max_by(|&a, &b| (bmax[a] - bmin[a]).total_cmp(&(bmax[b] - bmin[b])))
            .unwrap_or(0);
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            left: None,
            right: None,
            bbox_min: bmin,
            bbox_max: bmax,
        });
        if hi - lo > LEAF {
            let mid = (lo + hi) / 2;
            let coords = self.coords;
            self.idx[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
                coords[a as usize * dim + axis].total_cmp(&coords[b as usize * dim + axis])
            });
            let l = self.build_node(lo, mid);
            let r = self.build_node(mid, hi);
            self.nodes[id].left = Some(l);
            self.nodes[id].right = Some(r);
        }
        id
    }

    /// Calls `f(j, |q - x_j|^2)` for every point within `radius` of `q`.
    pub fn for_each_within(&self, q: &[f64], radius: f64, mut f: impl FnMut(usize, f64)) {
        if self.nodes.is_empty() {
            return;
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let mut gap = 0.0;
            for c in 0..self.dim {
                let d = if q[c] < node.bbox_min[c] {
                    node.bbox_min[c] - q[c]
                } else if q[c] > node.bbox_max[c] {
                    q[c] - node.bbox_max[c]
                } else {
                    0.0
                };
                gap += d * d;
            }
            if gap > r2 {
                continue;
            }
            match (node.left, node.right) {
                (Some(l), Some(r)) => {
                    stack.push(l);
                    stack.push(r);
                }
                _ => {
                    for &j in &self.idx[node.lo..node.hi] {
                        let p = &self.coords[j as usize * self.dim..(j as usize + 1) * self.dim];
                        let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                        if d2 <= r2 {
                            f(j as usize, d2);
                        }
                    }
                }
            }
        }
    }
}
