//! Sparse symmetric positive definite direct solver: geometric nested dissection
//! ordering followed by an up-looking Cholesky factorization.

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Builds from triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, f64)>) -> Csr {
        trip.sort_unstable_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut data: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trip {
            if last == Some((i, j)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                data.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Csr { n, indptr, indices, data }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[i]..self.indptr[i + 1]).map(move |p| (self.indices[p], self.data[p]))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Symmetric permutation `P A Pᵀ` keeping the upper triangle, stored by columns
    /// (`perm[new] = old`).
    fn permuted_upper_csc(&self, perm: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let n = self.n;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut count = vec![0usize; n + 1];
        for i in 0..n {
            for (j, _) in self.row(i) {
                let (a, b) = (inv[i], inv[j]);
                if a <= b {
                    count[b + 1] += 1;
                }
            }
        }
        for j in 0..n {
            count[j + 1] += count[j];
        }
        let colptr = count.clone();
        let mut next = count;
        let mut rows = vec![0usize; colptr[n]];
        let mut vals = vec![0.0; colptr[n]];
        for i in 0..n {
            for (j, v) in self.row(i) {
                let (a, b) = (inv[i], inv[j]);
                if a <= b {
                    rows[next[b]] = a;
                    vals[next[b]] = v;
                    next[b] += 1;
                }
            }
        }
        (colptr, rows, vals)
    }
}

/// Leaf size below which nested dissection stops.
const ND_LEAF: usize = 64;

/// Geometric nested dissection on the graph of `a` with node coordinates `xy`.
/// Returns `perm[new] = old`.
pub fn nested_dissection(a: &Csr, xy: &[[f64; 2]]) -> Vec<usize> {
    let n = a.n;
    let mut perm = Vec::with_capacity(n);
    let mut side = vec![0u8; n];
    fn recurse(a: &Csr, xy: &[[f64; 2]], nodes: Vec<usize>, side: &mut [u8], perm: &mut Vec<usize>) {
        if nodes.len() <= ND_LEAF {
            perm.extend(nodes);
            return;
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for &v in &nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(xy[v][d]);
                hi[d] = hi[d].max(xy[v][d]);
            }
        }
        let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
        let mut sorted = nodes;
        sorted.sort_unstable_by(|&p, &q| xy[p][axis].total_cmp(&xy[q][axis]).then(p.cmp(&q)));
        let half = sorted.len() / 2;
        // 1 = left, 2 = right; nodes outside the current set stay 0
        for (i, &v) in sorted.iter().enumerate() {
            side[v] = if i < half { 1 } else { 2 };
        }
        let mut left = Vec::with_capacity(half);
        let mut sep = Vec::new();
        for &v in &sorted[..half] {
            if a.row(v).any(|(w, _)| side[w] == 2) {
                sep.push(v);
            } else {
                left.push(v);
            }
        }
        let right: Vec<usize> = sorted[half..].to_vec();
        for &v in &sorted {
            side[v] = 0;
        }
        if left.is_empty() || right.is_empty() {
            // cannot split further (e.g. a dense clump); order as is
            perm.extend(left);
            perm.extend(right);
            perm.extend(sep);
            return;
        }
        recurse(a, xy, left, side, perm);
        recurse(a, xy, right, side, perm);
        perm.extend(sep);
    }
    recurse(a, xy, (0..n).collect(), &mut side, &mut perm);
    perm
}

/// `L Lᵀ = P A Pᵀ`, with `L` stored by columns, diagonal first.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &Csr, perm: Vec<usize>) -> Result<Cholesky> {
        let n = a.n;
        assert_eq!(perm.len(), n);
        let (cp, ci, cx) = a.permuted_upper_csc(&perm);

        // elimination tree of the upper triangle
        let mut parent = vec![usize::MAX; n];
        let mut ancestor = vec![usize::MAX; n];
        for k in 0..n {
            for &i0 in &ci[cp[k]..cp[k + 1]] {
                let mut i = i0;
                while i != usize::MAX && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == usize::MAX {
                        parent[i] = k;
                    }
                    i = next;
                }
            }
        }

        let mut mark = vec![usize::MAX; n];
        let mut stack = vec![0usize; n];
        let mut path = vec![0usize; n];
        // pattern of row k of L (excluding the diagonal), topologically ordered; returns `top`
        let ereach = |k: usize, mark: &mut [usize], stack: &mut [usize], path: &mut [usize]| {
            let mut top = n;
            mark[k] = k;
            for &i0 in &ci[cp[k]..cp[k + 1]] {
                if i0 > k {
                    continue;
                }
                let mut len = 0;
                let mut i = i0;
                while mark[i] != k {
                    path[len] = i;
                    len += 1;
                    mark[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    stack[top] = path[len];
                }
            }
            top
        };

        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = ereach(k, &mut mark, &mut stack, &mut path);
            for &j in &stack[top..n] {
                counts[j] += 1;
            }
        }
        let mut lp = vec![0usize; n + 1];
        for j in 0..n {
            lp[j + 1] = lp[j] + counts[j];
        }
        let nnz = lp[n];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut next = lp.clone();
        let mut x = vec![0.0; n];
        mark.iter_mut().for_each(|m| *m = usize::MAX);
        for k in 0..n {
            let top = ereach(k, &mut mark, &mut stack, &mut path);
            for p in cp[k]..cp[k + 1] {
                if ci[p] <= k {
                    x[ci[p]] = cx[p];
                }
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..n] {
                let lki = x[i] / lx[lp[i]];
                x[i] = 0.0;
                for p in lp[i] + 1..next[i] {
                    x[li[p]] -= lx[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                li[p] = k;
                lx[p] = lki;
            }
            if !(d > 0.0) {
                return Err(Error::Solve(format!(
                    "matrix is not positive definite (pivot {d:e} at step {k})"
                )));
            }
            let p = next[k];
            next[k] += 1;
            li[p] = k;
            lx[p] = d.sqrt();
        }
        Ok(Cholesky { n, perm, lp, li, lx })
    }

    pub fn nnz(&self) -> usize {
        self.lx.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for j in 0..n {
            x[j] /= self.lx[self.lp[j]];
            let xj = x[j];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s / self.lx[self.lp[j]];
        }
        let mut out = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}
