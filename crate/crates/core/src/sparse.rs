use crate::error::{MimeticError, Result};

/// Staggered space an operator maps from or to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Space {
    /// Full scalar set per axis: cells + 2 points (boundaries plus centers).
    Scalar(Vec<usize>),
    /// Interior cell centers only: cells points per axis.
    Centers(Vec<usize>),
    /// Faces normal to `axis`: cells+1 along it, centers along the others.
    Face { cells: Vec<usize>, axis: usize },
    /// All face sets stacked in axis order.
    Faces(Vec<usize>),
    Plain(usize),
}

impl Space {
    pub fn len(&self) -> usize {
        match self {
            Space::Scalar(c) => c.iter().map(|m| m + 2).product(),
            Space::Centers(c) => c.iter().product(),
            Space::Face { cells, axis } => cells
                .iter()
                .enumerate()
                .map(|(a, m)| if a == *axis { m + 1 } else { *m })
                .product(),
            Space::Faces(c) => (0..c.len())
                .map(|axis| Space::Face { cells: c.clone(), axis }.len())
                .sum(),
            Space::Plain(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Compressed-row sparse matrix tagged with its domain and codomain spaces.
///
/// Construction merges duplicate entries and drops exact zeros, so every
/// stored value is nonzero and each (row, col) appears once.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    pub domain: Space,
    pub codomain: Space,
}

impl SparseOperator {
    pub fn from_triplets(rows: usize, cols: usize, mut trips: Vec<(usize, usize, f64)>) -> Self {
        trips.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            assert!(r < rows && c < cols, "triplet ({r},{c}) outside {rows}x{cols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        let mut op = SparseOperator {
            rows,
            cols,
            indptr,
            indices,
            values,
            domain: Space::Plain(cols),
            codomain: Space::Plain(rows),
        };
        op.prune(0.0);
        op
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_triplets(rows, cols, Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_triplets(n, n, values.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    /// n × (n+2) selector of the interior rows of an (n+2)-vector.
    pub fn interior_selector(n: usize) -> Self {
        Self::from_triplets(n, n + 2, (0..n).map(|i| (i, i + 1, 1.0)).collect())
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let rows = a.len();
        let cols = a.first().map_or(0, |r| r.len());
        let mut trips = Vec::new();
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                trips.push((i, j, v));
            }
        }
        Self::from_triplets(rows, cols, trips)
    }

    /// Attach space tags; panics if their sizes disagree with the shape.
    pub fn tagged(mut self, domain: Space, codomain: Space) -> Self {
        assert_eq!(domain.len(), self.cols, "domain tag {domain:?} vs {} cols", self.cols);
        assert_eq!(codomain.len(), self.rows, "codomain tag {codomain:?} vs {} rows", self.rows);
        self.domain = domain;
        self.codomain = codomain;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[s..e].iter().copied().zip(self.values[s..e].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        match self.indices[s..e].binary_search(&c) {
            Ok(k) => self.values[s + k],
            Err(_) => 0.0,
        }
    }

    /// Drop entries with |value| <= tol.
    pub fn prune(&mut self, tol: f64) {
        let mut indptr = vec![0usize; self.rows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let v = self.values[k];
                if v.abs() > tol {
                    indices.push(self.indices[k]);
                    values.push(v);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn pruned(mut self, tol: f64) -> Self {
        self.prune(tol);
        self
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "apply: input length");
        assert_eq!(y.len(), self.rows, "apply: output length");
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    pub fn try_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(MimeticError::ShapeMismatch {
                expected: self.cols,
                found: x.len(),
                what: "operator input",
            });
        }
        Ok(self.apply(x))
    }

    pub fn transpose(&self) -> Self {
        let trips = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        let mut t = Self::from_triplets(self.cols, self.rows, trips);
        t.domain = self.codomain.clone();
        t.codomain = self.domain.clone();
        t
    }

    /// Matrix product self · other.
    pub fn matmul(&self, other: &SparseOperator) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut acc = vec![0.0; other.cols];
        let mut mark = vec![usize::MAX; other.cols];
        let mut touched = Vec::new();
        let mut trips = Vec::new();
        for r in 0..self.rows {
            touched.clear();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &touched {
                trips.push((r, c, acc[c]));
            }
        }
        let mut out = Self::from_triplets(self.rows, other.cols, trips);
        out.domain = other.domain.clone();
        out.codomain = self.codomain.clone();
        out
    }

    pub fn add(&self, other: &SparseOperator) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SparseOperator) -> Self {
        self.axpy(-1.0, other)
    }

    /// self + alpha · other
    pub fn axpy(&self, alpha: f64, other: &SparseOperator) -> Self {
        assert_eq!(self.shape(), other.shape(), "add shape mismatch");
        let trips = self
            .triplets()
            .chain(other.triplets().map(|(r, c, v)| (r, c, alpha * v)))
            .collect();
        let mut out = Self::from_triplets(self.rows, self.cols, trips);
        out.domain = self.domain.clone();
        out.codomain = self.codomain.clone();
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.prune(0.0);
        out
    }

    /// diag(d) · self
    pub fn scale_rows(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.rows);
        let mut out = self.clone();
        for r in 0..self.rows {
            for k in out.indptr[r]..out.indptr[r + 1] {
                out.values[k] *= d[r];
            }
        }
        out.prune(0.0);
        out
    }

    /// self · diag(d)
    pub fn scale_cols(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.cols);
        let mut out = self.clone();
        for k in 0..out.values.len() {
            out.values[k] *= d[out.indices[k]];
        }
        out.prune(0.0);
        out
    }

    /// Kronecker product self ⊗ other.
    pub fn kron(&self, other: &SparseOperator) -> Self {
        let mut trips = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.triplets() {
            for (r2, c2, v2) in other.triplets() {
                trips.push((r1 * other.rows + r2, c1 * other.cols + c2, v1 * v2));
            }
        }
        Self::from_triplets(self.rows * other.rows, self.cols * other.cols, trips)
    }

    /// Stack operators vertically (shared column count).
    pub fn vstack(blocks: &[&SparseOperator]) -> Self {
        let cols = blocks[0].cols;
        let mut trips = Vec::new();
        let mut off = 0;
        for b in blocks {
            assert_eq!(b.cols, cols, "vstack column mismatch");
            trips.extend(b.triplets().map(|(r, c, v)| (r + off, c, v)));
            off += b.rows;
        }
        Self::from_triplets(off, cols, trips)
    }

    /// Stack operators horizontally (shared row count).
    pub fn hstack(blocks: &[&SparseOperator]) -> Self {
        let rows = blocks[0].rows;
        let mut trips = Vec::new();
        let mut off = 0;
        for b in blocks {
            assert_eq!(b.rows, rows, "hstack row mismatch");
            trips.extend(b.triplets().map(|(r, c, v)| (r, c + off, v)));
            off += b.cols;
        }
        Self::from_triplets(rows, off, trips)
    }

    /// Block matrix from a row-major grid of optional blocks.
    pub fn block(grid: &[Vec<Option<&SparseOperator>>], row_sizes: &[usize], col_sizes: &[usize]) -> Self {
        let mut trips = Vec::new();
        let mut roff = 0;
        for (bi, brow) in grid.iter().enumerate() {
            let mut coff = 0;
            for (bj, blk) in brow.iter().enumerate() {
                if let Some(b) = blk {
                    assert_eq!(b.shape(), (row_sizes[bi], col_sizes[bj]), "block ({bi},{bj}) shape");
                    trips.extend(b.triplets().map(|(r, c, v)| (r + roff, c + coff, v)));
                }
                coff += col_sizes[bj];
            }
            roff += row_sizes[bi];
        }
        Self::from_triplets(roff, col_sizes.iter().sum(), trips)
    }

    /// Keep only the listed rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut trips = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            trips.extend(self.row(r).map(|(c, v)| (i, c, v)));
        }
        Self::from_triplets(rows.len(), self.cols, trips)
    }

    /// Replace the listed rows with identity rows (square operators only).
    pub fn with_identity_rows(&self, rows: &[bool]) -> Self {
        assert_eq!(self.rows, self.cols);
        let trips = self
            .triplets()
            .filter(|&(r, _, _)| !rows[r])
            .chain((0..self.rows).filter(|&r| rows[r]).map(|r| (r, r, 1.0)))
            .collect();
        let mut out = Self::from_triplets(self.rows, self.cols, trips);
        out.domain = self.domain.clone();
        out.codomain = self.codomain.clone();
        out
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute row sum (infinity norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.cols]; self.rows];
        for (r, c, v) in self.triplets() {
            a[r][c] = v;
        }
        a
    }
}

/// Kronecker chain with the x-axis factor first: returns F[d-1] ⊗ … ⊗ F[0],
/// which matches x-index-fastest flattening.
pub fn kron_axes(factors: &[SparseOperator]) -> SparseOperator {
    let mut out = factors[0].clone();
    for f in &factors[1..] {
        out = f.kron(&out);
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
