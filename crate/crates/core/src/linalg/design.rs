use rayon::prelude::*;

use crate::{Error, Result};

/// Columns processed per rayon task in the `O(np)` passes.
const COL_CHUNK: usize = 128;

/// Column-major dense matrix (rows are samples).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::Dimension(format!(
                "{nrows}x{ncols} matrix needs {} values, got {}",
                nrows * ncols,
                data.len()
            )));
        }
        Ok(Self { nrows, ncols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::Dimension(format!(
                    "row {} has {} columns, expected {ncols}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                m.data[i + j * nrows] = v;
            }
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i + j * self.nrows]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i + j * self.nrows] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Drops entries equal to zero into a CSC copy.
    pub fn to_csc(&self) -> CscMatrix {
        let mut col_ptr = Vec::with_capacity(self.ncols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for j in 0..self.ncols {
            for (i, &v) in self.col(j).iter().enumerate() {
                if v != 0.0 {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        CscMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            col_ptr,
            row_idx,
            values,
        }
    }
}

/// Compressed-sparse-column matrix. Explicit zeros are kept as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Builds from `(row, col, value)` triplets (0-based). Duplicate
    /// coordinates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; ncols + 1];
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::Dimension(format!(
                    "entry ({}, {}) outside {nrows}x{ncols}",
                    i + 1,
                    j + 1
                )));
            }
            counts[j + 1] += 1;
        }
        for j in 0..ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut rows = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            rows[next[j]] = i;
            vals[next[j]] = v;
            next[j] += 1;
        }
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        col_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for j in 0..ncols {
            scratch.clear();
            scratch.extend((counts[j]..counts[j + 1]).map(|k| (rows[k], vals[k])));
            scratch.sort_by_key(|&(i, _)| i);
            for &(i, v) in &scratch {
                if row_idx.len() > col_ptr[j] && *row_idx.last().unwrap() == i {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.nrows, self.ncols);
        for j in 0..self.ncols {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                m.set(i, j, v);
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub enum RawMatrix {
    Dense(DenseMatrix),
    Sparse(CscMatrix),
}

impl RawMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            RawMatrix::Dense(m) => m.nrows(),
            RawMatrix::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            RawMatrix::Dense(m) => m.ncols(),
            RawMatrix::Sparse(m) => m.ncols(),
        }
    }
}

/// Raw covariates `Z` together with column means and population standard
/// deviations. Presents `X = (Z − 1 Z̄ᵀ) D^{-1/2}` without materializing it,
/// so every admissible column has `1ᵀX_j = 0` and `‖X_j‖² = n`.
///
/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone)]
pub struct StandardizedDesign {
    raw: RawMatrix,
    means: Vec<f64>,
    sds: Vec<f64>,
    inv_sds: Vec<f64>,
    admissible: Vec<bool>,
    n_admissible: usize,
    names: Option<Vec<String>>,
}

/// `Σ (z_i − m) v_i` with four interleaved partial sums, combined in a fixed
/// order.
fn centered_dot(z: &[f64], v: &[f64], m: f64) -> f64 {
    let mut acc = [0.0f64; 4];
    let zc = z.chunks_exact(4);
    let vc = v.chunks_exact(4);
    let (zr, vr) = (zc.remainder(), vc.remainder());
    for (a, b) in zc.zip(vc) {
        for l in 0..4 {
            acc[l] += (a[l] - m) * b[l];
        }
    }
    let tail: f64 = zr.iter().zip(vr).map(|(a, b)| (a - m) * b).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl StandardizedDesign {
    pub fn dense(z: DenseMatrix) -> Result<Self> {
        Self::new(RawMatrix::Dense(z))
    }

    pub fn sparse(z: CscMatrix) -> Result<Self> {
        Self::new(RawMatrix::Sparse(z))
    }

    /// Computes column means and population SDs (divisor `n`). Columns with
    /// zero spread are kept but flagged inadmissible.
    pub fn new(raw: RawMatrix) -> Result<Self> {
        let n = raw.nrows();
        let p = raw.ncols();
        if n < 2 {
            return Err(Error::Dimension(format!("design needs at least 2 rows, got {n}")));
        }
        if p == 0 {
            return Err(Error::Dimension("design has no columns".into()));
        }
        let nf = n as f64;
        let mut means = vec![0.0; p];
        let mut sds = vec![0.0; p];
        for j in 0..p {
            let (mean, ss, max_abs) = match &raw {
                RawMatrix::Dense(m) => {
                    let col = m.col(j);
                    if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                        return Err(non_finite(i, j));
                    }
                    let mean = col.iter().sum::<f64>() / nf;
                    let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
                    let max_abs = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    (mean, ss, max_abs)
                }
                RawMatrix::Sparse(m) => {
                    let (rows, vals) = m.col(j);
                    if let Some(k) = vals.iter().position(|v| !v.is_finite()) {
                        return Err(non_finite(rows[k], j));
                    }
                    let mean = vals.iter().sum::<f64>() / nf;
                    let implicit = (n - vals.len()) as f64;
                    let ss: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                        + implicit * mean * mean;
                    let max_abs = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    (mean, ss, max_abs)
                }
            };
            means[j] = mean;
            sds[j] = (ss / nf).sqrt();
            if sds[j] <= 1e-12 * max_abs {
                sds[j] = 0.0;
            }
        }
        let admissible: Vec<bool> = sds.iter().map(|&s| s > 0.0).collect();
        let inv_sds: Vec<f64> = sds.iter().map(|&s| if s > 0.0 { 1.0 / s } else { 0.0 }).collect();
        let n_admissible = admissible.iter().filter(|&&a| a).count();
        if n_admissible < p {
            log::warn!("{} constant column(s) excluded from screening", p - n_admissible);
        }
        Ok(Self {
            raw,
            means,
            sds,
            inv_sds,
            admissible,
            n_admissible,
            names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::Dimension(format!(
                "{} column names for {} columns",
                names.len(),
                self.p()
            )));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.raw.nrows()
    }

    pub fn p(&self) -> usize {
        self.raw.ncols()
    }

    pub fn raw(&self) -> &RawMatrix {
        &self.raw
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sds(&self) -> &[f64] {
        &self.sds
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn is_admissible(&self, j: usize) -> bool {
        self.admissible[j]
    }

    pub fn admissible(&self) -> &[bool] {
        &self.admissible
    }

    pub fn n_admissible(&self) -> usize {
        self.n_admissible
    }

    /// `X_jᵀ v`, zero for inadmissible columns. `v_sum` must be `1ᵀv`.
    #[inline]
    fn col_dot_unchecked(&self, j: usize, v: &[f64], v_sum: f64) -> f64 {
        let s = self.inv_sds[j];
        if s == 0.0 {
            return 0.0;
        }
        let m = self.means[j];
        match &self.raw {
            RawMatrix::Dense(z) => {
                (centered_dot(z.col(j), v, m)) * s
            }
            RawMatrix::Sparse(z) => {
                let (rows, vals) = z.col(j);
                let dot: f64 = rows.iter().zip(vals).map(|(&i, zi)| zi * v[i]).sum();
                (dot - m * v_sum) * s
            }
        }
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n() {
            Err(Error::Dimension(format!(
                "vector of length {} against design with {} rows",
                v.len(),
                self.n()
            )))
        } else {
            Ok(())
        }
    }

    /// `Xᵀ v` for all columns; inadmissible entries are zero.
    pub fn xt_v(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.p()];
        self.xt_v_into(v, &mut out)?;
        Ok(out)
    }

    /// In-place variant of [`xt_v`](Self::xt_v). Each entry is reduced in a
    /// fixed sequential order, so results do not depend on the thread count.
    pub fn xt_v_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_len(v)?;
        if out.len() != self.p() {
            return Err(Error::Dimension(format!(
                "output of length {} for {} columns",
                out.len(),
                self.p()
            )));
        }
        let v_sum: f64 = v.iter().sum();
        out.par_chunks_mut(COL_CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * COL_CHUNK;
            for (k, o) in chunk.iter_mut().enumerate() {
                *o = self.col_dot_unchecked(base + k, v, v_sum);
            }
        });
        Ok(())
    }

    /// `X_jᵀ v` for a single admissible column.
    pub fn x_col_dot(&self, j: usize, v: &[f64]) -> Result<f64> {
        self.check_col(j)?;
        self.check_len(v)?;
        let v_sum = match self.raw {
            RawMatrix::Dense(_) => 0.0,
            RawMatrix::Sparse(_) => v.iter().sum(),
        };
        Ok(self.col_dot_unchecked(j, v, v_sum))
    }

    /// Materializes `X_j`.
    pub fn x_col(&self, j: usize) -> Result<Vec<f64>> {
        self.check_col(j)?;
        let (m, s) = (self.means[j], self.inv_sds[j]);
        Ok(match &self.raw {
            RawMatrix::Dense(z) => z.col(j).iter().map(|zi| (zi - m) * s).collect(),
            RawMatrix::Sparse(z) => {
                let mut x = vec![-m * s; self.n()];
                let (rows, vals) = z.col(j);
                for (&i, &zi) in rows.iter().zip(vals) {
                    x[i] = (zi - m) * s;
                }
                x
            }
        })
    }

    /// `Σ_k weights[k] · X_{cols[k]}` as a length-`n` vector.
    pub fn x_combine(&self, cols: &[usize], weights: &[f64]) -> Result<Vec<f64>> {
        if cols.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} columns but {} weights",
                cols.len(),
                weights.len()
            )));
        }
        let n = self.n();
        let mut q = vec![0.0; n];
        let mut offset = 0.0;
        for (&j, &w) in cols.iter().zip(weights) {
            self.check_col(j)?;
            let (m, s) = (self.means[j], self.inv_sds[j]);
            match &self.raw {
                RawMatrix::Dense(z) => {
                    let ws = w * s;
                    for (qi, zi) in q.iter_mut().zip(z.col(j)) {
                        *qi += ws * (zi - m);
                    }
                }
                RawMatrix::Sparse(z) => {
                    let ws = w * s;
                    offset -= ws * m;
                    let (rows, vals) = z.col(j);
                    for (&i, &zi) in rows.iter().zip(vals) {
                        q[i] += ws * zi;
                    }
                }
            }
        }
        if offset != 0.0 {
            q.iter_mut().for_each(|qi| *qi += offset);
        }
        Ok(q)
    }

    /// `X Xᵀ` over all admissible columns, as a column-major `n × n` buffer.
    ///
    /// Dense input is processed in materialized column blocks; sparse input
    /// accumulates `Σ s_j² z_j z_jᵀ` over nonzeros and applies the centering
    /// correction `− c1ᵀ − 1cᵀ + d·11ᵀ` afterwards.
    pub fn row_gram(&self) -> Vec<f64> {
        let n = self.n();
        let p = self.p();
        match &self.raw {
            RawMatrix::Dense(z) => {
                const BLOCK: usize = 256;
                let mut g = nalgebra::DMatrix::<f64>::zeros(n, n);
                let mut start = 0;
                while start < p {
                    let end = (start + BLOCK).min(p);
                    let blk = nalgebra::DMatrix::from_fn(n, end - start, |i, k| {
                        let j = start + k;
                        (z.get(i, j) - self.means[j]) * self.inv_sds[j]
                    });
                    g.gemm(1.0, &blk, &blk.transpose(), 1.0);
                    start = end;
                }
                g.as_slice().to_vec()
            }
            RawMatrix::Sparse(z) => {
                let mut g = vec![0.0; n * n];
                let mut c = vec![0.0; n];
                let mut d = 0.0;
                for j in 0..p {
                    let s = self.inv_sds[j];
                    if s == 0.0 {
                        continue;
                    }
                    let s2 = s * s;
                    let m = self.means[j];
                    let (rows, vals) = z.col(j);
                    for (&a, &za) in rows.iter().zip(vals) {
                        c[a] += s2 * m * za;
                        let sa = s2 * za;
                        for (&b, &zb) in rows.iter().zip(vals) {
                            g[a + b * n] += sa * zb;
                        }
                    }
                    d += s2 * m * m;
                }
                for b in 0..n {
                    for a in 0..n {
                        g[a + b * n] += d - c[a] - c[b];
                    }
                }
                g
            }
        }
    }

    fn check_col(&self, j: usize) -> Result<()> {
        if j >= self.p() {
            return Err(Error::Dimension(format!("column {j} out of range (p = {})", self.p())));
        }
        if !self.admissible[j] {
            return Err(Error::Inadmissible(j));
        }
        Ok(())
    }
}

fn non_finite(i: usize, j: usize) -> Error {
    Error::Input(format!("non-finite entry at row {}, column {}", i + 1, j + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(n: usize, p: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * p).map(|_| rng.random_range(-2.0..3.0)).collect();
        DenseMatrix::from_col_major(n, p, data).unwrap()
    }

    /// Explicit `X` built row by row from the definition.
    fn materialize(z: &DenseMatrix) -> Vec<Vec<f64>> {
        let n = z.nrows() as f64;
        (0..z.ncols())
            .map(|j| {
                let col = z.col(j);
                let mean = col.iter().sum::<f64>() / n;
                let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                col.iter().map(|v| (v - mean) / sd).collect()
            })
            .collect()
    }

    #[test]
    fn constant_column_inadmissible() {
        let z = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let d = StandardizedDesign::dense(z).unwrap();
        assert!(!d.is_admissible(0));
        assert!(d.is_admissible(1));
        assert_eq!(d.n_admissible(), 1);
        assert!(matches!(d.x_col(0), Err(Error::Inadmissible(0))));
        assert_eq!(d.xt_v(&[1.0, 2.0, 3.0]).unwrap()[0], 0.0);
    }

    #[test]
    fn three_point_column() {
        let z = DenseMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let d = StandardizedDesign::dense(z).unwrap();
        let x = d.x_col(0).unwrap();
        let r = 1.5f64.sqrt();
        assert!((x[0] + r).abs() < 1e-14);
        assert!(x[1].abs() < 1e-14);
        assert!((x[2] - r).abs() < 1e-14);
        let norm: f64 = x.iter().map(|v| v * v).sum();
        assert!((norm - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let z = DenseMatrix::from_rows(&[vec![0.0, f64::INFINITY], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(StandardizedDesign::dense(z), Err(Error::Input(_))));
        let z = DenseMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert!(matches!(StandardizedDesign::dense(z), Err(Error::Dimension(_))));
    }

    #[test]
    fn xt_v_matches_materialized() {
        let z = random_dense(20, 8, 3);
        let x = materialize(&z);
        let d = StandardizedDesign::dense(z).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let got = d.xt_v(&v).unwrap();
        for j in 0..8 {
            let want: f64 = x[j].iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((got[j] - want).abs() < 1e-12);
            assert!((d.x_col_dot(j, &v).unwrap() - want).abs() < 1e-12);
            let col = d.x_col(j).unwrap();
            for i in 0..20 {
                assert!((col[i] - x[j][i]).abs() < 1e-12);
            }
            let norm: f64 = col.iter().map(|v| v * v).sum();
            assert!((norm / 20.0 - 1.0).abs() < 1e-10);
            assert!(col.iter().sum::<f64>().abs() < 1e-10);
        }
        assert!(d.xt_v(&[0.0; 20]).unwrap().iter().all(|&v| v == 0.0));
        assert!(matches!(d.xt_v(&[0.0; 19]), Err(Error::Dimension(_))));
    }

    #[test]
    fn sparse_with_explicit_zeros_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (n, p) = (15, 6);
        let mut trip = Vec::new();
        let mut dense = DenseMatrix::zeros(n, p);
        for j in 0..p {
            for i in 0..n {
                let u: f64 = rng.random();
                if u < 0.3 {
                    let v = rng.random_range(0.0..2.0f64).round();
                    trip.push((i, j, v));
                    dense.set(i, j, v);
                }
            }
        }
        // explicit zero
        trip.push((0, 0, 0.0));
        let sd = StandardizedDesign::sparse(CscMatrix::from_triplets(n, p, &trip).unwrap()).unwrap();
        let dd = StandardizedDesign::dense(dense).unwrap();
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
        let a = sd.xt_v(&v).unwrap();
        let b = dd.xt_v(&v).unwrap();
        for j in 0..p {
            assert_eq!(sd.is_admissible(j), dd.is_admissible(j));
            assert!((a[j] - b[j]).abs() < 1e-10);
            if dd.is_admissible(j) {
                let (xa, xb) = (sd.x_col(j).unwrap(), dd.x_col(j).unwrap());
                for i in 0..n {
                    assert!((xa[i] - xb[i]).abs() < 1e-12);
                }
            }
        }
        let cols: Vec<usize> = (0..p).filter(|&j| dd.is_admissible(j)).collect();
        let w: Vec<f64> = cols.iter().map(|&j| j as f64 - 2.5).collect();
        let qa = sd.x_combine(&cols, &w).unwrap();
        let qb = dd.x_combine(&cols, &w).unwrap();
        for i in 0..n {
            assert!((qa[i] - qb[i]).abs() < 1e-10);
        }
        let ga = sd.row_gram();
        let gb = dd.row_gram();
        for (x, y) in ga.iter().zip(&gb) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn row_gram_matches_explicit() {
        let z = random_dense(9, 30, 8);
        let x = materialize(&z);
        let g = StandardizedDesign::dense(z).unwrap().row_gram();
        for a in 0..9 {
            for b in 0..9 {
                let want: f64 = x.iter().map(|c| c[a] * c[b]).sum();
                assert!((g[a + 9 * b] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn triplets_sum_duplicates_and_check_bounds() {
        let m = CscMatrix::from_triplets(3, 2, &[(2, 1, 1.0), (0, 1, 2.0), (2, 1, 0.5)]).unwrap();
        assert_eq!(m.col(1), (&[0usize, 2][..], &[2.0, 1.5][..]));
        assert_eq!(m.nnz(), 2);
        assert!(CscMatrix::from_triplets(3, 2, &[(3, 0, 1.0)]).is_err());
    }

    #[test]
    fn standardizing_standardized_is_idempotent() {
        let z = random_dense(12, 5, 21);
        let d1 = StandardizedDesign::dense(z).unwrap();
        let mut x = DenseMatrix::zeros(12, 5);
        for j in 0..5 {
            x.col_mut(j).copy_from_slice(&d1.x_col(j).unwrap());
        }
        let d2 = StandardizedDesign::dense(x).unwrap();
        for j in 0..5 {
            for k in 0..5 {
                let a = d1.x_col_dot(j, &d1.x_col(k).unwrap()).unwrap();
                let b = d2.x_col_dot(j, &d2.x_col(k).unwrap()).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn affine_invariance(seed in 0u64..1000, scale in 0.1f64..20.0, shift in -10.0f64..10.0, col in 0usize..6) {
            let z = random_dense(16, 6, seed);
            let mut z2 = z.clone();
            for v in z2.col_mut(col) {
                *v = scale * *v + shift;
            }
            let d1 = StandardizedDesign::dense(z).unwrap();
            let d2 = StandardizedDesign::dense(z2).unwrap();
            let v: Vec<f64> = (0..16).map(|i| ((i * 7 + 3) as f64).sin()).collect();
            let a = d1.xt_v(&v).unwrap();
            let b = d2.xt_v(&v).unwrap();
            for j in 0..6 {
                prop_assert!((a[j] - b[j]).abs() < 1e-10);
            }
        }

        #[test]
        fn sparse_dense_agree(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut dense = DenseMatrix::zeros(10, 4);
            for j in 0..4 {
                for i in 0..10 {
                    if rng.random::<f64>() < 0.4 {
                        dense.set(i, j, rng.random_range(-3.0..3.0));
                    }
                }
            }
            let sd = StandardizedDesign::sparse(dense.to_csc()).unwrap();
            let dd = StandardizedDesign::dense(dense).unwrap();
            let v: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = sd.xt_v(&v).unwrap();
            let b = dd.xt_v(&v).unwrap();
            for j in 0..4 {
                prop_assert!((a[j] - b[j]).abs() < 1e-10);
            }
        }
    }
}
