use crate::{Error, Result};

/// Upper-triangular Cholesky factor `R` grown one column at a time.
///
/// Columns are stored packed and contiguous: column `j` occupies
/// `data[j(j+1)/2 .. (j+1)(j+2)/2]` with the diagonal entry last. Both
/// triangular solves walk columns, so every inner loop is a contiguous dot
/// product or axpy.
#[derive(Debug, Clone, Default)]
pub struct TriangularFactor {
    data: Vec<f64>,
    order: usize,
    log_det: f64,
    path_order: Vec<usize>,
}

#[inline]
fn col_start(j: usize) -> usize {
    j * (j + 1) / 2
}

impl TriangularFactor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(order: usize) -> Self {
        Self {
            data: Vec::with_capacity(col_start(order)),
            order: 0,
            log_det: 0.0,
            path_order: Vec::with_capacity(order),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_empty(&self) -> bool {
        self.order == 0
    }

    /// `Σ log R_jj`, i.e. half the log-determinant of `RᵀR`.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Design-column index attached to each factor column, in append order.
    pub fn path_order(&self) -> &[usize] {
        &self.path_order
    }

    /// Strictly-upper part of column `j` followed by its diagonal.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[col_start(j)..col_start(j + 1)]
    }

    pub fn diag(&self, j: usize) -> f64 {
        self.data[col_start(j + 1) - 1]
    }

    /// Entry `R[i, j]` (zero below the diagonal).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i > j {
            0.0
        } else {
            self.data[col_start(j) + i]
        }
    }

    /// Appends the column `(alpha, b)`, turning `R_{k-1}` into
    /// `[[R_{k-1}, alpha], [0, b]]`.
    pub fn append(&mut self, alpha: &[f64], b: f64, column_index: usize) -> Result<()> {
        if alpha.len() != self.order {
            return Err(Error::Dimension(format!(
                "append expects {} off-diagonal entries, got {}",
                self.order,
                alpha.len()
            )));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::Breakdown(format!(
                "non-positive pivot {b:e} while appending column {column_index}"
            )));
        }
        self.data.extend_from_slice(alpha);
        self.data.push(b);
        self.order += 1;
        self.log_det += b.ln();
        self.path_order.push(column_index);
        Ok(())
    }

    /// Solves `Rᵀ x = rhs` (forward substitution).
    pub fn solve_lower(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.check_rhs(rhs)?;
        let mut x = rhs.to_vec();
        for j in 0..self.order {
            let col = self.column(j);
            let (upper, diag) = col.split_at(j);
            let d = diag[0];
            if d == 0.0 {
                return Err(Error::Breakdown(format!("zero diagonal at {j}")));
            }
            let s: f64 = upper.iter().zip(&x[..j]).map(|(r, xi)| r * xi).sum();
            x[j] = (x[j] - s) / d;
        }
        Ok(x)
    }

    /// Solves `R x = rhs` (back substitution).
    pub fn solve_upper(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.check_rhs(rhs)?;
        let mut x = rhs.to_vec();
        for j in (0..self.order).rev() {
            let col = self.column(j);
            let (upper, diag) = col.split_at(j);
            let d = diag[0];
            if d == 0.0 {
                return Err(Error::Breakdown(format!("zero diagonal at {j}")));
            }
            x[j] /= d;
            let xj = x[j];
            for (xi, r) in x[..j].iter_mut().zip(upper) {
                *xi -= r * xj;
            }
        }
        Ok(x)
    }

    /// Dense column-major copy of `RᵀR`.
    pub fn gram(&self) -> Vec<f64> {
        let k = self.order;
        let mut g = vec![0.0; k * k];
        for j in 0..k {
            for i in 0..=j {
                let ci = self.column(i);
                let cj = self.column(j);
                let s: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
                g[i + j * k] = s;
                g[j + i * k] = s;
            }
        }
        g
    }

    fn check_rhs(&self, rhs: &[f64]) -> Result<()> {
        if rhs.len() != self.order {
            Err(Error::Dimension(format!(
                "factor of order {} given rhs of length {}",
                self.order,
                rhs.len()
            )))
        } else {
            Ok(())
        }
    }
}
