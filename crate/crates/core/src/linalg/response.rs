use crate::{Error, Result};

/// Response centered at its mean and rescaled so that `‖ỹ‖² = n`.
#[derive(Debug, Clone)]
pub struct CenteredResponse {
    y_tilde: Vec<f64>,
    norm_sq: f64,
    original_scale: f64,
    ybar: f64,
}

impl CenteredResponse {
    pub fn new(y: &[f64]) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::Dimension(format!("response needs at least 2 values, got {n}")));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("response value {} is not finite", i + 1)));
        }
        let ybar = y.iter().sum::<f64>() / n as f64;
        let centered: Vec<f64> = y.iter().map(|v| v - ybar).collect();
        let ss: f64 = centered.iter().map(|v| v * v).sum();
        if !(ss > 0.0) {
            return Err(Error::Input("response has zero variance".into()));
        }
        let scale = (n as f64 / ss).sqrt();
        let y_tilde: Vec<f64> = centered.iter().map(|v| v * scale).collect();
        let norm_sq = y_tilde.iter().map(|v| v * v).sum();
        Ok(Self {
            y_tilde,
            norm_sq,
            original_scale: scale,
            ybar,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.y_tilde
    }

    pub fn len(&self) -> usize {
        self.y_tilde.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_tilde.is_empty()
    }

    /// `‖ỹ‖²`, equal to `n` up to rounding.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// Factor applied to `y − ȳ`.
    pub fn original_scale(&self) -> f64 {
        self.original_scale
    }

    pub fn ybar(&self) -> f64 {
        self.ybar
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_and_scaled() {
        let r = CenteredResponse::new(&[1.0, 4.0, 2.0, 9.0, -3.0]).unwrap();
        let s: f64 = r.values().iter().sum();
        assert!(s.abs() < 1e-12);
        assert!((r.norm_sq() - 5.0).abs() < 1e-12);
        assert!((r.ybar() - 2.6).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(CenteredResponse::new(&[1.0]).is_err());
        assert!(CenteredResponse::new(&[2.0, 2.0, 2.0]).is_err());
        assert!(CenteredResponse::new(&[2.0, f64::NAN]).is_err());
    }
}
