use super::FemError;

/// Smallest pivot magnitude accepted by [`solve_tridiagonal`].
pub const PIVOT_FLOOR: f64 = 1e-14;

/// Tridiagonal linear system `A x = rhs`.
///
/// `lower[i]` couples row `i + 1` to column `i`, `upper[i]` couples row `i`
/// to column `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn zeros(dim: usize) -> TridiagonalSystem {
        TridiagonalSystem {
            lower: vec![0.0; dim.saturating_sub(1)],
            diag: vec![0.0; dim],
            upper: vec![0.0; dim.saturating_sub(1)],
            rhs: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn check_shape(&self) -> Result<(), FemError> {
        let n = self.diag.len();
        let off = n.saturating_sub(1);
        if n == 0 || self.lower.len() != off || self.upper.len() != off || self.rhs.len() != n {
            return Err(FemError::Dimension(format!(
                "tridiagonal system with diag {}, lower {}, upper {}, rhs {}",
                n,
                self.lower.len(),
                self.upper.len(),
                self.rhs.len()
            )));
        }
        Ok(())
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.upper[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Max-norm of `A x - rhs`.
    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        self.apply(x)
            .iter()
            .zip(&self.rhs)
            .fold(0.0, |m, (ax, b)| f64::max(m, (ax - b).abs()))
    }

    /// Row-sum (infinity) norm of the matrix.
    pub fn matrix_norm(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.lower[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.upper[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn solve(&self) -> Result<Vec<f64>, FemError> {
        let mut x = Vec::new();
        let mut scratch = Vec::new();
        self.solve_into(&mut x, &mut scratch)?;
        Ok(x)
    }

    /// Thomas algorithm writing into caller-provided buffers.
    pub fn solve_into(&self, x: &mut Vec<f64>, scratch: &mut Vec<f64>) -> Result<(), FemError> {
        self.check_shape()?;
        if let Some(bad) = self
            .diag
            .iter()
            .chain(&self.lower)
            .chain(&self.upper)
            .chain(&self.rhs)
            .find(|v| !v.is_finite())
        {
            return Err(FemError::NonFinite(format!("system entry {bad}")));
        }
        let n = self.dim();
        x.clear();
        x.resize(n, 0.0);
        scratch.clear();
        scratch.resize(n, 0.0);

        let mut pivot = self.diag[0];
        if pivot.abs() < PIVOT_FLOOR {
            return Err(FemError::Singular { row: 0, pivot });
        }
        scratch[0] = if n > 1 { self.upper[0] / pivot } else { 0.0 };
        x[0] = self.rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i - 1] * scratch[i - 1];
            if pivot.abs() < PIVOT_FLOOR {
                return Err(FemError::Singular { row: i, pivot });
            }
            if i + 1 < n {
                scratch[i] = self.upper[i] / pivot;
            }
            x[i] = (self.rhs[i] - self.lower[i - 1] * x[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            x[i] -= scratch[i] * x[i + 1];
        }
        Ok(())
    }
}

pub fn solve_tridiagonal(sys: &TridiagonalSystem) -> Result<Vec<f64>, FemError> {
    sys.solve()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_gauss(sys: &TridiagonalSystem) -> Vec<f64> {
        let n = sys.dim();
        let mut a = vec![vec![0.0; n + 1]; n];
        for i in 0..n {
            a[i][i] = sys.diag[i];
            if i > 0 {
                a[i][i - 1] = sys.lower[i - 1];
            }
            if i + 1 < n {
                a[i][i + 1] = sys.upper[i];
            }
            a[i][n] = sys.rhs[i];
        }
        for col in 0..n {
            let p = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, p);
            for row in col + 1..n {
                let m = a[row][col] / a[col][col];
                let (pivot_row, rest) = a.split_at_mut(row);
                for (t, s) in rest[0][col..].iter_mut().zip(&pivot_row[col][col..]) {
                    *t -= m * s;
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
            x[i] = (a[i][n] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn identity() {
        let mut sys = TridiagonalSystem::zeros(4);
        sys.diag.fill(1.0);
        sys.rhs = vec![1.0, -2.0, 3.5, 0.0];
        assert_eq!(sys.solve().unwrap(), sys.rhs);
    }

    #[test]
    fn diagonally_dominant_matches_dense() {
        let sys = TridiagonalSystem {
            lower: vec![-1.0, 0.5, 2.0, -0.3],
            diag: vec![4.0, 5.0, -6.0, 7.5, 3.0],
            upper: vec![1.5, -2.0, 1.0, 0.7],
            rhs: vec![1.0, 2.0, 3.0, -4.0, 0.25],
        };
        let x = sys.solve().unwrap();
        let reference = dense_gauss(&sys);
        for (a, b) in x.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(sys.residual_norm(&x) < 1e-14);
    }

    #[test]
    fn zero_row_is_singular() {
        let sys = TridiagonalSystem {
            lower: vec![1.0, 0.0],
            diag: vec![2.0, 0.0, 3.0],
            upper: vec![0.0, 1.0],
            rhs: vec![1.0, 1.0, 1.0],
        };
        assert!(matches!(
            sys.solve(),
            Err(FemError::Singular { row: 1, .. })
        ));
        let mut first = TridiagonalSystem::zeros(3);
        first.diag = vec![0.0, 1.0, 1.0];
        assert!(matches!(
            first.solve(),
            Err(FemError::Singular { row: 0, .. })
        ));
    }

    #[test]
    fn shape_mismatch() {
        let mut sys = TridiagonalSystem::zeros(3);
        sys.rhs.pop();
        assert!(matches!(sys.solve(), Err(FemError::Dimension(_))));
    }
}
