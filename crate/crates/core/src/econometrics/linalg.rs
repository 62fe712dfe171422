use nalgebra::{DMatrix, DVector};

use super::EconError;

/// Relative residual norm below which a column counts as a combination of
/// the ones before it.
const RANK_TOL: f64 = 1e-9;

pub(crate) struct LeastSquares {
    pub beta: DVector<f64>,
    /// `(X'X)^{-1}`.
    pub xtx_inv: DMatrix<f64>,
    pub residuals: DVector<f64>,
    pub ssr: f64,
}

/// Names every column that is (numerically) spanned by earlier columns.
pub(crate) fn check_rank(x: &DMatrix<f64>, names: &[String]) -> Result<(), EconError> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut bad = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        let mut v = col;
        for q in &basis {
            let proj = q.dot(&v);
            v.axpy(-proj, q, 1.0);
        }
        // Second pass keeps the basis orthogonal in floating point.
        for q in &basis {
            let proj = q.dot(&v);
            v.axpy(-proj, q, 1.0);
        }
        let rest = v.norm();
        if norm == 0.0 || rest <= RANK_TOL * norm {
            bad.push(name.clone());
        } else {
            basis.push(v / rest);
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(EconError::RankDeficient { columns: bad })
    }
}

pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<LeastSquares, EconError> {
    check_rank(x, names)?;
    let xtx = x.transpose() * x;
    let chol = xtx.cholesky().ok_or_else(|| EconError::RankDeficient { columns: names.to_vec() })?;
    let mut beta = chol.solve(&(x.transpose() * y));
    // One step of iterative refinement against the normal equations.
    let r = y - x * &beta;
    beta += chol.solve(&(x.transpose() * &r));
    let residuals = y - x * &beta;
    let ssr = residuals.norm_squared();
    Ok(LeastSquares { beta, xtx_inv: chol.inverse(), residuals, ssr })
}

pub(crate) fn from_columns(columns: &[Vec<f64>], rows: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_collinear_columns() {
        let x = from_columns(&[vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 0.0, 1.0, 0.0], vec![2.0, 4.0, 6.0, 8.0]], 4);
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(check_rank(&x, &names), Err(EconError::RankDeficient { columns: vec!["c".into()] }));
    }

    #[test]
    fn exact_fit() {
        let x = from_columns(&[vec![1.0; 4], vec![0.0, 1.0, 2.0, 3.0]], 4);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let ls = least_squares(&x, &y, &["c".into(), "x".into()]).unwrap();
        assert!((ls.beta[0] - 1.0).abs() < 1e-14 && (ls.beta[1] - 2.0).abs() < 1e-14);
        assert!(ls.ssr < 1e-26);
    }
}
