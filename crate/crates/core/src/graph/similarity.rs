use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::{Error, Result};

/// Cosine similarity; a zero-norm operand yields 0.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("cosine of lengths {} and {}", a.len(), b.len())));
    }
    Ok(cosine_view(ArrayView1::from(a), ArrayView1::from(b)))
}

fn cosine_view(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(&b) / (na * nb)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    pub values: Array2<f64>,
    /// Rows whose vector had zero norm; all their similarities are 0.
    pub zero_norm_rows: Vec<usize>,
}

/// Pairwise cosine similarity between the rows of `x`.
pub fn cosine_matrix(x: ArrayView2<f64>) -> SimilarityMatrix {
    let n = x.nrows();
    let mut values = Array2::zeros((n, n));
    let zero_norm_rows = (0..n).filter(|&i| x.row(i).iter().all(|&v| v == 0.0)).collect();
    for i in 0..n {
        for j in i..n {
            let s = cosine_view(x.row(i), x.row(j));
            values[[i, j]] = s;
            values[[j, i]] = s;
        }
    }
    SimilarityMatrix { values, zero_norm_rows }
}

/// Binary matrix with 1 where `s_ij >= phi` off the diagonal.
pub fn threshold_similarity(s: ArrayView2<f64>, phi: f64) -> Result<Array2<f64>> {
    if !(-1.0..=1.0).contains(&phi) {
        return Err(Error::Config(format!("similarity threshold {phi} outside [-1, 1]")));
    }
    let (n, m) = s.dim();
    if n != m {
        return Err(Error::Shape(format!("similarity matrix is {n}×{m}")));
    }
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if (s[[i, j]] - s[[j, i]]).abs() > 1e-12 {
                return Err(Error::Invalid(format!("similarity matrix not symmetric at ({i}, {j})")));
            }
            if i != j && s[[i, j]] >= phi {
                out[[i, j]] = 1.0;
            }
        }
    }
    Ok(out)
}
