use crate::error::{IpadError, Result};
use crate::linalg::Mat;

/// Overcomplete 1-D DCT frame: `len × atoms`, non-constant atoms with their
/// mean removed, every column normalized.
pub fn dct_1d(len: usize, atoms: usize) -> Mat {
    let mut d = Mat::zeros((len, atoms));
    for k in 0..atoms {
        let mut col = d.column_mut(k);
        for i in 0..len {
            col[i] = (std::f64::consts::PI * (i * k) as f64 / atoms as f64).cos();
        }
        if k > 0 {
            let mean = col.sum() / len as f64;
            col.mapv_inplace(|v| v - mean);
        }
        let norm = col.dot(&col).sqrt();
        col.mapv_inplace(|v| v / norm);
    }
    d
}

/// Separable overcomplete DCT dictionary for `side × side` patches with
/// `atoms` columns; `atoms` must be a perfect square.
pub fn overcomplete_dct(side: usize, atoms: usize) -> Result<Mat> {
    let k = (atoms as f64).sqrt().round() as usize;
    if k * k != atoms || k == 0 || side == 0 {
        return Err(IpadError::Config(format!(
            "DCT dictionary needs a square atom count, got {atoms}"
        )));
    }
    let one = dct_1d(side, k);
    let n = side * side;
    let mut d = Mat::zeros((n, atoms));
    // Atom (a, b) at column a*k + b is the outer product of 1-D atoms a (rows) and b (columns).
    for a in 0..k {
        for b in 0..k {
            let mut col = d.column_mut(a * k + b);
            for i in 0..side {
                for j in 0..side {
                    col[i * side + j] = one[[i, a]] * one[[j, b]];
                }
            }
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_are_unit_norm() {
        let d = overcomplete_dct(8, 256).unwrap();
        assert_eq!(d.dim(), (64, 256));
        for c in d.columns() {
            assert!((c.dot(&c).sqrt() - 1.0).abs() < 1e-12);
        }
        // the first atom is flat
        assert!(d.column(0).iter().all(|v| (v - 0.125).abs() < 1e-12));
    }

    #[test]
    fn non_square_sizes_are_rejected() {
        assert!(overcomplete_dct(8, 200).is_err());
    }
}
