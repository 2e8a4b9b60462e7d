//! Helpers shared by the integration tests.

use cavity_search::Complex64;
use nalgebra::{DMatrix, DVector};

/// Unitary on `m` dimensions whose first column is uniform: Gram–Schmidt
/// over the columns of a random complex matrix, then the standard basis.
pub fn random_mixing(m: usize, entries: &[f64]) -> DMatrix<Complex64> {
    let uniform = DVector::from_element(m, Complex64::new(1.0 / (m as f64).sqrt(), 0.0));
    let random = (0..m).map(|k| {
        DVector::from_fn(m, |i, _| {
            Complex64::new(entries[2 * (k * m + i)], entries[2 * (k * m + i) + 1])
        })
    });
    let unit = (0..m)
        .map(|k| DVector::from_fn(m, |i, _| Complex64::new(f64::from(u8::from(i == k)), 0.0)));
    let mut cols = vec![uniform];
    for mut v in random.chain(unit) {
        if cols.len() == m {
            break;
        }
        for _ in 0..2 {
            for c in &cols {
                let p = c.dotc(&v);
                v -= c * p;
            }
        }
        let norm = v.norm();
        if norm > 1e-3 {
            cols.push(v / Complex64::new(norm, 0.0));
        }
    }
    DMatrix::from_columns(&cols)
}
