use crate::error::{Error, Result};
use crate::tensor::CMatrix;

/// `‖Π - Π̂‖² / ‖Π‖²`.
pub fn nmse(truth: &CMatrix, estimate: &CMatrix) -> Result<f64> {
    if truth.shape() != estimate.shape() {
        return Err(Error::Dimension(format!(
            "nmse: truth {:?}, estimate {:?}",
            truth.shape(),
            estimate.shape()
        )));
    }
    let energy = truth.norm_squared();
    if energy == 0.0 {
        return Err(Error::Degenerate("nmse of a zero-norm truth".into()));
    }
    Ok((truth - estimate).norm_squared() / energy)
}

/// Fraction of mismatched constellation indices. Both slices are
/// column-major over `rows` rows; the first row is skipped when
/// `exclude_pilot_row` is set.
pub fn ser(tx: &[usize], rx: &[usize], rows: usize, exclude_pilot_row: bool) -> Result<f64> {
    if tx.len() != rx.len() || rows == 0 || !tx.len().is_multiple_of(rows) {
        return Err(Error::Dimension(format!(
            "ser: {} transmitted, {} received, {rows} rows",
            tx.len(),
            rx.len()
        )));
    }
    let skip = usize::from(exclude_pilot_row);
    let (errors, counted) = tx
        .iter()
        .zip(rx)
        .enumerate()
        .filter(|(i, _)| i % rows >= skip)
        .fold((0usize, 0usize), |(e, c), (_, (a, b))| {
            (e + usize::from(a != b), c + 1)
        });
    Ok(if counted == 0 {
        0.0
    } else {
        errors as f64 / counted as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, standard_complex_matrix};
    use crate::tensor::C64;

    #[test]
    fn nmse_reference_values() {
        let a = standard_complex_matrix(3, 4, &mut seeded(1));
        assert_eq!(nmse(&a, &a).unwrap(), 0.0);
        assert_eq!(nmse(&a, &CMatrix::zeros(3, 4)).unwrap(), 1.0);
        assert!((nmse(&a, &(&a * C64::new(2.0, 0.0))).unwrap() - 1.0).abs() < 1e-15);
        assert!(nmse(&CMatrix::zeros(3, 4), &a).is_err());
    }

    #[test]
    fn ser_reference_values() {
        let (t, l) = (4, 3);
        let tx: Vec<usize> = (0..t * l).map(|i| i % 16).collect();
        assert_eq!(ser(&tx, &tx, t, true).unwrap(), 0.0);
        let wrong: Vec<usize> = tx.iter().map(|q| (q + 1) % 16).collect();
        assert_eq!(ser(&tx, &wrong, t, true).unwrap(), 1.0);
        let mut one = tx.clone();
        one[5] = (one[5] + 3) % 16;
        assert_eq!(ser(&tx, &one, t, true).unwrap(), 1.0 / ((t - 1) * l) as f64);
        let mut pilot = tx.clone();
        pilot[4] = 9;
        assert_eq!(ser(&tx, &pilot, t, true).unwrap(), 0.0);
        assert_eq!(ser(&tx, &pilot, t, false).unwrap(), 1.0 / (t * l) as f64);
    }
}
