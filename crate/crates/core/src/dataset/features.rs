//! Feature expansion and z-scoring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tomo::TOMOGRAM_LEN;

/// `80 + 80 + 80·81/2`.
pub const EXPANDED_LEN: usize = 2 * TOMOGRAM_LEN + TOMOGRAM_LEN * (TOMOGRAM_LEN + 1) / 2;

/// `[c, exp(c), c_i·c_j for i ≤ j]`.
pub fn expand(c: &[f64]) -> Result<Vec<f64>> {
    if c.len() != TOMOGRAM_LEN {
        return Err(Error::Format(format!("tomogram needs {TOMOGRAM_LEN} coefficients, got {}", c.len())));
    }
    let mut out = Vec::with_capacity(EXPANDED_LEN);
    out.extend_from_slice(c);
    out.extend(c.iter().map(|x| x.exp()));
    for i in 0..TOMOGRAM_LEN {
        for j in i..TOMOGRAM_LEN {
            out.push(c[i] * c[j]);
        }
    }
    Ok(out)
}

/// Per-column z-score parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Column means and population standard deviations. Constant columns get
    /// a unit divisor so they pass through centered.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::InvalidArgument("cannot fit scaling on zero rows".into()))?;
        let width = first.len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Format("ragged feature rows".into()));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; width];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .into_iter()
            .zip(&mean)
            .map(|(v, m)| {
                let sd = (v / n).sqrt();
                // relative floor: a column that only varies by round-off is constant
                if sd > 1e-12 * m.abs().max(1e-300) && sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.width() {
            return Err(Error::Dimension { expected: self.width(), got: row.len() });
        }
        Ok(row.iter().zip(self.mean.iter().zip(&self.scale)).map(|(x, (m, s))| (x - m) / s).collect())
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Optionally expands tomograms, then z-scores with parameters fitted on
/// these rows. Apply the returned [`Standardizer`] to held-out rows.
pub fn featurize(rows: &[Vec<f64>], expand_features: bool) -> Result<(Vec<Vec<f64>>, Standardizer)> {
    let raw: Vec<Vec<f64>> = rows
        .iter()
        .map(|c| {
            if expand_features {
                expand(c)
            } else if c.len() == TOMOGRAM_LEN {
                Ok(c.clone())
            } else {
                Err(Error::Format(format!("tomogram needs {TOMOGRAM_LEN} coefficients, got {}", c.len())))
            }
        })
        .collect::<Result<_>>()?;
    let scaler = Standardizer::fit(&raw)?;
    let scaled = scaler.transform(&raw)?;
    Ok((scaled, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_tomogram_blocks() {
        let e = expand(&[0.0; 80]).unwrap();
        assert_eq!(e.len(), 3400);
        assert!(e[..80].iter().all(|&x| x == 0.0));
        assert!(e[80..160].iter().all(|&x| x == 1.0));
        assert!(e[160..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn quadratic_order() {
        let c: Vec<f64> = (0..80).map(|i| i as f64 + 1.0).collect();
        let e = expand(&c).unwrap();
        assert_eq!(e[160], 1.0);
        assert_eq!(e[161], 2.0);
        assert_eq!(e[160 + 80], 4.0); // (1,1) follows the 80 products of c_0
        assert_eq!(*e.last().unwrap(), 6400.0);
    }

    #[test]
    fn constant_columns_pass_through_centered() {
        let rows = vec![vec![1.0, 2.0], vec![1.0, 4.0]];
        let s = Standardizer::fit(&rows).unwrap();
        assert_eq!(s.scale[0], 1.0);
        assert_eq!(s.transform_row(&[1.0, 3.0]).unwrap(), vec![0.0, 0.0]);
        assert!(featurize(&[vec![0.0; 79]], true).is_err());
    }
}
