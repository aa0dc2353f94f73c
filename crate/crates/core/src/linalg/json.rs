use serde::{Deserialize, Serialize};

use super::{CMatrix, HermitianMatrix, C64};
use crate::{Error, Result, SpdMatrix};

/// On-disk matrix format: `{"n": 2, "re": [[..],[..]], "im": [[..],[..]]}`.
///
/// `im` may be omitted and then defaults to zeros; it is omitted on output
/// when the matrix is real.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn to_hermitian(&self) -> Result<HermitianMatrix> {
        let n = self.n;
        check_rows("re", &self.re, n)?;
        if let Some(im) = &self.im {
            check_rows("im", im, n)?;
        }
        let m = CMatrix::from_fn(n, n, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |im| im[i][j]);
            C64::new(self.re[i][j], im)
        });
        HermitianMatrix::new(m)
    }

    pub fn to_spd(&self) -> Result<SpdMatrix> {
        SpdMatrix::new(self.to_hermitian()?)
    }

    pub fn from_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("matrix JSON: {e}")))
    }
}

fn check_rows(name: &str, rows: &[Vec<f64>], n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("matrix dimension n must be positive".into()));
    }
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput(format!(
            "\"{name}\" must be {n} rows of {n} entries"
        )));
    }
    Ok(())
}

impl From<&HermitianMatrix> for MatrixJson {
    fn from(h: &HermitianMatrix) -> Self {
        let n = h.dim();
        let m = h.matrix();
        let re = (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect();
        let im: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect();
        let real = im.iter().flatten().all(|&v| v == 0.0);
        MatrixJson {
            n,
            re,
            im: if real { None } else { Some(im) },
        }
    }
}

impl From<&SpdMatrix> for MatrixJson {
    fn from(a: &SpdMatrix) -> Self {
        MatrixJson::from(a.as_hermitian())
    }
}

