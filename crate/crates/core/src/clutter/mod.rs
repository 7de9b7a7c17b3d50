//! Truncated-SVD clutter filter over the slow-time Casorati matrix.
//!
//! The ensemble is viewed as a `points x frames` matrix. Its right singular
//! vectors are the eigenvectors of the `frames x frames` Gram matrix, so the
//! filter only needs a small Hermitian eigensolve. Removing the `n_cut`
//! strongest components projects every point's slow-time series onto the
//! complement of the dominant (tissue) subspace.

mod eig;

use alloc::vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use alloc::vec::Vec;

use num_complex::Complex64;

pub use eig::hermitian_eigen;

use crate::beamform::BeamformedEnsemble;
use crate::error::{Error, Result};

/// Column-per-frame view of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct CasoratiMatrix {
    pub rows: usize,
    pub frames: usize,
    /// Column-major: column `k` is frame `k`.
    pub columns: Vec<Complex64>,
}

impl CasoratiMatrix {
    pub fn from_ensemble(e: &BeamformedEnsemble) -> Self {
        Self {
            rows: e.points(),
            frames: e.frames,
            columns: e.values.clone(),
        }
    }

    pub fn column(&self, k: usize) -> &[Complex64] {
        &self.columns[k * self.rows..(k + 1) * self.rows]
    }

    /// `X^H X`, row-major.
    pub fn gram(&self) -> Vec<Complex64> {
        let k = self.frames;
        let mut g = vec![Complex64::new(0.0, 0.0); k * k];
        for a in 0..k {
            for b in a..k {
                let s: Complex64 = self
                    .column(a)
                    .iter()
                    .zip(self.column(b))
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                g[a * k + b] = s;
                g[b * k + a] = s.conj();
            }
        }
        g
    }

    /// Singular values (descending) and right singular vectors (columns, row-major `frames x frames`).
    pub fn right_singular(&self) -> (Vec<f64>, Vec<Complex64>) {
        let (w, v) = hermitian_eigen(&self.gram(), self.frames);
        (w.into_iter().map(|x| x.max(0.0).sqrt()).collect(), v)
    }
}

/// Removes the `n_cut` largest singular components of the ensemble.
pub fn svd_filter(ensemble: &BeamformedEnsemble, n_cut: usize) -> Result<BeamformedEnsemble> {
    let k = ensemble.frames;
    if n_cut >= k {
        return Err(Error::Rank { n_cut, frames: k });
    }
    if n_cut == 0 || ensemble.points() == 0 {
        return Ok(ensemble.clone());
    }
    let x = CasoratiMatrix::from_ensemble(ensemble);
    let (_, v) = x.right_singular();
    let n = x.rows;

    // out = X (I - Vc Vc^H)
    let mut out = ensemble.clone();
    for c in 0..n_cut {
        let vc: Vec<Complex64> = (0..k).map(|r| v[r * k + c]).collect();
        let mut proj = vec![Complex64::new(0.0, 0.0); n];
        for (f, w) in vc.iter().enumerate() {
            for (p, val) in proj.iter_mut().zip(x.column(f)) {
                *p += val * w;
            }
        }
        for (f, w) in vc.iter().enumerate() {
            let wc = w.conj();
            for (o, p) in out.values[f * n..(f + 1) * n].iter_mut().zip(&proj) {
                *o -= p * wc;
            }
        }
    }
    Ok(out)
}
