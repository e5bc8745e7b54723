//! Principal component analysis by eigendecomposition of the sample covariance.
//!
//! The symmetric eigensolver is Householder tridiagonalization followed by
//! implicit QL iterations, which is exact up to rounding and deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{gemm, Matrix};
use crate::preprocess::DesignMatrix;

/// Iterations allowed per eigenvalue before the QL sweep gives up.
const QL_ITERATIONS_PER_EIGENVALUE: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `d x k`, orthonormal columns.
    pub components: Matrix,
    /// Non-increasing, non-negative.
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub total_variance: f64,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Projects one row in place of `out` (length `k`).
    pub fn project_row(&self, row: &[f64], out: &mut [f64]) {
        let k = self.n_components();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, (&x, &mu)) in row.iter().zip(&self.mean).enumerate() {
            let centered = x - mu;
            if centered == 0.0 {
                continue;
            }
            let comp = self.components.row(j);
            for c in 0..k {
                out[c] += centered * comp[c];
            }
        }
    }

    /// Maps scores back to input space: `mean + scores · componentsᵀ`.
    pub fn inverse_transform(&self, scores: &Matrix) -> Result<Matrix> {
        if scores.cols() != self.n_components() {
            return Err(Error::DimensionMismatch {
                expected: self.n_components(),
                found: scores.cols(),
            });
        }
        let mut out = Matrix::zeros(scores.rows(), self.input_dim());
        for r in 0..out.rows() {
            out.row_mut(r).copy_from_slice(&self.mean);
        }
        gemm(false, scores, true, &self.components, 1.0, 1.0, &mut out)?;
        Ok(out)
    }
}

/// Column means and the `(n-1)`-normalized covariance of `x`.
pub fn covariance(x: &Matrix) -> (Vec<f64>, Matrix) {
    let (n, d) = (x.rows(), x.cols());
    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut centered = x.clone();
    for r in 0..n {
        for (v, m) in centered.row_mut(r).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let mut cov = Matrix::zeros(d, d);
    let denom = (n.max(2) - 1) as f64;
    gemm(true, &centered, false, &centered, 1.0 / denom, 0.0, &mut cov)
        .expect("shapes agree by construction");
    // symmetrize away rounding asymmetry
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (cov.get(i, j) + cov.get(j, i));
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    (mean, cov)
}

/// Eigen-decomposition of a symmetric matrix. Returns eigenvalues in
/// descending order and the matching eigenvectors as columns.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.cols(),
        });
    }
    if n == 0 {
        return Ok((vec![], Matrix::zeros(0, 0)));
    }
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (c, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, c, v[r][src]);
        }
    }
    Ok((values, vectors))
}

/// Householder reduction to tridiagonal form; `v` becomes the accumulated
/// orthogonal transform, `d` the diagonal and `e` the sub-diagonal.
fn tridiagonalize(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1]);
    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d[..i].iter_mut() {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].iter_mut().for_each(|x| *x = 0.0);
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL iterations on the tridiagonal matrix, accumulating rotations into `v`.
fn ql_implicit(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_ITERATIONS_PER_EIGENVALUE {
                    return Err(Error::ConvergenceError {
                        iterations: QL_ITERATIONS_PER_EIGENVALUE,
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Flips each column so its largest-magnitude entry (lowest index on ties) is positive.
fn canonical_signs(components: &mut Matrix) {
    for c in 0..components.cols() {
        let mut best = 0;
        for r in 1..components.rows() {
            if components.get(r, c).abs() > components.get(best, c).abs() {
                best = r;
            }
        }
        if components.get(best, c) < 0.0 {
            for r in 0..components.rows() {
                components.set(r, c, -components.get(r, c));
            }
        }
    }
}

pub fn fit_pca(train: &DesignMatrix, k: usize) -> Result<PcaModel> {
    fit_pca_matrix(&train.values, k)
}

pub fn fit_pca_matrix(x: &Matrix, k: usize) -> Result<PcaModel> {
    let (n, d) = (x.rows(), x.cols());
    let max = n.saturating_sub(1).min(d);
    if n < 2 || k == 0 || k > max {
        return Err(Error::RankError { k, max });
    }
    let (mean, cov) = covariance(x);
    let total_variance: f64 = (0..d).map(|i| cov.get(i, i)).sum();

    if total_variance <= 0.0 {
        let mut components = Matrix::zeros(d, k);
        for c in 0..k {
            components.set(c, c, 1.0);
        }
        return Ok(PcaModel {
            mean,
            components,
            eigenvalues: vec![0.0; k],
            explained_variance_ratio: vec![0.0; k],
            total_variance: 0.0,
        });
    }

    let (values, vectors) = symmetric_eigen(&cov)?;
    let mut components = Matrix::zeros(d, k);
    for r in 0..d {
        for c in 0..k {
            components.set(r, c, vectors.get(r, c));
        }
    }
    canonical_signs(&mut components);
    let eigenvalues: Vec<f64> = values[..k].iter().map(|&l| l.max(0.0)).collect();
    let explained_variance_ratio = eigenvalues
        .iter()
        .map(|l| (l / total_variance).clamp(0.0, 1.0))
        .collect();
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        explained_variance_ratio,
        total_variance,
    })
}

/// `(m - mean) · components` with columns `pc1..pck`; labels pass through.
pub fn transform(model: &PcaModel, m: &DesignMatrix) -> Result<DesignMatrix> {
    let scores = transform_matrix(model, &m.values)?;
    let names = (1..=model.n_components()).map(|i| format!("pc{i}")).collect();
    DesignMatrix::new(scores, names, m.labels.clone(), m.categories.clone())
}

pub fn transform_matrix(model: &PcaModel, x: &Matrix) -> Result<Matrix> {
    if x.cols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            found: x.cols(),
        });
    }
    let mut centered = x.clone();
    for r in 0..centered.rows() {
        for (v, mu) in centered.row_mut(r).iter_mut().zip(&model.mean) {
            *v -= mu;
        }
    }
    centered.matmul(&model.components)
}

/// Share of the fit data's total variance captured by each component.
pub fn explained_variance(model: &PcaModel) -> Vec<f64> {
    model.explained_variance_ratio.clone()
}
