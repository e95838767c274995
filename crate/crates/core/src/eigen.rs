//! Symmetric eigensolvers: Householder tridiagonalization and implicit-shift
//! QL. The QL rotations can be accumulated for a chosen subset of rows only,
//! which keeps the cost at O(N²) when a few eigenvector components suffice.

use crate::error::{Error, Result};

/// Eigendecomposition restricted to some rows of the eigenvector matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Row indices (into the original matrix) that were tracked.
    pub rows: Vec<usize>,
    /// `vectors[k * rows.len() + t]` = component at `rows[t]` of eigenvector `k`.
    pub vectors: Vec<f64>,
}

impl Eigen {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Component of eigenvector `k` at tracked row slot `t`.
    pub fn component(&self, t: usize, k: usize) -> f64 {
        self.vectors[k * self.rows.len() + t]
    }

    /// Full eigenvector `k`; requires every row to be tracked.
    pub fn vector(&self, k: usize) -> Option<Vec<f64>> {
        let n = self.n();
        if self.rows.len() != n {
            return None;
        }
        let mut v = vec![0.0; n];
        for (t, &r) in self.rows.iter().enumerate() {
            v[r] = self.vectors[k * n + t];
        }
        Some(v)
    }
}

/// Eigenpairs of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (length n−1). `rows` selects tracked eigenvector rows;
/// `None` tracks all of them.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64], rows: Option<&[usize]>) -> Result<Eigen> {
    let n = diag.len();
    assert!(n >= 1 && off.len() + 1 == n);
    let rows: Vec<usize> = match rows {
        Some(r) => r.to_vec(),
        None => (0..n).collect(),
    };
    let nr = rows.len();
    let mut v = vec![0.0; nr * n];
    for (t, &r) in rows.iter().enumerate() {
        assert!(r < n);
        v[r * nr + t] = 1.0;
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[1..].copy_from_slice(off);
    tql2(&mut d, &mut e, &mut v, rows.len())?;
    Ok(Eigen { values: d, rows, vectors: v })
}

/// Eigenpairs of a dense symmetric matrix (row-major, n×n). With
/// `vectors = false` only eigenvalues are returned.
pub fn symmetric_eigen(a: &[f64], n: usize, vectors: bool) -> Result<Eigen> {
    assert_eq!(a.len(), n * n);
    let mut w = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let betas = householder_tridiagonalize(&mut w, n, &mut d, &mut e);
    if vectors {
        // Q stored transposed: qt[col * n + row], so QL rotates contiguous slices
        let mut qt = accumulate_q(&w, n, &betas);
        tql2(&mut d, &mut e, &mut qt, n)?;
        Ok(Eigen { values: d, rows: (0..n).collect(), vectors: qt })
    } else {
        tql2(&mut d, &mut e, &mut [], 0)?;
        Ok(Eigen { values: d, rows: vec![], vectors: vec![] })
    }
}

/// Row-oriented Householder reduction A = Q T Qᵀ. On exit row k of `a`
/// holds the reflector v_k in columns k+1.. (with v_k[k+1] = 1 implied by
/// the stored value), `d` the diagonal and `e[i]` the coupling (i−1, i).
fn householder_tridiagonalize(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) -> Vec<f64> {
    let mut betas = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let m = k + 1;
        // x = A[k][m..]
        let norm = a[k * n + m..(k + 1) * n].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            e[m] = 0.0;
            betas[k] = 0.0;
            continue;
        }
        let x0 = a[k * n + m];
        let alpha = if x0 > 0.0 { -norm } else { norm };
        // v = x − alpha e1, β = 2/(vᵀv)
        a[k * n + m] = x0 - alpha;
        let vtv = a[k * n + m..(k + 1) * n].iter().map(|x| x * x).sum::<f64>();
        let beta = 2.0 / vtv;
        betas[k] = beta;
        e[m] = alpha;
        let (head, tail) = a.split_at_mut((k + 1) * n);
        let v = &head[k * n + m..(k + 1) * n];
        // p = β A22 v, rows of A22 are contiguous
        for i in m..n {
            let row = &tail[(i - m) * n + m..(i - m + 1) * n];
            p[i] = beta * row.iter().zip(v).map(|(r, vj)| r * vj).sum::<f64>();
        }
        let pv: f64 = p[m..].iter().zip(v).map(|(pi, vi)| pi * vi).sum();
        let c = 0.5 * beta * pv;
        for (i, vi) in (m..n).zip(v) {
            p[i] -= c * vi;
        }
        // A22 −= v pᵀ + p vᵀ
        for (i, vi) in (m..n).zip(v) {
            let pi = p[i];
            let row = &mut tail[(i - m) * n + m..(i - m + 1) * n];
            for ((r, vj), pj) in row.iter_mut().zip(v).zip(&p[m..]) {
                *r -= vi * pj + pi * vj;
            }
        }
    }
    for i in 0..n {
        d[i] = a[i * n + i];
    }
    if n >= 2 {
        e[n - 1] = a[(n - 2) * n + n - 1];
    }
    e[0] = 0.0;
    betas
}

/// Forms Qᵀ (column-major Q) from the stored reflectors.
fn accumulate_q(a: &[f64], n: usize, betas: &[f64]) -> Vec<f64> {
    // build Q row-major by backward accumulation, then transpose
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    let mut z = vec![0.0; n];
    for k in (0..n.saturating_sub(2)).rev() {
        let beta = betas[k];
        if beta == 0.0 {
            continue;
        }
        let m = k + 1;
        let v = &a[k * n + m..(k + 1) * n];
        // z = vᵀ Q[m.., m..]
        z[m..].iter_mut().for_each(|x| *x = 0.0);
        for (i, vi) in (m..n).zip(v) {
            let row = &q[i * n + m..(i + 1) * n];
            for (zj, qij) in z[m..].iter_mut().zip(row) {
                *zj += vi * qij;
            }
        }
        for (i, vi) in (m..n).zip(v) {
            let row = &mut q[i * n + m..(i + 1) * n];
            for (qij, zj) in row.iter_mut().zip(&z[m..]) {
                *qij -= beta * vi * zj;
            }
        }
    }
    let mut qt = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            qt[j * n + i] = q[i * n + j];
        }
    }
    qt
}

/// Implicit QL on (d, e) with e[i] coupling i−1 and i. Rotations act on
/// the columns of `v`, stored column by column (`v[col * nrows + row]`).
/// Sorted on exit.
fn tql2(d: &mut [f64], e: &mut [f64], v: &mut [f64], nrows: usize) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 100 {
                    return Err(Error::EigenSolver);
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
                    if nrows > 0 {
                        let (lo, hi) = v[i * nrows..(i + 2) * nrows].split_at_mut(nrows);
                        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                            let h = *b;
                            *b = s * *a + c * h;
                            *a = c * *a - s * h;
                        }
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
    // sort ascending, permuting columns
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    d.copy_from_slice(&sorted);
    if nrows > 0 {
        let old = v.to_vec();
        for (dst, &src) in order.iter().enumerate() {
            v[dst * nrows..(dst + 1) * nrows].copy_from_slice(&old[src * nrows..(src + 1) * nrows]);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_difference_spectrum() {
        let n = 50;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let eig = tridiagonal_eigen(&diag, &off, None).unwrap();
        for (k, &lam) in eig.values.iter().enumerate() {
            let want = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((lam - want).abs() < 1e-13);
        }
    }

    #[test]
    fn tracked_rows_match_full_vectors() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() + 2.0).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 0.5 + 0.1 * (i as f64).cos()).collect();
        let full = tridiagonal_eigen(&diag, &off, None).unwrap();
        let part = tridiagonal_eigen(&diag, &off, Some(&[3, 17])).unwrap();
        for k in 0..n {
            assert_eq!(full.values[k], part.values[k]);
            assert!((full.component(3, k) - part.component(0, k)).abs() < 1e-14);
            assert!((full.component(17, k) - part.component(1, k)).abs() < 1e-14);
        }
    }

    #[test]
    fn dense_matches_tridiagonal() {
        let n = 30;
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
        let off = vec![0.3; n - 1];
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = diag[i];
            if i + 1 < n {
                a[i * n + i + 1] = off[i];
                a[(i + 1) * n + i] = off[i];
            }
        }
        let t = tridiagonal_eigen(&diag, &off, Some(&[])).unwrap();
        let dense = symmetric_eigen(&a, n, true).unwrap();
        let values_only = symmetric_eigen(&a, n, false).unwrap();
        for k in 0..n {
            assert!((values_only.values[k] - dense.values[k]).abs() < 1e-13);
        }
        for k in 0..n {
            assert!((t.values[k] - dense.values[k]).abs() < 1e-13);
            let v = dense.vector(k).unwrap();
            for i in 0..n {
                let mut av = diag[i] * v[i];
                if i > 0 {
                    av += off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    av += off[i] * v[i + 1];
                }
                assert!((av - dense.values[k] * v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_random_residuals() {
        let n = 37;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x = ((i * 31 + j * 17) as f64).sin();
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        let eig = symmetric_eigen(&a, n, true).unwrap();
        for k in 0..n {
            let v = eig.vector(k).unwrap();
            let norm: f64 = v.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            for i in 0..n {
                let av: f64 = (0..n).map(|j| a[i * n + j] * v[j]).sum();
                assert!((av - eig.values[k] * v[i]).abs() < 1e-12);
            }
        }
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        assert!((eig.values.iter().sum::<f64>() - trace).abs() < 1e-11);
    }
}
