//! Dense linear algebra kernel: full symmetric eigendecomposition, small SVD,
//! and square linear solves.
//!
//! The eigensolver is the classic two-stage scheme (Householder reduction to
//! tridiagonal form followed by the implicit-shift QL iteration) and returns
//! the full spectrum with orthonormal eigenvectors.  The SVD is a one-sided
//! Jacobi, intended for the small matrices the pipeline produces (alignment
//! and projection frames), not for large systems.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Full spectrum of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<F> {
    /// Eigenvalues in ascending order.
    pub values: Array1<F>,
    /// Matching eigenvectors as columns, orthonormal.
    pub vectors: Array2<F>,
}

/// Thin singular value decomposition `a = u * diag(s) * vt`.
#[derive(Debug, Clone)]
pub struct Svd<F> {
    /// `m x n`, orthonormal columns (completed even for zero singular values).
    pub u: Array2<F>,
    /// Singular values in descending order.
    pub s: Array1<F>,
    /// `n x n` orthogonal matrix, transposed factor.
    pub vt: Array2<F>,
}

/// Full eigendecomposition of a symmetric matrix.
///
/// The input must be square and symmetric to working precision; only the
/// lower triangle is actually read.  Fails with [`Error::DegenerateInput`]
/// for empty input and [`Error::EigenNonConvergence`] if the QL iteration
/// stalls (which does not happen for finite symmetric input in practice).
pub fn symmetric_eigen<F: Scalar>(a: ArrayView2<F>) -> Result<SymmetricEigen<F>> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "symmetric_eigen needs a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut z: Vec<F> = Vec::with_capacity(n * n);
    for row in a.rows() {
        z.extend(row.iter().copied());
    }
    let mut d = vec![F::zero(); n];
    let mut e = vec![F::zero(); n];
    tred2(&mut z, n, &mut d, &mut e);
    tql2(&mut z, n, &mut d, &mut e)?;
    sort_eigen_ascending(&mut z, n, &mut d);
    Ok(SymmetricEigen {
        values: Array1::from_vec(d),
        vectors: Array2::from_shape_vec((n, n), z).expect("shape is n*n by construction"),
    })
}

/// Householder reduction of a symmetric matrix (flat row-major `z`, `n x n`)
/// to tridiagonal form; `z` is overwritten with the accumulated orthogonal
/// transformation, `d` receives the diagonal and `e` the subdiagonal.
fn tred2<F: Scalar>(z: &mut [F], n: usize, d: &mut [F], e: &mut [F]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = F::zero();
        if l > 0 {
            let mut scale = F::zero();
            for k in 0..=l {
                scale += z[i * n + k].abs();
            }
            if scale == F::zero() {
                e[i] = z[i * n + l];
            } else {
                for k in 0..=l {
                    z[i * n + k] /= scale;
                    h += z[i * n + k] * z[i * n + k];
                }
                let mut f = z[i * n + l];
                let g = if f >= F::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[i * n + l] = f - g;
                f = F::zero();
                for j in 0..=l {
                    z[j * n + i] = z[i * n + j] / h;
                    let mut g = F::zero();
                    for k in 0..=j {
                        g += z[j * n + k] * z[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g += z[k * n + j] * z[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * z[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let fj = z[i * n + j];
                    e[j] -= hh * fj;
                    let gj = e[j];
                    for k in 0..=j {
                        z[j * n + k] = z[j * n + k] - fj * e[k] - gj * z[i * n + k];
                    }
                }
            }
        } else {
            e[i] = z[i * n + l];
        }
        d[i] = h;
    }
    d[0] = F::zero();
    e[0] = F::zero();
    for i in 0..n {
        if d[i] != F::zero() {
            for j in 0..i {
                let mut g = F::zero();
                for k in 0..i {
                    g += z[i * n + k] * z[k * n + j];
                }
                for k in 0..i {
                    z[k * n + j] -= g * z[k * n + i];
                }
            }
        }
        d[i] = z[i * n + i];
        z[i * n + i] = F::one();
        for j in 0..i {
            z[j * n + i] = F::zero();
            z[i * n + j] = F::zero();
        }
    }
}

/// Implicit-shift QL iteration on the tridiagonal form produced by [`tred2`],
/// accumulating rotations into `z`.  On success `d` holds eigenvalues.
fn tql2<F: Scalar>(z: &mut [F], n: usize, d: &mut [F], e: &mut [F]) -> Result<()> {
    let eps = F::epsilon();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = F::zero();
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::EigenNonConvergence {
                    iterations: iter,
                    residual: e[l].abs().to_f64().unwrap_or(f64::NAN),
                });
            }
            let two = F::cast(2.0);
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(F::one());
            let sign_r = if g >= F::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = F::one();
            let mut c = F::one();
            let mut p = F::zero();
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == F::zero() {
                    d[i + 1] -= p;
                    e[m] = F::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = F::zero();
        }
    }
    Ok(())
}

/// Stable selection-sort of the spectrum into ascending order, permuting the
/// eigenvector columns of `z` alongside.
fn sort_eigen_ascending<F: Scalar>(z: &mut [F], n: usize, d: &mut [F]) {
    for i in 0..n {
        let mut min = i;
        for j in (i + 1)..n {
            if d[j] < d[min] {
                min = j;
            }
        }
        if min != i {
            d.swap(i, min);
            for k in 0..n {
                z.swap(k * n + i, k * n + min);
            }
        }
    }
}

/// Thin SVD by one-sided Jacobi rotations; needs `nrows >= ncols`.
///
/// Columns of `u` belonging to zero singular values are completed to an
/// orthonormal set, so `u` always has orthonormal columns and `vt` is always
/// orthogonal.  Suitable for the small systems this crate produces.
pub fn svd<F: Scalar>(a: ArrayView2<F>) -> Result<Svd<F>> {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 || m < n {
        return Err(Error::InvalidParameter(format!(
            "svd needs a non-empty matrix with nrows >= ncols, got {m}x{n}"
        )));
    }
    let mut u = a.to_owned();
    let mut v = Array2::<F>::eye(n);
    let eps = F::epsilon();
    let tol = eps * F::cast(n as f64);
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let mut alpha = F::zero();
                let mut beta = F::zero();
                let mut gamma = F::zero();
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma == F::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (F::cast(2.0) * gamma);
                let t = {
                    let denom = zeta.abs() + (F::one() + zeta * zeta).sqrt();
                    if zeta >= F::zero() {
                        denom.recip()
                    } else {
                        -denom.recip()
                    }
                };
                let c = (F::one() + t * t).sqrt().recip();
                let s = c * t;
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = c * up - s * uq;
                    u[(i, q)] = s * up + c * uq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    // Column norms are the singular values.
    let mut order: Vec<usize> = (0..n).collect();
    let mut sigma = vec![F::zero(); n];
    for (j, sj) in sigma.iter_mut().enumerate() {
        let mut sum = F::zero();
        for i in 0..m {
            sum += u[(i, j)] * u[(i, j)];
        }
        *sj = sum.sqrt();
    }
    order.sort_by(|&x, &y| {
        sigma[y]
            .partial_cmp(&sigma[x])
            .expect("finite singular values")
    });
    let mut u_sorted = Array2::<F>::zeros((m, n));
    let mut vt = Array2::<F>::zeros((n, n));
    let mut s = Array1::<F>::zeros(n);
    let scale = sigma[order[0]];
    for (dst, &src) in order.iter().enumerate() {
        s[dst] = sigma[src];
        if sigma[src] > eps * scale.max(F::one()) {
            for i in 0..m {
                u_sorted[(i, dst)] = u[(i, src)] / sigma[src];
            }
        }
        for i in 0..n {
            vt[(dst, i)] = v[(i, src)];
        }
    }
    complete_orthonormal_columns(&mut u_sorted, eps);
    Ok(Svd { u: u_sorted, s, vt })
}

/// Replaces (near-)zero columns with unit vectors orthogonal to the rest.
fn complete_orthonormal_columns<F: Scalar>(u: &mut Array2<F>, eps: F) {
    let (m, n) = (u.nrows(), u.ncols());
    for j in 0..n {
        let norm: F = (0..m).map(|i| u[(i, j)] * u[(i, j)]).sum::<F>().sqrt();
        if norm > F::cast(0.5) {
            continue;
        }
        // try coordinate axes, orthogonalize against existing columns
        let mut placed = false;
        for axis in 0..m {
            let mut cand = vec![F::zero(); m];
            cand[axis] = F::one();
            for jj in 0..n {
                if jj == j {
                    continue;
                }
                let dot: F = (0..m).map(|i| cand[i] * u[(i, jj)]).sum();
                for (i, c) in cand.iter_mut().enumerate() {
                    *c -= dot * u[(i, jj)];
                }
            }
            let cn: F = cand.iter().map(|&x| x * x).sum::<F>().sqrt();
            if cn > F::cast(1e-3) {
                for (i, c) in cand.iter().enumerate() {
                    u[(i, j)] = *c / cn;
                }
                placed = true;
                break;
            }
        }
        debug_assert!(placed || m < n, "orthonormal completion must succeed");
        let _ = eps;
        let _ = placed;
    }
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting.  Fails with [`Error::DegenerateInput`] when the matrix is
/// singular to working precision.
pub fn solve<F: Scalar>(a: ArrayView2<F>, b: ArrayView1<F>) -> Result<Array1<F>> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n || b.len() != n {
        return Err(Error::InvalidParameter(format!(
            "solve needs square a and matching b, got {}x{} and {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let mut m: Vec<F> = Vec::with_capacity(n * n);
    for row in a.rows() {
        m.extend(row.iter().copied());
    }
    let mut x: Vec<F> = b.to_vec();
    let scale = m
        .iter()
        .fold(F::zero(), |acc, &v| acc.max(v.abs()))
        .max(F::one());
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col].abs() <= F::epsilon() * scale {
            return Err(Error::DegenerateInput(
                "singular linear system in solve".to_string(),
            ));
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let factor = m[r * n + col] / d;
            if factor == F::zero() {
                continue;
            }
            for k in col..n {
                let v = m[col * n + k];
                m[r * n + k] -= factor * v;
            }
            x[r] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for k in (col + 1)..n {
            acc -= m[col * n + k] * x[k];
        }
        x[col] = acc / m[col * n + col];
    }
    Ok(Array1::from_vec(x))
}

/// Determinant of a square matrix by Gaussian elimination with partial
/// pivoting.  Returns zero when elimination hits an exactly zero pivot.
pub fn determinant<F: Scalar>(a: ArrayView2<F>) -> Result<F> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "determinant needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok(F::one());
    }
    let mut m: Vec<F> = Vec::with_capacity(n * n);
    for row in a.rows() {
        m.extend(row.iter().copied());
    }
    let mut det = F::one();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col] == F::zero() {
            return Ok(F::zero());
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            det = -det;
        }
        let d = m[col * n + col];
        det *= d;
        for r in (col + 1)..n {
            let factor = m[r * n + col] / d;
            if factor == F::zero() {
                continue;
            }
            for k in col..n {
                let v = m[col * n + k];
                m[r * n + k] -= factor * v;
            }
        }
    }
    Ok(det)
}
