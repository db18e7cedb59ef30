//! Shared dense and sparse linear algebra: CSR matrices, preconditioned
//! CG/MINRES, a symmetric tridiagonal eigensolver, and small dense helpers.
//!
//! Everything here is deliberately dependency-free so the numerical kernels
//! stay auditable; matrices are symmetric throughout the crate.

/// Compressed sparse row matrix with `f64` entries.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub rowptr: Vec<usize>,
    pub colidx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds an `n x n` matrix from unordered `(row, col, value)` triplets,
    /// summing duplicates.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < n && c < n);
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut rowptr = vec![0usize; n + 1];
        for &(r, _, _) in &merged {
            rowptr[r + 1] += 1;
        }
        for i in 0..n {
            rowptr[i + 1] += rowptr[i];
        }
        let colidx = merged.iter().map(|t| t.1).collect();
        let vals = merged.iter().map(|t| t.2).collect();
        Csr { n, rowptr, colidx, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.rowptr[i]..self.rowptr[i + 1] {
                acc += self.vals[k] * x[self.colidx[k]];
            }
            y[i] = acc;
        }
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for k in self.rowptr[i]..self.rowptr[i + 1] {
                row += self.vals[k] * x[self.colidx[k]];
            }
            acc += x[i] * row;
        }
        acc
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for k in self.rowptr[i]..self.rowptr[i + 1] {
                row += self.vals[k] * y[self.colidx[k]];
            }
            acc += x[i] * row;
        }
        acc
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for i in 0..self.n {
            s[i] = self.vals[self.rowptr[i]..self.rowptr[i + 1]].iter().sum();
        }
        s
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.rowptr[i]..self.rowptr[i + 1] {
                if self.colidx[k] == i {
                    d[i] += self.vals[k];
                }
            }
        }
        d
    }

    /// `a*self + b*other`; both matrices must share an identical sparsity
    /// pattern (they do when assembled together).
    pub fn linear_combination(&self, a: f64, other: &Csr, b: f64) -> Csr {
        assert_eq!(self.rowptr, other.rowptr, "pattern mismatch");
        assert_eq!(self.colidx, other.colidx, "pattern mismatch");
        let vals = self
            .vals
            .iter()
            .zip(&other.vals)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Csr {
            n: self.n,
            rowptr: self.rowptr.clone(),
            colidx: self.colidx.clone(),
            vals,
        }
    }

    /// Adds `scale * d[i]` to each diagonal entry in place. The diagonal must
    /// already be present in the pattern.
    pub fn add_diagonal(&mut self, d: &[f64], scale: f64) {
        for i in 0..self.n {
            let mut hit = false;
            for k in self.rowptr[i]..self.rowptr[i + 1] {
                if self.colidx[k] == i {
                    self.vals[k] += scale * d[i];
                    hit = true;
                    break;
                }
            }
            assert!(hit, "diagonal entry missing from pattern at row {i}");
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.vals {
            *v *= s;
        }
    }
}

// ---------------------------------------------------------------------------
// dense vectors

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += a * x`.
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale_vec(x: &mut [f64], s: f64) {
    for v in x {
        *v *= s;
    }
}

// ---------------------------------------------------------------------------
// iterative solvers

#[derive(Debug, Clone, Copy)]
pub struct IterStats {
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for SPD operators. `inv_diag` is a
/// Jacobi preconditioner; `x` carries the initial guess and the solution.
pub fn pcg<F>(apply: F, b: &[f64], x: &mut [f64], inv_diag: &[f64], tol: f64, maxit: usize) -> IterStats
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..maxit {
        let rnorm = norm2(&r);
        if rnorm / bnorm <= tol {
            return IterStats { iterations: it, rel_residual: rnorm / bnorm, converged: true };
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return IterStats { iterations: it, rel_residual: rnorm / bnorm, converged: false };
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm2(&r) / bnorm;
    IterStats { iterations: maxit, rel_residual: rel, converged: rel <= tol }
}

/// Preconditioned MINRES for symmetric (possibly indefinite) operators with an
/// SPD diagonal preconditioner. Solves `A x = b` starting from `x = 0`.
pub fn minres<F>(apply: F, b: &[f64], x: &mut [f64], inv_diag: &[f64], tol: f64, maxit: usize) -> IterStats
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    let mut r1 = b.to_vec();
    let mut y: Vec<f64> = r1.iter().zip(inv_diag).map(|(ri, di)| ri * di).collect();
    let beta1_sq = dot(&r1, &y);
    if beta1_sq <= 0.0 {
        return IterStats { iterations: 0, rel_residual: 0.0, converged: true };
    }
    let beta1 = beta1_sq.sqrt();
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0f64, beta1);
    let (mut dbar, mut epsln) = (0.0f64, 0.0f64);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut av = vec![0.0; n];
    for it in 1..=maxit {
        let s = 1.0 / beta;
        for i in 0..n {
            v[i] = y[i] * s;
        }
        apply(&v, &mut av);
        if it >= 2 {
            let c = beta / oldb;
            for i in 0..n {
                av[i] -= c * r1[i];
            }
        }
        let alfa = dot(&v, &av);
        let c = alfa / beta;
        for i in 0..n {
            av[i] -= c * r2[i];
        }
        r1.copy_from_slice(&r2);
        r2.copy_from_slice(&av);
        for i in 0..n {
            y[i] = r2[i] * inv_diag[i];
        }
        oldb = beta;
        let beta_sq = dot(&r2, &y);
        if beta_sq < 0.0 {
            return IterStats { iterations: it, rel_residual: phibar / beta1, converged: false };
        }
        beta = beta_sq.sqrt();
        if beta < f64::MIN_POSITIVE {
            // exact breakdown: Krylov space exhausted, solution reached
            let oldeps = epsln;
            let delta = cs * dbar + sn * alfa;
            let gbar = sn * dbar - cs * alfa;
            let gamma = gbar.abs().max(f64::MIN_POSITIVE);
            let phi = (gbar / gamma) * phibar;
            for i in 0..n {
                let wi = (v[i] - oldeps * w[i] - delta * w2[i]) / gamma;
                x[i] += phi * wi;
            }
            return IterStats { iterations: it, rel_residual: 0.0, converged: true };
        }

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::MIN_POSITIVE);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        // w = direction two back, w2 = direction one back; rotate in place
        for i in 0..n {
            let wi = (v[i] - oldeps * w[i] - delta * w2[i]) / gamma;
            w[i] = w2[i];
            w2[i] = wi;
            x[i] += phi * wi;
        }
        if phibar / beta1 <= tol {
            return IterStats { iterations: it, rel_residual: phibar / beta1, converged: true };
        }
    }
    IterStats { iterations: maxit, rel_residual: phibar / beta1, converged: false }
}

/// Largest-magnitude eigenvalue estimate of a linear operator by power
/// iteration with a fixed deterministic start vector.
pub fn power_method<F>(apply: F, n: usize, iters: usize) -> f64
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            // cheap deterministic pseudo-random start
            let x = (i as u64).wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect();
    let mut av = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..iters {
        let nrm = norm2(&v).max(f64::MIN_POSITIVE);
        scale_vec(&mut v, 1.0 / nrm);
        apply(&v, &mut av);
        lambda = norm2(&av);
        std::mem::swap(&mut v, &mut av);
    }
    lambda
}

// ---------------------------------------------------------------------------
// symmetric tridiagonal eigensolver (implicit QL with shifts)

/// Eigen decomposition of a symmetric tridiagonal matrix given by its
/// diagonal and subdiagonal. Returns eigenvalues in ascending order and the
/// matching eigenvectors as a flat row-major `m x m` matrix (`vecs[i*m + j]`
/// is component `i` of eigenvector `j`).
pub fn sym_tridiag_eigen(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = diag.len();
    assert!(m > 0 && off.len() + 1 == m);
    let mut d = diag.to_vec();
    let mut e = vec![0.0f64; m];
    e[..m - 1].copy_from_slice(off);
    let mut z = vec![0.0f64; m * m];
    for i in 0..m {
        z[i * m + i] = 1.0;
    }
    for l in 0..m {
        let mut iter = 0;
        loop {
            let mut mm = l;
            while mm + 1 < m {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= f64::EPSILON * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r } else { -r };
            g = d[mm] - d[l] + e[l] / (g + sign_r);
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..mm).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..m {
                    f = z[k * m + i + 1];
                    z[k * m + i + 1] = s * z[k * m + i] + c * f;
                    z[k * m + i] = c * z[k * m + i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }
    // sort ascending, permuting eigenvectors alongside
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let vals: Vec<f64> = order.iter().map(|&j| d[j]).collect();
    let mut vecs = vec![0.0f64; m * m];
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..m {
            vecs[i * m + new_j] = z[i * m + old_j];
        }
    }
    (vals, vecs)
}

// ---------------------------------------------------------------------------
// small dense helpers

/// Solves a small dense system `A x = b` by Gaussian elimination with partial
/// pivoting. `a` is row-major `n x n` and is consumed.
pub fn solve_dense_small(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n);
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= f * a[col * n + k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Some(x)
}

/// Eigen decomposition of a small symmetric matrix (row-major `n x n`) by
/// cyclic Jacobi sweeps. Returns eigenvalues ascending and row-major
/// eigenvectors (`vecs[i*n + j]` = component `i` of eigenvector `j`).
pub fn jacobi_eigen_small(mat: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(mat.len(), n * n);
    let mut a = mat.to_vec();
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + norm2(&a)) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[x].total_cmp(&vals[y]));
    let sorted_vals: Vec<f64> = order.iter().map(|&j| vals[j]).collect();
    let mut vecs = vec![0.0f64; n * n];
    for (nj, &oj) in order.iter().enumerate() {
        for i in 0..n {
            vecs[i * n + nj] = v[i * n + oj];
        }
    }
    vals = sorted_vals;
    (vals, vecs)
}

/// Solves a tridiagonal system by the Thomas algorithm. `lower[0]` and
/// `upper[n-1]` are ignored.
pub fn tridiag_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    if diag[0].abs() < 1e-300 {
        return None;
    }
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i] * c[i - 1];
        if denom.abs() < 1e-300 {
            return None;
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Some(x)
}

/// Fornberg finite-difference weights: for nodes `xs` and evaluation point
/// `x0`, returns weight rows for derivative orders `0..=max_order`.
pub fn fd_weights(x0: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    assert!(n > max_order);
    let mut c = vec![vec![0.0f64; n]; max_order + 1];
    let mut c1 = 1.0f64;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0f64;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn laplacian_1d(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        Csr::from_triplets(n, t)
    }

    #[test]
    fn csr_matvec_matches_dense() {
        let a = Csr::from_triplets(3, vec![(0, 0, 2.0), (0, 2, 1.0), (2, 0, 1.0), (1, 1, 3.0), (2, 2, 4.0)]);
        let x = [1.0, 2.0, 3.0];
        let mut y = [0.0; 3];
        a.matvec(&x, &mut y);
        assert_eq!(y, [5.0, 6.0, 13.0]);
        assert_relative_eq!(a.quad_form(&x), 1.0 * 5.0 + 2.0 * 6.0 + 3.0 * 13.0);
    }

    #[test]
    fn csr_duplicate_triplets_sum() {
        let a = Csr::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.5), (1, 0, 1.0), (1, 1, 1.0)]);
        assert_eq!(a.nnz(), 3);
        assert_relative_eq!(a.diagonal()[0], 3.5);
    }

    #[test]
    fn pcg_solves_spd_system() {
        let n = 50;
        let a = laplacian_1d(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = vec![0.0; n];
        let inv_diag = vec![0.5; n];
        let stats = pcg(|v, out| a.matvec(v, out), &b, &mut x, &inv_diag, 1e-12, 10_000);
        assert!(stats.converged, "cg stalled: {:?}", stats);
        let mut r = vec![0.0; n];
        a.matvec(&x, &mut r);
        for i in 0..n {
            assert_relative_eq!(r[i], b[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn minres_solves_indefinite_system() {
        // shifted 1-D Laplacian with a few negative eigenvalues
        let n = 60;
        let a = laplacian_1d(n);
        let shift = 0.05;
        let apply = |v: &[f64], out: &mut [f64]| {
            a.matvec(v, out);
            for i in 0..n {
                out[i] -= shift * v[i];
            }
        };
        let b: Vec<f64> = (0..n).map(|i| ((i * i) as f64 * 0.11).cos()).collect();
        let mut x = vec![0.0; n];
        let inv_diag = vec![1.0 / (2.0 - shift); n];
        let stats = minres(apply, &b, &mut x, &inv_diag, 1e-12, 20_000);
        assert!(stats.converged, "minres stalled: {:?}", stats);
        let mut r = vec![0.0; n];
        apply(&x, &mut r);
        for i in 0..n {
            assert_relative_eq!(r[i], b[i], epsilon = 1e-7);
        }
    }

    #[test]
    fn tridiag_eigen_matches_nalgebra() {
        let m = 24;
        let diag: Vec<f64> = (0..m).map(|i| 1.0 + (i as f64 * 0.83).sin()).collect();
        let off: Vec<f64> = (0..m - 1).map(|i| 0.4 * (i as f64 * 1.7).cos()).collect();
        let (vals, vecs) = sym_tridiag_eigen(&diag, &off);
        let mut dense = nalgebra::DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            dense[(i, i)] = diag[i];
            if i + 1 < m {
                dense[(i, i + 1)] = off[i];
                dense[(i + 1, i)] = off[i];
            }
        }
        let mut reference = dense.clone().symmetric_eigen().eigenvalues.as_slice().to_vec();
        reference.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&reference) {
            assert_relative_eq!(a, b, epsilon = 1e-10, max_relative = 1e-10);
        }
        // residual check for a few eigenpairs
        for j in [0usize, m / 2, m - 1] {
            let v: Vec<f64> = (0..m).map(|i| vecs[i * m + j]).collect();
            let mut av = vec![0.0; m];
            for i in 0..m {
                av[i] = diag[i] * v[i]
                    + if i > 0 { off[i - 1] * v[i - 1] } else { 0.0 }
                    + if i + 1 < m { off[i] * v[i + 1] } else { 0.0 };
            }
            for i in 0..m {
                assert_relative_eq!(av[i], vals[j] * v[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn jacobi_small_matches_nalgebra() {
        let n = 5;
        let mut mat = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let v = ((i * 3 + j * 7) as f64 * 0.29).sin();
                mat[i * n + j] += v;
                mat[j * n + i] += v;
            }
        }
        let (vals, vecs) = jacobi_eigen_small(&mat, n);
        let dense = nalgebra::DMatrix::from_fn(n, n, |i, j| mat[i * n + j]);
        let mut reference = dense.symmetric_eigen().eigenvalues.as_slice().to_vec();
        reference.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&reference) {
            assert_relative_eq!(a, b, epsilon = 1e-10, max_relative = 1e-10);
        }
        // orthonormality
        for j in 0..n {
            for k in j..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += vecs[i * n + j] * vecs[i * n + k];
                }
                let expect = if j == k { 1.0 } else { 0.0 };
                assert_relative_eq!(acc, expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn thomas_solves_tridiagonal() {
        let n = 40;
        let lower = vec![-1.0; n];
        let diag = vec![2.5; n];
        let upper = vec![-1.0; n];
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sqrt()).collect();
        let x = tridiag_solve(&lower, &diag, &upper, &rhs).unwrap();
        for i in 0..n {
            let lhs = diag[i] * x[i]
                + if i > 0 { lower[i] * x[i - 1] } else { 0.0 }
                + if i + 1 < n { upper[i] * x[i + 1] } else { 0.0 };
            assert_relative_eq!(lhs, rhs[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn fornberg_weights_are_exact_on_polynomials() {
        // five-point weights must differentiate degree-4 polynomials exactly
        let xs = [-0.3, -0.11, 0.0, 0.17, 0.31];
        let x0 = 0.05;
        let w = fd_weights(x0, &xs, 2);
        let f = |x: f64| 2.0 + 3.0 * x - x * x + 0.5 * x.powi(3) + 0.25 * x.powi(4);
        let f1 = |x: f64| 3.0 - 2.0 * x + 1.5 * x * x + x.powi(3);
        let f2 = |x: f64| -2.0 + 3.0 * x + 3.0 * x * x;
        let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let d0: f64 = w[0].iter().zip(&vals).map(|(wi, fi)| wi * fi).sum();
        let d1: f64 = w[1].iter().zip(&vals).map(|(wi, fi)| wi * fi).sum();
        let d2: f64 = w[2].iter().zip(&vals).map(|(wi, fi)| wi * fi).sum();
        assert_relative_eq!(d0, f(x0), epsilon = 1e-12);
        assert_relative_eq!(d1, f1(x0), epsilon = 1e-12);
        assert_relative_eq!(d2, f2(x0), epsilon = 1e-11);
    }

    #[test]
    fn fornberg_weights_converge_on_smooth_functions() {
        // truncation error of the 5-point first derivative is O(h^4)
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let xs: Vec<f64> = (-2..=2).map(|k| 0.05 + k as f64 * h).collect();
            let w = fd_weights(0.05, &xs, 1);
            let d1: f64 = w[1].iter().zip(&xs).map(|(wi, x)| wi * x.sin()).sum();
            errs.push((d1 - 0.05f64.cos()).abs());
        }
        assert!(errs[1] < errs[0] / 8.0, "errors {errs:?} should shrink ~16x");
    }

    #[test]
    fn power_method_finds_dominant_eigenvalue() {
        let a = laplacian_1d(30);
        // the top two eigenvalues differ by ~0.8%, so convergence is slow;
        // production uses the result only as a magnitude estimate
        let lam = power_method(|v, out| a.matvec(v, out), 30, 5000);
        // largest eigenvalue of the 1-D Laplacian stencil: 2 + 2 cos(pi/31)
        let exact = 2.0 + 2.0 * (std::f64::consts::PI / 31.0).cos();
        assert_relative_eq!(lam, exact, max_relative = 1e-6);
    }
}
