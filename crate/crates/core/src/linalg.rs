//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here works on `DMatrix<Complex64>` and is careful with empty
//! (0×0, 0×n) matrices, which occur naturally when a noise space or a GNS
//! quotient is trivial.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn scalar(z: C64) -> CMat {
    CMat::from_element(1, 1, z)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Largest entry modulus; 0 for empty matrices.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Singular triples of `M` from the Hermitian dilation `[[0, M],[M†, 0]]`,
/// whose eigenpairs are `±σ` with vectors `(u, ±v)/√2`. Returns `(σ, u, v)`
/// for the `min(r, c)` largest eigenvalues, descending.
fn singular_triples(m: &CMat) -> Vec<(f64, CVec, CVec)> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Vec::new();
    }
    let mut h = zeros(r + c, r + c);
    h.view_mut((0, r), (r, c)).copy_from(m);
    h.view_mut((r, 0), (c, r)).copy_from(&m.adjoint());
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..r + c).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].partial_cmp(&eig.eigenvalues[x]).unwrap_or(std::cmp::Ordering::Equal));
    let scale = re(std::f64::consts::SQRT_2);
    order
        .into_iter()
        .take(r.min(c))
        .map(|k| {
            let w = eig.eigenvectors.column(k);
            (eig.eigenvalues[k].max(0.0), w.rows(0, r) * scale, w.rows(r, c) * scale)
        })
        .collect()
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    singular_triples(m).into_iter().map(|(s, _, _)| s).collect()
}

/// Hermitian part `(M + M†)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * re(0.5)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order and each eigenvector's phase fixed so that its
/// largest-modulus component is real and positive.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

pub fn hermitian_eigen(m: &CMat) -> HermitianEigen {
    let n = m.nrows();
    if n == 0 {
        return HermitianEigen {
            values: Vec::new(),
            vectors: zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut vectors = zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (col, &idx) in order.iter().enumerate() {
        values.push(eig.eigenvalues[idx]);
        let v = eig.eigenvectors.column(idx);
        let mut pivot = 0;
        for i in 0..n {
            // strict improvement by a relative margin keeps ties on the first index
            if v[i].norm() > v[pivot].norm() * (1.0 + 1e-12) {
                pivot = i;
            }
        }
        let phase = if v[pivot].norm() > 0.0 {
            v[pivot].conj() / v[pivot].norm()
        } else {
            re(1.0)
        };
        for i in 0..n {
            vectors[(i, col)] = v[i] * phase;
        }
    }
    HermitianEigen { values, vectors }
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigen(m)
        .values
        .last()
        .copied()
        .unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigen(m).values.first().copied().unwrap_or(0.0)
}

/// Residual `‖M − M†‖_max`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Negative-semidefiniteness with the scale-aware threshold
/// `λ_max ≤ 1e-9·(‖M‖ + 1)`.
pub fn is_negative_semidefinite(m: &CMat) -> bool {
    max_eigenvalue(m) <= 1e-9 * (op_norm(m) + 1.0)
}

/// Square root of a PSD matrix. Eigenvalues in `[-neg_tol, 0)` are clipped to
/// zero; anything more negative is rejected.
pub fn psd_sqrt(m: &CMat, neg_tol: f64) -> Result<CMat, f64> {
    let n = m.nrows();
    if n == 0 {
        return Ok(zeros(0, 0));
    }
    let eig = hermitian_eigen(m);
    let lowest = *eig.values.last().unwrap();
    if lowest < -neg_tol {
        return Err(lowest);
    }
    let mut out = zeros(n, n);
    for (k, &lambda) in eig.values.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        if s == 0.0 {
            continue;
        }
        let v = eig.vectors.column(k);
        out += (v * v.adjoint()) * re(s);
    }
    Ok(out)
}

/// Moore-Penrose pseudo-inverse with singular values below
/// `rtol·σ_max` treated as zero.
pub fn pinv(m: &CMat, rtol: f64) -> CMat {
    let triples = singular_triples(m);
    let smax = triples.first().map_or(0.0, |t| t.0);
    pinv_from(m.shape(), &triples, rtol * smax)
}

/// Pseudo-inverse with singular values at or below the absolute `cutoff`
/// treated as zero; a matrix of pure roundoff inverts to zero.
pub fn pinv_abs(m: &CMat, cutoff: f64) -> CMat {
    pinv_from(m.shape(), &singular_triples(m), cutoff)
}

fn pinv_from((r, c): (usize, usize), triples: &[(f64, CVec, CVec)], cutoff: f64) -> CMat {
    let mut out = zeros(c, r);
    for (s, u, v) in triples {
        if *s > cutoff && *s > 0.0 {
            out += (v * u.adjoint()) * re(1.0 / s);
        }
    }
    out
}

/// Minimum-norm least-squares solution of `A X = B` together with the
/// Frobenius norm of the residual `A X − B`.
pub fn lstsq(a: &CMat, b: &CMat) -> (CMat, f64) {
    let x = pinv(a, 1e-13) * b;
    let residual = (a * &x - b).norm();
    (x, residual)
}

/// Numerical rank with relative cutoff.
pub fn rank(m: &CMat, rtol: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        Some(&smax) if smax > 0.0 => sv.iter().filter(|&&s| s > rtol * smax).count(),
        _ => 0,
    }
}

/// Gram factorisation `G = X† X` of a PSD matrix, keeping only eigenvalues
/// above `rtol·λ_max`. Returns `X` with one row per retained eigenvalue, in
/// descending order.
pub fn gram_factor(g: &CMat, rtol: f64) -> (CMat, Vec<f64>) {
    let n = g.nrows();
    if n == 0 {
        return (zeros(0, 0), Vec::new());
    }
    let eig = hermitian_eigen(g);
    let top = eig.values[0];
    if top <= 1e-300 {
        return (zeros(0, n), Vec::new());
    }
    let cutoff = rtol * top;
    let kept: Vec<usize> = (0..n).filter(|&k| eig.values[k] > cutoff).collect();
    let mut x = zeros(kept.len(), n);
    let mut vals = Vec::with_capacity(kept.len());
    for (row, &k) in kept.iter().enumerate() {
        let s = eig.values[k].sqrt();
        vals.push(eig.values[k]);
        for j in 0..n {
            x[(row, j)] = eig.vectors[(j, k)].conj() * s;
        }
    }
    (x, vals)
}

/// Matrix exponential (scaling and squaring with a Padé approximant).
pub fn expm(m: &CMat) -> CMat {
    if m.nrows() == 0 {
        return zeros(0, 0);
    }
    m.exp()
}

pub fn from_rows(rows: &[Vec<C64>]) -> CMat {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    CMat::from_fn(r, c, |i, j| rows[i][j])
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMat {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    CMat::from_fn(r, c, |i, j| re(rows[i][j]))
}

pub fn vec_from(values: &[C64]) -> CVec {
    CVec::from_column_slice(values)
}

pub fn real_vec(values: &[f64]) -> CVec {
    CVec::from_iterator(values.len(), values.iter().map(|&x| re(x)))
}

/// Conjugate-linear inner product `⟨x, y⟩ = Σ conj(x_i) y_i`.
pub fn inner(x: &CVec, y: &CVec) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Hat vector `(1, c)`.
pub fn hat(c: &CVec) -> CVec {
    let mut out = CVec::zeros(c.len() + 1);
    out[0] = re(1.0);
    for (i, z) in c.iter().enumerate() {
        out[i + 1] = *z;
    }
    out
}

/// The projection `Δ^QS = diag(0, I_n)` on the hat space `ℂ ⊕ ℂⁿ`.
pub fn delta_qs(noise_dim: usize) -> CMat {
    let mut m = eye(noise_dim + 1);
    m[(0, 0)] = re(0.0);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending_and_phase_fixed() {
        let m = from_rows(&[
            vec![re(2.0), c64(0.0, 1.0)],
            vec![c64(0.0, -1.0), re(2.0)],
        ]);
        let eig = hermitian_eigen(&m);
        assert!((eig.values[0] - 3.0).abs() < 1e-12);
        assert!((eig.values[1] - 1.0).abs() < 1e-12);
        for k in 0..2 {
            let col = eig.vectors.column(k);
            let top = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let pivot = (0..2).find(|&i| col[i].norm() >= top * (1.0 - 1e-12)).unwrap();
            assert!(col[pivot].im.abs() < 1e-12 && col[pivot].re > 0.0);
        }
        let rebuilt = &eig.vectors
            * CMat::from_diagonal(&CVec::from_iterator(2, eig.values.iter().map(|&x| re(x))))
            * eig.vectors.adjoint();
        assert!(max_abs(&(rebuilt - m)) < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let a = from_rows(&[vec![re(1.0), c64(0.5, 0.2)], vec![re(0.0), re(0.3)]]);
        let p = &a * a.adjoint();
        let s = psd_sqrt(&p, 1e-12).unwrap();
        assert!(max_abs(&(&s * &s - &p)) < 1e-12);
        assert!(psd_sqrt(&(-p), 1e-12).is_err());
    }

    #[test]
    fn gram_factor_reproduces_rank_deficient_matrix() {
        let v = vec_from(&[re(1.0), c64(0.0, 2.0), re(-1.0)]);
        let g = &v * v.adjoint();
        let (x, vals) = gram_factor(&g, 1e-9);
        assert_eq!(vals.len(), 1);
        assert!(max_abs(&(x.adjoint() * &x - &g)) < 1e-12);
    }

    #[test]
    fn lstsq_returns_minimum_norm_solution() {
        let a = from_real_rows(&[&[1.0, 1.0]]);
        let b = from_real_rows(&[&[2.0]]);
        let (x, res) = lstsq(&a, &b);
        assert!(res < 1e-14);
        assert!((x[(0, 0)].re - 1.0).abs() < 1e-14 && (x[(1, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pinv_of_rank_deficient_complex_matrix() {
        let u = from_rows(&[vec![c64(1.0, 2.0), c64(0.0, -1.0)], vec![c64(0.5, 0.0), c64(3.0, 1.0)], vec![c64(-1.0, 1.0), c64(0.0, 0.0)]]);
        let v = from_rows(&[vec![c64(2.0, 0.0), c64(1.0, -1.0), c64(0.0, 0.5), c64(-1.0, 0.0)], vec![c64(0.0, 1.0), c64(1.0, 0.0), c64(2.0, 2.0), c64(0.5, -0.5)]]);
        let m = &u * &v;
        assert_eq!(rank(&m, 1e-12), 2);
        let sv = singular_values(&m);
        assert_eq!(sv.len(), 3);
        assert!(sv[0] >= sv[1] && sv[1] > 1e-6 && sv[2] < 1e-12);
        let p = pinv(&m, 1e-12);
        assert!(max_abs(&(&m * &p * &m - &m)) < 1e-12);
        assert!(max_abs(&(&p * &m * &p - &p)) < 1e-12);
        assert!(hermiticity_defect(&(&m * &p)) < 1e-12);
        assert!(hermiticity_defect(&(&p * &m)) < 1e-12);
        let frob: f64 = sv.iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!((frob - m.norm()).abs() < 1e-12 * frob);
    }

    #[test]
    fn absolute_cutoff_ignores_roundoff() {
        let noise = from_real_rows(&[&[1e-17, 0.0], &[0.0, -3e-17]]);
        assert!(pinv(&noise, 1e-9).norm() > 1e16);
        assert_eq!(pinv_abs(&noise, 1e-9).norm(), 0.0);
        let m = from_real_rows(&[&[2.0, 0.0], &[0.0, 1e-12]]);
        assert!((pinv_abs(&m, 1e-9)[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(pinv_abs(&m, 1e-9)[(1, 1)].norm() < 1e-14);
    }

    #[test]
    fn empty_matrices_are_harmless() {
        let e = zeros(0, 0);
        assert_eq!(op_norm(&e), 0.0);
        assert_eq!(pinv(&zeros(0, 3), 1e-12).shape(), (3, 0));
        assert_eq!(rank(&zeros(2, 0), 1e-9), 0);
        assert_eq!(expm(&e).shape(), (0, 0));
    }

    #[test]
    fn expm_of_diagonal() {
        let m = CMat::from_diagonal(&real_vec(&[0.0, -1.0]));
        let e = expm(&m);
        assert!((e[(1, 1)].re - (-1.0f64).exp()).abs() < 1e-15);
    }
}
