//! Convolution of maps out of a bialgebra, the ⋆-exponential and the R/E
//! transforms that turn convolution into composition.

use crate::algebra::{self, check_cap, checked_pow, Element, FiniteStarBialgebra};
use crate::error::{Error, Result};
use crate::linalg::{self, re, CMat, CVec, C64};
use crate::report::Report;

/// Maximum number of series terms in the ⋆-exponential.
pub const SERIES_MAX_TERMS: usize = 64;

/// A linear map from a `d`-dimensional algebra into `N×N` matrices, stored as
/// the images of the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixValuedMap {
    target_dim: usize,
    mats: Vec<CMat>,
}

/// The `N = 1` case.
pub type Functional = MatrixValuedMap;

impl MatrixValuedMap {
    pub fn new(mats: Vec<CMat>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(Error::Dimension("a map needs at least one basis image".into()));
        };
        let n = first.nrows();
        for (i, m) in mats.iter().enumerate() {
            if m.shape() != (n, n) {
                return Err(Error::Dimension(format!(
                    "basis image {i} is {}×{}, expected {n}×{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Schema(format!("basis image {i} has non-finite entries")));
            }
        }
        Ok(Self { target_dim: n, mats })
    }

    pub fn zero(algebra_dim: usize, target_dim: usize) -> Self {
        Self {
            target_dim,
            mats: vec![CMat::zeros(target_dim, target_dim); algebra_dim],
        }
    }

    /// A functional from its values on the basis.
    pub fn functional(values: &CVec) -> Self {
        Self {
            target_dim: 1,
            mats: values.iter().map(|&z| linalg::scalar(z)).collect(),
        }
    }

    pub fn functional_from(values: &[C64]) -> Self {
        Self::functional(&linalg::vec_from(values))
    }

    /// The counit `ε`.
    pub fn counit(a: &FiniteStarBialgebra) -> Self {
        Self::functional(a.counit())
    }

    /// `ε(·)·I_N`.
    pub fn counit_times_identity(a: &FiniteStarBialgebra, n: usize) -> Self {
        Self {
            target_dim: n,
            mats: a.counit().iter().map(|&z| linalg::eye(n) * z).collect(),
        }
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn algebra_dim(&self) -> usize {
        self.mats.len()
    }

    pub fn mats(&self) -> &[CMat] {
        &self.mats
    }

    pub fn at(&self, i: usize) -> &CMat {
        &self.mats[i]
    }

    /// Values of a functional on the basis. Panics unless `N = 1`.
    pub fn values(&self) -> CVec {
        assert_eq!(self.target_dim, 1, "values() is defined for functionals only");
        CVec::from_iterator(self.mats.len(), self.mats.iter().map(|m| m[(0, 0)]))
    }

    pub fn value(&self, i: usize) -> C64 {
        self.mats[i][(0, 0)]
    }

    pub fn eval(&self, x: &Element) -> Result<CMat> {
        if x.dim() != self.mats.len() {
            return Err(Error::Dimension(format!(
                "element has {} coordinates, map is defined on dimension {}",
                x.dim(),
                self.mats.len()
            )));
        }
        Ok(self.eval_coords(&x.coords))
    }

    pub(crate) fn eval_coords(&self, x: &CVec) -> CMat {
        let mut out = CMat::zeros(self.target_dim, self.target_dim);
        for (m, &xi) in self.mats.iter().zip(x.iter()) {
            if xi != C64::default() {
                out += m * xi;
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(&CMat) -> CMat) -> Result<Self> {
        Self::new(self.mats.iter().map(f).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            target_dim: self.target_dim,
            mats: self.mats.iter().zip(&other.mats).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(re(-1.0)))
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            target_dim: self.target_dim,
            mats: self.mats.iter().map(|m| m * z).collect(),
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.target_dim != other.target_dim || self.mats.len() != other.mats.len() {
            Err(Error::Dimension(format!(
                "maps of shape ({}, {}) and ({}, {}) are incompatible",
                self.mats.len(),
                self.target_dim,
                other.mats.len(),
                other.target_dim
            )))
        } else {
            Ok(())
        }
    }

    /// Largest entrywise difference over all basis images; infinite on shape mismatch.
    pub fn max_diff(&self, other: &Self) -> f64 {
        if self.check_compatible(other).is_err() {
            return f64::INFINITY;
        }
        self.mats
            .iter()
            .zip(&other.mats)
            .fold(0.0_f64, |acc, (a, b)| acc.max(linalg::max_abs(&(a - b))))
    }

    pub fn max_abs(&self) -> f64 {
        self.mats.iter().fold(0.0_f64, |acc, m| acc.max(linalg::max_abs(m)))
    }

    /// `φ†(a) = φ(a*)†`.
    pub fn adjoint_map(&self, a: &FiniteStarBialgebra) -> Self {
        let mats = (0..self.mats.len())
            .map(|i| self.eval_coords(&a.star(&a.basis(i)).coords).adjoint())
            .collect();
        Self {
            target_dim: self.target_dim,
            mats,
        }
    }

    /// `max_i ‖φ(e_i*) − φ(e_i)†‖`.
    pub fn reality_defect(&self, a: &FiniteStarBialgebra) -> f64 {
        self.max_diff(&self.adjoint_map(a))
    }

    /// Restriction of every image to the index set `keep` (rows and columns).
    pub fn compress_to(&self, keep: &[usize]) -> Self {
        let mats = self
            .mats
            .iter()
            .map(|m| CMat::from_fn(keep.len(), keep.len(), |r, c| m[(keep[r], keep[c])]))
            .collect();
        Self {
            target_dim: keep.len(),
            mats,
        }
    }
}

fn check_same_algebra(a: &FiniteStarBialgebra, maps: &[&MatrixValuedMap]) -> Result<()> {
    for m in maps {
        if m.algebra_dim() != a.dim() {
            return Err(Error::Dimension(format!(
                "map defined on dimension {} used with bialgebra {} of dimension {}",
                m.algebra_dim(),
                a.name(),
                a.dim()
            )));
        }
    }
    Ok(())
}

/// `(α⋆β)(e_i) = Σ_{j,k} c[i][j][k] α(e_j) ⊗ β(e_k)`.
pub fn convolve(a: &FiniteStarBialgebra, alpha: &MatrixValuedMap, beta: &MatrixValuedMap) -> Result<MatrixValuedMap> {
    check_same_algebra(a, &[alpha, beta])?;
    let d = a.dim();
    let n = alpha.target_dim * beta.target_dim;
    check_cap(d * n * n)?;
    let mut mats = vec![CMat::zeros(n, n); d];
    for (i, out) in mats.iter_mut().enumerate() {
        for j in 0..d {
            for k in 0..d {
                let c = a.coproduct_coeff(i, j, k);
                if c != C64::default() {
                    *out += linalg::kron(&alpha.mats[j], &beta.mats[k]) * c;
                }
            }
        }
    }
    Ok(MatrixValuedMap { target_dim: n, mats })
}

/// `γ^{⋆n} = γ^{⊗n} ∘ Δ_{n−1}`, with `γ^{⋆0} = ε`.
pub fn star_power(a: &FiniteStarBialgebra, gamma: &MatrixValuedMap, n: usize) -> Result<MatrixValuedMap> {
    check_same_algebra(a, &[gamma])?;
    if n == 0 {
        return Ok(MatrixValuedMap::counit(a));
    }
    let d = a.dim();
    let big = checked_pow(gamma.target_dim, n)?;
    check_cap(big.saturating_mul(big).saturating_mul(d))?;
    let mut mats = Vec::with_capacity(d);
    for i in 0..d {
        let t = a.iterated_coproduct(&a.basis(i), n - 1)?;
        let mut out = CMat::zeros(big, big);
        for (flat, &w) in t.data.iter().enumerate() {
            if w == C64::default() {
                continue;
            }
            let mut idx = vec![0usize; n];
            let mut rest = flat;
            for slot in (0..n).rev() {
                idx[slot] = rest % d;
                rest /= d;
            }
            let prod = idx[1..]
                .iter()
                .fold(gamma.mats[idx[0]].clone(), |acc, &k| linalg::kron(&acc, &gamma.mats[k]));
            out += prod * w;
        }
        mats.push(out);
    }
    Ok(MatrixValuedMap {
        target_dim: big,
        mats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpMethod {
    Series,
    Semigroup,
}

/// Outcome of the series route: the sum, the number of terms used and the
/// remainder certificate.
#[derive(Debug, Clone)]
pub struct SeriesSum {
    pub functional: Functional,
    pub terms: usize,
    pub tail_bound: f64,
}

fn check_functional(a: &FiniteStarBialgebra, gamma: &Functional) -> Result<()> {
    check_same_algebra(a, &[gamma])?;
    if gamma.target_dim != 1 {
        return Err(Error::Dimension("exp_star expects a functional".into()));
    }
    Ok(())
}

/// `Σ_n tⁿγ^{⋆n}/n!` with the remainder certificate
/// `‖ε‖·(|t|g)^{n+1}/(n+1)!·e^{|t|g}`, `g = ‖Rγ‖`.
pub fn exp_star_series(a: &FiniteStarBialgebra, gamma: &Functional, t: f64, tol: f64) -> Result<SeriesSum> {
    check_functional(a, gamma)?;
    if !t.is_finite() {
        return Err(Error::Precondition("t must be finite".into()));
    }
    let g = linalg::op_norm(&r_map(a, gamma)?.mat);
    let eps_norm = a.counit().norm();
    let x = t.abs() * g;
    let mut sum = MatrixValuedMap::counit(a);
    let mut term = MatrixValuedMap::counit(a);
    let mut coeff = 1.0_f64;
    // x^{n+1}/(n+1)! for the current n
    let mut power = x;
    let mut tail = eps_norm * power * x.exp();
    for n in 1..SERIES_MAX_TERMS {
        term = convolve(a, &term, gamma)?;
        coeff *= t / n as f64;
        let scaled = term.scale(re(coeff));
        sum = sum.add(&scaled)?;
        power *= x / (n + 1) as f64;
        tail = eps_norm * power * x.exp();
        if tail <= tol || (scaled.max_abs() < tol * 1e-3 && n as f64 > x) {
            return Ok(SeriesSum {
                functional: sum,
                terms: n + 1,
                tail_bound: tail,
            });
        }
    }
    Err(Error::SeriesNotConverged {
        order: SERIES_MAX_TERMS,
        bound: tail,
    })
}

/// `ε ∘ exp(t·Rγ)`.
pub fn exp_star_semigroup(a: &FiniteStarBialgebra, gamma: &Functional, t: f64) -> Result<Functional> {
    check_functional(a, gamma)?;
    if !t.is_finite() {
        return Err(Error::Precondition("t must be finite".into()));
    }
    let r = r_map(a, gamma)?;
    let flow = linalg::expm(&(r.mat * re(t)));
    let values = flow.transpose() * a.counit();
    Ok(MatrixValuedMap::functional(&values))
}

/// `κ_t = exp_⋆(tγ)` by the chosen route; `tol` governs only the series.
pub fn exp_star(a: &FiniteStarBialgebra, gamma: &Functional, t: f64, method: ExpMethod, tol: f64) -> Result<Functional> {
    match method {
        ExpMethod::Series => exp_star_series(a, gamma, t, tol).map(|s| s.functional),
        ExpMethod::Semigroup => exp_star_semigroup(a, gamma, t),
    }
}

/// `Rφ = (id⊗φ)∘Δ` as a matrix on `A⊗ℂ^N`, index `(j, p) ↦ j·N + p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ROperator {
    pub inner_dim: usize,
    pub mat: CMat,
}

pub fn r_map(a: &FiniteStarBialgebra, phi: &MatrixValuedMap) -> Result<ROperator> {
    check_same_algebra(a, &[phi])?;
    let d = a.dim();
    let n = phi.target_dim;
    check_cap(d * n * d * n)?;
    let mut mat = CMat::zeros(d * n, d * n);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let c = a.coproduct_coeff(i, j, k);
                if c == C64::default() {
                    continue;
                }
                for p in 0..n {
                    for q in 0..n {
                        mat[(j * n + p, i * n + q)] += c * phi.mats[k][(p, q)];
                    }
                }
            }
        }
    }
    Ok(ROperator { inner_dim: n, mat })
}

/// `E(Φ) = (ε⊗id)∘Φ`.
pub fn e_map(a: &FiniteStarBialgebra, op: &ROperator) -> Result<MatrixValuedMap> {
    let d = a.dim();
    let n = op.inner_dim;
    if op.mat.shape() != (d * n, d * n) {
        return Err(Error::Dimension(format!(
            "operator is {}×{}, expected {}×{}",
            op.mat.nrows(),
            op.mat.ncols(),
            d * n,
            d * n
        )));
    }
    let eps = a.counit();
    let mats = (0..d)
        .map(|i| {
            CMat::from_fn(n, n, |p, q| (0..d).map(|j| eps[j] * op.mat[(j * n + p, i * n + q)]).sum())
        })
        .collect();
    Ok(MatrixValuedMap { target_dim: n, mats })
}

/// Embeds `R_N β` into `A⊗ℂ^M⊗ℂ^N` acting trivially on the middle leg.
pub fn insert_middle_identity(op: &ROperator, d: usize, m: usize) -> ROperator {
    let n = op.inner_dim;
    let size = d * m * n;
    let mut mat = CMat::zeros(size, size);
    for j in 0..d {
        for i in 0..d {
            for p in 0..m {
                for q in 0..n {
                    for q2 in 0..n {
                        mat[((j * m + p) * n + q, (i * m + p) * n + q2)] = op.mat[(j * n + q, i * n + q2)];
                    }
                }
            }
        }
    }
    ROperator {
        inner_dim: m * n,
        mat,
    }
}

/// Residual of `R_{MN}(α⋆β) = (R_Mα ⊗ I_N)·(R_Nβ with I_M in the middle)`.
pub fn r_multiplicativity_residual(a: &FiniteStarBialgebra, alpha: &MatrixValuedMap, beta: &MatrixValuedMap) -> Result<f64> {
    let lhs = r_map(a, &convolve(a, alpha, beta)?)?;
    let ra = r_map(a, alpha)?;
    let rb = insert_middle_identity(&r_map(a, beta)?, a.dim(), alpha.target_dim);
    let rhs = linalg::kron(&ra.mat, &linalg::eye(beta.target_dim)) * rb.mat;
    Ok(linalg::max_abs(&(lhs.mat - rhs)))
}

/// Semigroup law of `κ_t = exp_⋆(tγ)` over all pairs of sample times, plus `κ_0 = ε`.
pub fn check_semigroup_law(a: &FiniteStarBialgebra, gamma: &Functional, sample_times: &[f64], tol: f64) -> Result<Report> {
    check_functional(a, gamma)?;
    if sample_times.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::Precondition("sample times must be finite and nonnegative".into()));
    }
    let mut report = Report::new();
    let k0 = exp_star_semigroup(a, gamma, 0.0)?;
    report.record("initial_is_counit", k0.max_diff(&MatrixValuedMap::counit(a)), tol);
    for &s in sample_times {
        for &t in sample_times {
            let lhs = exp_star_semigroup(a, gamma, s + t)?;
            let rhs = convolve(a, &exp_star_semigroup(a, gamma, s)?, &exp_star_semigroup(a, gamma, t)?)?;
            report.record(format!("semigroup(s={s},t={t})"), lhs.max_diff(&rhs), tol);
        }
    }
    Ok(report)
}

/// Residual of `λ⋆λ = λ`.
pub fn idempotency_residual(a: &FiniteStarBialgebra, lambda: &MatrixValuedMap) -> Result<f64> {
    Ok(convolve(a, lambda, lambda)?.max_diff(lambda))
}

pub fn is_idempotent(a: &FiniteStarBialgebra, lambda: &MatrixValuedMap, tol: f64) -> Result<bool> {
    Ok(idempotency_residual(a, lambda)? <= tol)
}

/// Block Gram matrix `[T(e_k* e_l)]_{k,l}`; the map is completely positive iff it is PSD.
pub fn block_gram(a: &FiniteStarBialgebra, phi: &MatrixValuedMap) -> Result<CMat> {
    check_same_algebra(a, &[phi])?;
    let d = a.dim();
    let n = phi.target_dim;
    check_cap(d * n * d * n)?;
    let stars: Vec<Element> = (0..d).map(|i| a.star(&a.basis(i))).collect();
    let mut g = CMat::zeros(d * n, d * n);
    for k in 0..d {
        for l in 0..d {
            let prod = a.multiply(&stars[k], &a.basis(l))?;
            let block = phi.eval_coords(&prod.coords);
            g.view_mut((k * n, l * n), (n, n)).copy_from(&block);
        }
    }
    Ok(g)
}

/// Smallest eigenvalue of the block Gram matrix.
pub fn complete_positivity_margin(a: &FiniteStarBialgebra, phi: &MatrixValuedMap) -> Result<f64> {
    Ok(linalg::min_eigenvalue(&block_gram(a, phi)?))
}

/// `R κ` viewed as a matrix-valued map through a representation `π`:
/// `e_i ↦ Σ_j (Rκ)[j][i] π(e_j)`.
pub fn r_map_through(a: &FiniteStarBialgebra, kappa: &Functional, rep: &[CMat]) -> Result<MatrixValuedMap> {
    check_functional(a, kappa)?;
    if rep.len() != a.dim() {
        return Err(Error::Dimension("representation must give one matrix per basis element".into()));
    }
    let r = r_map(a, kappa)?;
    let n = rep[0].nrows();
    let mats = (0..a.dim())
        .map(|i| (0..a.dim()).fold(CMat::zeros(n, n), |acc, j| acc + &rep[j] * r.mat[(j, i)]))
        .collect();
    MatrixValuedMap::new(mats)
}

/// Smallest eigenvalue of the Gram matrix `κ(e_i* e_j)`.
pub fn positivity_margin(a: &FiniteStarBialgebra, kappa: &Functional) -> Result<f64> {
    check_functional(a, kappa)?;
    Ok(linalg::min_eigenvalue(&algebra::functional_gram(a, &kappa.values())))
}
