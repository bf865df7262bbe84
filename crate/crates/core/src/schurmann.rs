//! Generators of cocycles: Schürmann triples, structure maps, conditional
//! positivity, GNS reconstruction, innerness and the CPC standard form.
//!
//! Hat-space convention: index 0 is the scalar slot, indices `1..=r` the noise.

use crate::algebra::FiniteStarBialgebra;
use crate::convolution::{self, Functional, MatrixValuedMap};
use crate::error::{Error, Result};
use crate::linalg::{self, re, CMat, CVec, C64};
use crate::report::Report;

/// Relative eigenvalue cutoff for rank decisions.
pub const TOL_RANK: f64 = 1e-9;

/// `(γ, δ, ρ)` on noise space `ℂ^r`, stored by basis images.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurmannTriple {
    pub gamma: Functional,
    pub delta: Vec<CVec>,
    pub rho: Vec<CMat>,
}

impl SchurmannTriple {
    pub fn new(gamma: Functional, delta: Vec<CVec>, rho: Vec<CMat>) -> Result<Self> {
        let d = gamma.algebra_dim();
        if gamma.target_dim() != 1 {
            return Err(Error::Dimension("γ must be a functional".into()));
        }
        if delta.len() != d || rho.len() != d {
            return Err(Error::Dimension(format!(
                "triple needs {d} images of δ and ρ, got {} and {}",
                delta.len(),
                rho.len()
            )));
        }
        let r = delta[0].len();
        if delta.iter().any(|v| v.len() != r) || rho.iter().any(|m| m.shape() != (r, r)) {
            return Err(Error::Dimension(format!("δ and ρ must act on ℂ^{r}")));
        }
        Ok(Self { gamma, delta, rho })
    }

    /// The triple with `r = 0`.
    pub fn zero_noise(gamma: Functional) -> Self {
        let d = gamma.algebra_dim();
        Self {
            gamma,
            delta: vec![CVec::zeros(0); d],
            rho: vec![CMat::zeros(0, 0); d],
        }
    }

    pub fn noise_dim(&self) -> usize {
        self.delta.first().map_or(0, |v| v.len())
    }

    pub fn algebra_dim(&self) -> usize {
        self.delta.len()
    }

    pub fn delta_of(&self, x: &CVec) -> CVec {
        let r = self.noise_dim();
        x.iter()
            .zip(&self.delta)
            .fold(CVec::zeros(r), |acc, (&xi, v)| acc + v * xi)
    }

    pub fn rho_of(&self, x: &CVec) -> CMat {
        rep_of(&self.rho, x, self.noise_dim())
    }

    pub fn gamma_of(&self, x: &CVec) -> C64 {
        self.gamma.eval_coords(x)[(0, 0)]
    }

    /// Residuals of every triple invariant.
    pub fn check(&self, a: &FiniteStarBialgebra, tol: f64) -> Report {
        let d = a.dim();
        let mut report = representation_report(a, &self.rho, self.noise_dim(), tol);
        let eps = a.counit();
        let mut derivation = 0.0_f64;
        let mut coboundary = 0.0_f64;
        for i in 0..d {
            let ei_star = a.star(&a.basis(i)).coords;
            for j in 0..d {
                let prod = a.basis_product(i, j).coords;
                let lhs = self.delta_of(&prod);
                let rhs = &self.delta[i] * eps[j] + &self.rho[i] * &self.delta[j];
                derivation = derivation.max(linalg::max_abs_vec(&(lhs - rhs)));

                let star_prod = a.multiply(&a.star(&a.basis(i)), &a.basis(j)).expect("basis elements").coords;
                let lhs = self.gamma_of(&star_prod);
                let rhs = self.gamma_of(&ei_star) * eps[j]
                    + a.counit_of(&crate::algebra::Element::new(ei_star.clone())) * self.gamma.value(j)
                    + linalg::inner(&self.delta[i], &self.delta[j]);
                coboundary = coboundary.max((lhs - rhs).norm());
            }
        }
        report.record("delta_derivation", derivation, tol);
        report.record("gamma_coboundary", coboundary, tol);
        report.record("gamma_real", self.gamma.reality_defect(a), tol);
        report.record("gamma_unit", self.gamma_of(&a.unit().coords).norm(), tol);
        report
    }
}

fn rep_of(mats: &[CMat], x: &CVec, r: usize) -> CMat {
    x.iter()
        .zip(mats)
        .fold(CMat::zeros(r, r), |acc, (&xi, m)| acc + m * xi)
}

/// Checks that `mats` define a unital *-representation on `ℂ^r`.
pub fn representation_report(a: &FiniteStarBialgebra, mats: &[CMat], r: usize, tol: f64) -> Report {
    let d = a.dim();
    let mut report = Report::new();
    let unit = rep_of(mats, &a.unit().coords, r);
    report.record("rho_unital", linalg::max_abs(&(unit - linalg::eye(r))), tol);
    let mut mult = 0.0_f64;
    let mut star = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            let lhs = rep_of(mats, &a.basis_product(i, j).coords, r);
            mult = mult.max(linalg::max_abs(&(lhs - &mats[i] * &mats[j])));
        }
        let lhs = rep_of(mats, &a.star(&a.basis(i)).coords, r);
        star = star.max(linalg::max_abs(&(lhs - mats[i].adjoint())));
    }
    report.record("rho_multiplicative", mult, tol);
    report.record("rho_star", star, tol);
    report
}

/// A generator with block layout `[[γ, δ†],[δ, ρ − εI_r]]` on `ℂ ⊕ ℂ^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMap {
    pub map: MatrixValuedMap,
}

impl StructureMap {
    pub fn new(map: MatrixValuedMap) -> Self {
        Self { map }
    }

    pub fn noise_dim(&self) -> usize {
        self.map.target_dim() - 1
    }

    /// Reads `(γ, δ, ρ)` back from the blocks.
    pub fn to_triple(&self, a: &FiniteStarBialgebra) -> Result<SchurmannTriple> {
        let r = self.noise_dim();
        let eps = a.counit();
        let mats = self.map.mats();
        let gamma = Functional::functional(&CVec::from_iterator(mats.len(), mats.iter().map(|m| m[(0, 0)])));
        let delta = mats.iter().map(|m| m.view((1, 0), (r, 1)).column(0).into_owned()).collect();
        let rho = mats
            .iter()
            .zip(eps.iter())
            .map(|(m, &e)| m.view((1, 1), (r, r)).into_owned() + linalg::eye(r) * e)
            .collect();
        SchurmannTriple::new(gamma, delta, rho)
    }
}

/// `φ(a) = [[γ(a), δ(a*)†],[δ(a), ρ(a) − ε(a)I_r]]`.
pub fn triple_to_structure_map(a: &FiniteStarBialgebra, t: &SchurmannTriple) -> Result<StructureMap> {
    if t.algebra_dim() != a.dim() {
        return Err(Error::Dimension("triple and bialgebra dimensions differ".into()));
    }
    let r = t.noise_dim();
    let eps = a.counit();
    let mats = (0..a.dim())
        .map(|i| {
            let mut m = CMat::zeros(r + 1, r + 1);
            m[(0, 0)] = t.gamma.value(i);
            let delta_star = t.delta_of(&a.star(&a.basis(i)).coords);
            for p in 0..r {
                m[(0, p + 1)] = delta_star[p].conj();
                m[(p + 1, 0)] = t.delta[i][p];
                for q in 0..r {
                    m[(p + 1, q + 1)] = t.rho[i][(p, q)];
                }
                m[(p + 1, p + 1)] -= eps[i];
            }
            m
        })
        .collect();
    Ok(StructureMap::new(MatrixValuedMap::new(mats)?))
}

/// Residuals of `φ(a*b) = φ(a)†ε(b) + conj ε(a) φ(b) + φ(a)†Δφ(b)` over basis
/// pairs (`structure_relation`), reality (`reality`) and `φ(1) = 0` (`unital`).
pub fn check_structure_relation(a: &FiniteStarBialgebra, phi: &MatrixValuedMap, tol: f64) -> Result<Report> {
    if phi.algebra_dim() != a.dim() {
        return Err(Error::Dimension("map and bialgebra dimensions differ".into()));
    }
    let n = phi.target_dim();
    let dqs = linalg::delta_qs(n - 1);
    let eps = a.counit();
    let d = a.dim();
    let mut worst = 0.0_f64;
    for i in 0..d {
        let ei_star = a.star(&a.basis(i));
        let phi_a = phi.at(i);
        for j in 0..d {
            let lhs = phi.eval_coords(&a.multiply(&ei_star, &a.basis(j))?.coords);
            let rhs = phi_a.adjoint() * eps[j] + phi.at(j) * eps[i].conj() + phi_a.adjoint() * &dqs * phi.at(j);
            worst = worst.max(linalg::max_abs(&(lhs - rhs)));
        }
    }
    let mut report = Report::new();
    report.record("structure_relation", worst, tol);
    report.record("reality", phi.reality_defect(a), tol);
    report.record("unital", linalg::max_abs(&phi.eval_coords(&a.unit().coords)), tol);
    Ok(report)
}

/// Whether the homomorphic part of a structure-relation report passed,
/// ignoring unitality.
pub fn structure_relation_holds(report: &Report) -> bool {
    ["structure_relation", "reality"]
        .iter()
        .all(|k| report.get(k).is_some_and(|c| c.passed))
}

/// Basis of `Ker ε` made of greedily independent `e_i − ε(e_i)1`, as columns.
pub fn counit_kernel_basis(a: &FiniteStarBialgebra) -> CMat {
    let d = a.dim();
    let unit = a.unit().coords;
    let mut cols: Vec<CVec> = Vec::new();
    for i in 0..d {
        let v = a.basis(i).coords - &unit * a.counit()[i];
        let mut trial = cols.clone();
        trial.push(v.clone());
        if linalg::rank(&CMat::from_columns(&trial), 1e-10) == trial.len() {
            cols.push(v);
        }
    }
    if cols.is_empty() {
        CMat::zeros(d, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Gram matrix `γ(b_k* b_l)` over the columns of `basis`.
fn sesquilinear_gram(a: &FiniteStarBialgebra, gamma: &Functional, basis: &CMat) -> Result<CMat> {
    let m = basis.ncols();
    let stars: Vec<CVec> = (0..m)
        .map(|k| a.star(&crate::algebra::Element::new(basis.column(k).into_owned())).coords)
        .collect();
    let mut g = CMat::zeros(m, m);
    for k in 0..m {
        for l in 0..m {
            let prod = a.multiply_unchecked(&stars[k], &basis.column(l).into_owned());
            g[(k, l)] = gamma.eval_coords(&prod.coords)[(0, 0)];
        }
    }
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct ConditionalPositivity {
    pub verdict: bool,
    pub min_eigenvalue: f64,
    pub gram: CMat,
}

/// Ker-ε Gram criterion for conditional positivity.
pub fn is_conditionally_positive(a: &FiniteStarBialgebra, gamma: &Functional, tol: f64) -> Result<ConditionalPositivity> {
    check_functional(a, gamma)?;
    let defect = gamma.reality_defect(a);
    if defect > tol {
        return Err(Error::Precondition(format!("γ is not real (defect {defect:e})")));
    }
    let basis = counit_kernel_basis(a);
    let gram = sesquilinear_gram(a, gamma, &basis)?;
    let min_eigenvalue = if gram.nrows() == 0 { 0.0 } else { linalg::min_eigenvalue(&gram) };
    let verdict = linalg::hermiticity_defect(&gram) <= tol && min_eigenvalue >= -tol;
    Ok(ConditionalPositivity {
        verdict,
        min_eigenvalue,
        gram,
    })
}

fn check_functional(a: &FiniteStarBialgebra, gamma: &Functional) -> Result<()> {
    if gamma.algebra_dim() != a.dim() || gamma.target_dim() != 1 {
        return Err(Error::Dimension("expected a functional on the given bialgebra".into()));
    }
    Ok(())
}

/// GNS-type reconstruction of a Schürmann triple from a conditionally
/// positive generator.
pub fn gns_reconstruct(a: &FiniteStarBialgebra, gamma: &Functional, tol: f64) -> Result<SchurmannTriple> {
    let cp = is_conditionally_positive(a, gamma, tol)?;
    let at_unit = gamma.eval_coords(&a.unit().coords)[(0, 0)];
    if at_unit.norm() > tol {
        return Err(Error::Precondition(format!("γ(1) = {at_unit} ≠ 0")));
    }
    if !cp.verdict {
        return Err(Error::NotPositive(cp.min_eigenvalue));
    }
    let basis = counit_kernel_basis(a);
    let (x, _) = linalg::gram_factor(&linalg::hermitian_part(&cp.gram), TOL_RANK);
    let r = x.nrows();
    let d = a.dim();
    if r == 0 {
        return Ok(SchurmannTriple::zero_noise(gamma.clone()));
    }
    let b_pinv = linalg::pinv(&basis, 1e-12);
    // class map Ker ε → ℂ^r and a right inverse ℂ^r → Ker ε
    let quotient = &x * &b_pinv;
    let lift = &basis * linalg::pinv(&x, 1e-12);
    let unit = a.unit().coords;
    let delta = (0..d)
        .map(|i| &quotient * (a.basis(i).coords - &unit * a.counit()[i]))
        .collect();
    let rho = (0..d)
        .map(|i| &quotient * a.left_mult_matrix(&a.basis(i)) * &lift)
        .collect();
    SchurmannTriple::new(gamma.clone(), delta, rho)
}

/// Least-squares `ξ` with `δ(e_i) = (ρ(e_i) − ε(e_i))ξ`; the residual norm
/// certifies innerness.
pub fn find_implementing_vector(a: &FiniteStarBialgebra, rho: &[CMat], delta: &[CVec]) -> Result<(CVec, f64)> {
    let d = a.dim();
    if rho.len() != d || delta.len() != d {
        return Err(Error::Dimension("need one ρ and δ image per basis element".into()));
    }
    let r = delta.first().map_or(0, |v| v.len());
    if r == 0 {
        return Ok((CVec::zeros(0), 0.0));
    }
    let mut sys = CMat::zeros(d * r, r);
    let mut rhs = CMat::zeros(d * r, 1);
    for i in 0..d {
        let block = &rho[i] - linalg::eye(r) * a.counit()[i];
        sys.view_mut((i * r, 0), (r, r)).copy_from(&block);
        for p in 0..r {
            rhs[(i * r + p, 0)] = delta[i][p];
        }
    }
    // numerically null directions of ρ − ε are fixed vectors, not part of ξ;
    // the cutoff is absolute on the scale of ρ so that ρ ≈ ε gives ξ = 0
    let scale = rho.iter().map(linalg::op_norm).fold(1.0, f64::max);
    let x = linalg::pinv_abs(&sys, TOL_RANK * scale) * &rhs;
    let residual = (&sys * &x - &rhs).norm();
    Ok((x.column(0).into_owned(), residual))
}

/// `(K, ρ, D, ξ, d, e, t)` describing a completely positive contractive generator.
#[derive(Debug, Clone, PartialEq)]
pub struct CPCTuple {
    pub rho: Vec<CMat>,
    /// `K_dim × n_k` contraction.
    pub d_mat: CMat,
    pub xi: CVec,
    pub d_vec: CVec,
    pub e_vec: CVec,
    pub t: f64,
}

impl CPCTuple {
    pub fn new(rho: Vec<CMat>, d_mat: CMat, xi: CVec, d_vec: CVec, e_vec: CVec, t: f64) -> Result<Self> {
        let k = d_mat.nrows();
        let n = d_mat.ncols();
        if rho.is_empty() {
            return Err(Error::Dimension("ρ needs one image per basis element".into()));
        }
        if rho.iter().any(|m| m.shape() != (k, k)) {
            return Err(Error::Dimension(format!("ρ images must be {k}×{k}")));
        }
        if xi.len() != k {
            return Err(Error::Dimension(format!("ξ must have length {k}")));
        }
        if d_vec.len() != n || e_vec.len() != n {
            return Err(Error::Dimension(format!("d and e must have length {n}")));
        }
        if !t.is_finite() {
            return Err(Error::Schema("t must be finite".into()));
        }
        Ok(Self {
            rho,
            d_mat,
            xi,
            d_vec,
            e_vec,
            t,
        })
    }

    pub fn k_dim(&self) -> usize {
        self.d_mat.nrows()
    }

    pub fn noise_dim(&self) -> usize {
        self.d_mat.ncols()
    }

    pub fn rho_of(&self, x: &CVec) -> CMat {
        rep_of(&self.rho, x, self.k_dim())
    }

    /// `δ(a) = (ρ(a) − ε(a))ξ`.
    pub fn delta_of(&self, a: &FiniteStarBialgebra, x: &CVec) -> CVec {
        let eps = a.counit_of(&crate::algebra::Element::new(x.clone()));
        (self.rho_of(x) - linalg::eye(self.k_dim()) * eps) * &self.xi
    }

    /// `(I − D†D)^{1/2}`.
    pub fn defect_root(&self) -> Result<CMat> {
        let n = self.noise_dim();
        linalg::psd_sqrt(&(linalg::eye(n) - self.d_mat.adjoint() * &self.d_mat), 1e-12)
            .map_err(|lowest| Error::Precondition(format!("D is not a contraction (I − D†D has eigenvalue {lowest:e})")))
    }

    pub fn check(&self, a: &FiniteStarBialgebra, tol: f64) -> Report {
        let mut report = representation_report(a, &self.rho, self.k_dim(), tol);
        report.record("d_contraction", (linalg::op_norm(&self.d_mat) - 1.0).max(0.0), tol);
        let root_residual = match self.defect_root() {
            Ok(root) => linalg::max_abs_vec(&(&self.d_vec - root * &self.e_vec)),
            Err(_) => f64::INFINITY,
        };
        report.record("d_equals_defect_root_e", root_residual, tol);
        report.record("e_norm_bound", (self.e_vec.norm_squared() + self.t).max(0.0), tol);
        report.record("t_nonpositive", self.t.max(0.0), tol);
        report
    }

    /// The generator
    /// `[[λ, ε⟨d| + δ†D],[ε|d⟩ + D†δ, D†ρD − εI]]` with
    /// `λ(a) = ε(a)(t − ‖ξ‖²) + ⟨ξ, ρ(a)ξ⟩`.
    pub fn to_generator(&self, a: &FiniteStarBialgebra) -> Result<MatrixValuedMap> {
        if self.rho.len() != a.dim() {
            return Err(Error::Dimension("tuple and bialgebra dimensions differ".into()));
        }
        let n = self.noise_dim();
        let xi_sq = self.xi.norm_squared();
        let mats = (0..a.dim())
            .map(|i| {
                let e = a.basis(i).coords;
                let eps = a.counit()[i];
                let rho = &self.rho[i];
                let delta = self.delta_of(a, &e);
                let delta_star = self.delta_of(a, &a.star(&a.basis(i)).coords);
                let mut m = CMat::zeros(n + 1, n + 1);
                m[(0, 0)] = eps * (self.t - xi_sq) + linalg::inner(&self.xi, &(rho * &self.xi));
                let top = self.d_vec.adjoint() * eps + delta_star.adjoint() * &self.d_mat;
                let left = &self.d_vec * eps + self.d_mat.adjoint() * &delta;
                let body = self.d_mat.adjoint() * rho * &self.d_mat - linalg::eye(n) * eps;
                for p in 0..n {
                    m[(0, p + 1)] = top[(0, p)];
                    m[(p + 1, 0)] = left[p];
                    for q in 0..n {
                        m[(p + 1, q + 1)] = body[(p, q)];
                    }
                }
                m
            })
            .collect();
        MatrixValuedMap::new(mats)
    }
}

/// Output of [`cpc_standard_form`].
#[derive(Debug, Clone)]
pub struct StandardForm {
    pub tuple: CPCTuple,
    /// Dimension of the kernel of `(I − D†D)^{1/2}`; `e` is the minimum-norm choice.
    pub e_nullspace_dim: usize,
    pub xi_residual: f64,
    pub reconstruction_residual: f64,
    pub kernel_min_eigenvalue: f64,
}

/// Big Gram matrix of the kernel `ψ(e_i, e_j)`, rows `(i, p)` with `p` a hat index.
pub fn cpc_kernel_gram(a: &FiniteStarBialgebra, phi: &MatrixValuedMap) -> Result<CMat> {
    if phi.algebra_dim() != a.dim() {
        return Err(Error::Dimension("map and bialgebra dimensions differ".into()));
    }
    let d = a.dim();
    let h = phi.target_dim();
    let unit = a.unit().coords;
    let eps = a.counit();
    let lambda = |x: &CVec| phi.eval_coords(x)[(0, 0)];
    let lambda_one = lambda(&unit);
    let mut g = CMat::zeros(d * h, d * h);
    for i in 0..d {
        let ei_star = a.star(&a.basis(i));
        let eps_star = a.counit_of(&ei_star);
        let phi_star = phi.eval_coords(&ei_star.coords);
        for j in 0..d {
            let prod = a.multiply(&ei_star, &a.basis(j))?.coords;
            let phi_prod = phi.eval_coords(&prod);
            let phi_j = phi.at(j);
            let mut block = CMat::zeros(h, h);
            block[(0, 0)] = lambda(&prod) - eps_star * phi_j[(0, 0)] - phi_star[(0, 0)] * eps[j] + eps_star * lambda_one * eps[j];
            for p in 1..h {
                block[(0, p)] = phi_prod[(0, p)] - eps_star * phi_j[(0, p)];
                block[(p, 0)] = phi_prod[(p, 0)] - phi_star[(p, 0)] * eps[j];
                for q in 1..h {
                    // σ = φ_kk + εI
                    let sigma = phi_prod[(p, q)] + if p == q { a.counit_of(&crate::algebra::Element::new(prod.clone())) } else { re(0.0) };
                    block[(p, q)] = sigma;
                }
            }
            g.view_mut((i * h, j * h), (h, h)).copy_from(&block);
        }
    }
    Ok(g)
}

/// Standard form `(K, ρ, D, ξ, d, e, t)` of a CPC generator via the minimal
/// Kolmogorov decomposition of its kernel.
pub fn cpc_standard_form(a: &FiniteStarBialgebra, phi: &MatrixValuedMap, tol: f64) -> Result<StandardForm> {
    let defect = phi.reality_defect(a);
    if defect > tol {
        return Err(Error::Precondition(format!("φ is not real (defect {defect:e})")));
    }
    let phi_one = phi.eval_coords(&a.unit().coords);
    if !linalg::is_negative_semidefinite(&phi_one) {
        return Err(Error::Precondition(format!(
            "φ(1) is not nonpositive (largest eigenvalue {:e})",
            linalg::max_eigenvalue(&phi_one)
        )));
    }
    let d = a.dim();
    let h = phi.target_dim();
    let n = h - 1;
    let gram = linalg::hermitian_part(&cpc_kernel_gram(a, phi)?);
    let eig = linalg::hermitian_eigen(&gram);
    let top = eig.values.first().copied().unwrap_or(0.0);
    let lowest = eig.values.last().copied().unwrap_or(0.0);
    if lowest < -tol * (1.0 + top.abs()) {
        return Err(Error::NotPositive(lowest));
    }
    let (x, _) = linalg::gram_factor(&gram, TOL_RANK);
    let k = x.nrows();
    let chi = |i: usize| x.view((0, i * h), (k, h)).into_owned();
    let unit = a.unit().coords;
    let d_mat = (0..d).fold(CMat::zeros(k, n), |acc, i| acc + chi(i).view((0, 1), (k, n)) * unit[i]);
    let x_pinv = linalg::pinv(&x, 1e-12);
    let mut rho = Vec::with_capacity(d);
    for kk in 0..d {
        let mut y = CMat::zeros(k, d * h);
        let delta_k = chi(kk).column(0).into_owned();
        for j in 0..d {
            let prod = a.basis_product(kk, j).coords;
            let chi_prod = (0..d).fold(CMat::zeros(k, h), |acc, l| acc + chi(l) * prod[l]);
            let col0 = chi_prod.column(0).into_owned() - &delta_k * a.counit()[j];
            y.view_mut((0, j * h), (k, 1)).copy_from(&col0);
            if n > 0 {
                y.view_mut((0, j * h + 1), (k, n)).copy_from(&chi_prod.view((0, 1), (k, n)));
            }
        }
        rho.push(y * &x_pinv);
    }
    let delta: Vec<CVec> = (0..d).map(|i| chi(i).column(0).into_owned()).collect();
    let (xi, xi_residual) = find_implementing_vector(a, &rho, &delta)?;
    let d_vec = CVec::from_iterator(n, (0..n).map(|p| phi_one[(p + 1, 0)]));
    let t = phi_one[(0, 0)].re;
    let root = linalg::psd_sqrt(&(linalg::eye(n) - d_mat.adjoint() * &d_mat), 1e-12).map_err(Error::NotPositive)?;
    let e_vec = linalg::pinv(&root, 1e-9) * &d_vec;
    let e_nullspace_dim = n - linalg::rank(&root, 1e-9);
    let tuple = CPCTuple::new(rho, d_mat, xi, d_vec, e_vec, t)?;
    let reconstruction_residual = tuple.to_generator(a)?.max_diff(phi);
    if reconstruction_residual > tol {
        return Err(Error::Verification(format!(
            "standard form reproduces φ only to {reconstruction_residual:e}"
        )));
    }
    Ok(StandardForm {
        tuple,
        e_nullspace_dim,
        xi_residual,
        reconstruction_residual,
        kernel_min_eigenvalue: lowest,
    })
}

/// Outcome of [`check_cpc_form`].
#[derive(Debug, Clone)]
pub struct CpcFormCheck {
    pub report: Report,
    pub chi: Option<CVec>,
    pub psi: Option<MatrixValuedMap>,
}

impl CpcFormCheck {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

/// Attempts `φ(a) = ψ(a) − ε(a)(Δ + |e₀⟩⟨χ| + |χ⟩⟨e₀|)` with `ψ` completely positive.
///
/// `χ = (−(t − ‖ξ‖²)/2, −(d − D†ξ))` and `ψ = S†ρS` with `S = [ξ D]` come
/// from the standard form; the verdict requires `ψ` to match, to be
/// completely positive and `φ(1) ≤ 0`.
pub fn check_cpc_form(a: &FiniteStarBialgebra, phi: &MatrixValuedMap, tol: f64) -> Result<CpcFormCheck> {
    if phi.algebra_dim() != a.dim() {
        return Err(Error::Dimension("map and bialgebra dimensions differ".into()));
    }
    let mut report = Report::new();
    let phi_one = phi.eval_coords(&a.unit().coords);
    report.record("phi_one_nonpositive", linalg::max_eigenvalue(&phi_one).max(0.0), tol);
    report.record("reality", phi.reality_defect(a), tol);
    let form = match cpc_standard_form(a, phi, tol) {
        Ok(form) => form,
        Err(_) => {
            report.record_flag("decomposition", false);
            return Ok(CpcFormCheck {
                report,
                chi: None,
                psi: None,
            });
        }
    };
    let tuple = &form.tuple;
    let n = tuple.noise_dim();
    let k = tuple.k_dim();
    let mut s = CMat::zeros(k, n + 1);
    s.view_mut((0, 0), (k, 1)).copy_from(&tuple.xi);
    s.view_mut((0, 1), (k, n)).copy_from(&tuple.d_mat);
    let psi = MatrixValuedMap::new(tuple.rho.iter().map(|r| s.adjoint() * r * &s).collect())?;
    let mut chi = CVec::zeros(n + 1);
    chi[0] = re(-(tuple.t - tuple.xi.norm_squared()) / 2.0);
    let tail = &tuple.d_vec - tuple.d_mat.adjoint() * &tuple.xi;
    for p in 0..n {
        chi[p + 1] = -tail[p];
    }
    let mut correction = linalg::delta_qs(n);
    for p in 0..=n {
        correction[(0, p)] += chi[p].conj();
        correction[(p, 0)] += chi[p];
    }
    let rebuilt = MatrixValuedMap::new(
        psi.mats()
            .iter()
            .zip(a.counit().iter())
            .map(|(m, &e)| m - &correction * e)
            .collect(),
    )?;
    report.record("decomposition", rebuilt.max_diff(phi), tol);
    let margin = convolution::complete_positivity_margin(a, &psi)?;
    report.record("psi_completely_positive", (-margin).max(0.0), tol);
    Ok(CpcFormCheck {
        report,
        chi: Some(chi),
        psi: Some(psi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_function_bialgebra, build_group_bialgebra, cyclic_table};

    fn z2() -> FiniteStarBialgebra {
        build_group_bialgebra(&cyclic_table(2)).unwrap()
    }

    fn gamma_z2() -> Functional {
        Functional::functional_from(&[re(0.0), re(-1.0)])
    }

    fn cz2() -> FiniteStarBialgebra {
        build_function_bialgebra(&cyclic_table(2)).unwrap()
    }

    fn gamma_cz2() -> Functional {
        Functional::functional_from(&[re(-1.0), re(1.0)])
    }

    #[test]
    fn conditional_positivity_examples() {
        let a = z2();
        let cp = is_conditionally_positive(&a, &gamma_z2(), 1e-12).unwrap();
        assert!(cp.verdict);
        assert!((cp.gram[(0, 0)] - re(2.0)).norm() < 1e-14);
        let bad = Functional::functional_from(&[re(0.0), re(1.0)]);
        let cp = is_conditionally_positive(&a, &bad, 1e-12).unwrap();
        assert!(!cp.verdict);
        assert!((cp.gram[(0, 0)] - re(-2.0)).norm() < 1e-14);
        assert!(is_conditionally_positive(&a, &Functional::zero(2, 1), 1e-12).unwrap().verdict);
        let complex = Functional::functional_from(&[re(0.0), C64::new(0.0, 1.0)]);
        assert!(matches!(is_conditionally_positive(&a, &complex, 1e-12), Err(Error::Precondition(_))));
    }

    #[test]
    fn gns_for_z2_group_algebra() {
        let a = z2();
        let t = gns_reconstruct(&a, &gamma_z2(), 1e-10).unwrap();
        assert_eq!(t.noise_dim(), 1);
        assert!((t.rho[1][(0, 0)] - re(-1.0)).norm() < 1e-12);
        assert!((t.delta[1][0].norm() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(t.gamma, gamma_z2());
        assert!(t.check(&a, 1e-10).passed());
    }

    #[test]
    fn gns_for_zero_generator() {
        let a = z2();
        let t = gns_reconstruct(&a, &Functional::zero(2, 1), 1e-10).unwrap();
        assert_eq!(t.noise_dim(), 0);
        let phi = triple_to_structure_map(&a, &t).unwrap();
        assert_eq!(phi.map, MatrixValuedMap::zero(2, 1));
    }

    #[test]
    fn gns_for_function_algebra() {
        let a = cz2();
        let t = gns_reconstruct(&a, &gamma_cz2(), 1e-10).unwrap();
        assert_eq!(t.noise_dim(), 1);
        assert!((t.delta[1][0].norm() - 1.0).abs() < 1e-12);
        assert!((t.rho[1][(0, 0)] - re(1.0)).norm() < 1e-12);
        assert!(t.rho[0][(0, 0)].norm() < 1e-12);
        assert!(t.check(&a, 1e-10).passed());
    }

    #[test]
    fn gns_rejects_bad_generators() {
        let a = z2();
        let not_cp = Functional::functional_from(&[re(0.0), re(1.0)]);
        assert!(matches!(gns_reconstruct(&a, &not_cp, 1e-10), Err(Error::NotPositive(_))));
        let not_unital = Functional::functional_from(&[re(1.0), re(-1.0)]);
        assert!(matches!(gns_reconstruct(&a, &not_unital, 1e-10), Err(Error::Precondition(_))));
    }

    fn gauge_fixed(t: &SchurmannTriple) -> SchurmannTriple {
        // r = 1 only: rotate δ(e_1) to the positive real axis
        let z = t.delta[1][0];
        let phase = if z.norm() > 0.0 { z.conj() / z.norm() } else { re(1.0) };
        SchurmannTriple::new(
            t.gamma.clone(),
            t.delta.iter().map(|v| v * phase).collect(),
            t.rho.clone(),
        )
        .unwrap()
    }

    #[test]
    fn structure_maps_from_triples() {
        let a = z2();
        let t = gauge_fixed(&gns_reconstruct(&a, &gamma_z2(), 1e-10).unwrap());
        let phi = triple_to_structure_map(&a, &t).unwrap();
        let s = 2f64.sqrt();
        let expected = linalg::from_real_rows(&[&[-1.0, s], &[s, -2.0]]);
        assert!(linalg::max_abs(&(phi.map.at(1) - expected)) < 1e-12);
        assert!(linalg::max_abs(phi.map.at(0)) < 1e-12);
        assert!(check_structure_relation(&a, &phi.map, 1e-10).unwrap().passed());

        let c = cz2();
        let t = gauge_fixed(&gns_reconstruct(&c, &gamma_cz2(), 1e-10).unwrap());
        let phi = triple_to_structure_map(&c, &t).unwrap();
        let ones = CMat::from_element(2, 2, re(1.0));
        assert!(linalg::max_abs(&(phi.map.at(1) - &ones)) < 1e-12);
        assert!(linalg::max_abs(&(phi.map.at(0) + &ones)) < 1e-12);
        assert!(check_structure_relation(&c, &phi.map, 1e-10).unwrap().passed());
        let back = phi.to_triple(&c).unwrap();
        assert!(back.delta[1][0] == t.delta[1][0] && back.rho == t.rho);
    }

    #[test]
    fn structure_relation_detects_scaled_delta() {
        let a = z2();
        let t = gns_reconstruct(&a, &gamma_z2(), 1e-10).unwrap();
        let doubled = SchurmannTriple::new(t.gamma.clone(), t.delta.iter().map(|v| v * re(2.0)).collect(), t.rho.clone()).unwrap();
        let phi = triple_to_structure_map(&a, &doubled).unwrap();
        let report = check_structure_relation(&a, &phi.map, 1e-10).unwrap();
        assert!(!report.passed());
        // Sch T3 defect at (L1, L1): |δ|² grows from 2 to 8
        assert!((report.residual("structure_relation").unwrap() - 6.0).abs() < 1e-10);
        assert!(check_structure_relation(&a, &MatrixValuedMap::zero(2, 3), 1e-10).unwrap().passed());
    }

    #[test]
    fn implementing_vectors() {
        let a = z2();
        let t = gauge_fixed(&gns_reconstruct(&a, &gamma_z2(), 1e-10).unwrap());
        let (xi, res) = find_implementing_vector(&a, &t.rho, &t.delta).unwrap();
        assert!((xi[0] - re(-(2f64.sqrt()) / 2.0)).norm() < 1e-12 && res < 1e-12);
        let zero = vec![CVec::zeros(1); 2];
        let (xi, res) = find_implementing_vector(&a, &t.rho, &zero).unwrap();
        assert!(xi[0].norm() < 1e-15 && res < 1e-15);
        let c = cz2();
        let t = gauge_fixed(&gns_reconstruct(&c, &gamma_cz2(), 1e-10).unwrap());
        let (xi, res) = find_implementing_vector(&c, &t.rho, &t.delta).unwrap();
        assert!((xi[0] - re(1.0)).norm() < 1e-12 && res < 1e-12);
    }

    #[test]
    fn standard_form_of_z2_structure_map() {
        let a = z2();
        let t = gns_reconstruct(&a, &gamma_z2(), 1e-10).unwrap();
        let phi = triple_to_structure_map(&a, &t).unwrap().map;
        let form = cpc_standard_form(&a, &phi, 1e-9).unwrap();
        let tuple = &form.tuple;
        assert_eq!(tuple.k_dim(), 1);
        assert!((tuple.d_mat[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((tuple.xi.norm() - 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert!(tuple.t.abs() < 1e-12 && tuple.d_vec.norm() < 1e-12);
        assert!(form.reconstruction_residual <= 1e-9);
        assert!(tuple.check(&a, 1e-9).passed());
    }

    #[test]
    fn standard_form_of_zero_generator() {
        let a = z2();
        let form = cpc_standard_form(&a, &MatrixValuedMap::zero(2, 1), 1e-9).unwrap();
        assert_eq!(form.tuple.k_dim(), 0);
        assert_eq!(form.tuple.xi.len(), 0);
        assert_eq!(form.tuple.t, 0.0);
        // with noise, ε(·)I survives in the kernel and D becomes an isometry
        let form = cpc_standard_form(&a, &MatrixValuedMap::zero(2, 2), 1e-9).unwrap();
        assert_eq!(form.tuple.k_dim(), 1);
        assert!((form.tuple.d_mat[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standard_form_of_drift_generator() {
        let a = z2();
        let base = linalg::from_real_rows(&[&[-1.0, 0.0], &[0.0, 0.25 - 1.0]]);
        let phi = MatrixValuedMap::new(a.counit().iter().map(|&e| &base * e).collect()).unwrap();
        let form = cpc_standard_form(&a, &phi, 1e-9).unwrap();
        let tuple = &form.tuple;
        assert_eq!(tuple.k_dim(), 1);
        assert!((tuple.d_mat[(0, 0)].norm() - 0.5).abs() < 1e-12);
        assert!(tuple.xi.norm() < 1e-12 && (tuple.t + 1.0).abs() < 1e-12);
        for i in 0..2 {
            assert!((tuple.rho[i][(0, 0)] - a.counit()[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn standard_form_rejects_positive_phi_one() {
        let a = z2();
        let phi = MatrixValuedMap::new(vec![linalg::eye(2), CMat::zeros(2, 2)]).unwrap();
        assert!(matches!(cpc_standard_form(&a, &phi, 1e-9), Err(Error::Precondition(_))));
        let check = check_cpc_form(&a, &phi, 1e-9).unwrap();
        assert!(!check.passed());
        assert!(!check.report.get("phi_one_nonpositive").unwrap().passed);
    }

    #[test]
    fn cpc_form_of_homomorphic_generator() {
        let a = z2();
        let t = gns_reconstruct(&a, &gamma_z2(), 1e-10).unwrap();
        let phi = triple_to_structure_map(&a, &t).unwrap().map;
        let check = check_cpc_form(&a, &phi, 1e-9).unwrap();
        assert!(check.passed(), "{:?}", check.report);
        let zero = check_cpc_form(&a, &MatrixValuedMap::zero(2, 1), 1e-9).unwrap();
        assert!(zero.passed());
        assert!(zero.chi.unwrap().norm() < 1e-12);
    }
}
