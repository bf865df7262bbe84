//! The ♦ calculus on hat operators, Weyl perturbations, the Euclidean action
//! on Schürmann triples, and dilation of CPC generators to homomorphic ones.

use crate::algebra::{build_group_bialgebra, FiniteStarBialgebra};
use crate::convolution::MatrixValuedMap;
use crate::error::{Error, Result};
use crate::linalg::{self, re, CMat, CVec, C64};
use crate::report::Report;
use crate::schurmann::{self, CPCTuple, SchurmannTriple};

/// Tolerance for unitarity of `V` and for the isometry tests.
pub const TOL_UNITARY: f64 = 1e-10;

/// Operator on `ℂ ⊕ ℂ^{n_k}` in block form `[[z, β],[d, R − I]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HatOperator {
    mat: CMat,
}

impl HatOperator {
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::Dimension(format!("hat operator must be square and nonempty, got {}×{}", mat.nrows(), mat.ncols())));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Schema("hat operator has non-finite entries".into()));
        }
        Ok(Self { mat })
    }

    pub fn zero(noise_dim: usize) -> Self {
        Self {
            mat: CMat::zeros(noise_dim + 1, noise_dim + 1),
        }
    }

    pub fn noise_dim(&self) -> usize {
        self.mat.nrows() - 1
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint() }
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        if self.mat.shape() != other.mat.shape() {
            return f64::INFINITY;
        }
        linalg::max_abs(&(&self.mat - &other.mat))
    }
}

fn same_size(l: &HatOperator, m: &HatOperator) -> Result<()> {
    if l.mat.shape() != m.mat.shape() {
        return Err(Error::Dimension(format!(
            "hat operators of noise dimensions {} and {}",
            l.noise_dim(),
            m.noise_dim()
        )));
    }
    Ok(())
}

/// `L ♦ M = L + M + LΔM`.
pub fn diamond(l: &HatOperator, m: &HatOperator) -> Result<HatOperator> {
    same_size(l, m)?;
    let delta = linalg::delta_qs(l.noise_dim());
    Ok(HatOperator {
        mat: &l.mat + &m.mat + &l.mat * delta * &m.mat,
    })
}

/// `(μ, v, V)` with `μ` real and `V` unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanElement {
    mu: f64,
    v: CVec,
    big_v: CMat,
}

impl EuclideanElement {
    pub fn new(mu: f64, v: CVec, big_v: CMat) -> Result<Self> {
        let r = v.len();
        if big_v.shape() != (r, r) {
            return Err(Error::Dimension(format!("V must be {r}×{r}")));
        }
        if !mu.is_finite() {
            return Err(Error::Schema("μ must be finite".into()));
        }
        let defect = linalg::max_abs(&(big_v.adjoint() * &big_v - linalg::eye(r)))
            .max(linalg::max_abs(&(&big_v * big_v.adjoint() - linalg::eye(r))));
        if defect > TOL_UNITARY {
            return Err(Error::Precondition(format!("V is not unitary (defect {defect:e})")));
        }
        Ok(Self { mu, v, big_v })
    }

    pub fn identity(r: usize) -> Self {
        Self {
            mu: 0.0,
            v: CVec::zeros(r),
            big_v: linalg::eye(r),
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn v(&self) -> &CVec {
        &self.v
    }

    pub fn big_v(&self) -> &CMat {
        &self.big_v
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// `(μ₁ + μ₂ − Im⟨v₁, V₁v₂⟩, v₁ + V₁v₂, V₁V₂)`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension("Euclidean elements of different dimensions".into()));
        }
        let vv = &self.big_v * &other.v;
        Ok(Self {
            mu: self.mu + other.mu - linalg::inner(&self.v, &vv).im,
            v: &self.v + vv,
            big_v: &self.big_v * &other.big_v,
        })
    }
}

fn weyl_matrix(mu: f64, v: &CVec, big_v: &CMat) -> CMat {
    let r = v.len();
    let mut m = CMat::zeros(r + 1, r + 1);
    m[(0, 0)] = C64::new(-0.5 * v.norm_squared(), mu);
    let top = -(v.adjoint() * big_v);
    for p in 0..r {
        m[(0, p + 1)] = top[(0, p)];
        m[(p + 1, 0)] = v[p];
        for q in 0..r {
            m[(p + 1, q + 1)] = big_v[(p, q)] - if p == q { re(1.0) } else { re(0.0) };
        }
    }
    m
}

/// `L = [[iμ − ½‖v‖², −v†V],[v, V − I]]`.
pub fn weyl_generator(e: &EuclideanElement) -> HatOperator {
    HatOperator {
        mat: weyl_matrix(e.mu, &e.v, &e.big_v),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometryCheck {
    pub iso: bool,
    pub coiso: bool,
    /// `max |L†♦L|`.
    pub iso_residual: f64,
    /// `max |L♦L†|`.
    pub coiso_residual: f64,
}

pub fn is_isometric_generator(l: &HatOperator) -> IsometryCheck {
    let la = l.adjoint();
    let iso_residual = linalg::max_abs(diamond(&la, l).expect("same size").matrix());
    let coiso_residual = linalg::max_abs(diamond(l, &la).expect("same size").matrix());
    IsometryCheck {
        iso: iso_residual <= TOL_UNITARY,
        coiso: coiso_residual <= TOL_UNITARY,
        iso_residual,
        coiso_residual,
    }
}

/// `(L ♦ φ ♦ M)(a) = (I + LΔ)φ(a)(I + ΔM) + ε(a)(L ♦ M)`; a missing side is `0`.
pub fn diamond_conjugate(a: &FiniteStarBialgebra, phi: &MatrixValuedMap, l: Option<&HatOperator>, m: Option<&HatOperator>) -> Result<MatrixValuedMap> {
    if phi.algebra_dim() != a.dim() {
        return Err(Error::Dimension("map and bialgebra dimensions differ".into()));
    }
    let n = phi.target_dim() - 1;
    let zero = HatOperator::zero(n);
    let l = l.unwrap_or(&zero);
    let m = m.unwrap_or(&zero);
    if l.mat.nrows() != n + 1 || m.mat.nrows() != n + 1 {
        return Err(Error::Dimension(format!("hat operators must be {}×{}", n + 1, n + 1)));
    }
    let delta = linalg::delta_qs(n);
    let left = linalg::eye(n + 1) + &l.mat * &delta;
    let right = linalg::eye(n + 1) + &delta * &m.mat;
    let lm = diamond(l, m)?.mat;
    MatrixValuedMap::new(
        phi.mats()
            .iter()
            .zip(a.counit().iter())
            .map(|(p, &eps)| &left * p * &right + &lm * eps)
            .collect(),
    )
}

/// `γ̃ = γ + δ†v + v†δ + ⟨v, (ρ − ε)v⟩`, `δ̃ = V†(δ + (ρ − ε)v)`, `ρ̃ = V†ρV`.
pub fn euclidean_action(a: &FiniteStarBialgebra, t: &SchurmannTriple, e: &EuclideanElement) -> Result<SchurmannTriple> {
    let r = t.noise_dim();
    if e.dim() != r {
        return Err(Error::Dimension(format!("Euclidean element acts on ℂ^{}, triple has noise dimension {r}", e.dim())));
    }
    if t.algebra_dim() != a.dim() {
        return Err(Error::Dimension("triple and bialgebra dimensions differ".into()));
    }
    let vd = e.big_v.adjoint();
    let mut gamma = Vec::with_capacity(a.dim());
    let mut delta = Vec::with_capacity(a.dim());
    let mut rho = Vec::with_capacity(a.dim());
    for i in 0..a.dim() {
        let eps = a.counit()[i];
        let shifted = &t.rho[i] - linalg::eye(r) * eps;
        let star = a.star(&a.basis(i));
        let delta_star = t.delta_of(&star.coords);
        let g = t.gamma.value(i)
            + linalg::inner(&delta_star, &e.v)
            + linalg::inner(&e.v, &t.delta[i])
            + linalg::inner(&e.v, &(&shifted * &e.v));
        gamma.push(g);
        delta.push(&vd * (&t.delta[i] + &shifted * &e.v));
        rho.push(&vd * &t.rho[i] * &e.big_v);
    }
    SchurmannTriple::new(MatrixValuedMap::functional_from(&gamma), delta, rho)
}

/// Weyl-generated structure map on a group bialgebra with its checks.
#[derive(Debug, Clone)]
pub struct GroupCocycleGenerator {
    pub algebra: FiniteStarBialgebra,
    pub psi: Vec<HatOperator>,
    pub phi: MatrixValuedMap,
    pub report: Report,
}

/// `ψ_g = [[iλ_g − ½‖ξ_g‖², −ξ_g†U_g],[ξ_g, U_g − I]]` and `φ(L_g) = ψ_g`.
/// Violations of the representation, cocycle and phase conditions are
/// reported rather than raised, so their effect on `ψ_{gh} = ψ_g ♦ ψ_h` can be inspected.
pub fn group_cocycle_generator(table: &[Vec<usize>], lambda: &[f64], xi: &[CVec], u: &[CMat], tol: f64) -> Result<GroupCocycleGenerator> {
    let algebra = build_group_bialgebra(table)?;
    let n = table.len();
    if lambda.len() != n || xi.len() != n || u.len() != n {
        return Err(Error::Dimension(format!("λ, ξ and U need one entry per group element ({n})")));
    }
    let r = xi[0].len();
    if xi.iter().any(|x| x.len() != r) || u.iter().any(|m| m.shape() != (r, r)) {
        return Err(Error::Dimension(format!("ξ_g must lie in ℂ^{r} and U_g be {r}×{r}")));
    }
    let identity = (0..n)
        .find(|&e| (0..n).all(|g| table[e][g] == g && table[g][e] == g))
        .ok_or_else(|| Error::InvalidTable("table has no identity".into()))?;
    let inverse: Vec<usize> = (0..n)
        .map(|g| (0..n).find(|&h| table[g][h] == identity).ok_or_else(|| Error::InvalidTable(format!("element {g} has no inverse"))))
        .collect::<Result<_>>()?;

    let mut report = Report::new();
    let unitary = u
        .iter()
        .map(|m| linalg::max_abs(&(m.adjoint() * m - linalg::eye(r))))
        .fold(0.0, f64::max);
    report.record("u_unitary", unitary, tol);
    let mut rep = 0.0_f64;
    let mut cocycle = 0.0_f64;
    let mut phase = 0.0_f64;
    for g in 0..n {
        for h in 0..n {
            let gh = table[g][h];
            rep = rep.max(linalg::max_abs(&(&u[g] * &u[h] - &u[gh])));
            cocycle = cocycle.max(linalg::max_abs_vec(&(&xi[g] + &u[g] * &xi[h] - &xi[gh])));
            let expected = lambda[g] + lambda[h] - linalg::inner(&xi[g], &(&u[g] * &xi[h])).im;
            phase = phase.max((lambda[gh] - expected).abs());
        }
    }
    report.record("u_representation", rep, tol);
    report.record("xi_cocycle", cocycle, tol);
    report.record("lambda_condition", phase, tol);

    let psi: Vec<HatOperator> = (0..n)
        .map(|g| HatOperator {
            mat: weyl_matrix(lambda[g], &xi[g], &u[g]),
        })
        .collect();
    let mut drug = 0.0_f64;
    let mut reality = 0.0_f64;
    for g in 0..n {
        for h in 0..n {
            drug = drug.max(diamond(&psi[g], &psi[h])?.max_diff(&psi[table[g][h]]));
        }
        reality = reality.max(psi[g].adjoint().max_diff(&psi[inverse[g]]));
    }
    report.record("composition", drug, tol);
    report.record("reality", reality, tol);
    report.record("identity_zero", linalg::max_abs(&psi[identity].mat), tol);

    let phi = MatrixValuedMap::new(psi.iter().map(|p| p.mat.clone()).collect())?;
    let structure = schurmann::check_structure_relation(&algebra, &phi, tol)?;
    for key in ["structure_relation", "reality"] {
        if let Some(c) = structure.get(key) {
            report.record(format!("structure.{key}"), c.residual, tol);
        }
    }
    Ok(GroupCocycleGenerator {
        algebra,
        psi,
        phi,
        report,
    })
}

/// Homomorphic dilation of a CPC generator.
#[derive(Debug, Clone)]
pub struct DilationResult {
    /// Noise dimension of the original generator.
    pub k0_dim: usize,
    /// `n_k + K + 1`.
    pub noise_dim: usize,
    /// The enlarged tuple `(ρ, D̃, ξ, d̃, d̃, t)`.
    pub tuple: CPCTuple,
    pub psi: MatrixValuedMap,
    /// `homprecise_i` … `homprecise_v` and `compression`.
    pub report: Report,
}

/// `P₀ψ(·)P₀` restricted to the hat of the first `k0_dim` noise coordinates.
pub fn compress(psi: &MatrixValuedMap, k0_dim: usize) -> Result<MatrixValuedMap> {
    let n = psi.target_dim() - 1;
    if k0_dim > n {
        return Err(Error::Dimension(format!("cannot compress noise dimension {n} to {k0_dim}")));
    }
    let keep: Vec<usize> = (0..=k0_dim).collect();
    Ok(psi.compress_to(&keep))
}

fn precondition_from(report: &Report, what: &str) -> Error {
    let names: Vec<String> = report.failures().map(|c| format!("{} ({:e})", c.name, c.residual)).collect();
    Error::Precondition(format!("{what}: {}", names.join(", ")))
}

/// Enlarges the noise to `𝗄₀ ⊕ K ⊕ ℂ` with `D̃ = [D, (I − DD†)^{1/2}, 0]`
/// and `d̃ = (d, −De, √(−(t + ‖e‖²)))`; then `D̃` is a coisometry, `D̃d̃ = 0`
/// and `‖d̃‖² = −t`.
pub fn dilate_cpc(a: &FiniteStarBialgebra, tuple: &CPCTuple, tol: f64) -> Result<DilationResult> {
    let input = tuple.check(a, tol);
    if !input.passed() {
        return Err(precondition_from(&input, "CPC tuple invariants fail"));
    }
    let n = tuple.noise_dim();
    let k = tuple.k_dim();
    let big_n = n + k + 1;
    let d = &tuple.d_mat;
    let d1 = linalg::psd_sqrt(&(linalg::eye(k) - d * d.adjoint()), 1e-12)
        .map_err(|low| Error::Precondition(format!("I − DD† has eigenvalue {low:e}")))?;
    let mut d_tilde = CMat::zeros(k, big_n);
    d_tilde.view_mut((0, 0), (k, n)).copy_from(d);
    d_tilde.view_mut((0, n), (k, k)).copy_from(&d1);
    let slack = (-(tuple.t + tuple.e_vec.norm_squared())).max(0.0);
    let mut dv = CVec::zeros(big_n);
    dv.rows_mut(0, n).copy_from(&tuple.d_vec);
    dv.rows_mut(n, k).copy_from(&(-(d * &tuple.e_vec)));
    dv[big_n - 1] = re(slack.sqrt());
    let enlarged = CPCTuple::new(tuple.rho.clone(), d_tilde.clone(), tuple.xi.clone(), dv.clone(), dv.clone(), tuple.t)?;
    let psi = enlarged.to_generator(a)?;

    let mut report = Report::new();
    let dd = &d_tilde * d_tilde.adjoint();
    report.record("homprecise_i", linalg::max_abs(&(&dd * &d_tilde - &d_tilde)), tol);
    report.record("homprecise_ii", linalg::max_abs_vec(&(&d_tilde * &dv)), tol);
    let commutator = tuple
        .rho
        .iter()
        .map(|r| linalg::max_abs(&(&dd * r - r * &dd)))
        .fold(0.0, f64::max);
    report.record("homprecise_iii", commutator, tol);
    report.record("homprecise_iv", (tuple.t + dv.norm_squared()).abs(), tol);
    let defect = (0..a.dim())
        .map(|i| {
            let delta = tuple.delta_of(a, &a.basis(i).coords);
            linalg::max_abs_vec(&(&dd * &delta - &delta))
        })
        .fold(0.0, f64::max);
    report.record("homprecise_v", defect, tol);
    let original = tuple.to_generator(a)?;
    report.record("compression", compress(&psi, n)?.max_diff(&original), tol);
    if !report.passed() {
        return Err(Error::Verification(format!("dilation conditions fail: {:?}", report.failures().map(|c| &c.name).collect::<Vec<_>>())));
    }
    Ok(DilationResult {
        k0_dim: n,
        noise_dim: big_n,
        tuple: enlarged,
        psi,
        report,
    })
}

/// Generators of the Stinespring-type decomposition on `𝗄 = 𝗄₀ ⊕ K`.
#[derive(Debug, Clone)]
pub struct StinespringResult {
    /// `θ(a) = [[λ(a) − tε(a), 0, δ(a*)†],[0, −ε(a)I, 0],[δ(a), 0, ρ(a) − ε(a)I]]`.
    pub theta: MatrixValuedMap,
    /// `τ = [[t/2, ⟨d|, 0],[0, −I, B],[0, D, −I]]`.
    pub tau: CMat,
    /// `τ + τ† + τ†Δτ`.
    pub contraction: CMat,
    /// `ε(τ + τ† + τ†Δτ) + (I + τ†Δ)θ(I + Δτ)`.
    pub psi: MatrixValuedMap,
    pub report: Report,
}

/// Builds `θ` and `τ` for a CPC tuple and a contraction `B: K → 𝗄₀`, then checks
/// `τ + τ† + τ†Δτ = [[t, ⟨d|, 0],[|d⟩, D†D − I, 0],[0, 0, B†B − I]] ≤ 0`, the
/// structure relation for `θ`, and `ψ = diag(φ, −εI)`.
pub fn stinespring_generators(a: &FiniteStarBialgebra, tuple: &CPCTuple, b: &CMat, tol: f64) -> Result<StinespringResult> {
    let n = tuple.noise_dim();
    let k = tuple.k_dim();
    if b.shape() != (n, k) {
        return Err(Error::Dimension(format!("B must be {n}×{k}")));
    }
    let b_norm = linalg::op_norm(b);
    if b_norm > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!("B is not a contraction (norm {b_norm})")));
    }
    let input = tuple.check(a, tol);
    if !input.passed() {
        return Err(precondition_from(&input, "CPC tuple invariants fail"));
    }
    let h = 1 + n + k;
    let d = &tuple.d_mat;

    let mut tau = CMat::zeros(h, h);
    tau[(0, 0)] = re(tuple.t / 2.0);
    for p in 0..n {
        tau[(0, 1 + p)] = tuple.d_vec[p].conj();
        tau[(1 + p, 1 + p)] = re(-1.0);
    }
    for q in 0..k {
        tau[(1 + n + q, 1 + n + q)] = re(-1.0);
    }
    tau.view_mut((1, 1 + n), (n, k)).copy_from(b);
    tau.view_mut((1 + n, 1), (k, n)).copy_from(d);
    let delta_qs = linalg::delta_qs(n + k);
    let contraction = &tau + tau.adjoint() + tau.adjoint() * &delta_qs * &tau;

    let mut expected = CMat::zeros(h, h);
    expected[(0, 0)] = re(tuple.t);
    for p in 0..n {
        expected[(0, 1 + p)] = tuple.d_vec[p].conj();
        expected[(1 + p, 0)] = tuple.d_vec[p];
    }
    expected.view_mut((1, 1), (n, n)).copy_from(&(d.adjoint() * d - linalg::eye(n)));
    expected.view_mut((1 + n, 1 + n), (k, k)).copy_from(&(b.adjoint() * b - linalg::eye(k)));

    let xi_sq = tuple.xi.norm_squared();
    let theta_mats: Vec<CMat> = (0..a.dim())
        .map(|i| {
            let x = a.basis(i).coords;
            let eps = a.counit()[i];
            let delta = tuple.delta_of(a, &x);
            let delta_star = tuple.delta_of(a, &a.star(&a.basis(i)).coords);
            let mut m = CMat::zeros(h, h);
            // λ − tε = ⟨ξ, ρξ⟩ − ε‖ξ‖²
            m[(0, 0)] = linalg::inner(&tuple.xi, &(&tuple.rho[i] * &tuple.xi)) - eps * xi_sq;
            for p in 0..n {
                m[(1 + p, 1 + p)] = -eps;
            }
            for q in 0..k {
                m[(0, 1 + n + q)] = delta_star[q].conj();
                m[(1 + n + q, 0)] = delta[q];
            }
            m.view_mut((1 + n, 1 + n), (k, k))
                .copy_from(&(&tuple.rho[i] - linalg::eye(k) * eps));
            m
        })
        .collect();
    let theta = MatrixValuedMap::new(theta_mats)?;

    let left = linalg::eye(h) + tau.adjoint() * &delta_qs;
    let right = linalg::eye(h) + &delta_qs * &tau;
    let psi = MatrixValuedMap::new(
        theta
            .mats()
            .iter()
            .zip(a.counit().iter())
            .map(|(th, &eps)| &contraction * eps + &left * th * &right)
            .collect(),
    )?;
    let phi = tuple.to_generator(a)?;
    let target = MatrixValuedMap::new(
        phi.mats()
            .iter()
            .zip(a.counit().iter())
            .map(|(p, &eps)| {
                let mut m = CMat::zeros(h, h);
                m.view_mut((0, 0), (n + 1, n + 1)).copy_from(p);
                for q in 0..k {
                    m[(1 + n + q, 1 + n + q)] = -eps;
                }
                m
            })
            .collect(),
    )?;

    let mut report = Report::new();
    report.record("contraction_block", linalg::max_abs(&(&contraction - &expected)), tol);
    let top = linalg::max_eigenvalue(&linalg::hermitian_part(&contraction));
    report.record("contraction_nonpositive", top.max(0.0), 1e-9 * (linalg::op_norm(&contraction) + 1.0));
    let structure = schurmann::check_structure_relation(a, &theta, tol)?;
    for key in ["structure_relation", "reality"] {
        if let Some(c) = structure.get(key) {
            report.record(format!("theta.{key}"), c.residual, tol);
        }
    }
    report.record("generator_identity", psi.max_diff(&target), tol);
    Ok(StinespringResult {
        theta,
        tau,
        contraction,
        psi,
        report,
    })
}
