//! Finite-dimensional *-bialgebras given by structure constants.
//!
//! A bialgebra of dimension `d` is stored densely: the multiplication tensor
//! `m[i][j][k]` (`e_i e_j = Σ_k m[i][j][k] e_k`), the coproduct tensor
//! `c[i][j][k]` (`Δ(e_i) = Σ_{j,k} c[i][j][k] e_j ⊗ e_k`), unit and counit
//! coordinates, the involution as the matrix of the conjugate-linear map
//! `x ↦ S_inv · conj(x)`, and an optional antipode matrix.
//!
//! The builders cover function algebras of finite monoids, group algebras of
//! finite groups, opposite coalgebras and fixed-point (Delsarte) hyperbialgebras.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, re, CMat, CVec, C64};
use crate::report::{AxiomReport, Report};

/// Default tolerance for algebraic identities.
pub const DEFAULT_TOL_EXACT: f64 = 1e-10;

/// Largest dense tensor (in complex entries) any single operation may build.
pub const MEMORY_CAP: usize = 100_000_000;

pub(crate) fn check_cap(entries: usize) -> Result<()> {
    if entries > MEMORY_CAP {
        Err(Error::MemoryCap {
            entries,
            cap: MEMORY_CAP,
        })
    } else {
        Ok(())
    }
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base).ok_or(Error::MemoryCap {
            entries: usize::MAX,
            cap: MEMORY_CAP,
        })?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub coproduct_is_homomorphic: bool,
    pub is_hopf: bool,
    /// Coproduct unital and completely positive but possibly not multiplicative.
    pub is_hyper: bool,
}

/// An element of a bialgebra, as coordinates in its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub coords: CVec,
}

impl Element {
    pub fn new(coords: CVec) -> Self {
        Self { coords }
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut coords = CVec::zeros(dim);
        coords[i] = re(1.0);
        Self { coords }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            coords: CVec::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&self, z: C64) -> Self {
        Self::new(&self.coords * z)
    }

    pub fn add(&self, other: &Element) -> Self {
        Self::new(&self.coords + &other.coords)
    }

    pub fn sub(&self, other: &Element) -> Self {
        Self::new(&self.coords - &other.coords)
    }
}

/// A dense rank-`order` tensor over `ℂ^dim`, first leg most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub order: usize,
    pub dim: usize,
    pub data: Vec<C64>,
}

impl Tensor {
    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        if self.order != other.order || self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).norm()))
    }

    /// Outer product `self ⊗ other`.
    pub fn outer(&self, other: &Tensor) -> Tensor {
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for x in &self.data {
            for y in &other.data {
                data.push(x * y);
            }
        }
        Tensor {
            order: self.order + other.order,
            dim: self.dim,
            data,
        }
    }
}

/// Plain data of a bialgebra; the serialisable and mutable counterpart of
/// [`FiniteStarBialgebra`].
#[derive(Debug, Clone, PartialEq)]
pub struct BialgebraParts {
    pub name: String,
    pub labels: Vec<String>,
    pub mult: Vec<C64>,
    pub unit: CVec,
    pub coproduct: Vec<C64>,
    pub counit: CVec,
    pub involution: CMat,
    pub antipode: Option<CMat>,
    pub flags: Flags,
}

impl BialgebraParts {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        let d = self.dim();
        (i * d + j) * d + k
    }

    pub fn mult_mut(&mut self, i: usize, j: usize, k: usize) -> &mut C64 {
        let p = self.idx(i, j, k);
        &mut self.mult[p]
    }

    pub fn coproduct_mut(&mut self, i: usize, j: usize, k: usize) -> &mut C64 {
        let p = self.idx(i, j, k);
        &mut self.coproduct[p]
    }
}

/// A finite-dimensional *-bialgebra (or hyperbialgebra) given by structure
/// constants. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteStarBialgebra {
    name: String,
    labels: Vec<String>,
    dim: usize,
    mult: Vec<C64>,
    unit: CVec,
    coproduct: Vec<C64>,
    counit: CVec,
    involution: CMat,
    antipode: Option<CMat>,
    flags: Flags,
}

impl FiniteStarBialgebra {
    /// Assembles a bialgebra after shape and finiteness checks. Axioms are
    /// not checked here; see [`validate`].
    pub fn from_parts(parts: BialgebraParts) -> Result<Self> {
        let d = parts.labels.len();
        if d == 0 {
            return Err(Error::Dimension("bialgebra dimension must be positive".into()));
        }
        let d3 = d * d * d;
        if parts.mult.len() != d3 {
            return Err(Error::Dimension(format!("mult has {} entries, expected {d3}", parts.mult.len())));
        }
        if parts.coproduct.len() != d3 {
            return Err(Error::Dimension(format!(
                "coproduct has {} entries, expected {d3}",
                parts.coproduct.len()
            )));
        }
        if parts.unit.len() != d || parts.counit.len() != d {
            return Err(Error::Dimension("unit and counit must have length dim".into()));
        }
        if parts.involution.shape() != (d, d) {
            return Err(Error::Dimension("involution must be dim×dim".into()));
        }
        if let Some(s) = &parts.antipode {
            if s.shape() != (d, d) {
                return Err(Error::Dimension("antipode must be dim×dim".into()));
            }
        }
        let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
        let all_finite = parts.mult.iter().all(finite)
            && parts.coproduct.iter().all(finite)
            && parts.unit.iter().all(finite)
            && parts.counit.iter().all(finite)
            && parts.involution.iter().all(finite)
            && parts.antipode.as_ref().is_none_or(|s| s.iter().all(finite));
        if !all_finite {
            return Err(Error::Schema("structure constants must be finite".into()));
        }
        Ok(Self {
            name: parts.name,
            dim: d,
            labels: parts.labels,
            mult: parts.mult,
            unit: parts.unit,
            coproduct: parts.coproduct,
            counit: parts.counit,
            involution: parts.involution,
            antipode: parts.antipode,
            flags: parts.flags,
        })
    }

    pub fn to_parts(&self) -> BialgebraParts {
        BialgebraParts {
            name: self.name.clone(),
            labels: self.labels.clone(),
            mult: self.mult.clone(),
            unit: self.unit.clone(),
            coproduct: self.coproduct.clone(),
            counit: self.counit.clone(),
            involution: self.involution.clone(),
            antipode: self.antipode.clone(),
            flags: self.flags,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn flags(&self) -> Flags {
        self.flags
    }

    pub fn antipode(&self) -> Option<&CMat> {
        self.antipode.as_ref()
    }

    pub fn involution(&self) -> &CMat {
        &self.involution
    }

    pub fn counit(&self) -> &CVec {
        &self.counit
    }

    pub fn unit(&self) -> Element {
        Element::new(self.unit.clone())
    }

    pub fn basis(&self, i: usize) -> Element {
        Element::basis(self.dim, i)
    }

    #[inline]
    pub fn mult_coeff(&self, i: usize, j: usize, k: usize) -> C64 {
        self.mult[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn coproduct_coeff(&self, i: usize, j: usize, k: usize) -> C64 {
        self.coproduct[(i * self.dim + j) * self.dim + k]
    }

    fn check_element(&self, x: &Element) -> Result<()> {
        if x.dim() != self.dim {
            Err(Error::Dimension(format!(
                "element has {} coordinates, algebra dimension is {}",
                x.dim(),
                self.dim
            )))
        } else {
            Ok(())
        }
    }

    /// `Σ_{i,j} x_i y_j m[i][j][·]`.
    pub fn multiply(&self, x: &Element, y: &Element) -> Result<Element> {
        self.check_element(x)?;
        self.check_element(y)?;
        Ok(self.multiply_unchecked(&x.coords, &y.coords))
    }

    pub(crate) fn multiply_unchecked(&self, x: &CVec, y: &CVec) -> Element {
        let d = self.dim;
        let mut out = CVec::zeros(d);
        for i in 0..d {
            if x[i] == C64::default() {
                continue;
            }
            for j in 0..d {
                let w = x[i] * y[j];
                if w == C64::default() {
                    continue;
                }
                for k in 0..d {
                    out[k] += w * self.mult_coeff(i, j, k);
                }
            }
        }
        Element::new(out)
    }

    /// Product of two basis elements.
    pub fn basis_product(&self, i: usize, j: usize) -> Element {
        let d = self.dim;
        Element::new(CVec::from_iterator(d, (0..d).map(|k| self.mult_coeff(i, j, k))))
    }

    /// `x* = S_inv · conj(x)`.
    pub fn star(&self, x: &Element) -> Element {
        Element::new(&self.involution * x.coords.map(|z| z.conj()))
    }

    pub fn counit_of(&self, x: &Element) -> C64 {
        linalg::inner(&self.counit.map(|z| z.conj()), &x.coords)
    }

    /// `Δ(x)` as the `d×d` matrix of coefficients of `e_j ⊗ e_k`.
    pub fn coproduct_of(&self, x: &Element) -> CMat {
        let d = self.dim;
        let mut out = CMat::zeros(d, d);
        for i in 0..d {
            let xi = x.coords[i];
            if xi == C64::default() {
                continue;
            }
            for j in 0..d {
                for k in 0..d {
                    out[(j, k)] += xi * self.coproduct_coeff(i, j, k);
                }
            }
        }
        out
    }

    /// Matrix of `Δ: A → A⊗A`, rows indexed by `j·d + k`.
    pub fn coproduct_matrix(&self) -> CMat {
        let d = self.dim;
        CMat::from_fn(d * d, d, |row, i| self.coproduct_coeff(i, row / d, row % d))
    }

    /// Matrix of left multiplication by `x`.
    pub fn left_mult_matrix(&self, x: &Element) -> CMat {
        let d = self.dim;
        CMat::from_fn(d, d, |k, j| {
            (0..d).map(|i| x.coords[i] * self.mult_coeff(i, j, k)).sum()
        })
    }

    /// Iterated coproduct `Δ_n(x)` as a rank-`(n+1)` tensor; `Δ_0 = id` and
    /// `Δ_n = (id^{⊗(n−1)} ⊗ Δ) ∘ Δ_{n−1}`.
    pub fn iterated_coproduct(&self, x: &Element, n: usize) -> Result<Tensor> {
        self.check_element(x)?;
        let d = self.dim;
        check_cap(checked_pow(d, n + 1)?)?;
        let mut data: Vec<C64> = x.coords.iter().copied().collect();
        for _ in 0..n {
            let mut next = vec![C64::default(); data.len() * d];
            for (flat, &w) in data.iter().enumerate() {
                if w == C64::default() {
                    continue;
                }
                let (head, last) = (flat / d, flat % d);
                let base = head * d * d;
                for j in 0..d {
                    for k in 0..d {
                        let c = self.coproduct_coeff(last, j, k);
                        if c != C64::default() {
                            next[base + j * d + k] += w * c;
                        }
                    }
                }
            }
            data = next;
        }
        Ok(Tensor {
            order: n + 1,
            dim: d,
            data,
        })
    }

    /// The same algebra with coproduct `τ ∘ Δ`.
    pub fn opposite(&self) -> Self {
        let d = self.dim;
        let mut coproduct = vec![C64::default(); d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    coproduct[(i * d + j) * d + k] = self.coproduct_coeff(i, k, j);
                }
            }
        }
        let name = match self.name.strip_suffix("^opp") {
            Some(base) => base.to_string(),
            None => format!("{}^opp", self.name),
        };
        // The antipode of the opposite coalgebra is the inverse antipode; keep it only when S² = id.
        let antipode = self.antipode.as_ref().and_then(|s| {
            let s2 = s * s;
            (linalg::max_abs(&(s2 - linalg::eye(d))) <= DEFAULT_TOL_EXACT).then(|| s.clone())
        });
        Self {
            name,
            coproduct,
            flags: Flags {
                is_hopf: antipode.is_some(),
                ..self.flags
            },
            antipode,
            ..self.clone()
        }
    }

    pub fn cocommutativity_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    worst = worst.max((self.coproduct_coeff(i, j, k) - self.coproduct_coeff(i, k, j)).norm());
                }
            }
        }
        worst
    }

    pub fn is_cocommutative(&self, tol: f64) -> bool {
        self.cocommutativity_defect() <= tol
    }

    /// Largest entrywise difference of all structure tensors.
    pub fn max_structure_difference(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        let tensors = |a: &[C64], b: &[C64]| a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()));
        tensors(&self.mult, &other.mult)
            .max(tensors(&self.coproduct, &other.coproduct))
            .max(linalg::max_abs_vec(&(&self.unit - &other.unit)))
            .max(linalg::max_abs_vec(&(&self.counit - &other.counit)))
            .max(linalg::max_abs(&(&self.involution - &other.involution)))
    }
}

/// Residual of `(Δ_i ⊗ Δ_j) ∘ Δ = Δ_{i+j+1}` over all basis elements.
pub fn com_identity_residual(a: &FiniteStarBialgebra, i: usize, j: usize) -> Result<f64> {
    let d = a.dim();
    let mut worst = 0.0_f64;
    for b in 0..d {
        let x = a.basis(b);
        let target = a.iterated_coproduct(&x, i + j + 1)?;
        let mut acc = vec![C64::default(); target.data.len()];
        let delta = a.coproduct_of(&x);
        for p in 0..d {
            for q in 0..d {
                let w = delta[(p, q)];
                if w == C64::default() {
                    continue;
                }
                let left = a.iterated_coproduct(&a.basis(p), i)?;
                let right = a.iterated_coproduct(&a.basis(q), j)?;
                let prod = left.outer(&right);
                for (slot, v) in acc.iter_mut().zip(&prod.data) {
                    *slot += w * v;
                }
            }
        }
        let lhs = Tensor {
            order: target.order,
            dim: d,
            data: acc,
        };
        worst = worst.max(lhs.max_abs_diff(&target));
    }
    Ok(worst)
}

/// Checks every bialgebra axiom and reports per-axiom residuals.
///
/// Multiplicativity of the coproduct is checked only when the
/// `coproduct_is_homomorphic` flag is set; hyperbialgebras are exempt.
pub fn validate(a: &FiniteStarBialgebra, tol: f64) -> AxiomReport {
    let d = a.dim();
    let mut report = Report::new();
    let cm = a.coproduct_matrix();

    // coassociativity
    let mut coassoc = 0.0_f64;
    for i in 0..d {
        let x = a.basis(i);
        let delta = a.coproduct_of(&x);
        let mut left = vec![C64::default(); d * d * d];
        let mut right = vec![C64::default(); d * d * d];
        for p in 0..d {
            for q in 0..d {
                let w = delta[(p, q)];
                if w == C64::default() {
                    continue;
                }
                for r in 0..d {
                    for s in 0..d {
                        // (Δ⊗id): expand p
                        left[(r * d + s) * d + q] += w * a.coproduct_coeff(p, r, s);
                        // (id⊗Δ): expand q
                        right[(p * d + r) * d + s] += w * a.coproduct_coeff(q, r, s);
                    }
                }
            }
        }
        for (l, r) in left.iter().zip(&right) {
            coassoc = coassoc.max((l - r).norm());
        }
    }
    report.record("coassociativity", coassoc, tol);

    // counit property
    let mut counit_left = 0.0_f64;
    let mut counit_right = 0.0_f64;
    for i in 0..d {
        let delta = a.coproduct_of(&a.basis(i));
        let eps = a.counit();
        for k in 0..d {
            let l: C64 = (0..d).map(|j| eps[j] * delta[(j, k)]).sum();
            let r: C64 = (0..d).map(|j| delta[(k, j)] * eps[j]).sum();
            let target = if i == k { re(1.0) } else { re(0.0) };
            counit_left = counit_left.max((l - target).norm());
            counit_right = counit_right.max((r - target).norm());
        }
    }
    report.record("counit_left", counit_left, tol);
    report.record("counit_right", counit_right, tol);

    // associativity and unit
    let mut assoc = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            let ij = a.basis_product(i, j);
            for k in 0..d {
                let lhs = a.multiply_unchecked(&ij.coords, &a.basis(k).coords);
                let jk = a.basis_product(j, k);
                let rhs = a.multiply_unchecked(&a.basis(i).coords, &jk.coords);
                assoc = assoc.max(linalg::max_abs_vec(&(lhs.coords - rhs.coords)));
            }
        }
    }
    report.record("associativity", assoc, tol);
    let unit = a.unit();
    let mut unit_left = 0.0_f64;
    let mut unit_right = 0.0_f64;
    for i in 0..d {
        let e = a.basis(i);
        unit_left = unit_left.max(linalg::max_abs_vec(&(a.multiply_unchecked(&unit.coords, &e.coords).coords - &e.coords)));
        unit_right = unit_right.max(linalg::max_abs_vec(&(a.multiply_unchecked(&e.coords, &unit.coords).coords - &e.coords)));
    }
    report.record("unit_left", unit_left, tol);
    report.record("unit_right", unit_right, tol);

    // counit multiplicative, ε(1) = 1
    let mut eps_mult = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            let lhs = a.counit_of(&a.basis_product(i, j));
            eps_mult = eps_mult.max((lhs - a.counit()[i] * a.counit()[j]).norm());
        }
    }
    report.record("counit_multiplicative", eps_mult, tol);
    report.record("counit_unital", (a.counit_of(&unit) - re(1.0)).norm(), tol);

    // Δ(1) = 1⊗1
    let delta_one = a.coproduct_of(&unit);
    let one_one = &unit.coords * unit.coords.transpose();
    report.record("coproduct_unital", linalg::max_abs(&(delta_one - one_one)), tol);

    if a.flags().coproduct_is_homomorphic {
        let mut worst = 0.0_f64;
        for i in 0..d {
            let di = a.coproduct_of(&a.basis(i));
            for j in 0..d {
                let dj = a.coproduct_of(&a.basis(j));
                let lhs = a.coproduct_of(&a.basis_product(i, j));
                let rhs = tensor_product_in_algebra(a, &di, &dj);
                worst = worst.max(linalg::max_abs(&(lhs - rhs)));
            }
        }
        report.record("coproduct_multiplicative", worst, tol);
    }

    // involution
    let s = a.involution();
    let involutive = s * s.map(|z| z.conj()) - linalg::eye(d);
    report.record("involution_involutive", linalg::max_abs(&involutive), tol);
    let mut anti = 0.0_f64;
    let mut delta_star = 0.0_f64;
    let mut eps_star = 0.0_f64;
    for i in 0..d {
        let ei_star = a.star(&a.basis(i));
        for j in 0..d {
            let lhs = a.star(&a.basis_product(i, j));
            let ej_star = a.star(&a.basis(j));
            let rhs = a.multiply_unchecked(&ej_star.coords, &ei_star.coords);
            anti = anti.max(linalg::max_abs_vec(&(lhs.coords - rhs.coords)));
        }
        // Δ(a*) = (*⊗*)Δ(a)
        let lhs = a.coproduct_of(&ei_star);
        let delta = a.coproduct_of(&a.basis(i));
        let rhs = s * delta.map(|z| z.conj()) * s.transpose();
        delta_star = delta_star.max(linalg::max_abs(&(lhs - rhs)));
        eps_star = eps_star.max((a.counit_of(&ei_star) - a.counit()[i].conj()).norm());
    }
    report.record("involution_antimultiplicative", anti, tol);
    report.record("involution_coproduct", delta_star, tol);
    report.record("involution_counit", eps_star, tol);

    if let Some(sa) = a.antipode() {
        let (l, r) = antipode_residuals(a, sa);
        report.record("antipode_left", l, tol);
        report.record("antipode_right", r, tol);
    }
    report.record_flag("flag_hopf_matches_antipode", a.flags().is_hopf == a.antipode().is_some());
    report.record_flag(
        "flag_coproduct_kind",
        a.flags().coproduct_is_homomorphic || a.flags().is_hyper,
    );
    let _ = cm;
    report
}

/// Product in `A⊗A` of two elements given as `d×d` coefficient matrices.
pub(crate) fn tensor_product_in_algebra(a: &FiniteStarBialgebra, x: &CMat, y: &CMat) -> CMat {
    let d = a.dim();
    let mut out = CMat::zeros(d, d);
    for p in 0..d {
        for q in 0..d {
            let xpq = x[(p, q)];
            if xpq == C64::default() {
                continue;
            }
            for r in 0..d {
                for s in 0..d {
                    let w = xpq * y[(r, s)];
                    if w == C64::default() {
                        continue;
                    }
                    for u in 0..d {
                        let m1 = a.mult_coeff(p, r, u);
                        if m1 == C64::default() {
                            continue;
                        }
                        for v in 0..d {
                            out[(u, v)] += w * m1 * a.mult_coeff(q, s, v);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Residuals of `m(S⊗id)Δ(a) = ε(a)1` and `m(id⊗S)Δ(a) = ε(a)1` over the basis.
pub fn antipode_residuals(a: &FiniteStarBialgebra, s: &CMat) -> (f64, f64) {
    let d = a.dim();
    let unit = a.unit();
    let mut left = 0.0_f64;
    let mut right = 0.0_f64;
    for i in 0..d {
        let delta = a.coproduct_of(&a.basis(i));
        let target = &unit.coords * a.counit()[i];
        let mut l = CVec::zeros(d);
        let mut r = CVec::zeros(d);
        for j in 0..d {
            for k in 0..d {
                let w = delta[(j, k)];
                if w == C64::default() {
                    continue;
                }
                let sj = s.column(j).into_owned();
                let sk = s.column(k).into_owned();
                l += a.multiply_unchecked(&sj, &a.basis(k).coords).coords * w;
                r += a.multiply_unchecked(&a.basis(j).coords, &sk).coords * w;
            }
        }
        left = left.max(linalg::max_abs_vec(&(l - &target)));
        right = right.max(linalg::max_abs_vec(&(r - &target)));
    }
    (left, right)
}

/// Solves the linear system for an antipode by least squares; returns the
/// matrix only when both antipode identities hold to `tol`.
pub fn solve_antipode(a: &FiniteStarBialgebra, tol: f64) -> Option<CMat> {
    let d = a.dim();
    // unknown S[l][j] at column index l*d + j
    let rows = 2 * d * d;
    let mut sys = CMat::zeros(rows, d * d);
    let mut rhs = CMat::zeros(rows, 1);
    for i in 0..d {
        let delta = a.coproduct_of(&a.basis(i));
        for p in 0..d {
            let row_l = i * d + p;
            let row_r = d * d + i * d + p;
            rhs[(row_l, 0)] = a.counit()[i] * a.unit().coords[p];
            rhs[(row_r, 0)] = rhs[(row_l, 0)];
            for j in 0..d {
                for k in 0..d {
                    let w = delta[(j, k)];
                    if w == C64::default() {
                        continue;
                    }
                    for l in 0..d {
                        // (S e_j) e_k
                        sys[(row_l, l * d + j)] += w * a.mult_coeff(l, k, p);
                        // e_j (S e_k)
                        sys[(row_r, l * d + k)] += w * a.mult_coeff(j, l, p);
                    }
                }
            }
        }
    }
    let (x, _) = linalg::lstsq(&sys, &rhs);
    let s = CMat::from_fn(d, d, |l, j| x[(l * d + j, 0)]);
    let (l, r) = antipode_residuals(a, &s);
    (l <= tol && r <= tol).then_some(s)
}

// ---------------------------------------------------------------------------
// Builders

#[derive(Debug, Clone)]
struct TableInfo {
    n: usize,
    identity: usize,
    inverses: Option<Vec<usize>>,
}

fn analyse_table(table: &[Vec<usize>]) -> Result<TableInfo> {
    let n = table.len();
    if n == 0 {
        return Err(Error::InvalidTable("empty table".into()));
    }
    for (r, row) in table.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidTable(format!("row {r} has length {}, expected {n}", row.len())));
        }
        if let Some(&bad) = row.iter().find(|&&x| x >= n) {
            return Err(Error::InvalidTable(format!("entry {bad} in row {r} is out of range")));
        }
    }
    let identity = (0..n)
        .find(|&e| (0..n).all(|s| table[e][s] == s && table[s][e] == s))
        .ok_or_else(|| Error::InvalidTable("no two-sided identity element".into()))?;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if table[table[a][b]][c] != table[a][table[b][c]] {
                    return Err(Error::InvalidTable(format!(
                        "not associative: ({a}·{b})·{c} ≠ {a}·({b}·{c})"
                    )));
                }
            }
        }
    }
    let inverses: Option<Vec<usize>> = (0..n)
        .map(|s| (0..n).find(|&t| table[s][t] == identity && table[t][s] == identity))
        .collect();
    Ok(TableInfo { n, identity, inverses })
}

/// Function algebra `C(M)` of a finite monoid with `Δ(f)(s,t) = f(st)`.
pub fn build_function_bialgebra(table: &[Vec<usize>]) -> Result<FiniteStarBialgebra> {
    let info = analyse_table(table)?;
    let n = info.n;
    let mut mult = vec![C64::default(); n * n * n];
    let mut coproduct = vec![C64::default(); n * n * n];
    for s in 0..n {
        mult[(s * n + s) * n + s] = re(1.0);
    }
    for u in 0..n {
        for v in 0..n {
            let s = table[u][v];
            coproduct[(s * n + u) * n + v] += re(1.0);
        }
    }
    let mut counit = CVec::zeros(n);
    counit[info.identity] = re(1.0);
    let antipode = info.inverses.as_ref().map(|inv| {
        let mut s = CMat::zeros(n, n);
        for (g, &gi) in inv.iter().enumerate() {
            s[(gi, g)] = re(1.0);
        }
        s
    });
    FiniteStarBialgebra::from_parts(BialgebraParts {
        name: format!("C(M{n})"),
        labels: (0..n).map(|s| format!("d{s}")).collect(),
        mult,
        unit: CVec::from_element(n, re(1.0)),
        coproduct,
        counit,
        involution: linalg::eye(n),
        flags: Flags {
            coproduct_is_homomorphic: true,
            is_hopf: antipode.is_some(),
            is_hyper: false,
        },
        antipode,
    })
}

/// Group algebra `ℂΓ` with group-like basis `L_g`.
pub fn build_group_bialgebra(table: &[Vec<usize>]) -> Result<FiniteStarBialgebra> {
    let info = analyse_table(table)?;
    let inv = info
        .inverses
        .ok_or_else(|| Error::InvalidTable("table is not a group (missing inverses)".into()))?;
    let n = info.n;
    let mut mult = vec![C64::default(); n * n * n];
    let mut coproduct = vec![C64::default(); n * n * n];
    for g in 0..n {
        for h in 0..n {
            mult[(g * n + h) * n + table[g][h]] = re(1.0);
        }
        coproduct[(g * n + g) * n + g] = re(1.0);
    }
    let mut involution = CMat::zeros(n, n);
    for (g, &gi) in inv.iter().enumerate() {
        involution[(gi, g)] = re(1.0);
    }
    let mut unit = CVec::zeros(n);
    unit[info.identity] = re(1.0);
    FiniteStarBialgebra::from_parts(BialgebraParts {
        name: format!("CG{n}"),
        labels: (0..n).map(|g| format!("L{g}")).collect(),
        mult,
        unit,
        coproduct,
        counit: CVec::from_element(n, re(1.0)),
        antipode: Some(involution.clone()),
        involution,
        flags: Flags {
            coproduct_is_homomorphic: true,
            is_hopf: true,
            is_hyper: false,
        },
    })
}

/// Multiplication table of `ℤ_n` (addition mod n).
pub fn cyclic_table(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect()
}

/// Multiplication table of `S₃` with elements ordered as the permutations of
/// `{0,1,2}` in lexicographic order; index 0 is the identity.
pub fn s3_table() -> Vec<Vec<usize>> {
    let perms: Vec<[usize; 3]> = vec![
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
    perms
        .iter()
        .map(|a| {
            perms
                .iter()
                .map(|b| index([a[b[0]], a[b[1]], a[b[2]]]))
                .collect()
        })
        .collect()
}

/// Two-element semilattice `{e, z}` with `z² = z`.
pub fn semilattice_table() -> Vec<Vec<usize>> {
    vec![vec![0, 1], vec![1, 1]]
}

/// Fixed-point hyperbialgebra of a finite group of bialgebra automorphisms.
///
/// Returns the subalgebra (with coproduct `(P⊗P)Δ` and restricted counit)
/// together with the averaging projection `P`.
pub fn delsarte_construct(
    a: &FiniteStarBialgebra,
    action: &[CMat],
    tol: f64,
) -> Result<(FiniteStarBialgebra, CMat)> {
    let d = a.dim();
    if action.is_empty() {
        return Err(Error::Precondition("action must be non-empty".into()));
    }
    for (n, g) in action.iter().enumerate() {
        if g.shape() != (d, d) {
            return Err(Error::Dimension(format!("automorphism {n} is not {d}×{d}")));
        }
        let defect = automorphism_defect(a, g);
        if defect > tol {
            return Err(Error::Precondition(format!(
                "matrix {n} is not a bialgebra *-automorphism (defect {defect:e})"
            )));
        }
    }
    for g in action {
        for h in action {
            let gh = g * h;
            if !action.iter().any(|k| linalg::max_abs(&(k - &gh)) <= tol) {
                return Err(Error::Precondition("action is not closed under composition".into()));
            }
        }
    }
    let p = action.iter().fold(CMat::zeros(d, d), |acc, g| acc + g) * re(1.0 / action.len() as f64);
    if linalg::max_abs(&(&p - linalg::eye(d))) <= tol {
        return Ok((a.clone(), p));
    }

    let cm = a.coproduct_matrix();
    let pp = linalg::kron(&p, &p);
    let p_id = linalg::kron(&p, &linalg::eye(d));
    let id_p = linalg::kron(&linalg::eye(d), &p);
    let first = &p_id * &cm * &p;
    // the identities are required on the fixed-point subalgebra, hence the trailing P
    let second = &pp * &cm * &p;
    let third = &id_p * &cm * &p;
    let defect = linalg::max_abs(&(&first - &second)).max(linalg::max_abs(&(&second - &third)));
    if defect > tol {
        return Err(Error::Verification(format!("projection identities fail (residual {defect:e})")));
    }

    // basis of Ran P: greedy independent columns, scaled to unit max-modulus with a positive pivot
    let mut basis: Vec<CVec> = Vec::new();
    for i in 0..d {
        let col = p.column(i).into_owned();
        let mut candidate = basis.clone();
        candidate.push(col.clone());
        let m = CMat::from_columns(&candidate);
        if linalg::rank(&m, 1e-9) == candidate.len() {
            let pivot = col
                .iter()
                .enumerate()
                .fold((0, 0.0_f64), |best, (k, z)| if z.norm() > best.1 * (1.0 + 1e-12) { (k, z.norm()) } else { best })
                .0;
            let scale = col[pivot];
            basis.push(col / scale);
        }
    }
    let b = CMat::from_columns(&basis);
    let dn = basis.len();
    let b_pinv = linalg::pinv(&b, 1e-12);

    let mut mult = vec![C64::default(); dn * dn * dn];
    for i in 0..dn {
        for j in 0..dn {
            let prod = a.multiply_unchecked(&basis[i], &basis[j]);
            let coords = &b_pinv * &prod.coords;
            if linalg::max_abs_vec(&(&b * &coords - &prod.coords)) > tol {
                return Err(Error::Verification("fixed points do not form a subalgebra".into()));
            }
            for k in 0..dn {
                mult[(i * dn + j) * dn + k] = coords[k];
            }
        }
    }
    let bb_pinv = linalg::kron(&b_pinv, &b_pinv);
    let mut coproduct = vec![C64::default(); dn * dn * dn];
    for i in 0..dn {
        let image = &second * &basis[i];
        let coords = &bb_pinv * &image;
        for j in 0..dn {
            for k in 0..dn {
                coproduct[(i * dn + j) * dn + k] = coords[j * dn + k];
            }
        }
    }
    let unit = &b_pinv * &a.unit().coords;
    let counit = CVec::from_iterator(dn, basis.iter().map(|v| a.counit_of(&Element::new(v.clone()))));
    let involution = &b_pinv * a.involution() * b.map(|z| z.conj());
    let labels = (0..dn)
        .map(|k| {
            let terms: Vec<String> = (0..d)
                .filter(|&i| basis[k][i].norm() > 1e-12)
                .map(|i| a.labels()[i].clone())
                .collect();
            terms.join("+")
        })
        .collect();
    let mut sub = FiniteStarBialgebra::from_parts(BialgebraParts {
        name: format!("{}^fix", a.name()),
        labels,
        mult,
        unit,
        coproduct,
        counit,
        involution,
        antipode: None,
        flags: Flags {
            coproduct_is_homomorphic: false,
            is_hopf: false,
            is_hyper: true,
        },
    })?;
    let homomorphic = (0..dn).all(|i| {
        (0..dn).all(|j| {
            let lhs = sub.coproduct_of(&sub.basis_product(i, j));
            let rhs = tensor_product_in_algebra(&sub, &sub.coproduct_of(&sub.basis(i)), &sub.coproduct_of(&sub.basis(j)));
            linalg::max_abs(&(lhs - rhs)) <= tol
        })
    });
    sub.flags.coproduct_is_homomorphic = homomorphic;
    Ok((sub, p))
}

/// Largest defect of a matrix as a unital *-bialgebra automorphism.
pub fn automorphism_defect(a: &FiniteStarBialgebra, g: &CMat) -> f64 {
    let d = a.dim();
    let mut worst = linalg::max_abs_vec(&(g * &a.unit().coords - a.unit().coords));
    let cm = a.coproduct_matrix();
    worst = worst.max(linalg::max_abs(&(linalg::kron(g, g) * &cm - &cm * g)));
    worst = worst.max(linalg::max_abs_vec(&(g.transpose() * a.counit() - a.counit())));
    worst = worst.max(linalg::max_abs(&(g * a.involution() - a.involution() * g.map(|z| z.conj()))));
    for i in 0..d {
        for j in 0..d {
            let lhs = g * a.basis_product(i, j).coords;
            let gi = g.column(i).into_owned();
            let gj = g.column(j).into_owned();
            let rhs = a.multiply_unchecked(&gi, &gj).coords;
            worst = worst.max(linalg::max_abs_vec(&(lhs - rhs)));
        }
    }
    worst
}

/// Result of the Haar-state solve.
#[derive(Debug, Clone)]
pub struct HaarState {
    pub functional: CVec,
    pub residual: f64,
    /// Smallest eigenvalue of the Gram matrix `h(e_i* e_j)`.
    pub gram_min_eigenvalue: f64,
}

impl HaarState {
    pub fn is_positive(&self, tol: f64) -> bool {
        self.gram_min_eigenvalue >= -tol
    }
}

/// Solves `h(a₍₁₎)a₍₂₎ = a₍₁₎h(a₍₂₎) = h(a)1`, `h(1) = 1` by least squares.
/// Returns `None` when the system is infeasible to `tol`.
pub fn haar_state(a: &FiniteStarBialgebra, tol: f64) -> Option<HaarState> {
    let d = a.dim();
    let unit = a.unit().coords;
    let rows = 2 * d * d + 1;
    let mut sys = CMat::zeros(rows, d);
    let mut rhs = CMat::zeros(rows, 1);
    for i in 0..d {
        for k in 0..d {
            let r = i * d + k;
            for j in 0..d {
                // left invariance: Σ_j h_j c[i][j][k] − h_i 1_k
                sys[(r, j)] += a.coproduct_coeff(i, j, k);
                // right invariance: Σ_j c[i][k][j] h_j − h_i 1_k
                sys[(d * d + r, j)] += a.coproduct_coeff(i, k, j);
            }
            sys[(r, i)] -= unit[k];
            sys[(d * d + r, i)] -= unit[k];
        }
    }
    for i in 0..d {
        sys[(rows - 1, i)] = unit[i];
    }
    rhs[(rows - 1, 0)] = re(1.0);
    let (x, residual) = linalg::lstsq(&sys, &rhs);
    if residual > tol {
        return None;
    }
    let h = x.column(0).into_owned();
    let gram = functional_gram(a, &h);
    Some(HaarState {
        gram_min_eigenvalue: linalg::min_eigenvalue(&gram),
        functional: h,
        residual,
    })
}

/// Gram matrix `G_ij = f(e_i* e_j)` of a functional.
pub fn functional_gram(a: &FiniteStarBialgebra, f: &CVec) -> CMat {
    let d = a.dim();
    let stars: Vec<Element> = (0..d).map(|i| a.star(&a.basis(i))).collect();
    CMat::from_fn(d, d, |i, j| {
        let prod = a.multiply_unchecked(&stars[i].coords, &a.basis(j).coords);
        linalg::inner(&f.map(|z| z.conj()), &prod.coords)
    })
}

/// A faithful *-representation of `A` obtained from the left regular
/// representation in the GNS inner product of a faithful state: the Haar state
/// when it is faithful, otherwise the normalised regular trace `Tr(L_x)/d`.
/// Returns the representing matrices of the basis.
pub fn regular_representation(a: &FiniteStarBialgebra, tol: f64) -> Result<Vec<CMat>> {
    let d = a.dim();
    let trace = CVec::from_iterator(d, (0..d).map(|i| a.left_mult_matrix(&a.basis(i)).trace() / re(d as f64)));
    let faithful = |f: &CVec| {
        let eig = linalg::hermitian_eigen(&functional_gram(a, f));
        (eig.values.last().copied().unwrap_or(0.0) > tol).then_some(eig)
    };
    let eig = haar_state(a, tol)
        .and_then(|h| faithful(&h.functional))
        .or_else(|| faithful(&trace))
        .ok_or_else(|| Error::Precondition("neither the Haar state nor the regular trace is faithful".into()))?;
    // G = R† R with R = Λ^{1/2} V†
    let sqrt = CMat::from_diagonal(&CVec::from_iterator(d, eig.values.iter().map(|&l| re(l.sqrt()))));
    let inv_sqrt = CMat::from_diagonal(&CVec::from_iterator(d, eig.values.iter().map(|&l| re(1.0 / l.sqrt()))));
    let r = &sqrt * eig.vectors.adjoint();
    let r_inv = &eig.vectors * &inv_sqrt;
    // the conjugate of G's convention: ⟨x,y⟩ = h(x* y) = Σ conj(x_i) G_ij y_j
    Ok((0..d)
        .map(|i| &r * a.left_mult_matrix(&a.basis(i)) * &r_inv)
        .collect())
}

/// Checks that an `n×n` matrix of elements is a unitary corepresentation of a
/// Hopf *-algebra.
pub fn check_unitary_corepresentation(
    a: &FiniteStarBialgebra,
    v: &[Vec<Element>],
    tol: f64,
) -> Result<Report> {
    let s = a.antipode().ok_or(Error::NotHopf)?;
    let n = v.len();
    if v.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension("corepresentation matrix must be square".into()));
    }
    let d = a.dim();
    let mut coproduct = 0.0_f64;
    let mut counit = 0.0_f64;
    let mut antipode = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let x = &v[i][j];
            a.check_element(x)?;
            let lhs = a.coproduct_of(x);
            let mut rhs = CMat::zeros(d, d);
            for k in 0..n {
                rhs += &v[i][k].coords * v[k][j].coords.transpose();
            }
            coproduct = coproduct.max(linalg::max_abs(&(lhs - rhs)));
            let target = if i == j { re(1.0) } else { re(0.0) };
            counit = counit.max((a.counit_of(x) - target).norm());
            let sx = s * &x.coords;
            let vji_star = a.star(&v[j][i]).coords;
            antipode = antipode.max(linalg::max_abs_vec(&(sx - vji_star)));
        }
    }
    let mut report = Report::new();
    report.record("corep_coproduct", coproduct, tol);
    report.record("corep_counit", counit, tol);
    report.record("corep_antipode_unitarity", antipode, tol);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2_group() -> FiniteStarBialgebra {
        build_group_bialgebra(&cyclic_table(2)).unwrap()
    }

    fn z2_functions() -> FiniteStarBialgebra {
        build_function_bialgebra(&cyclic_table(2)).unwrap()
    }

    #[test]
    fn group_law_and_unit() {
        let a = z2_group();
        let l1 = a.basis(1);
        assert_eq!(a.multiply(&l1, &l1).unwrap(), a.basis(0));
        for i in 0..2 {
            assert_eq!(a.multiply(&a.unit(), &a.basis(i)).unwrap(), a.basis(i));
        }
    }

    #[test]
    fn indicator_product_vanishes() {
        let a = z2_functions();
        let p = a.multiply(&a.basis(0), &a.basis(1)).unwrap();
        assert_eq!(p, Element::zero(2));
    }

    #[test]
    fn multiply_rejects_wrong_dimension() {
        let a = z2_group();
        let bad = Element::zero(3);
        assert!(matches!(a.multiply(&bad, &a.basis(0)), Err(Error::Dimension(_))));
    }

    #[test]
    fn iterated_coproduct_examples() {
        let a = z2_group();
        let t = a.iterated_coproduct(&a.basis(1), 2).unwrap();
        // only L1⊗L1⊗L1 is non-zero
        for (idx, z) in t.data.iter().enumerate() {
            let expected = if idx == 7 { 1.0 } else { 0.0 };
            assert_eq!(z.re, expected);
        }
        let t0 = a.iterated_coproduct(&a.basis(1), 0).unwrap();
        assert_eq!(t0.data, vec![re(0.0), re(1.0)]);

        let f = z2_functions();
        let t = f.iterated_coproduct(&f.basis(1), 1).unwrap();
        // δ0⊗δ1 + δ1⊗δ0
        assert_eq!(t.data, vec![re(0.0), re(1.0), re(1.0), re(0.0)]);
    }

    #[test]
    fn iterated_coproduct_respects_memory_cap() {
        let a = build_group_bialgebra(&s3_table()).unwrap();
        assert!(matches!(
            a.iterated_coproduct(&a.basis(0), 12),
            Err(Error::MemoryCap { .. })
        ));
    }

    #[test]
    fn perturbed_coproduct_is_reported() {
        // rescaling a group-like keeps coassociativity but breaks the counit law
        let mut parts = z2_group().to_parts();
        *parts.coproduct_mut(1, 1, 1) += re(1e-3);
        let a = FiniteStarBialgebra::from_parts(parts).unwrap();
        let report = validate(&a, DEFAULT_TOL_EXACT);
        assert!(!report.passed());
        assert!(report.get("coassociativity").unwrap().passed);
        let r = report.residual("counit_left").unwrap();
        assert!((r - 1e-3).abs() < 1e-12, "residual {r}");

        let mut parts = z2_group().to_parts();
        *parts.coproduct_mut(1, 0, 1) += re(1e-3);
        let a = FiniteStarBialgebra::from_parts(parts).unwrap();
        let report = validate(&a, DEFAULT_TOL_EXACT);
        let r = report.residual("coassociativity").unwrap();
        assert!(!report.get("coassociativity").unwrap().passed);
        assert!((r - 1e-3).abs() < 1e-5, "residual {r}");
    }

    #[test]
    fn builders_validate() {
        for a in [
            z2_group(),
            z2_functions(),
            build_function_bialgebra(&cyclic_table(3)).unwrap(),
            build_group_bialgebra(&s3_table()).unwrap(),
            build_function_bialgebra(&semilattice_table()).unwrap(),
            build_group_bialgebra(&[vec![0]]).unwrap(),
        ] {
            let report = validate(&a, 1e-12);
            assert!(report.passed(), "{}: {:?}", a.name(), report.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn trivial_monoid_gives_c() {
        let a = build_function_bialgebra(&[vec![0]]).unwrap();
        assert_eq!(a.dim(), 1);
        assert_eq!(a.coproduct_of(&a.unit())[(0, 0)], re(1.0));
    }

    #[test]
    fn table_errors() {
        assert!(matches!(
            build_function_bialgebra(&[vec![1, 1], vec![1, 1]]),
            Err(Error::InvalidTable(_))
        ));
        // identity 0, but 1·(1·2) ≠ (1·1)·2 for this table
        let non_assoc = vec![vec![0, 1, 2], vec![1, 0, 0], vec![2, 1, 0]];
        assert!(matches!(build_function_bialgebra(&non_assoc), Err(Error::InvalidTable(_))));
        assert!(matches!(build_group_bialgebra(&semilattice_table()), Err(Error::InvalidTable(_))));
    }

    #[test]
    fn semilattice_has_no_antipode() {
        let a = build_function_bialgebra(&semilattice_table()).unwrap();
        assert!(a.antipode().is_none());
        assert!(solve_antipode(&a, DEFAULT_TOL_EXACT).is_none());
    }

    #[test]
    fn antipode_solve_recovers_group_inverse() {
        let a = build_function_bialgebra(&cyclic_table(3)).unwrap();
        let solved = solve_antipode(&a, DEFAULT_TOL_EXACT).unwrap();
        assert!(linalg::max_abs(&(solved - a.antipode().unwrap())) < 1e-10);
    }

    #[test]
    fn group_algebra_star_and_cocommutativity() {
        let a = z2_group();
        assert_eq!(a.star(&a.basis(1)), a.basis(1));
        let s3 = build_group_bialgebra(&s3_table()).unwrap();
        assert_eq!(s3.dim(), 6);
        assert!(s3.is_cocommutative(0.0));
        assert!(!build_function_bialgebra(&s3_table()).unwrap().is_cocommutative(1e-12));
    }

    #[test]
    fn opposite_is_an_involution() {
        let a = build_function_bialgebra(&s3_table()).unwrap();
        let opp = a.opposite();
        assert!(a.max_structure_difference(&opp) > 0.5);
        assert_eq!(opp.opposite(), a);
        let g = z2_group();
        assert_eq!(g.max_structure_difference(&g.opposite()), 0.0);
        assert!(validate(&opp, 1e-12).passed());
    }

    #[test]
    fn com_identity_small_orders() {
        let a = build_function_bialgebra(&cyclic_table(3)).unwrap();
        for i in 0..=3 {
            for j in 0..=(3 - i) {
                assert!(com_identity_residual(&a, i, j).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn haar_states() {
        let h = haar_state(&z2_group(), 1e-10).unwrap();
        assert!((h.functional[0] - re(1.0)).norm() < 1e-12 && h.functional[1].norm() < 1e-12);
        let h = haar_state(&z2_functions(), 1e-10).unwrap();
        assert!((h.functional[0] - re(0.5)).norm() < 1e-12 && (h.functional[1] - re(0.5)).norm() < 1e-12);
        assert!(h.is_positive(1e-12));
        let semi = build_function_bialgebra(&semilattice_table()).unwrap();
        let h = haar_state(&semi, 1e-10).unwrap();
        // evaluation at the absorbing element z (index 1)
        assert!(h.functional[0].norm() < 1e-12 && (h.functional[1] - re(1.0)).norm() < 1e-12);
    }

    #[test]
    fn delsarte_of_z3_under_inversion() {
        let a = build_function_bialgebra(&cyclic_table(3)).unwrap();
        let mut flip = CMat::zeros(3, 3);
        for s in 0..3 {
            flip[((3 - s) % 3, s)] = re(1.0);
        }
        let (sub, p) = delsarte_construct(&a, &[linalg::eye(3), flip], 1e-10).unwrap();
        assert_eq!(sub.dim(), 2);
        assert_eq!(sub.labels(), &["d0".to_string(), "d1+d2".to_string()]);
        assert!((p[(1, 2)] - re(0.5)).norm() < 1e-15);
        assert!(sub.flags().is_hyper);
        assert!(!sub.flags().coproduct_is_homomorphic);
        assert!(validate(&sub, 1e-12).passed());
        // counit restricted: ε(d0) = 1, ε(d1+d2) = 0
        assert_eq!(sub.counit()[0], re(1.0));
        assert_eq!(sub.counit()[1], re(0.0));
    }

    #[test]
    fn delsarte_trivial_action_returns_input() {
        let a = z2_group();
        let (sub, p) = delsarte_construct(&a, &[linalg::eye(2)], 1e-10).unwrap();
        assert_eq!(sub, a);
        assert_eq!(p, linalg::eye(2));
    }

    #[test]
    fn delsarte_rejects_non_automorphism() {
        let a = z2_functions();
        let bad = CMat::from_element(2, 2, re(0.5));
        assert!(delsarte_construct(&a, &[linalg::eye(2), bad], 1e-10).is_err());
    }

    #[test]
    fn corepresentations() {
        let a = z2_group();
        assert!(check_unitary_corepresentation(&a, &[vec![a.basis(1)]], 1e-12).unwrap().passed());
        let bad = a.basis(0).add(&a.basis(1));
        let report = check_unitary_corepresentation(&a, &[vec![bad]], 1e-12).unwrap();
        assert!(!report.get("corep_coproduct").unwrap().passed);

        let table = s3_table();
        let f = build_function_bialgebra(&table).unwrap();
        let inv: Vec<usize> = (0..6).map(|t| (0..6).find(|&u| table[t][u] == 0).unwrap()).collect();
        let v: Vec<Vec<Element>> = (0..6)
            .map(|s| (0..6).map(|t| f.basis(table[s][inv[t]])).collect())
            .collect();
        assert!(check_unitary_corepresentation(&f, &v, 1e-12).unwrap().passed());

        let semi = build_function_bialgebra(&semilattice_table()).unwrap();
        assert!(matches!(
            check_unitary_corepresentation(&semi, &[vec![semi.unit()]], 1e-12),
            Err(Error::NotHopf)
        ));
    }

    #[test]
    fn regular_representation_is_a_star_representation() {
        let a = build_group_bialgebra(&s3_table()).unwrap();
        let rep = regular_representation(&a, 1e-10).unwrap();
        for i in 0..6 {
            let star = a.star(&a.basis(i));
            let rep_star: CMat = (0..6).fold(CMat::zeros(6, 6), |acc, k| acc + &rep[k] * star.coords[k]);
            assert!(linalg::max_abs(&(rep_star - rep[i].adjoint())) < 1e-12);
            for j in 0..6 {
                let prod = a.basis_product(i, j);
                let rep_prod: CMat = (0..6).fold(CMat::zeros(6, 6), |acc, k| acc + &rep[k] * prod.coords[k]);
                assert!(linalg::max_abs(&(rep_prod - &rep[i] * &rep[j])) < 1e-12);
            }
        }
    }
}
