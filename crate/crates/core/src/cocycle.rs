//! Matrix elements `⟨ε(f), l_t(a) ε(g)⟩` of QS convolution cocycles.
//!
//! Two independent routes: the semigroup decomposition over the merged
//! breakpoints of `f` and `g`, and the exact Guichardet sum of a matrix-sum
//! kernel over interval occupation counts. Ordering conventions: the earliest
//! interval pairs with the first Sweedler leg, the latest time occupies the
//! first tensor slot.

use crate::algebra::{check_cap, checked_pow, Element, FiniteStarBialgebra};
use crate::convolution::{self, Functional, MatrixValuedMap};
use crate::error::{Error, Result};
use crate::linalg::{self, re, CMat, CVec, C64};
use crate::report::Report;
use crate::schurmann;

/// Right-continuous step function on `ℝ₊` with values in `ℂ^{n_k}`, zero from
/// the last breakpoint on.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<CVec>,
    noise_dim: usize,
}

impl StepFunction {
    /// `breakpoints[0] = 0 < breakpoints[1] < …`, one value per interval.
    pub fn new(breakpoints: Vec<f64>, values: Vec<CVec>, noise_dim: usize) -> Result<Self> {
        match breakpoints.first() {
            Some(&0.0) => {}
            _ => return Err(Error::Schema("breakpoints must start at 0".into())),
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::Schema("breakpoints must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Schema("breakpoints not strictly increasing".into()));
        }
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::Schema(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                values.len()
            )));
        }
        if values.iter().any(|v| v.len() != noise_dim) {
            return Err(Error::Schema(format!("values must have length {noise_dim}")));
        }
        if values.iter().any(|v| v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::Schema("values must be finite".into()));
        }
        Ok(Self {
            breakpoints,
            values,
            noise_dim,
        })
    }

    pub fn zero(noise_dim: usize) -> Self {
        Self {
            breakpoints: vec![0.0],
            values: Vec::new(),
            noise_dim,
        }
    }

    /// `c` on `[0, end)`.
    pub fn constant(c: CVec, end: f64) -> Result<Self> {
        let n = c.len();
        Self::new(vec![0.0, end], vec![c], n)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[CVec] {
        &self.values
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn support_end(&self) -> f64 {
        *self.breakpoints.last().expect("at least one breakpoint")
    }

    pub fn value_at(&self, s: f64) -> CVec {
        let k = self.breakpoints.partition_point(|&b| b <= s);
        if k == 0 || k > self.values.len() {
            CVec::zeros(self.noise_dim)
        } else {
            self.values[k - 1].clone()
        }
    }

    /// Largest `‖(1, c)‖` over the values taken, including the zero tail.
    pub fn max_hat_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| (1.0 + v.norm_squared()).sqrt())
            .fold(1.0, f64::max)
    }

    /// The function `u ↦ f(t − u)` on `[0, t)`, unchanged from `t` on.
    pub fn time_reverse(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Precondition("t must be finite and nonnegative".into()));
        }
        let mut cuts: Vec<f64> = vec![0.0, t];
        for &b in &self.breakpoints {
            cuts.push(if b < t { t - b } else { b });
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.dedup();
        let values: Vec<CVec> = cuts
            .windows(2)
            .map(|w| {
                if w[0] < t {
                    // reversed pieces are left-open, so sample the midpoint
                    self.value_at(t - 0.5 * (w[0] + w[1]))
                } else {
                    self.value_at(w[0])
                }
            })
            .collect();
        Self::new(cuts, values, self.noise_dim)
    }
}

/// One piece of the common refinement of `f` and `g` on `[0, t)`.
#[derive(Debug, Clone)]
pub struct Interval {
    pub start: f64,
    pub length: f64,
    pub c: CVec,
    pub d: CVec,
}

/// Common refinement of `f` and `g` on `[0, t)`, earliest first.
pub fn merged_intervals(f: &StepFunction, g: &StepFunction, t: f64) -> Result<Vec<Interval>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Precondition("t must be finite and nonnegative".into()));
    }
    if f.noise_dim != g.noise_dim {
        return Err(Error::Dimension("f and g have different noise dimensions".into()));
    }
    let mut cuts: Vec<f64> = f
        .breakpoints
        .iter()
        .chain(g.breakpoints.iter())
        .copied()
        .filter(|&b| b < t)
        .collect();
    cuts.push(t);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    Ok(cuts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| Interval {
            start: w[0],
            length: w[1] - w[0],
            c: f.value_at(w[0]),
            d: g.value_at(w[0]),
        })
        .collect())
}

/// `⟨f_{[0,t)}, g_{[0,t)}⟩`, exact.
pub fn step_inner(f: &StepFunction, g: &StepFunction, t: f64) -> Result<C64> {
    Ok(merged_intervals(f, g, t)?
        .iter()
        .map(|iv| linalg::inner(&iv.c, &iv.d) * iv.length)
        .sum())
}

/// A generator on a bialgebra, shaped as a structure map on `ℂ ⊕ ℂ^{n_k}`.
#[derive(Debug, Clone)]
pub struct CocycleSpec {
    pub algebra: FiniteStarBialgebra,
    pub phi: MatrixValuedMap,
}

impl CocycleSpec {
    pub fn new(algebra: FiniteStarBialgebra, phi: MatrixValuedMap) -> Result<Self> {
        if phi.algebra_dim() != algebra.dim() {
            return Err(Error::Dimension(format!(
                "generator is defined on dimension {}, bialgebra has dimension {}",
                phi.algebra_dim(),
                algebra.dim()
            )));
        }
        Ok(Self { algebra, phi })
    }

    pub fn noise_dim(&self) -> usize {
        self.phi.target_dim() - 1
    }

    pub fn hat_dim(&self) -> usize {
        self.phi.target_dim()
    }
}

/// Reverses the order of the `n` tensor slots of an operator on `(ℂ^h)^{⊗n}`.
pub fn flip_slots(m: &CMat, h: usize, n: usize) -> CMat {
    let size = m.nrows();
    let rev = |mut idx: usize| {
        let mut out = 0;
        for _ in 0..n {
            out = out * h + idx % h;
            idx /= h;
        }
        out
    };
    let map: Vec<usize> = (0..size).map(rev).collect();
    CMat::from_fn(size, size, |r, c| m[(map[r], map[c])])
}

/// `υ_n(a) = φ^{⊗n}(Δ_{n−1}(a))`, `υ_0(a) = ε(a)`; `flipped` reverses the slots.
pub fn upsilon(spec: &CocycleSpec, a: &Element, n: usize, flipped: bool) -> Result<CMat> {
    let alg = &spec.algebra;
    if a.dim() != alg.dim() {
        return Err(Error::Dimension("element does not belong to the cocycle's bialgebra".into()));
    }
    if n == 0 {
        return Ok(linalg::scalar(alg.counit_of(a)));
    }
    let h = spec.hat_dim();
    let d = alg.dim();
    let size = checked_pow(h, n)?;
    check_cap(size.saturating_mul(size))?;
    let t = alg.iterated_coproduct(a, n - 1)?;
    let mut out = CMat::zeros(size, size);
    let mats = spec.phi.mats();
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
        if flipped {
            idx.reverse();
        }
        let prod = idx[1..].iter().fold(mats[idx[0]].clone(), |acc, &k| linalg::kron(&acc, &mats[k]));
        out += prod * w;
    }
    Ok(out)
}

/// `γ_{c,d}(a) = ĉ† φ(a) d̂`.
pub fn associated_generator(spec: &CocycleSpec, c: &CVec, d: &CVec) -> Result<Functional> {
    let n = spec.noise_dim();
    if c.len() != n || d.len() != n {
        return Err(Error::Dimension(format!("c and d must have length {n}")));
    }
    let (ch, dh) = (linalg::hat(c), linalg::hat(d));
    let values = CVec::from_iterator(
        spec.algebra.dim(),
        spec.phi.mats().iter().map(|m| linalg::inner(&ch, &(m * &dh))),
    );
    Ok(Functional::functional(&values))
}

fn interval_functionals(spec: &CocycleSpec, intervals: &[Interval]) -> Result<Vec<Functional>> {
    intervals
        .iter()
        .map(|iv| {
            let gamma = associated_generator(spec, &iv.c, &iv.d)?;
            convolution::exp_star_semigroup(&spec.algebra, &gamma, iv.length)
        })
        .collect()
}

fn check_step_dims(spec: &CocycleSpec, f: &StepFunction, g: &StepFunction) -> Result<()> {
    if f.noise_dim != spec.noise_dim() || g.noise_dim != spec.noise_dim() {
        return Err(Error::Dimension(format!(
            "step functions must take values in ℂ^{}",
            spec.noise_dim()
        )));
    }
    Ok(())
}

fn ordered_product(spec: &CocycleSpec, a: &Element, f: &StepFunction, g: &StepFunction, t: f64, reversed: bool) -> Result<C64> {
    check_step_dims(spec, f, g)?;
    let alg = &spec.algebra;
    if a.dim() != alg.dim() {
        return Err(Error::Dimension("element does not belong to the cocycle's bialgebra".into()));
    }
    let intervals = merged_intervals(f, g, t)?;
    let mut lambdas = interval_functionals(spec, &intervals)?;
    if reversed {
        lambdas.reverse();
    }
    let mut acc = MatrixValuedMap::counit(alg);
    for l in &lambdas {
        acc = convolution::convolve(alg, &acc, l)?;
    }
    let exponent: C64 = intervals.iter().map(|iv| linalg::inner(&iv.c, &iv.d) * iv.length).sum();
    Ok(exponent.exp() * acc.eval(a)?[(0, 0)])
}

/// `e^{⟨f,g⟩}(λ₁⋆…⋆λ_m)(a)` over the common refinement of `f`, `g` on `[0, t)`.
pub fn evaluate_semigroup_decomposition(spec: &CocycleSpec, a: &Element, f: &StepFunction, g: &StepFunction, t: f64) -> Result<C64> {
    ordered_product(spec, a, f, g, t, false)
}

/// As [`evaluate_semigroup_decomposition`] with the interval functionals in
/// reverse order, `λ_m⋆…⋆λ₁`.
pub fn evaluate_opposite(spec: &CocycleSpec, a: &Element, f: &StepFunction, g: &StepFunction, t: f64) -> Result<C64> {
    ordered_product(spec, a, f, g, t, true)
}

/// `‖F_n‖ ≤ C₁·C₂ⁿ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthCertificate {
    pub c1: f64,
    pub c2: f64,
}

/// Truncated matrix-sum kernel `(F_0, …, F_{n_max})`, `F_n` acting on
/// `(ℂ^{1+n_k})^{⊗n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSumKernel {
    noise_dim: usize,
    levels: Vec<CMat>,
    certificate: Option<GrowthCertificate>,
}

impl MatrixSumKernel {
    pub fn new(noise_dim: usize, levels: Vec<CMat>, certificate: Option<GrowthCertificate>) -> Result<Self> {
        let h = noise_dim + 1;
        if levels.is_empty() {
            return Err(Error::Dimension("a kernel needs at least level 0".into()));
        }
        for (n, m) in levels.iter().enumerate() {
            let size = checked_pow(h, n)?;
            if m.shape() != (size, size) {
                return Err(Error::Dimension(format!("level {n} must be {size}×{size}")));
            }
        }
        Ok(Self {
            noise_dim,
            levels,
            certificate,
        })
    }

    /// `E = (1, 0, 0, …)`.
    pub fn unit(noise_dim: usize, n_max: usize) -> Result<Self> {
        let h = noise_dim + 1;
        let mut levels = vec![linalg::scalar(re(1.0))];
        for n in 1..=n_max {
            let size = checked_pow(h, n)?;
            check_cap(size * size)?;
            levels.push(CMat::zeros(size, size));
        }
        Self::new(noise_dim, levels, Some(GrowthCertificate { c1: 1.0, c2: 0.0 }))
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn n_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &CMat {
        &self.levels[n]
    }

    pub fn levels(&self) -> &[CMat] {
        &self.levels
    }

    pub fn certificate(&self) -> Option<GrowthCertificate> {
        self.certificate
    }

    /// Entrywise adjoint `F† = (F_n†)`.
    pub fn adjoint(&self) -> Self {
        Self {
            noise_dim: self.noise_dim,
            levels: self.levels.iter().map(|m| m.adjoint()).collect(),
            certificate: self.certificate,
        }
    }

    /// Largest `‖F_n‖ / (C₁C₂ⁿ)` over stored levels; at most 1 when the certificate holds.
    pub fn certificate_ratio(&self) -> Option<f64> {
        let cert = self.certificate?;
        let mut worst = 0.0_f64;
        for (n, m) in self.levels.iter().enumerate() {
            let norm = linalg::op_norm(m);
            let bound = cert.c1 * cert.c2.powi(n as i32);
            let ratio = if norm <= 1e-14 * (1.0 + bound) {
                0.0
            } else if bound == 0.0 {
                f64::INFINITY
            } else {
                norm / bound
            };
            worst = worst.max(ratio);
        }
        Some(worst)
    }

    pub fn max_diff(&self, other: &Self, levels: usize) -> f64 {
        (0..=levels)
            .map(|n| match (self.levels.get(n), other.levels.get(n)) {
                (Some(x), Some(y)) if x.shape() == y.shape() => linalg::max_abs(&(x - y)),
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }
}

/// Default kernel depth for a given noise dimension.
pub fn default_levels(noise_dim: usize) -> usize {
    if noise_dim <= 2 {
        6
    } else {
        4
    }
}

/// Growth certificate of `υ(a)`: with `w_i = ‖φ(e_i)‖` and
/// `W_{ij} = Σ_k |c[i][j][k]| w_k`, `C₂ = max(‖W‖_∞, ‖w‖_∞)` and
/// `C₁ = max(|ε(a)|, ‖a‖₁‖w‖_∞/C₂)`.
pub fn upsilon_certificate(spec: &CocycleSpec, a: &Element) -> GrowthCertificate {
    let alg = &spec.algebra;
    let d = alg.dim();
    let w: Vec<f64> = spec.phi.mats().iter().map(linalg::op_norm).collect();
    let w_inf = w.iter().copied().fold(0.0, f64::max);
    let big_w_inf = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).map(|k| alg.coproduct_coeff(i, j, k).norm() * w[k]).sum::<f64>())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let c2 = big_w_inf.max(w_inf);
    let eps_a = alg.counit_of(a).norm();
    if c2 == 0.0 {
        return GrowthCertificate { c1: eps_a, c2 };
    }
    let a_l1: f64 = a.coords.iter().map(|z| z.norm()).sum();
    GrowthCertificate {
        c1: eps_a.max(a_l1 * w_inf / c2),
        c2,
    }
}

/// `F_n = υ̃_n(a)` for `n ≤ n_max`, built by the recursion
/// `υ_{n+1}(e_i) = Σ c[i][j][k] υ_n(e_j) ⊗ φ(e_k)` and a final slot flip.
pub fn kernel_from_generator(spec: &CocycleSpec, a: &Element, n_max: usize) -> Result<MatrixSumKernel> {
    let alg = &spec.algebra;
    if a.dim() != alg.dim() {
        return Err(Error::Dimension("element does not belong to the cocycle's bialgebra".into()));
    }
    let h = spec.hat_dim();
    let d = alg.dim();
    let top = checked_pow(h, n_max)?;
    check_cap(top.saturating_mul(top).saturating_mul(d + 1))?;
    let mut levels = vec![linalg::scalar(alg.counit_of(a))];
    let mut per_basis: Vec<CMat> = spec.phi.mats().to_vec();
    for n in 1..=n_max {
        if n > 1 {
            per_basis = (0..d)
                .map(|i| {
                    let size = per_basis[0].nrows() * h;
                    let mut acc = CMat::zeros(size, size);
                    for j in 0..d {
                        for k in 0..d {
                            let c = alg.coproduct_coeff(i, j, k);
                            if c != C64::default() {
                                acc += linalg::kron(&per_basis[j], &spec.phi.mats()[k]) * c;
                            }
                        }
                    }
                    acc
                })
                .collect();
        }
        let size = per_basis[0].nrows();
        let combined = a
            .coords
            .iter()
            .zip(&per_basis)
            .fold(CMat::zeros(size, size), |acc, (&x, m)| if x == C64::default() { acc } else { acc + m * x });
        levels.push(flip_slots(&combined, h, n));
    }
    MatrixSumKernel::new(spec.noise_dim(), levels, Some(upsilon_certificate(spec, a)))
}

/// Matrix `Π_{α;n}` sending `x_1⊗…⊗x_n` to `x_α ⊗ x_{αᶜ}` (both in increasing slot order).
pub fn slot_permutation(alpha: &[usize], n: usize, h: usize) -> CMat {
    let mut order: Vec<usize> = alpha.to_vec();
    order.extend((0..n).filter(|s| !alpha.contains(s)));
    let size = h.pow(n as u32);
    let mut p = CMat::zeros(size, size);
    let mut digits = vec![0usize; n];
    for src in 0..size {
        let mut rest = src;
        for slot in (0..n).rev() {
            digits[slot] = rest % h;
            rest /= h;
        }
        let dst = order.iter().fold(0, |acc, &s| acc * h + digits[s]);
        p[(dst, src)] = re(1.0);
    }
    p
}

/// `F(α;n) = Π†_{α;n}(F_{#α} ⊗ I)Π_{α;n}`.
fn embed(level: &CMat, alpha: &[usize], n: usize, h: usize) -> CMat {
    let rest = h.pow((n - alpha.len()) as u32);
    let p = slot_permutation(alpha, n, h);
    p.adjoint() * linalg::kron(level, &linalg::eye(rest)) * p
}

fn delta_on(alpha: &[usize], n: usize, h: usize) -> CMat {
    let dqs = linalg::delta_qs(h - 1);
    let id = linalg::eye(h);
    (0..n).fold(linalg::eye(1), |acc, s| linalg::kron(&acc, if alpha.contains(&s) { &dqs } else { &id }))
}

fn product_preconditions(f: &MatrixSumKernel, g: &MatrixSumKernel, n_max: usize) -> Result<()> {
    if f.noise_dim != g.noise_dim {
        return Err(Error::Dimension("kernels have different noise dimensions".into()));
    }
    if n_max > f.n_max() || n_max > g.n_max() {
        return Err(Error::Dimension(format!(
            "requested level {n_max} exceeds stored levels ({}, {})",
            f.n_max(),
            g.n_max()
        )));
    }
    Ok(())
}

fn product_certificate(f: &MatrixSumKernel, g: &MatrixSumKernel) -> Option<GrowthCertificate> {
    match (f.certificate, g.certificate) {
        (Some(a), Some(b)) => Some(GrowthCertificate {
            c1: a.c1 * b.c1,
            c2: a.c2 + b.c2 + a.c2 * b.c2,
        }),
        _ => None,
    }
}

/// Slots of level `n` split by a base-3 code into `(α₁, α₂, α₃)`.
fn partition(code: usize, n: usize) -> [Vec<usize>; 3] {
    let mut parts: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut rest = code;
    for s in 0..n {
        parts[rest % 3].push(s);
        rest /= 3;
    }
    parts
}

fn digits_of(mut index: usize, n: usize, h: usize) -> Vec<usize> {
    let mut digits = vec![0; n];
    for slot in (0..n).rev() {
        digits[slot] = index % h;
        index /= h;
    }
    digits
}

/// Positional weight of each slot inside the index of a factor acting on `slots`
/// (slot order, first slot most significant); `None` for slots it does not touch.
fn weights(slots: &[usize], n: usize, h: usize) -> Vec<Option<usize>> {
    let mut w = vec![None; n];
    let mut place = 1;
    for &s in slots.iter().rev() {
        w[s] = Some(place);
        place *= h;
    }
    w
}

/// `(F∗G)_n = Σ F(α₁∪α₂)Δ^QS[α₂]G(α₂∪α₃)` over all `3ⁿ` ordered partitions.
///
/// The intermediate multi-index equals the column on `α₁` and the row on `α₃`,
/// so each partition only sums over noise indices on `α₂`.
pub fn kernel_product(f: &MatrixSumKernel, g: &MatrixSumKernel, n_max: usize) -> Result<MatrixSumKernel> {
    product_preconditions(f, g, n_max)?;
    let h = f.noise_dim + 1;
    let mut levels = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let size = checked_pow(h, n)?;
        check_cap(size.saturating_mul(size).saturating_mul(4))?;
        let digits: Vec<Vec<usize>> = (0..size).map(|i| digits_of(i, n, h)).collect();
        let mut acc = CMat::zeros(size, size);
        for code in 0..3usize.pow(n as u32) {
            let [a1, a2, a3] = partition(code, n);
            let mut left: Vec<usize> = a1.iter().chain(&a2).copied().collect();
            let mut right: Vec<usize> = a2.iter().chain(&a3).copied().collect();
            left.sort_unstable();
            right.sort_unstable();
            let fl = &f.levels[left.len()];
            let gr = &g.levels[right.len()];
            let wf = weights(&left, n, h);
            let wg = weights(&right, n, h);
            let offset = |d: &[usize], slots: &[usize], w: &[Option<usize>]| -> usize {
                slots.iter().map(|&s| d[s] * w[s].unwrap_or(0)).sum()
            };
            // Noise assignments on α₂ as (F column offset, G row offset).
            let noise_count = checked_pow(h - 1, a2.len())?;
            let inner: Vec<(usize, usize)> = (0..noise_count)
                .map(|m| {
                    let md: Vec<usize> = digits_of(m, a2.len(), h - 1).into_iter().map(|x| x + 1).collect();
                    a2.iter().zip(&md).fold((0, 0), |(cf, rg), (&s, &x)| {
                        (cf + x * wf[s].unwrap_or(0), rg + x * wg[s].unwrap_or(0))
                    })
                })
                .collect();
            let row_f: Vec<usize> = digits.iter().map(|d| offset(d, &left, &wf)).collect();
            let row_g: Vec<usize> = digits.iter().map(|d| offset(d, &a3, &wg)).collect();
            let col_f: Vec<usize> = digits.iter().map(|d| offset(d, &a1, &wf)).collect();
            let col_g: Vec<usize> = digits.iter().map(|d| offset(d, &right, &wg)).collect();
            for c in 0..size {
                for r in 0..size {
                    let mut sum = C64::default();
                    for &(cf, rg) in &inner {
                        sum += fl[(row_f[r], col_f[c] + cf)] * gr[(row_g[r] + rg, col_g[c])];
                    }
                    acc[(r, c)] += sum;
                }
            }
        }
        levels.push(acc);
    }
    MatrixSumKernel::new(f.noise_dim, levels, product_certificate(f, g))
}

/// Same product assembled from explicit slot permutation matrices; quadratic
/// in the level size per partition and kept as a reference.
pub fn kernel_product_dense(f: &MatrixSumKernel, g: &MatrixSumKernel, n_max: usize) -> Result<MatrixSumKernel> {
    product_preconditions(f, g, n_max)?;
    let h = f.noise_dim + 1;
    let mut levels = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let size = checked_pow(h, n)?;
        check_cap(size.saturating_mul(size).saturating_mul(4))?;
        let mut acc = CMat::zeros(size, size);
        for code in 0..3usize.pow(n as u32) {
            let parts = partition(code, n);
            let mut left: Vec<usize> = parts[0].iter().chain(&parts[1]).copied().collect();
            let mut right: Vec<usize> = parts[1].iter().chain(&parts[2]).copied().collect();
            left.sort_unstable();
            right.sort_unstable();
            let fl = embed(&f.levels[left.len()], &left, n, h);
            let gr = embed(&g.levels[right.len()], &right, n, h);
            acc += fl * delta_on(&parts[1], n, h) * gr;
        }
        levels.push(acc);
    }
    MatrixSumKernel::new(f.noise_dim, levels, product_certificate(f, g))
}

/// `υ̃(e_i e_j) = υ̃(e_i) ∗ υ̃(e_j)` per level over all basis pairs, with the
/// structure relation cross-reported under `structure.`.
pub fn check_multiplicative(spec: &CocycleSpec, n_max: usize, tol: f64) -> Result<Report> {
    let alg = &spec.algebra;
    let d = alg.dim();
    let kernels: Vec<MatrixSumKernel> = (0..d)
        .map(|i| kernel_from_generator(spec, &alg.basis(i), n_max))
        .collect::<Result<_>>()?;
    let mut worst = vec![0.0_f64; n_max + 1];
    for i in 0..d {
        for j in 0..d {
            let prod = kernel_product(&kernels[i], &kernels[j], n_max)?;
            let direct = kernel_from_generator(spec, &alg.basis_product(i, j), n_max)?;
            for (n, w) in worst.iter_mut().enumerate() {
                *w = w.max(linalg::max_abs(&(direct.level(n) - prod.level(n))));
            }
        }
    }
    let mut report = Report::new();
    for (n, w) in worst.iter().enumerate() {
        report.record(format!("level_{n}"), *w, tol);
    }
    let structure = schurmann::check_structure_relation(alg, &spec.phi, tol)?;
    for key in ["structure_relation", "reality"] {
        if let Some(c) = structure.get(key) {
            report.record(format!("structure.{key}"), c.residual, tol);
        }
    }
    Ok(report)
}

/// Value and remainder bound of a truncated Guichardet sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuichardetValue {
    pub value: C64,
    pub tail_bound: f64,
}

/// Contracts the first tensor slot of `m` (on `(ℂ^h)^{⊗k}`) with `⟨x|·|y⟩`.
fn contract_first_slot(m: &CMat, x: &CVec, y: &CVec, h: usize) -> CMat {
    let sub = m.nrows() / h;
    let mut out = CMat::zeros(sub, sub);
    for p in 0..h {
        let xp = x[p].conj();
        if xp == C64::default() {
            continue;
        }
        for q in 0..h {
            let w = xp * y[q];
            if w == C64::default() {
                continue;
            }
            out += m.view((p * sub, q * sub), (sub, sub)) * w;
        }
    }
    out
}

/// Sum over non-increasing interval assignments of the remaining `k` slots.
#[allow(clippy::too_many_arguments)]
fn guichardet_level(m: &CMat, k: usize, max_interval: usize, counts: &mut Vec<usize>, weight: f64, hats: &[(CVec, CVec)], lengths: &[f64], h: usize) -> C64 {
    if k == 0 {
        return m[(0, 0)] * weight;
    }
    let mut total = C64::default();
    for j in (0..=max_interval).rev() {
        let next_weight = weight * lengths[j] / (counts[j] + 1) as f64;
        if next_weight == 0.0 {
            continue;
        }
        let reduced = contract_first_slot(m, &hats[j].0, &hats[j].1, h);
        counts[j] += 1;
        total += guichardet_level(&reduced, k - 1, j, counts, next_weight, hats, lengths, h);
        counts[j] -= 1;
    }
    total
}

/// `Σ_{n>n_max} xⁿ/n!`, summed directly.
fn exp_tail(x: f64, n_max: usize) -> f64 {
    let mut term = 1.0_f64;
    for n in 1..=n_max {
        term *= x / n as f64;
    }
    let mut sum = 0.0;
    let mut n = n_max;
    loop {
        n += 1;
        term *= x / n as f64;
        sum += term;
        if term <= sum * 1e-17 || n > n_max + 10_000 || term == 0.0 {
            break;
        }
    }
    sum
}

/// Exact piecewise-constant Guichardet evaluation of a matrix-sum kernel:
/// `e^{⟨f,g⟩} Σ_{n≤n_max} Σ_{n₁+…+n_m=n} Π ℓ_j^{n_j}/n_j! ⟨v_f, F_n v_g⟩`
/// with `v_f = ĉ_m^{⊗n_m} ⊗ … ⊗ ĉ₁^{⊗n₁}`.
pub fn evaluate_guichardet(kernel: &MatrixSumKernel, f: &StepFunction, g: &StepFunction, t: f64, n_max: usize) -> Result<GuichardetValue> {
    let cert = kernel
        .certificate
        .ok_or_else(|| Error::Precondition("kernel carries no growth certificate".into()))?;
    if f.noise_dim != kernel.noise_dim || g.noise_dim != kernel.noise_dim {
        return Err(Error::Dimension("step functions and kernel have different noise dimensions".into()));
    }
    if n_max > kernel.n_max() {
        return Err(Error::Dimension(format!(
            "requested level {n_max} exceeds stored level {}",
            kernel.n_max()
        )));
    }
    let h = kernel.noise_dim + 1;
    let intervals = merged_intervals(f, g, t)?;
    let exponent: C64 = intervals.iter().map(|iv| linalg::inner(&iv.c, &iv.d) * iv.length).sum();
    let hats: Vec<(CVec, CVec)> = intervals.iter().map(|iv| (linalg::hat(&iv.c), linalg::hat(&iv.d))).collect();
    let lengths: Vec<f64> = intervals.iter().map(|iv| iv.length).collect();
    let mut sum = kernel.levels[0][(0, 0)];
    if !intervals.is_empty() {
        let mut counts = vec![0usize; intervals.len()];
        for n in 1..=n_max {
            sum += guichardet_level(&kernel.levels[n], n, intervals.len() - 1, &mut counts, 1.0, &hats, &lengths, h);
        }
    }
    let m_f = f.max_hat_norm();
    let m_g = g.max_hat_norm();
    let x = t * cert.c2 * m_f * m_g;
    let tail_bound = exponent.exp().norm() * cert.c1 * exp_tail(x, n_max);
    Ok(GuichardetValue {
        value: exponent.exp() * sum,
        tail_bound,
    })
}

/// `⟨Λ_t(F)ε(f), Λ_t(G)ε(g)⟩ = evaluate_guichardet(F†∗G, f, g, t)`.
pub fn ito_inner_product(f_kernel: &MatrixSumKernel, g_kernel: &MatrixSumKernel, f: &StepFunction, g: &StepFunction, t: f64, n_max: usize) -> Result<GuichardetValue> {
    let product = kernel_product(&f_kernel.adjoint(), g_kernel, n_max)?;
    evaluate_guichardet(&product, f, g, t, n_max)
}

/// Smallest `n_max` whose Guichardet tail bound is below `target`, if any is ≤ `cap`.
pub fn levels_for_tail(cert: GrowthCertificate, f: &StepFunction, g: &StepFunction, t: f64, target: f64, cap: usize) -> Option<usize> {
    let exponent = step_inner(f, g, t).ok()?;
    let x = t * cert.c2 * f.max_hat_norm() * g.max_hat_norm();
    (0..=cap).find(|&n| exponent.exp().norm() * cert.c1 * exp_tail(x, n) <= target)
}
