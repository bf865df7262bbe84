//! Random fixtures: unitaries, Euclidean elements, step functions and
//! generators that are conditionally positive or CPC by construction.

use rand::Rng;

use crate::algebra::{self, FiniteStarBialgebra};
use crate::cocycle::StepFunction;
use crate::convolution::{Functional, MatrixValuedMap};
use crate::error::Result;
use crate::linalg::{self, re, CMat, CVec, C64};
use crate::perturb::{EuclideanElement, HatOperator};

pub fn complex<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> C64 {
    C64::new(rng.gen_range(-scale..=scale), rng.gen_range(-scale..=scale))
}

pub fn vector<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> CVec {
    CVec::from_fn(n, |_, _| complex(rng, scale))
}

pub fn matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex(rng, scale))
}

/// `exp(X − X†)` for a random `X`.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, r: usize) -> CMat {
    let x = matrix(rng, r, r, 1.5);
    linalg::expm(&(&x - x.adjoint()))
}

pub fn euclidean<R: Rng + ?Sized>(rng: &mut R, r: usize) -> EuclideanElement {
    let mu = rng.gen_range(-2.0..=2.0);
    let v = vector(rng, r, 1.0);
    EuclideanElement::new(mu, v, unitary(rng, r)).expect("exp of an anti-Hermitian matrix is unitary")
}

pub fn hat_operator<R: Rng + ?Sized>(rng: &mut R, noise_dim: usize) -> HatOperator {
    HatOperator::new(matrix(rng, noise_dim + 1, noise_dim + 1, 1.0)).expect("finite entries")
}

/// A matrix of operator norm `norm`.
pub fn scaled<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, norm: f64) -> CMat {
    let m = matrix(rng, rows, cols, 1.0);
    let n = linalg::op_norm(&m);
    if n == 0.0 {
        m
    } else {
        m * re(norm / n)
    }
}

/// Piecewise constant on `pieces` intervals with breakpoints in `(0, horizon)`.
pub fn step_function<R: Rng + ?Sized>(rng: &mut R, noise_dim: usize, pieces: usize, horizon: f64, scale: f64) -> StepFunction {
    let mut cuts: Vec<f64> = (1..pieces).map(|_| rng.gen_range(0.05..0.95) * horizon).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut breakpoints = vec![0.0];
    breakpoints.extend(cuts);
    breakpoints.push(horizon);
    let values = (1..breakpoints.len()).map(|_| vector(rng, noise_dim, scale)).collect();
    StepFunction::new(breakpoints, values, noise_dim).expect("breakpoints are strictly increasing")
}

fn faithful_representation(a: &FiniteStarBialgebra) -> Result<Vec<CMat>> {
    algebra::regular_representation(a, algebra::DEFAULT_TOL_EXACT)
}

/// `γ(a) = ⟨ξ, (ρ(a) − ε(a))ξ⟩` through the left-regular representation, so `γ`
/// is real and conditionally positive.
pub fn conditionally_positive<R: Rng + ?Sized>(rng: &mut R, a: &FiniteStarBialgebra, scale: f64) -> Result<Functional> {
    let rep = faithful_representation(a)?;
    let xi = vector(rng, a.dim(), scale);
    let values: Vec<C64> = rep
        .iter()
        .zip(a.counit().iter())
        .map(|(r, &eps)| linalg::inner(&xi, &(r * &xi)) - xi.norm_squared() * eps)
        .collect();
    Ok(Functional::functional_from(&values))
}

/// `φ(a) = S†ρ(a)S − ε(a)(Δ + |e₀⟩⟨χ| + |χ⟩⟨e₀|)` with `ρ` the left-regular
/// representation, the noise block of `S` a strict contraction, and `χ₀`
/// chosen through the Schur complement so that `φ(1) ≤ 0`.
pub fn cpc_generator<R: Rng + ?Sized>(rng: &mut R, a: &FiniteStarBialgebra, noise_dim: usize, scale: f64) -> Result<MatrixValuedMap> {
    let rep = faithful_representation(a)?;
    let k = a.dim();
    let h = noise_dim + 1;
    let s0 = vector(rng, k, scale);
    let contraction = rng.gen_range(0.2..0.9);
    let sk = scaled(rng, k, noise_dim, contraction);
    let chi_k = vector(rng, noise_dim, 0.5 * scale);
    let b = sk.adjoint() * &s0 - &chi_k;
    let slack = linalg::eye(noise_dim) - sk.adjoint() * &sk;
    let inv = slack.try_inverse().expect("strict contraction");
    let schur = linalg::inner(&b, &(inv * &b)).re;
    let chi0 = 0.5 * (s0.norm_squared() + schur + rng.gen_range(0.0..0.5));
    let mut s = CMat::zeros(k, h);
    s.column_mut(0).copy_from(&s0);
    s.view_mut((0, 1), (k, noise_dim)).copy_from(&sk);
    let mut n = -linalg::delta_qs(noise_dim);
    n[(0, 0)] -= re(2.0 * chi0);
    for p in 0..noise_dim {
        n[(0, p + 1)] -= chi_k[p].conj();
        n[(p + 1, 0)] -= chi_k[p];
    }
    MatrixValuedMap::new(
        rep.iter()
            .zip(a.counit().iter())
            .map(|(r, &eps)| s.adjoint() * r * &s + &n * eps)
            .collect(),
    )
}
