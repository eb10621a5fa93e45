//! The Kemmer algebra in its 5-component representation.
//!
//! The generators satisfy the trilinear relation
//! `β_μ β_ρ β_ν + β_ν β_ρ β_μ = η_μρ β_ν + η_νρ β_μ` and, together with the
//! companion generators `β•_μ = ⅓(β_μ β² − β² β_μ)`, span a 25-dimensional
//! matrix algebra with basis `{I, β_μ, β•_μ, β_μ β_ν}`.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matrix::{solve_in_span, DkpMatrix};
use crate::scalar::Scalar;

/// Minkowski metric diag(1, −1, −1, −1). Its inverse has the same entries.
pub const METRIC: [i64; 4] = [1, -1, -1, -1];

pub fn metric(mu: usize, nu: usize) -> i64 {
    if mu == nu {
        METRIC[mu]
    } else {
        0
    }
}

/// Number of elements in the canonical basis.
pub const BASIS_LEN: usize = 25;

/// One element of the canonical basis, ordered
/// `I; β_0..β_3; β•_0..β•_3; β_μβ_ν` (row-major in `(μ, ν)`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisElement {
    Identity,
    Beta(usize),
    Companion(usize),
    Pair(usize, usize),
}

impl BasisElement {
    pub fn index(self) -> usize {
        match self {
            BasisElement::Identity => 0,
            BasisElement::Beta(mu) => 1 + mu,
            BasisElement::Companion(mu) => 5 + mu,
            BasisElement::Pair(mu, nu) => 9 + 4 * mu + nu,
        }
    }

    pub fn from_index(i: usize) -> Self {
        match i {
            0 => BasisElement::Identity,
            1..=4 => BasisElement::Beta(i - 1),
            5..=8 => BasisElement::Companion(i - 5),
            9..=24 => BasisElement::Pair((i - 9) / 4, (i - 9) % 4),
            _ => panic!("basis index {i} out of range"),
        }
    }

    pub fn all() -> impl Iterator<Item = BasisElement> {
        (0..BASIS_LEN).map(BasisElement::from_index)
    }

    pub fn label(self) -> String {
        match self {
            BasisElement::Identity => "I".to_string(),
            BasisElement::Beta(mu) => format!("b{mu}"),
            BasisElement::Companion(mu) => format!("bdot{mu}"),
            BasisElement::Pair(mu, nu) => format!("b{mu}b{nu}"),
        }
    }
}

/// A concrete representation with every derived element precomputed.
/// All index-carrying arrays use lower indices.
#[derive(Clone, Debug)]
pub struct KemmerRep<S> {
    pub beta: [DkpMatrix<S>; 4],
    pub eta: DkpMatrix<S>,
    pub beta_dot: [DkpMatrix<S>; 4],
    pub beta_sq: DkpMatrix<S>,
    pub zeta: DkpMatrix<S>,
}

impl<S: Scalar> KemmerRep<S> {
    /// Standard spin-0 representation on `(φ⁰, φ¹, φ², φ³, φ⁴)`:
    /// `(β^μ)_{A4} = δ^μ_A` and `(β^μ)_{4B} = η^{μB}`, lowered with the metric.
    pub fn reference() -> Self {
        let beta = std::array::from_fn(|mu| {
            let mut up = DkpMatrix::<S>::zero();
            up[(mu, 4)] = S::one();
            up[(4, mu)] = S::from_i64(METRIC[mu]);
            up.scale(&S::from_i64(METRIC[mu]))
        });
        let eta = DkpMatrix::diagonal([1, -1, -1, -1, 1]);
        Self::from_betas(beta, eta)
    }

    /// Assemble a representation from lower-index generators and the
    /// involution `η`, deriving `β•`, `β²` and `ζ`.
    pub fn from_betas(beta: [DkpMatrix<S>; 4], eta: DkpMatrix<S>) -> Self {
        let beta_sq = (0..4).fold(DkpMatrix::zero(), |acc, mu| {
            let sq = &beta[mu] * &beta[mu];
            if METRIC[mu] > 0 {
                &acc + &sq
            } else {
                &acc - &sq
            }
        });
        let third = S::ratio(1, 3);
        let beta_dot = std::array::from_fn(|mu| (&(&beta[mu] * &beta_sq) - &(&beta_sq * &beta[mu])).scale(&third));
        let zeta = &DkpMatrix::identity() - &beta_sq;
        Self {
            beta,
            eta,
            beta_dot,
            beta_sq,
            zeta,
        }
    }

    /// `β^μ = η^{μν} β_ν`.
    pub fn beta_up(&self, mu: usize) -> DkpMatrix<S> {
        self.beta[mu].scale(&S::from_i64(METRIC[mu]))
    }

    pub fn beta_dot_up(&self, mu: usize) -> DkpMatrix<S> {
        self.beta_dot[mu].scale(&S::from_i64(METRIC[mu]))
    }

    pub fn basis_matrix(&self, e: BasisElement) -> DkpMatrix<S> {
        match e {
            BasisElement::Identity => DkpMatrix::identity(),
            BasisElement::Beta(mu) => self.beta[mu].clone(),
            BasisElement::Companion(mu) => self.beta_dot[mu].clone(),
            BasisElement::Pair(mu, nu) => &self.beta[mu] * &self.beta[nu],
        }
    }

    /// Projector onto the spin-0 "scalar" slot: `−ζ/3`.
    pub fn projector(&self) -> DkpMatrix<S> {
        self.zeta.scale(&S::ratio(-1, 3))
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> KemmerRep<T> {
        KemmerRep {
            beta: std::array::from_fn(|mu| self.beta[mu].map(&f)),
            eta: self.eta.map(&f),
            beta_dot: std::array::from_fn(|mu| self.beta_dot[mu].map(&f)),
            beta_sq: self.beta_sq.map(&f),
            zeta: self.zeta.map(&f),
        }
    }
}

/// The reference representation in the requested scalar mode.
pub fn build_representation<S: Scalar>() -> KemmerRep<S> {
    KemmerRep::reference()
}

/// Linear combination over the canonical basis.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisCombination<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> BasisCombination<S> {
    pub fn zero() -> Self {
        Self {
            coeffs: vec![S::zero(); BASIS_LEN],
        }
    }

    pub fn unit(e: BasisElement) -> Self {
        let mut c = Self::zero();
        c.coeffs[e.index()] = S::one();
        c
    }

    pub fn from_coeffs(coeffs: Vec<S>) -> Result<Self> {
        if coeffs.len() != BASIS_LEN {
            return Err(Error::Shape(format!(
                "basis combination needs {BASIS_LEN} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn coeff(&self, e: BasisElement) -> &S {
        &self.coeffs[e.index()]
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_negligible(0.0))
    }

    /// `self += factor · other`
    pub fn add_scaled(&mut self, factor: &S, other: &Self) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            if !b.is_negligible(0.0) {
                *a = a.clone() + factor.clone() * b.clone();
            }
        }
    }

    pub fn add_term(&mut self, e: BasisElement, c: S) {
        let slot = &mut self.coeffs[e.index()];
        *slot = slot.clone() + c;
    }

    pub fn nonzero_terms(&self) -> impl Iterator<Item = (BasisElement, &S)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_negligible(0.0))
            .map(|(i, c)| (BasisElement::from_index(i), c))
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> BasisCombination<T> {
        BasisCombination {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.coeffs.iter().map(S::to_json).collect())
    }
}

impl<S: Scalar> Serialize for BasisCombination<S> {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.to_json().serialize(s)
    }
}

pub fn eval_basis_combination<S: Scalar>(rep: &KemmerRep<S>, c: &BasisCombination<S>) -> DkpMatrix<S> {
    c.nonzero_terms().fold(DkpMatrix::zero(), |acc, (e, coeff)| {
        &acc + &rep.basis_matrix(e).scale(coeff)
    })
}

/// The 25 basis matrices, their rank, and the coefficients expressing `β²`
/// in terms of the products `β_μ β_ν`.
#[derive(Clone, Debug)]
pub struct BasisSpan<S> {
    pub matrices: Vec<DkpMatrix<S>>,
    pub rank: usize,
    pub beta_sq_coeffs: [[S; 4]; 4],
}

pub fn enumerate_basis<S: Scalar>(rep: &KemmerRep<S>, tol: f64) -> Result<BasisSpan<S>> {
    let matrices: Vec<_> = BasisElement::all().map(|e| rep.basis_matrix(e)).collect();
    let vectors: Vec<Vec<S>> = matrices.iter().map(DkpMatrix::flatten).collect();
    let rank = crate::matrix::rank(vectors.clone(), tol);
    if rank < BASIS_LEN {
        return Err(Error::RepresentationDefect { rank });
    }
    let pairs = &vectors[9..];
    let x = solve_in_span(pairs, &rep.beta_sq.flatten(), tol).ok_or(Error::RepresentationDefect { rank })?;
    let beta_sq_coeffs = std::array::from_fn(|mu| std::array::from_fn(|nu| x[4 * mu + nu].clone()));
    Ok(BasisSpan {
        matrices,
        rank,
        beta_sq_coeffs,
    })
}

/// Result of checking one family of identities.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityRecord {
    pub family: String,
    pub checks: usize,
    pub max_residual: f64,
    pub passed: bool,
    /// Labels of the first few failing instances.
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub exact: bool,
    pub tolerance: f64,
    pub records: Vec<IdentityRecord>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.records.iter().all(|r| r.passed)
    }

    pub fn record(&self, family: &str) -> Option<&IdentityRecord> {
        self.records.iter().find(|r| r.family == family)
    }

    pub fn failed_families(&self) -> Vec<&str> {
        self.records
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.family.as_str())
            .collect()
    }
}

const MAX_LISTED_FAILURES: usize = 64;

struct FamilyCheck<'a> {
    family: &'a str,
    tol: f64,
    checks: usize,
    max_residual: f64,
    failures: Vec<String>,
    failed: bool,
}

impl<'a> FamilyCheck<'a> {
    fn new(family: &'a str, tol: f64) -> Self {
        Self {
            family,
            tol,
            checks: 0,
            max_residual: 0.0,
            failures: Vec::new(),
            failed: false,
        }
    }

    fn matrix<S: Scalar>(&mut self, label: impl FnOnce() -> String, residual: &DkpMatrix<S>) {
        self.checks += 1;
        self.max_residual = self.max_residual.max(residual.max_abs());
        if !residual.is_zero(self.tol) {
            self.fail(label);
        }
    }

    fn scalar<S: Scalar>(&mut self, label: impl FnOnce() -> String, residual: &S) {
        self.checks += 1;
        self.max_residual = self.max_residual.max(residual.modulus());
        if !residual.is_negligible(self.tol) {
            self.fail(label);
        }
    }

    fn fail(&mut self, label: impl FnOnce() -> String) {
        self.failed = true;
        if self.failures.len() < MAX_LISTED_FAILURES {
            self.failures.push(label());
        }
    }

    fn finish(self) -> IdentityRecord {
        IdentityRecord {
            family: self.family.to_string(),
            checks: self.checks,
            max_residual: self.max_residual,
            passed: !self.failed,
            failures: self.failures,
        }
    }
}

fn idx4() -> impl Iterator<Item = (usize, usize)> {
    (0..4).flat_map(|a| (0..4).map(move |b| (a, b)))
}

fn idx4_3() -> impl Iterator<Item = (usize, usize, usize)> {
    idx4().flat_map(|(a, b)| (0..4).map(move |c| (a, b, c)))
}

fn idx4_4() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    idx4().flat_map(|(a, b)| idx4().map(move |(c, d)| (a, b, c, d)))
}

/// Check every matrix identity of the 5-component algebra against `rep`.
///
/// Failures are reported in the returned records, never raised. `tol` only
/// matters in float mode.
pub fn verify_algebra_identities<S: Scalar>(rep: &KemmerRep<S>, tol: f64) -> IdentityReport {
    let b = &rep.beta;
    let bd = &rep.beta_dot;
    let id = DkpMatrix::<S>::identity();
    let eta_s = |mu: usize, nu: usize| S::from_i64(metric(mu, nu));
    let pair = |mu: usize, nu: usize| &b[mu] * &b[nu];
    let mut records = Vec::new();

    let mut f = FamilyCheck::new("defining_trilinear", tol);
    for (mu, rho, nu) in idx4_3() {
        let lhs = &(&pair(mu, rho) * &b[nu]) + &(&pair(nu, rho) * &b[mu]);
        let rhs = &b[nu].scale(&eta_s(mu, rho)) + &b[mu].scale(&eta_s(nu, rho));
        f.matrix(|| format!("({mu},{rho},{nu})"), &(&lhs - &rhs));
    }
    records.push(f.finish());

    let mut f = FamilyCheck::new("eta_relations", tol);
    let eta = &rep.eta;
    f.matrix(|| "eta - eta^T".into(), &(eta - &eta.transpose()));
    f.matrix(|| "eta - conj(eta)".into(), &(eta - &eta.map(S::conj)));
    f.matrix(|| "eta^2 - I".into(), &(&(eta * eta) - &id));
    for mu in 0..4 {
        let t = &(eta * &b[mu].transpose()) * eta;
        f.matrix(|| format!("eta b{mu}^T eta - b{mu}"), &(&t - &b[mu]));
        let t = &(eta * &bd[mu].transpose()) * eta;
        f.matrix(|| format!("eta bdot{mu}^T eta + bdot{mu}"), &(&t + &bd[mu]));
    }
    records.push(f.finish());

    let mut f = FamilyCheck::new("trace_quadratic", tol);
    for (mu, nu) in idx4() {
        let two_eta = S::from_i64(2 * metric(mu, nu));
        f.scalar(|| format!("Tr(b{mu}b{nu})"), &(pair(mu, nu).trace() - two_eta.clone()));
        f.scalar(
            || format!("Tr(bdot{mu}bdot{nu})"),
            &((&bd[mu] * &bd[nu]).trace() + two_eta),
        );
    }
    records.push(f.finish());

    let mut f = FamilyCheck::new("trace_quartic", tol);
    for (k, l, m, n) in idx4_4() {
        let tr = (&pair(k, l) * &pair(m, n)).trace();
        let expected = metric(k, l) * metric(m, n) + metric(k, n) * metric(l, m);
        f.scalar(|| format!("Tr(b{k}b{l}b{m}b{n})"), &(tr - S::from_i64(expected)));
    }
    records.push(f.finish());

    let mut f = FamilyCheck::new("trace_vanishing", tol);
    for mu in 0..4 {
        f.scalar(|| format!("Tr(b{mu})"), &b[mu].trace());
        f.scalar(|| format!("Tr(bdot{mu})"), &bd[mu].trace());
        for nu in 0..4 {
            f.scalar(|| format!("Tr(b{mu}bdot{nu})"), &(&b[mu] * &bd[nu]).trace());
            for rho in 0..4 {
                f.scalar(|| format!("Tr(b{mu}b{nu}b{rho})"), &(&pair(mu, nu) * &b[rho]).trace());
            }
        }
    }
    records.push(f.finish());

    let half = S::ratio(1, 2);
    let mut f = FamilyCheck::new("cubic_identity", tol);
    for (l, m, n) in idx4_3() {
        let lhs = &pair(l, m) * &b[n];
        let rhs = (&(&b[n].scale(&eta_s(l, m)) + &b[l].scale(&eta_s(n, m)))
            + &(&bd[l].scale(&eta_s(n, m)) - &bd[n].scale(&eta_s(l, m))))
            .scale(&half);
        f.matrix(|| format!("b{l}b{m}b{n}"), &(&lhs - &rhs));
    }
    records.push(f.finish());

    let third = S::ratio(1, 3);
    let mut f = FamilyCheck::new("quartic_identity", tol);
    for (k, l, m, n) in idx4_4() {
        let lhs = &pair(k, l) * &pair(m, n);
        let c = S::from_i64(metric(k, l) * metric(m, n) - metric(m, l) * metric(k, n)) * third.clone();
        let rhs = &(&pair(k, n).scale(&eta_s(l, m)) + &rep.beta_sq.scale(&c)) - &id.scale(&c);
        f.matrix(|| format!("b{k}b{l}b{m}b{n}"), &(&lhs - &rhs));
    }
    records.push(f.finish());

    let two_thirds = S::ratio(2, 3);
    let beta_sq_minus_id = &rep.beta_sq - &id;
    let mut f = FamilyCheck::new("companion_products", tol);
    for (mu, nu) in idx4() {
        let p = pair(mu, nu);
        f.matrix(
            || format!("bdot{mu}bdot{nu} + b{mu}b{nu}"),
            &(&(&bd[mu] * &bd[nu]) + &p),
        );
        let db = &bd[mu] * &b[nu];
        f.matrix(
            || format!("bdot{mu}b{nu} + b{mu}bdot{nu}"),
            &(&db + &(&b[mu] * &bd[nu])),
        );
        let rhs = &p - &beta_sq_minus_id.scale(&(two_thirds.clone() * eta_s(mu, nu)));
        f.matrix(|| format!("bdot{mu}b{nu} expansion"), &(&db - &rhs));
    }
    records.push(f.finish());

    let five_halves = S::ratio(5, 2);
    let three_halves = S::ratio(3, 2);
    let mut f = FamilyCheck::new("beta_squared_products", tol);
    for mu in 0..4 {
        let right = &b[mu].scale(&five_halves) + &bd[mu].scale(&three_halves);
        f.matrix(|| format!("b{mu} b^2"), &(&(&b[mu] * &rep.beta_sq) - &right));
        let left = &b[mu].scale(&five_halves) - &bd[mu].scale(&three_halves);
        f.matrix(|| format!("b^2 b{mu}"), &(&(&rep.beta_sq * &b[mu]) - &left));
    }
    records.push(f.finish());

    let mut f = FamilyCheck::new("contraction", tol);
    for rho in 0..4 {
        let c = (0..4).fold(DkpMatrix::zero(), |acc, mu| {
            &acc + &(&(&rep.beta_up(mu) * &b[rho]) * &b[mu])
        });
        f.matrix(|| format!("b^mu b{rho} b_mu"), &(&c - &b[rho]));
        for sigma in 0..4 {
            let c = (0..4).fold(DkpMatrix::zero(), |acc, mu| {
                &acc + &(&(&rep.beta_up(mu) * &pair(rho, sigma)) * &b[mu])
            });
            f.matrix(
                || format!("b^mu b{rho} b{sigma} b_mu"),
                &(&c - &id.scale(&eta_s(rho, sigma))),
            );
        }
    }
    records.push(f.finish());

    let z = &rep.zeta;
    let mut f = FamilyCheck::new("zeta", tol);
    f.matrix(|| "zeta^2 + 3 zeta".into(), &(&(z * z) + &z.scale(&S::from_i64(3))));
    f.matrix(
        || "zeta b^2 zeta + 12 zeta".into(),
        &(&(&(z * &rep.beta_sq) * z) + &z.scale(&S::from_i64(12))),
    );
    for mu in 0..4 {
        f.matrix(|| format!("zeta b{mu} zeta"), &(&(z * &b[mu]) * z));
        for nu in 0..4 {
            let lhs = &(z * &pair(mu, nu)) * z;
            f.matrix(
                || format!("zeta b{mu}b{nu} zeta + 3 eta zeta"),
                &(&lhs + &z.scale(&S::from_i64(3 * metric(mu, nu)))),
            );
        }
    }
    let p = rep.projector();
    f.matrix(|| "(-zeta/3)^2 - (-zeta/3)".into(), &(&(&p * &p) - &p));
    records.push(f.finish());

    IdentityReport {
        exact: S::EXACT,
        tolerance: tol,
        records,
    }
}

/// Direct matrix product `β_{w₁} β_{w₂} …` (identity for the empty word).
pub fn word_product<S: Scalar>(rep: &KemmerRep<S>, word: &[usize]) -> Result<DkpMatrix<S>> {
    word.iter().try_fold(DkpMatrix::identity(), |acc, &mu| {
        if mu >= 4 {
            Err(Error::IndexOutOfRange { index: mu })
        } else {
            Ok(&acc * &rep.beta[mu])
        }
    })
}
