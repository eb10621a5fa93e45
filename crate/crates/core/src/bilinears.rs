//! Bilinear currents of a DKP wavefunction and the Fierz rearrangement
//! machinery relating them.
//!
//! With `Φ̄ = Φ†η` the Hermitian currents are
//! `S = Φ̄Φ`, `S♭ = Φ̄β²Φ`, `J_μ = Φ̄β_μΦ`, `H_μ = Φ̄β•_μΦ`, `K_μν = Φ̄β_μβ_νΦ`;
//! the complex ("tilde") currents use `Φ̃ = Φᵀη` in place of `Φ̄`.
//! Every index is stored lowered.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::algebra::{metric, KemmerRep, METRIC};
use crate::error::{Error, Result};
use crate::matrix::{dot, DkpMatrix, DIM};
use crate::scalar::{gaussian, Exact, Scalar};

pub type FourVector<S> = [S; 4];
pub type Tensor<S> = [[S; 4]; 4];

/// Field value `Φ_A`, `A = 0..4`, at one spacetime point.
#[derive(Clone, Debug, PartialEq)]
pub struct Wavefunction<S>(pub [S; DIM]);

impl<S: Scalar> Wavefunction<S> {
    pub fn zero() -> Self {
        Self(std::array::from_fn(|_| S::zero()))
    }

    /// `Φ̄ = Φ†η` as a row vector.
    pub fn bar(&self, rep: &KemmerRep<S>) -> [S; DIM] {
        let conj: [S; DIM] = std::array::from_fn(|i| self.0[i].conj());
        rep.eta.vec_mul(&conj)
    }

    /// `Φ̃ = Φᵀη` as a row vector.
    pub fn tilde(&self, rep: &KemmerRep<S>) -> [S; DIM] {
        rep.eta.vec_mul(&self.0)
    }

    pub fn scale(&self, s: &S) -> Self {
        Self(std::array::from_fn(|i| self.0[i].clone() * s.clone()))
    }

    pub fn conj(&self) -> Self {
        Self(std::array::from_fn(|i| self.0[i].conj()))
    }

    /// Euclidean norm `|Φ|`.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.modulus().powi(2)).sum::<f64>().sqrt()
    }

    pub fn to_complex64(&self) -> Wavefunction<Complex64> {
        Wavefunction(std::array::from_fn(|i| self.0[i].to_complex64()))
    }
}

impl Wavefunction<Exact> {
    /// Random Gaussian-rational components with `|num| <= max_num` and
    /// denominators in `1..=max_den`.
    pub fn random_rational<R: Rng + ?Sized>(rng: &mut R, max_num: i64, max_den: i64) -> Self {
        let part = |rng: &mut R| (rng.random_range(-max_num..=max_num), rng.random_range(1..=max_den));
        Self(std::array::from_fn(|_| {
            let (a, b) = part(rng);
            let (c, d) = part(rng);
            gaussian(a, b, c, d)
        }))
    }
}

/// `Φ̄ M Φ` for a row vector `left` (either `Φ̄` or `Φ̃`).
fn sandwich<S: Scalar>(left: &[S; DIM], m: &DkpMatrix<S>, phi: &[S; DIM]) -> S {
    dot(left, &m.mul_vec(phi))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurrentSet<S> {
    pub s: S,
    pub s_flat: S,
    pub j: FourVector<S>,
    pub h: FourVector<S>,
    pub k: Tensor<S>,
    pub z: S,
    pub tilde_s: S,
    pub tilde_s_flat: S,
    pub tilde_j: FourVector<S>,
    /// `Φ̃β•_μΦ`, identically zero; kept so the identity can be checked.
    pub tilde_h: FourVector<S>,
    pub tilde_k: Tensor<S>,
    pub tilde_z: S,
}

pub fn compute_currents<S: Scalar>(rep: &KemmerRep<S>, phi: &Wavefunction<S>) -> CurrentSet<S> {
    let bar = phi.bar(rep);
    let tilde = phi.tilde(rep);
    let v = &phi.0;
    let pairs: Tensor<DkpMatrix<S>> = std::array::from_fn(|mu| std::array::from_fn(|nu| &rep.beta[mu] * &rep.beta[nu]));
    let s = dot(&bar, v);
    let s_flat = sandwich(&bar, &rep.beta_sq, v);
    let tilde_s = dot(&tilde, v);
    let tilde_s_flat = sandwich(&tilde, &rep.beta_sq, v);
    CurrentSet {
        z: s.clone() - s_flat.clone(),
        tilde_z: tilde_s.clone() - tilde_s_flat.clone(),
        s,
        s_flat,
        j: std::array::from_fn(|mu| sandwich(&bar, &rep.beta[mu], v)),
        h: std::array::from_fn(|mu| sandwich(&bar, &rep.beta_dot[mu], v)),
        k: std::array::from_fn(|mu| std::array::from_fn(|nu| sandwich(&bar, &pairs[mu][nu], v))),
        tilde_s,
        tilde_s_flat,
        tilde_j: std::array::from_fn(|mu| sandwich(&tilde, &rep.beta[mu], v)),
        tilde_h: std::array::from_fn(|mu| sandwich(&tilde, &rep.beta_dot[mu], v)),
        tilde_k: std::array::from_fn(|mu| std::array::from_fn(|nu| sandwich(&tilde, &pairs[mu][nu], v))),
    }
}

impl<S: Scalar> CurrentSet<S> {
    /// Flat `(key, value)` columns in the fixed serialization order.
    pub fn columns(&self) -> Vec<(String, f64)> {
        let mut cols = Vec::with_capacity(90);
        let c = |x: &S| x.to_complex64();
        cols.push(("S".to_string(), c(&self.s).re));
        cols.push(("Sflat".to_string(), c(&self.s_flat).re));
        for mu in 0..4 {
            cols.push((format!("J{mu}"), c(&self.j[mu]).re));
        }
        for mu in 0..4 {
            cols.push((format!("ImH{mu}"), c(&self.h[mu]).im));
        }
        for mu in 0..4 {
            for nu in 0..4 {
                let k = c(&self.k[mu][nu]);
                cols.push((format!("ReK{mu}{nu}"), k.re));
                cols.push((format!("ImK{mu}{nu}"), k.im));
            }
        }
        cols.push(("Z".to_string(), c(&self.z).re));
        let mut complex = |name: String, x: &S| {
            let x = c(x);
            cols.push((format!("Re{name}"), x.re));
            cols.push((format!("Im{name}"), x.im));
        };
        complex("TildeS".into(), &self.tilde_s);
        complex("TildeSflat".into(), &self.tilde_s_flat);
        for mu in 0..4 {
            complex(format!("TildeJ{mu}"), &self.tilde_j[mu]);
        }
        for mu in 0..4 {
            for nu in 0..4 {
                complex(format!("TildeK{mu}{nu}"), &self.tilde_k[mu][nu]);
            }
        }
        complex("TildeZ".into(), &self.tilde_z);
        cols
    }

    pub fn to_json(&self) -> Value {
        let map: Map<String, Value> = self.columns().into_iter().map(|(k, v)| (k, Value::from(v))).collect();
        Value::Object(map)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> CurrentSet<T> {
        let v4 = |a: &FourVector<S>| std::array::from_fn(|i| f(&a[i]));
        let t4 = |a: &Tensor<S>| std::array::from_fn(|i| std::array::from_fn(|j| f(&a[i][j])));
        CurrentSet {
            s: f(&self.s),
            s_flat: f(&self.s_flat),
            j: v4(&self.j),
            h: v4(&self.h),
            k: t4(&self.k),
            z: f(&self.z),
            tilde_s: f(&self.tilde_s),
            tilde_s_flat: f(&self.tilde_s_flat),
            tilde_j: v4(&self.tilde_j),
            tilde_h: v4(&self.tilde_h),
            tilde_k: t4(&self.tilde_k),
            tilde_z: f(&self.tilde_z),
        }
    }

    /// Only the scalar currents set, everything else zero. Useful for
    /// feeding formulas with current values not derived from any `Φ`.
    pub fn from_scalars(s: S, s_flat: S) -> Self {
        let zero4 = || std::array::from_fn(|_| S::zero());
        let zero44 = || std::array::from_fn(|_| std::array::from_fn(|_| S::zero()));
        CurrentSet {
            z: s.clone() - s_flat.clone(),
            s,
            s_flat,
            j: zero4(),
            h: zero4(),
            k: zero44(),
            tilde_s: S::zero(),
            tilde_s_flat: S::zero(),
            tilde_j: zero4(),
            tilde_h: zero4(),
            tilde_k: zero44(),
            tilde_z: S::zero(),
        }
    }
}

/// Minkowski product `η^{μν} a_μ b_ν` (no complex conjugation).
pub fn minkowski_dot<S: Scalar>(a: &FourVector<S>, b: &FourVector<S>) -> S {
    (0..4).fold(S::zero(), |acc, mu| {
        acc + a[mu].clone() * b[mu].clone() * S::from_i64(METRIC[mu])
    })
}

/// Raise one index of a lower-index four-vector.
pub fn raise<S: Scalar>(a: &FourVector<S>) -> FourVector<S> {
    std::array::from_fn(|mu| a[mu].clone() * S::from_i64(METRIC[mu]))
}

/// Coefficients of the expansion `aI + j^μβ_μ + ½k^{μν}β_μβ_ν + h^μβ•_μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FierzCoefficients<S> {
    pub a: S,
    pub j: FourVector<S>,
    pub h: FourVector<S>,
    pub k: Tensor<S>,
}

fn fierz_from_parts<S: Scalar>(
    s: &S,
    s_flat: &S,
    j: &FourVector<S>,
    h: Option<&FourVector<S>>,
    k: &Tensor<S>,
) -> FierzCoefficients<S> {
    let a = S::ratio(5, 9) * s.clone() - S::ratio(2, 9) * s_flat.clone();
    let trace_part = S::ratio(2, 9) * s.clone() + S::ratio(1, 9) * s_flat.clone();
    let half = S::ratio(1, 2);
    FierzCoefficients {
        a,
        j: std::array::from_fn(|mu| half.clone() * j[mu].clone()),
        h: std::array::from_fn(|mu| match h {
            Some(h) => -(half.clone() * h[mu].clone()),
            None => S::zero(),
        }),
        // ½k_μν = K_νμ − η_μν(2S/9 + S♭/9)
        k: std::array::from_fn(|mu| {
            std::array::from_fn(|nu| {
                let half_k = k[nu][mu].clone() - trace_part.clone() * S::from_i64(metric(mu, nu));
                half_k.scale_i64(2)
            })
        }),
    }
}

/// Coefficients of the Hermitian Fierz expansion of `ΦΦ̄`.
pub fn fierz_decompose<S: Scalar>(cs: &CurrentSet<S>) -> FierzCoefficients<S> {
    fierz_from_parts(&cs.s, &cs.s_flat, &cs.j, Some(&cs.h), &cs.k)
}

/// Coefficients of the complex Fierz expansion of `ΦΦ̃` (no `β•` term).
pub fn fierz_decompose_tilde<S: Scalar>(cs: &CurrentSet<S>) -> FierzCoefficients<S> {
    fierz_from_parts(&cs.tilde_s, &cs.tilde_s_flat, &cs.tilde_j, None, &cs.tilde_k)
}

/// Evaluate a Fierz expansion as a matrix.
pub fn fierz_expand<S: Scalar>(rep: &KemmerRep<S>, c: &FierzCoefficients<S>) -> DkpMatrix<S> {
    let half = S::ratio(1, 2);
    let mut m = DkpMatrix::identity().scale(&c.a);
    for mu in 0..4 {
        let sign = S::from_i64(METRIC[mu]);
        m = &m + &rep.beta[mu].scale(&(c.j[mu].clone() * sign.clone()));
        m = &m + &rep.beta_dot[mu].scale(&(c.h[mu].clone() * sign.clone()));
        for nu in 0..4 {
            let coeff = half.clone() * c.k[mu][nu].clone() * sign.clone() * S::from_i64(METRIC[nu]);
            if !coeff.is_negligible(0.0) {
                m = &m + &(&rep.beta[mu] * &rep.beta[nu]).scale(&coeff);
            }
        }
    }
    m
}

/// `(ΦΦ̄ − expansion, ΦΦ̃ − complex expansion)`; both vanish identically.
pub fn fierz_residual<S: Scalar>(rep: &KemmerRep<S>, phi: &Wavefunction<S>) -> (DkpMatrix<S>, DkpMatrix<S>) {
    let cs = compute_currents(rep, phi);
    let herm = &DkpMatrix::outer(&phi.0, &phi.bar(rep)) - &fierz_expand(rep, &fierz_decompose(&cs));
    let cplx = &DkpMatrix::outer(&phi.0, &phi.tilde(rep)) - &fierz_expand(rep, &fierz_decompose_tilde(&cs));
    (herm, cplx)
}

/// Singularity threshold on `|Z|` for a point with scalar currents `S`, `S♭`:
/// `1e-10 · max(1, S² + S♭²)^{1/2}`.
pub fn z_threshold(s: f64, s_flat: f64) -> f64 {
    1e-10 * (s * s + s_flat * s_flat).max(1.0).sqrt()
}

/// `Some((|Z|, threshold))` when the point is singular. In exact mode only
/// `Z = 0` is singular.
pub fn singular_z<S: Scalar>(cs: &CurrentSet<S>) -> Option<(f64, f64)> {
    let modulus = cs.z.modulus();
    if S::EXACT {
        return cs.z.is_negligible(0.0).then_some((modulus, 0.0));
    }
    let threshold = z_threshold(cs.s.to_complex64().re, cs.s_flat.to_complex64().re);
    (modulus < threshold).then_some((modulus, threshold))
}

#[derive(Debug)]
pub struct ConstraintResiduals<S> {
    /// `(2S+S♭)²/9 − ½(J·J − H·H) − K:Kᵀ`
    pub scalar_fierz: S,
    /// `K_μν + ⅓Zη_μν + ¾(J_μ+H_μ)(J_ν−H_ν)/Z`; fails on singular `Z`.
    pub k_elim: Result<Tensor<S>>,
    /// `¼(J·J − H·H) + (1/9)Z(4S − S♭)`
    pub quadratic: S,
}

pub fn algebraic_constraint_residuals<S: Scalar>(cs: &CurrentSet<S>) -> ConstraintResiduals<S> {
    let jj = minkowski_dot(&cs.j, &cs.j);
    let hh = minkowski_dot(&cs.h, &cs.h);
    let kk = (0..4).fold(S::zero(), |acc, mu| {
        (0..4).fold(acc, |acc, rho| {
            let sign = S::from_i64(METRIC[mu] * METRIC[rho]);
            acc + sign * cs.k[mu][rho].clone() * cs.k[rho][mu].clone()
        })
    });
    let two_s_plus = cs.s.scale_i64(2) + cs.s_flat.clone();
    let scalar_fierz =
        S::ratio(1, 9) * two_s_plus.clone() * two_s_plus - S::ratio(1, 2) * (jj.clone() - hh.clone()) - kk;
    let quadratic =
        S::ratio(1, 4) * (jj - hh) + S::ratio(1, 9) * cs.z.clone() * (cs.s.scale_i64(4) - cs.s_flat.clone());
    let k_elim = match singular_z(cs) {
        Some((modulus, threshold)) => Err(Error::SingularZ { modulus, threshold }),
        None => {
            let z = cs.z.clone();
            Ok(std::array::from_fn(|mu| {
                std::array::from_fn(|nu| {
                    cs.k[mu][nu].clone()
                        + S::ratio(1, 3) * z.clone() * S::from_i64(metric(mu, nu))
                        + S::ratio(3, 4) * (cs.j[mu].clone() + cs.h[mu].clone()) * (cs.j[nu].clone() - cs.h[nu].clone())
                            / z.clone()
                })
            }))
        }
    };
    ConstraintResiduals {
        scalar_fierz,
        k_elim,
        quadratic,
    }
}

#[derive(Debug)]
pub struct ZetaResiduals<S> {
    /// `ζΦΦ̃ζ − Z̃ζ`
    pub sandwich: DkpMatrix<S>,
    /// `Z² − Z̃*Z̃`
    pub modulus: S,
}

pub fn zeta_identity_residuals<S: Scalar>(rep: &KemmerRep<S>, phi: &Wavefunction<S>) -> ZetaResiduals<S> {
    let cs = compute_currents(rep, phi);
    let outer = DkpMatrix::outer(&phi.0, &phi.tilde(rep));
    let sandwich = &(&(&rep.zeta * &outer) * &rep.zeta) - &rep.zeta.scale(&cs.tilde_z);
    let modulus = cs.z.clone() * cs.z.clone() - cs.tilde_z.conj() * cs.tilde_z.clone();
    ZetaResiduals { sandwich, modulus }
}

/// One relation of the per-wavefunction Fierz suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelationCheck {
    pub relation: &'static str,
    /// Largest entry modulus of the residual.
    pub max_residual: f64,
    /// Every residual entry is exactly zero (exact mode) or zero as a float.
    pub exact_zero: bool,
    /// The relation divides by a singular `Z` here and was not evaluated.
    pub skipped: bool,
}

fn relation<S: Scalar>(relation: &'static str, entries: &[S]) -> RelationCheck {
    RelationCheck {
        relation,
        max_residual: entries.iter().map(S::modulus).fold(0.0, f64::max),
        exact_zero: entries.iter().all(|x| x.is_negligible(0.0)),
        skipped: false,
    }
}

/// Residuals of every Fierz-type relation for one wavefunction: both Fierz
/// expansions, the scalar Fierz relation, K-elimination, the quadratic
/// constraint and the two ζ identities.
pub fn fierz_suite<S: Scalar>(rep: &KemmerRep<S>, phi: &Wavefunction<S>) -> Vec<RelationCheck> {
    let cs = compute_currents(rep, phi);
    let (herm, cplx) = fierz_residual(rep, phi);
    let constraints = algebraic_constraint_residuals(&cs);
    let zeta = zeta_identity_residuals(rep, phi);
    let k_elim = match &constraints.k_elim {
        Ok(t) => relation("k_elimination", &t.iter().flatten().cloned().collect::<Vec<_>>()),
        Err(_) => RelationCheck {
            relation: "k_elimination",
            max_residual: 0.0,
            exact_zero: true,
            skipped: true,
        },
    };
    vec![
        relation("hermitian_fierz", &herm.flatten()),
        relation("complex_fierz", &cplx.flatten()),
        relation("scalar_fierz", std::slice::from_ref(&constraints.scalar_fierz)),
        k_elim,
        relation("quadratic_constraint", std::slice::from_ref(&constraints.quadratic)),
        relation("zeta_sandwich", &zeta.sandwich.flatten()),
        relation("zeta_modulus", std::slice::from_ref(&zeta.modulus)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_representation;
    use rand::SeedableRng;

    fn e4() -> Wavefunction<Exact> {
        let mut v = Wavefunction::<Exact>::zero();
        v.0[4] = Exact::one();
        v
    }

    fn int(n: i64) -> Exact {
        Exact::from_i64(n)
    }

    #[test]
    fn currents_of_scalar_slot() {
        let rep = build_representation::<Exact>();
        let cs = compute_currents(&rep, &e4());
        assert_eq!(cs.s, int(1));
        assert_eq!(cs.s_flat, int(4));
        assert_eq!(cs.z, int(-3));
        assert!(cs.j.iter().chain(&cs.h).all(|x| *x == int(0)));
        for mu in 0..4 {
            for nu in 0..4 {
                assert_eq!(cs.k[mu][nu], int(metric(mu, nu)));
            }
        }
        assert_eq!(cs.tilde_z, int(-3));
    }

    #[test]
    fn zero_wavefunction_has_zero_currents() {
        let rep = build_representation::<Exact>();
        let cs = compute_currents(&rep, &Wavefunction::zero());
        assert!(cs.columns().iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn plane_wave_amplitude_currents() {
        // k = (5/3, 4/3, 0, 0) with m = 1: k² = 25/9 − 16/9 = 1.
        let rep = build_representation::<Exact>();
        let k = [Exact::ratio(5, 3), Exact::ratio(4, 3), int(0), int(0)];
        let phi = Wavefunction([k[0].clone(), k[1].clone(), k[2].clone(), k[3].clone(), int(1)]);
        let cs = compute_currents(&rep, &phi);
        assert_eq!(cs.s, int(2));
        assert_eq!(cs.s_flat, int(5));
        assert_eq!(cs.z, int(-3));
        for mu in 0..4 {
            assert_eq!(cs.j[mu], k[mu].scale_i64(2));
            assert_eq!(cs.h[mu], int(0));
        }
    }

    #[test]
    fn fierz_coefficients_of_scalar_slot() {
        let rep = build_representation::<Exact>();
        let f = fierz_decompose(&compute_currents(&rep, &e4()));
        assert_eq!(f.a, Exact::ratio(-1, 3));
        assert!(f.j.iter().chain(&f.h).all(|x| *x == int(0)));
        for mu in 0..4 {
            for nu in 0..4 {
                assert_eq!(f.k[mu][nu], Exact::ratio(2 * metric(mu, nu), 3));
            }
        }
    }

    #[test]
    fn fierz_coefficients_from_scalars_only() {
        let zero = fierz_decompose(&CurrentSet::<Exact>::from_scalars(int(0), int(0)));
        assert_eq!(zero.a, int(0));
        assert!(zero.k.iter().flatten().all(|x| *x == int(0)));
        let f = fierz_decompose(&CurrentSet::<Exact>::from_scalars(Exact::ratio(9, 5), int(0)));
        assert_eq!(f.a, int(1));
        for mu in 0..4 {
            // ½k_μν = −(2/5)η_μν
            assert_eq!(f.k[mu][mu], Exact::ratio(-4 * METRIC[mu], 5));
        }
    }

    #[test]
    fn fierz_residual_of_scalar_slot_and_zero() {
        let rep = build_representation::<Exact>();
        let (h, c) = fierz_residual(&rep, &e4());
        assert_eq!(h, DkpMatrix::zero());
        assert_eq!(c, DkpMatrix::zero());
        let (h, c) = fierz_residual(&rep, &Wavefunction::zero());
        assert_eq!(h, DkpMatrix::zero());
        assert_eq!(c, DkpMatrix::zero());
    }

    #[test]
    fn constraints_on_scalar_slot() {
        let rep = build_representation::<Exact>();
        let r = algebraic_constraint_residuals(&compute_currents(&rep, &e4()));
        assert_eq!(r.scalar_fierz, int(0));
        assert_eq!(r.quadratic, int(0));
        assert!(r.k_elim.unwrap().iter().flatten().all(|x| *x == int(0)));
    }

    #[test]
    fn non_realizable_currents_violate_quadratic() {
        let r = algebraic_constraint_residuals(&CurrentSet::<Exact>::from_scalars(int(1), int(0)));
        assert_eq!(r.quadratic, Exact::ratio(4, 9));
    }

    #[test]
    fn singular_z_only_blocks_k_elimination() {
        let rep = build_representation::<Exact>();
        // φ₄ = 0 gives Z = 0 in this representation
        let phi = Wavefunction([int(1), int(2), int(0), int(1), int(0)]);
        let r = algebraic_constraint_residuals(&compute_currents(&rep, &phi));
        assert!(matches!(r.k_elim, Err(Error::SingularZ { .. })));
        assert_eq!(r.scalar_fierz, int(0));
        assert_eq!(r.quadratic, int(0));
    }

    #[test]
    fn zeta_identities_on_scalar_slot_and_zero() {
        let rep = build_representation::<Exact>();
        for phi in [e4(), Wavefunction::zero()] {
            let r = zeta_identity_residuals(&rep, &phi);
            assert_eq!(r.sandwich, DkpMatrix::zero());
            assert_eq!(r.modulus, int(0));
        }
    }

    #[test]
    fn random_rational_wavefunctions_satisfy_everything_exactly() {
        let rep = build_representation::<Exact>();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let phi = Wavefunction::random_rational(&mut rng, 9, 7);
            let (h, c) = fierz_residual(&rep, &phi);
            assert_eq!(h, DkpMatrix::zero());
            assert_eq!(c, DkpMatrix::zero());
            let cs = compute_currents(&rep, &phi);
            for mu in 0..4 {
                assert_eq!(cs.h[mu].clone() + cs.h[mu].conj(), int(0));
                assert_eq!(cs.tilde_h[mu], int(0));
                for nu in 0..4 {
                    assert_eq!(cs.k[mu][nu], cs.k[nu][mu].conj());
                    assert_eq!(cs.tilde_k[mu][nu], cs.tilde_k[nu][mu]);
                }
            }
            let trace = (0..4).fold(int(0), |acc, mu| acc + cs.k[mu][mu].scale_i64(METRIC[mu]));
            assert_eq!(trace, cs.s_flat);
            let r = algebraic_constraint_residuals(&cs);
            assert_eq!(r.scalar_fierz, int(0));
            assert_eq!(r.quadratic, int(0));
            assert!(r.k_elim.unwrap().iter().flatten().all(|x| *x == int(0)));
            let z = zeta_identity_residuals(&rep, &phi);
            assert_eq!(z.sandwich, DkpMatrix::zero());
            assert_eq!(z.modulus, int(0));
        }
    }

    #[test]
    fn column_order_is_fixed() {
        let rep = build_representation::<Complex64>();
        let cols = compute_currents(&rep, &e4().to_complex64()).columns();
        let keys: Vec<&str> = cols.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(&keys[..6], &["S", "Sflat", "J0", "J1", "J2", "J3"]);
        assert_eq!(keys[10], "ReK00");
        assert_eq!(keys[42], "Z");
        assert_eq!(*keys.last().unwrap(), "ImTildeZ");
        assert_eq!(keys.len(), 43 + 4 + 8 + 32 + 2);
    }
}
