//! Symbolic reduction of β-words onto the 25-element basis.
//!
//! Reduction folds a word left to right, multiplying the accumulated
//! combination by one generator at a time. The right-multiplication table
//! `(basis element) × β_ν` is written down from the algebra's cubic identity
//! and the companion product rule; no matrices are involved.

use std::sync::OnceLock;

use crate::algebra::{metric, BasisCombination, BasisElement, BASIS_LEN, METRIC};
use crate::error::{Error, Result};
use crate::scalar::{Exact, Scalar};

type Combo = BasisCombination<Exact>;

/// Structure constants for right multiplication by each generator.
#[derive(Clone, Debug)]
pub struct WordReducer {
    /// `table[b][ν]` = expansion of `(basis element b) · β_ν`.
    table: Vec<[Combo; 4]>,
}

impl Default for WordReducer {
    fn default() -> Self {
        Self::new()
    }
}

impl WordReducer {
    pub fn new() -> Self {
        let table = (0..BASIS_LEN)
            .map(|i| std::array::from_fn(|nu| right_times_beta(BasisElement::from_index(i), nu)))
            .collect();
        Self { table }
    }

    /// `e · β_ν` as a basis combination.
    pub fn structure_constant(&self, e: BasisElement, nu: usize) -> &Combo {
        &self.table[e.index()][nu]
    }

    pub fn times_beta(&self, c: &Combo, nu: usize) -> Combo {
        let mut out = Combo::zero();
        for (e, coeff) in c.nonzero_terms() {
            out.add_scaled(coeff, &self.table[e.index()][nu]);
        }
        out
    }

    /// Canonical expansion of `β_{w₁} β_{w₂} …`; the empty word gives `I`.
    pub fn reduce(&self, word: &[usize]) -> Result<Combo> {
        self.extend(Combo::unit(BasisElement::Identity), word)
    }

    /// `c · β_{w₁} β_{w₂} …`
    pub fn extend(&self, c: Combo, word: &[usize]) -> Result<Combo> {
        word.iter().try_fold(c, |acc, &mu| {
            if mu >= 4 {
                Err(Error::IndexOutOfRange { index: mu })
            } else {
                Ok(self.times_beta(&acc, mu))
            }
        })
    }

    /// Algebra product of two combinations, computed by expanding the right
    /// factor into words and folding them onto the left factor.
    pub fn product(&self, left: &Combo, right: &Combo) -> Combo {
        let mut out = Combo::zero();
        for (e, coeff) in right.nonzero_terms() {
            for (w_coeff, word) in basis_as_words(e) {
                let term = self.extend(left.clone(), &word).expect("basis words use indices 0..=3");
                out.add_scaled(&(coeff.clone() * w_coeff), &term);
            }
        }
        out
    }
}

fn reducer() -> &'static WordReducer {
    static REDUCER: OnceLock<WordReducer> = OnceLock::new();
    REDUCER.get_or_init(WordReducer::new)
}

/// Reduce a word of generator indices with the shared structure constants.
pub fn reduce_word(word: &[usize]) -> Result<Combo> {
    reducer().reduce(word)
}

fn eta(mu: usize, nu: usize) -> Exact {
    Exact::from_i64(metric(mu, nu))
}

/// Right multiplication of a single basis element by `β_ν`.
fn right_times_beta(e: BasisElement, nu: usize) -> Combo {
    let mut out = Combo::zero();
    match e {
        BasisElement::Identity => out.add_term(BasisElement::Beta(nu), Exact::one()),
        BasisElement::Beta(mu) => out.add_term(BasisElement::Pair(mu, nu), Exact::one()),
        // β•_μ β_ν = β_μ β_ν − ⅔ η_μν (β² − I),  β² = Σ_a η^{aa} β_a β_a
        BasisElement::Companion(mu) => {
            out.add_term(BasisElement::Pair(mu, nu), Exact::one());
            if mu == nu {
                let c = Exact::ratio(-2, 3) * eta(mu, nu);
                for a in 0..4 {
                    out.add_term(BasisElement::Pair(a, a), c.clone() * Exact::from_i64(METRIC[a]));
                }
                out.add_term(BasisElement::Identity, -c);
            }
        }
        // β_λ β_μ β_ν = ½(η_λμ β_ν + η_νμ β_λ) + ½(η_νμ β•_λ − η_λμ β•_ν)
        BasisElement::Pair(l, m) => {
            let half = Exact::ratio(1, 2);
            out.add_term(BasisElement::Beta(nu), half.clone() * eta(l, m));
            out.add_term(BasisElement::Beta(l), half.clone() * eta(nu, m));
            out.add_term(BasisElement::Companion(l), half.clone() * eta(nu, m));
            out.add_term(BasisElement::Companion(nu), -(half * eta(l, m)));
        }
    }
    out
}

/// Each basis element as a linear combination of β-words.
fn basis_as_words(e: BasisElement) -> Vec<(Exact, Vec<usize>)> {
    match e {
        BasisElement::Identity => vec![(Exact::one(), vec![])],
        BasisElement::Beta(mu) => vec![(Exact::one(), vec![mu])],
        BasisElement::Pair(mu, nu) => vec![(Exact::one(), vec![mu, nu])],
        // β•_ν = ⅓ Σ_a η^{aa} (β_ν β_a β_a − β_a β_a β_ν)
        BasisElement::Companion(nu) => (0..4)
            .flat_map(|a| {
                let c = Exact::ratio(METRIC[a], 3);
                [(c.clone(), vec![nu, a, a]), (-c, vec![a, a, nu])]
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_representation, eval_basis_combination, word_product};

    #[test]
    fn empty_word_is_identity() {
        assert_eq!(reduce_word(&[]).unwrap(), Combo::unit(BasisElement::Identity));
    }

    #[test]
    fn single_generator() {
        for mu in 0..4 {
            assert_eq!(reduce_word(&[mu]).unwrap(), Combo::unit(BasisElement::Beta(mu)));
        }
    }

    #[test]
    fn sandwich_with_orthogonal_index_vanishes() {
        assert!(reduce_word(&[0, 1, 0]).unwrap().is_zero());
    }

    #[test]
    fn cube_of_b0_is_b0() {
        assert_eq!(reduce_word(&[0, 0, 0]).unwrap(), Combo::unit(BasisElement::Beta(0)));
    }

    #[test]
    fn out_of_range_index() {
        assert!(matches!(reduce_word(&[0, 4]), Err(Error::IndexOutOfRange { index: 4 })));
    }

    #[test]
    fn table_matches_reference_matrices() {
        let rep = build_representation::<Exact>();
        let r = WordReducer::new();
        for e in BasisElement::all() {
            for nu in 0..4 {
                let lhs = &rep.basis_matrix(e) * &rep.beta[nu];
                let rhs = eval_basis_combination(&rep, r.structure_constant(e, nu));
                assert_eq!(lhs, rhs, "{} * b{nu}", e.label());
            }
        }
    }

    #[test]
    fn words_up_to_length_three_match_products() {
        let rep = build_representation::<Exact>();
        for len in 0..=3u32 {
            for code in 0..4usize.pow(len) {
                let word: Vec<usize> = (0..len).map(|k| (code >> (2 * k)) & 3).collect();
                let c = reduce_word(&word).unwrap();
                assert_eq!(eval_basis_combination(&rep, &c), word_product(&rep, &word).unwrap());
            }
        }
    }

    #[test]
    fn product_is_associative_on_basis() {
        let r = WordReducer::new();
        let units: Vec<Combo> = BasisElement::all().map(Combo::unit).collect();
        for a in units.iter().step_by(3) {
            for b in units.iter().step_by(2) {
                for c in units.iter().step_by(5) {
                    let left = r.product(&r.product(a, b), c);
                    let right = r.product(a, &r.product(b, c));
                    assert_eq!(left, right);
                }
            }
        }
    }
}
