//! Second-order jets: a value together with its first and second partial
//! derivatives at one point. Arithmetic applies the product and quotient
//! rules, so closed-form derivatives propagate through nonlinear expressions
//! without discretization error.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{gradient, FieldGrid};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: C,
    /// `d[a] = ∂_a f`
    pub d: [C; 4],
    /// `dd[a][b] = ∂_a ∂_b f`
    pub dd: [[C; 4]; 4],
}

impl Default for Jet {
    fn default() -> Self {
        Self::constant(ZERO)
    }
}

impl Jet {
    pub fn constant(v: C) -> Self {
        Self {
            v,
            d: [ZERO; 4],
            dd: [[ZERO; 4]; 4],
        }
    }

    pub fn real(v: f64) -> Self {
        Self::constant(C::new(v, 0.0))
    }

    pub fn scale(&self, s: C) -> Self {
        Self {
            v: self.v * s,
            d: self.d.map(|x| x * s),
            dd: self.dd.map(|r| r.map(|x| x * s)),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            v: self.v.conj(),
            d: self.d.map(|x| x.conj()),
            dd: self.dd.map(|r| r.map(|x| x.conj())),
        }
    }

    /// `1/f`; the caller guarantees `f ≠ 0`.
    pub fn recip(&self) -> Self {
        let g = self.v.inv();
        let g2 = g * g;
        let g3 = g2 * g;
        Self {
            v: g,
            d: self.d.map(|x| -x * g2),
            dd: std::array::from_fn(|a| {
                std::array::from_fn(|b| -self.dd[a][b] * g2 + 2.0 * self.d[a] * self.d[b] * g3)
            }),
        }
    }

    /// `exp(i θ)` for this jet as `θ`.
    pub fn exp_i(&self) -> Self {
        let e = (C::i() * self.v).exp();
        Self {
            v: e,
            d: self.d.map(|x| C::i() * x * e),
            dd: std::array::from_fn(|a| std::array::from_fn(|b| (C::i() * self.dd[a][b] - self.d[a] * self.d[b]) * e)),
        }
    }

    /// `η^{aa} ∂_a ∂_a f`
    pub fn dalembertian(&self) -> C {
        self.dd[0][0] - self.dd[1][1] - self.dd[2][2] - self.dd[3][3]
    }

    /// Largest modulus over value and all derivatives.
    pub fn max_abs(&self) -> f64 {
        std::iter::once(self.v)
            .chain(self.d)
            .chain(self.dd.into_iter().flatten())
            .map(|x| x.norm())
            .fold(0.0, f64::max)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            d: std::array::from_fn(|a| self.d[a] + o.d[a]),
            dd: std::array::from_fn(|a| std::array::from_fn(|b| self.dd[a][b] + o.dd[a][b])),
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(C::new(-1.0, 0.0))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d: std::array::from_fn(|a| self.d[a] * o.v + self.v * o.d[a]),
            dd: std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    self.dd[a][b] * o.v + self.d[a] * o.d[b] + self.d[b] * o.d[a] + self.v * o.dd[a][b]
                })
            }),
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

/// Jets of a sampled scalar field: first derivatives by stencil, second
/// derivatives by applying the stencil to the first.
pub fn stencil_jets(grid: &FieldGrid<C>) -> Result<FieldGrid<Jet>> {
    let first = gradient(grid)?;
    let mut second = Vec::with_capacity(4);
    for f in &first {
        second.push(gradient(f)?);
    }
    Ok(FieldGrid::from_fn(*grid.shape(), |i| Jet {
        v: grid.values()[i],
        d: std::array::from_fn(|a| first[a].values()[i]),
        // ∂_a∂_b: differentiate ∂_b along a
        dd: std::array::from_fn(|a| std::array::from_fn(|b| second[b][a].values()[i])),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridShape;

    fn var(axis: usize, x: f64) -> Jet {
        let mut j = Jet::real(x);
        j.d[axis] = C::new(1.0, 0.0);
        j
    }

    fn close(a: C, b: C) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn product_rule_on_monomials() {
        // f = t² x at (t, x) = (2, 3)
        let t = var(0, 2.0);
        let x = var(1, 3.0);
        let f = t * t * x;
        assert!(close(f.v, C::new(12.0, 0.0)));
        assert!(close(f.d[0], C::new(12.0, 0.0)));
        assert!(close(f.d[1], C::new(4.0, 0.0)));
        assert!(close(f.dd[0][0], C::new(6.0, 0.0)));
        assert!(close(f.dd[0][1], C::new(4.0, 0.0)));
        assert!(close(f.dd[1][0], C::new(4.0, 0.0)));
        assert!(close(f.dd[1][1], C::new(0.0, 0.0)));
    }

    #[test]
    fn quotient_rule() {
        // f = 1/t at t = 2: f' = −1/4, f'' = 2/8
        let f = Jet::real(1.0) / var(0, 2.0);
        assert!(close(f.v, C::new(0.5, 0.0)));
        assert!(close(f.d[0], C::new(-0.25, 0.0)));
        assert!(close(f.dd[0][0], C::new(0.25, 0.0)));
        let one = f * var(0, 2.0);
        assert!(close(one.v, C::new(1.0, 0.0)));
        assert!(one.d.iter().all(|&x| close(x, ZERO)));
        assert!(one.dd.iter().flatten().all(|&x| close(x, ZERO)));
    }

    #[test]
    fn phase_jet() {
        // exp(i t²) at t = 1
        let t = var(0, 1.0);
        let e = (t * t).exp_i();
        let base = C::new(0.0, 1.0).exp();
        assert!(close(e.v, base));
        assert!(close(e.d[0], C::new(0.0, 2.0) * base));
        assert!(close(e.dd[0][0], (C::new(0.0, 2.0) - 4.0) * base));
    }

    #[test]
    fn stencil_jets_of_quadratic_are_exact() {
        let shape = GridShape::new([5, 4, 1, 1], [0.5, 0.25, 1.0, 1.0]).unwrap();
        let g = FieldGrid::from_positions(shape, |x| C::new(x[0] * x[1] + x[0] * x[0], 0.0));
        let jets = stencil_jets(&g).unwrap();
        for (i, j) in jets.iter().enumerate() {
            let x = shape.position(i);
            assert!(close(j.d[0], C::new(x[1] + 2.0 * x[0], 0.0)), "{i}");
            assert!(close(j.d[1], C::new(x[0], 0.0)));
            assert!(close(j.dd[0][1], C::new(1.0, 0.0)));
            assert!(close(j.dd[0][0], C::new(2.0, 0.0)));
            assert!(close(j.dd[2][2], ZERO));
        }
    }
}
