//! Rectangular 4D lattices of per-point values and second-order finite
//! differences on them.
//!
//! Points are stored row-major with `t` slowest and `z` fastest. Lattice
//! coordinates are `x^μ = i_μ h_μ` with the origin at index zero. An axis of
//! extent 1 is a symmetry direction: fields are constant along it and every
//! derivative along it is exactly zero.

use num_complex::Complex64;

use crate::bilinears::Wavefunction;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridShape {
    extents: [usize; 4],
    spacing: [f64; 4],
}

impl GridShape {
    pub fn new(extents: [usize; 4], spacing: [f64; 4]) -> Result<Self> {
        if let Some(axis) = extents.iter().position(|&n| n == 0) {
            return Err(Error::Shape(format!("axis {axis} has extent 0")));
        }
        if let Some(axis) = spacing.iter().position(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::Shape(format!(
                "axis {axis} has non-positive spacing {}",
                spacing[axis]
            )));
        }
        extents
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::Shape("grid size overflows".into()))?;
        Ok(Self { extents, spacing })
    }

    pub fn extents(&self) -> [usize; 4] {
        self.extents
    }

    pub fn spacing(&self) -> [f64; 4] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_symmetry_axis(&self, axis: usize) -> bool {
        self.extents[axis] == 1
    }

    /// Row-major stride of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.extents[axis + 1..].iter().product()
    }

    pub fn flat_index(&self, idx: [usize; 4]) -> usize {
        idx.iter().zip(&self.extents).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; 4] {
        let mut idx = [0; 4];
        for axis in (0..4).rev() {
            idx[axis] = flat % self.extents[axis];
            flat /= self.extents[axis];
        }
        idx
    }

    /// Coordinates `x^μ` of a flat point index.
    pub fn position(&self, flat: usize) -> [f64; 4] {
        let idx = self.multi_index(flat);
        std::array::from_fn(|mu| idx[mu] as f64 * self.spacing[mu])
    }

    /// Same extents and bit-identical spacing.
    pub fn check_compatible(&self, other: &GridShape) -> Result<()> {
        if self.extents != other.extents
            || self
                .spacing
                .iter()
                .zip(&other.spacing)
                .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Err(Error::Shape(format!(
                "grids differ: extents {:?} vs {:?}, spacing {:?} vs {:?}",
                self.extents, other.extents, self.spacing, other.spacing
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid<T> {
    shape: GridShape,
    values: Vec<T>,
}

impl<T> FieldGrid<T> {
    pub fn new(shape: GridShape, values: Vec<T>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::Shape(format!(
                "{} values for a grid of {} points",
                values.len(),
                shape.len()
            )));
        }
        Ok(Self { shape, values })
    }

    pub fn from_fn(shape: GridShape, f: impl FnMut(usize) -> T) -> Self {
        Self {
            shape,
            values: (0..shape.len()).map(f).collect(),
        }
    }

    /// Fill by coordinates `x^μ`.
    pub fn from_positions(shape: GridShape, mut f: impl FnMut([f64; 4]) -> T) -> Self {
        Self::from_fn(shape, |i| f(shape.position(i)))
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, idx: [usize; 4]) -> &T {
        &self.values[self.shape.flat_index(idx)]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> FieldGrid<U> {
        FieldGrid {
            shape: self.shape,
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.values.iter()
    }
}

impl<T: Clone> FieldGrid<T> {
    pub fn constant(shape: GridShape, value: T) -> Self {
        Self {
            shape,
            values: vec![value; shape.len()],
        }
    }
}

/// Values a stencil can combine.
pub trait Linear: Clone {
    fn zero() -> Self;
    /// `self + s · other`
    fn add_scaled(&self, s: f64, other: &Self) -> Self;

    fn scaled(&self, s: f64) -> Self {
        Self::zero().add_scaled(s, self)
    }
}

impl Linear for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add_scaled(&self, s: f64, other: &Self) -> Self {
        self + s * other
    }
}

impl Linear for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add_scaled(&self, s: f64, other: &Self) -> Self {
        self + other * s
    }
}

impl<T: Linear, const N: usize> Linear for [T; N] {
    fn zero() -> Self {
        std::array::from_fn(|_| T::zero())
    }
    fn add_scaled(&self, s: f64, other: &Self) -> Self {
        std::array::from_fn(|i| self[i].add_scaled(s, &other[i]))
    }
}

impl Linear for Wavefunction<Complex64> {
    fn zero() -> Self {
        Wavefunction(Linear::zero())
    }
    fn add_scaled(&self, s: f64, other: &Self) -> Self {
        Wavefunction(self.0.add_scaled(s, &other.0))
    }
}

/// `∂f/∂x^axis` with second-order central differences inside and second-order
/// one-sided stencils `(−3f₀ + 4f₁ − f₂)/2h` at the two ends. Symmetry axes
/// give the zero field.
pub fn partial_derivative<T: Linear>(grid: &FieldGrid<T>, axis: usize) -> Result<FieldGrid<T>> {
    if axis >= 4 {
        return Err(Error::IndexOutOfRange { index: axis });
    }
    let shape = grid.shape;
    let n = shape.extents[axis];
    match n {
        1 => return Ok(FieldGrid::constant(shape, T::zero())),
        2 => return Err(Error::Stencil { axis, extent: 2 }),
        _ => {}
    }
    let stride = shape.stride(axis);
    let inv2h = 1.0 / (2.0 * shape.spacing[axis]);
    let v = &grid.values;
    let values = (0..shape.len())
        .map(|flat| {
            let i = (flat / stride) % n;
            let at = |k: usize| &v[flat - i * stride + k * stride];
            let d = if i == 0 {
                at(0).scaled(-3.0).add_scaled(4.0, at(1)).add_scaled(-1.0, at(2))
            } else if i == n - 1 {
                at(n - 1)
                    .scaled(3.0)
                    .add_scaled(-4.0, at(n - 2))
                    .add_scaled(1.0, at(n - 3))
            } else {
                at(i + 1).add_scaled(-1.0, at(i - 1))
            };
            d.scaled(inv2h)
        })
        .collect();
    Ok(FieldGrid { shape, values })
}

/// All four first derivatives.
pub fn gradient<T: Linear>(grid: &FieldGrid<T>) -> Result<[FieldGrid<T>; 4]> {
    let d0 = partial_derivative(grid, 0)?;
    let d1 = partial_derivative(grid, 1)?;
    let d2 = partial_derivative(grid, 2)?;
    let d3 = partial_derivative(grid, 3)?;
    Ok([d0, d1, d2, d3])
}

/// Largest value of `f` over all points, accumulated in storage order.
pub fn max_over<T>(grid: &FieldGrid<T>, f: impl Fn(&T) -> f64) -> f64 {
    grid.values.iter().map(f).fold(0.0, f64::max)
}
