//! Binary grid files.
//!
//! Layout, all little-endian: `"DKP5"`, `u32` version, `u8` payload kind,
//! four `u64` extents, four `f64` spacings, then every component of every
//! point as an `(re, im)` pair of `f64` in storage order.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::bilinears::{Tensor, Wavefunction};
use crate::error::{Error, Result};
use crate::grid::{FieldGrid, GridShape};

pub const MAGIC: &[u8; 4] = b"DKP5";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 1 + 4 * 8 + 4 * 8;

const KIND_OFFSET: u64 = 8;
const EXTENTS_OFFSET: usize = 9;
const SPACING_OFFSET: usize = EXTENTS_OFFSET + 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayloadKind {
    Wavefunction = 0,
    FourVector = 1,
    Scalar = 2,
    Tensor = 3,
}

impl PayloadKind {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::Wavefunction),
            1 => Some(Self::FourVector),
            2 => Some(Self::Scalar),
            3 => Some(Self::Tensor),
            _ => None,
        }
    }

    pub fn components(self) -> usize {
        match self {
            Self::Wavefunction => 5,
            Self::FourVector => 4,
            Self::Scalar => 1,
            Self::Tensor => 16,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Wavefunction => "wavefunction",
            Self::FourVector => "four-vector",
            Self::Scalar => "scalar",
            Self::Tensor => "tensor",
        }
    }
}

/// A per-point value with a fixed number of complex components.
pub trait Payload: Sized {
    const KIND: PayloadKind;
    fn push_components(&self, out: &mut Vec<Complex64>);
    /// `comps.len() == KIND.components()`
    fn from_components(comps: &[Complex64]) -> Self;
}

impl Payload for Wavefunction<Complex64> {
    const KIND: PayloadKind = PayloadKind::Wavefunction;
    fn push_components(&self, out: &mut Vec<Complex64>) {
        out.extend_from_slice(&self.0);
    }
    fn from_components(c: &[Complex64]) -> Self {
        Wavefunction(std::array::from_fn(|i| c[i]))
    }
}

impl Payload for [Complex64; 4] {
    const KIND: PayloadKind = PayloadKind::FourVector;
    fn push_components(&self, out: &mut Vec<Complex64>) {
        out.extend_from_slice(self);
    }
    fn from_components(c: &[Complex64]) -> Self {
        std::array::from_fn(|i| c[i])
    }
}

impl Payload for Complex64 {
    const KIND: PayloadKind = PayloadKind::Scalar;
    fn push_components(&self, out: &mut Vec<Complex64>) {
        out.push(*self);
    }
    fn from_components(c: &[Complex64]) -> Self {
        c[0]
    }
}

impl Payload for Tensor<Complex64> {
    const KIND: PayloadKind = PayloadKind::Tensor;
    fn push_components(&self, out: &mut Vec<Complex64>) {
        for row in self {
            out.extend_from_slice(row);
        }
    }
    fn from_components(c: &[Complex64]) -> Self {
        std::array::from_fn(|r| std::array::from_fn(|col| c[4 * r + col]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridHeader {
    pub kind: PayloadKind,
    pub shape: GridShape,
}

pub fn encode<T: Payload>(grid: &FieldGrid<T>) -> Vec<u8> {
    let shape = grid.shape();
    let n = T::KIND.components() * grid.len();
    let mut bytes = Vec::with_capacity(HEADER_LEN + 16 * n);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.push(T::KIND as u8);
    for n in shape.extents() {
        bytes.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for h in shape.spacing() {
        bytes.extend_from_slice(&h.to_le_bytes());
    }
    let mut comps = Vec::with_capacity(T::KIND.components());
    for v in grid.iter() {
        comps.clear();
        v.push_components(&mut comps);
        for c in &comps {
            bytes.extend_from_slice(&c.re.to_le_bytes());
            bytes.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    bytes
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

fn read_u64(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

fn read_f64(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode_header(bytes: &[u8]) -> Result<GridHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(
            bytes.len(),
            format!("truncated header: {} of {HEADER_LEN} bytes", bytes.len()),
        ));
    }
    if &bytes[0..4] != MAGIC {
        return Err(format_err(0, "bad magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let kind = PayloadKind::from_code(bytes[KIND_OFFSET as usize])
        .ok_or_else(|| format_err(8, format!("unknown payload kind {}", bytes[8])))?;
    let mut extents = [0usize; 4];
    for (axis, slot) in extents.iter_mut().enumerate() {
        let at = EXTENTS_OFFSET + 8 * axis;
        let n = read_u64(bytes, at);
        if n == 0 {
            return Err(format_err(at, format!("axis {axis} has extent 0")));
        }
        *slot = usize::try_from(n).map_err(|_| format_err(at, format!("extent {n} too large")))?;
    }
    let mut spacing = [0f64; 4];
    for (axis, slot) in spacing.iter_mut().enumerate() {
        let at = SPACING_OFFSET + 8 * axis;
        let h = read_f64(bytes, at);
        if !(h.is_finite() && h > 0.0) {
            return Err(format_err(at, format!("axis {axis} has invalid spacing {h}")));
        }
        *slot = h;
    }
    let shape = GridShape::new(extents, spacing).map_err(|e| format_err(EXTENTS_OFFSET, e.to_string()))?;
    Ok(GridHeader { kind, shape })
}

pub fn decode<T: Payload>(bytes: &[u8]) -> Result<FieldGrid<T>> {
    let header = decode_header(bytes)?;
    if header.kind != T::KIND {
        return Err(format_err(
            KIND_OFFSET as usize,
            format!("payload is {}, expected {}", header.kind.name(), T::KIND.name()),
        ));
    }
    let ncomp = T::KIND.components();
    let expected = header
        .shape
        .len()
        .checked_mul(16 * ncomp)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| format_err(EXTENTS_OFFSET, "payload size overflows"))?;
    if bytes.len() < expected {
        return Err(format_err(
            bytes.len(),
            format!("truncated payload: {} of {expected} bytes", bytes.len()),
        ));
    }
    if bytes.len() > expected {
        return Err(format_err(
            expected,
            format!("{} trailing bytes", bytes.len() - expected),
        ));
    }
    let payload = &bytes[HEADER_LEN..];
    let values = payload
        .chunks_exact(16 * ncomp)
        .map(|chunk| {
            let comps: Vec<Complex64> = chunk
                .chunks_exact(16)
                .map(|p| Complex64::new(read_f64(p, 0), read_f64(p, 8)))
                .collect();
            T::from_components(&comps)
        })
        .collect();
    FieldGrid::new(header.shape, values)
}

pub fn store<T: Payload>(path: impl AsRef<Path>, grid: &FieldGrid<T>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(grid))?;
    f.flush()?;
    Ok(())
}

pub fn load<T: Payload>(path: impl AsRef<Path>) -> Result<FieldGrid<T>> {
    decode(&fs::read(path)?)
}

pub fn load_header(path: impl AsRef<Path>) -> Result<GridHeader> {
    decode_header(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FieldGrid<Wavefunction<Complex64>> {
        let shape = GridShape::new([3, 2, 1, 2], [0.1, 0.2, 1.0, 0.5]).unwrap();
        FieldGrid::from_fn(shape, |i| {
            Wavefunction(std::array::from_fn(|a| {
                Complex64::new(i as f64 + a as f64 * 0.25, -(a as f64) / 3.0)
            }))
        })
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let g = sample();
        let bytes = encode(&g);
        assert_eq!(bytes.len(), HEADER_LEN + 12 * 5 * 16);
        let back: FieldGrid<Wavefunction<Complex64>> = decode(&bytes).unwrap();
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample());
        assert_eq!(&bytes[0..4], b"DKP5");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(bytes[8], 0);
        assert_eq!(read_u64(&bytes, 9), 3);
        assert_eq!(read_f64(&bytes, 41), 0.1);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let bytes = encode(&sample());
        let cut = &bytes[..bytes.len() - 3];
        match decode::<Wavefunction<Complex64>>(cut) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset as usize, cut.len()),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            decode_header(&bytes[..20]),
            Err(Error::Format { offset: 20, .. })
        ));
    }

    #[test]
    fn zero_extent_is_rejected() {
        let mut bytes = encode(&sample());
        bytes[EXTENTS_OFFSET + 8..EXTENTS_OFFSET + 16].copy_from_slice(&0u64.to_le_bytes());
        assert!(matches!(decode_header(&bytes), Err(Error::Format { offset: 17, .. })));
    }

    #[test]
    fn bad_magic_version_and_kind() {
        let good = encode(&sample());
        let mut b = good.clone();
        b[0] = b'X';
        assert!(matches!(decode_header(&b), Err(Error::Format { offset: 0, .. })));
        let mut b = good.clone();
        b[4] = 2;
        assert!(matches!(decode_header(&b), Err(Error::Format { offset: 4, .. })));
        let mut b = good.clone();
        b[8] = 9;
        assert!(matches!(decode_header(&b), Err(Error::Format { offset: 8, .. })));
        assert!(matches!(
            decode::<[Complex64; 4]>(&good),
            Err(Error::Format { offset: 8, .. })
        ));
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut bytes = encode(&sample());
        let n = bytes.len();
        bytes.push(0);
        assert!(matches!(
            decode::<Wavefunction<Complex64>>(&bytes),
            Err(Error::Format { offset, .. }) if offset as usize == n
        ));
    }

    #[test]
    fn tensor_and_scalar_round_trip() {
        let shape = GridShape::new([3, 1, 1, 1], [0.5; 4]).unwrap();
        let t: FieldGrid<Tensor<Complex64>> = FieldGrid::from_fn(shape, |i| {
            std::array::from_fn(|r| std::array::from_fn(|c| Complex64::new((i * 16 + r * 4 + c) as f64, 1.0)))
        });
        assert_eq!(decode::<Tensor<Complex64>>(&encode(&t)).unwrap(), t);
        let s = t.map(|x| x[1][2]);
        assert_eq!(decode::<Complex64>(&encode(&s)).unwrap(), s);
    }
}
