//! Reconstruction of the gauge potential and field strength from bilinear
//! currents, and the residuals of the relations those currents satisfy on
//! solutions of the minimally coupled DKP equation.
//!
//! Conventions: every four-vector is stored with a lower index, the metric is
//! `diag(1, −1, −1, −1)`, `Z = S − S♭` and `𝒥_μ = J_μ / Z`. Points with
//! `|Z|` below the singularity threshold are masked: they hold zeros and are
//! excluded from every norm.

use num_complex::Complex64;

use crate::algebra::{KemmerRep, METRIC};
use crate::bilinears::{compute_currents, singular_z, CurrentSet, FourVector, Tensor};
use crate::error::{Error, Result};
use crate::fields::{DerivativeMode, PhiField};
use crate::grid::{gradient, FieldGrid, GridShape};
use crate::jet::{stencil_jets, Jet};
use crate::matrix::{DkpMatrix, DIM};

type C = Complex64;
type Rep = KemmerRep<C>;

const ZERO: C = C::new(0.0, 0.0);

fn eta(mu: usize) -> f64 {
    METRIC[mu] as f64
}

/// Threshold on `|Z|` when only `Z` itself is known.
pub const BARE_Z_THRESHOLD: f64 = 1e-10;

/// Reach of composed second-derivative stencils, in points along one axis.
const STENCIL_REACH: usize = 3;

pub fn check_parameters(m: f64, e: f64) -> Result<()> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::Parameter(format!("mass must be positive, got {m}")));
    }
    if !(e.is_finite() && e != 0.0) {
        return Err(Error::Parameter(format!("coupling must be nonzero, got {e}")));
    }
    Ok(())
}

/// A field whose singular points are flagged and hold default values.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedField<T> {
    pub values: FieldGrid<T>,
    /// `true` marks a singular point.
    pub mask: Vec<bool>,
}

impl<T> MaskedField<T> {
    pub fn masked_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&b| b).count() as f64 / self.mask.len() as f64
    }

    /// Unmasked values in storage order.
    pub fn unmasked(&self) -> impl Iterator<Item = &T> {
        self.values.iter().zip(&self.mask).filter(|(_, &m)| !m).map(|(v, _)| v)
    }

    pub fn shape(&self) -> &GridShape {
        self.values.shape()
    }
}

fn masked_from_fn<T>(shape: GridShape, mask: &[bool], default: T, mut f: impl FnMut(usize) -> T) -> MaskedField<T>
where
    T: Clone,
{
    MaskedField {
        values: FieldGrid::from_fn(shape, |i| if mask[i] { default.clone() } else { f(i) }),
        mask: mask.to_vec(),
    }
}

fn require_unmasked(mask: &[bool]) -> Result<()> {
    if mask.iter().all(|&b| b) {
        Err(Error::EmptyDomain)
    } else {
        Ok(())
    }
}

/// Grow a mask by `reach` points along every non-symmetry axis (box dilation),
/// covering every point whose stencils read a masked value.
pub fn dilate_mask(shape: &GridShape, mask: &[bool], reach: usize) -> Vec<bool> {
    let mut out = mask.to_vec();
    for axis in 0..4 {
        let n = shape.extents()[axis];
        if n == 1 {
            continue;
        }
        let stride = shape.stride(axis);
        let src = out.clone();
        for (p, slot) in out.iter_mut().enumerate() {
            let i = (p / stride) % n;
            let lo = i.saturating_sub(reach);
            let hi = (i + reach).min(n - 1);
            *slot = (lo..=hi).any(|k| src[p - i * stride + k * stride]);
        }
    }
    out
}

/// Singular points of a current grid.
pub fn singular_mask(sets: &FieldGrid<CurrentSet<C>>) -> Vec<bool> {
    sets.iter().map(|cs| singular_z(cs).is_some()).collect()
}

/// Jets of the currents that enter the inversion.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CurrentJets {
    pub s: Jet,
    pub s_flat: Jet,
    pub z: Jet,
    pub tilde_z: Jet,
    pub j: [Jet; 4],
    pub h: [Jet; 4],
}

/// Currents at every point together with their derivatives.
#[derive(Clone, Debug)]
pub struct CurrentField {
    sets: FieldGrid<CurrentSet<C>>,
    jets: Vec<CurrentJets>,
    mode: DerivativeMode,
}

/// Nonzero entries of `ηM`, so that `Φ̄MΦ = Σ conj(Φ_r) (ηM)_{rc} Φ_c`.
fn form_entries(rep: &Rep, m: &DkpMatrix<C>) -> Vec<(usize, usize, C)> {
    let l = &rep.eta * m;
    let mut out = Vec::new();
    for r in 0..DIM {
        for c in 0..DIM {
            if l[(r, c)] != ZERO {
                out.push((r, c, l[(r, c)]));
            }
        }
    }
    out
}

fn form_jet(entries: &[(usize, usize, C)], left: &[Jet; DIM], right: &[Jet; DIM]) -> Jet {
    entries
        .iter()
        .fold(Jet::default(), |acc, &(r, c, w)| acc + (left[r] * right[c]).scale(w))
}

impl CurrentField {
    /// Currents of `phi`; derivatives follow the field's derivative mode.
    pub fn from_phi(rep: &Rep, phi: &PhiField) -> Result<Self> {
        let sets = phi.values().map(|w| compute_currents(rep, w));
        match phi.jets() {
            None => Self::from_sets(sets),
            Some(wave_jets) => {
                let id = form_entries(rep, &DkpMatrix::identity());
                let sq = form_entries(rep, &rep.beta_sq);
                let zeta = form_entries(rep, &rep.zeta);
                let beta: Vec<_> = rep.beta.iter().map(|b| form_entries(rep, b)).collect();
                let dot: Vec<_> = rep.beta_dot.iter().map(|b| form_entries(rep, b)).collect();
                let jets = wave_jets
                    .iter()
                    .map(|wj| {
                        let c: [Jet; DIM] = std::array::from_fn(|a| wj.component(a));
                        let cc = c.map(|j| j.conj());
                        CurrentJets {
                            s: form_jet(&id, &cc, &c),
                            s_flat: form_jet(&sq, &cc, &c),
                            z: form_jet(&zeta, &cc, &c),
                            tilde_z: form_jet(&zeta, &c, &c),
                            j: std::array::from_fn(|mu| form_jet(&beta[mu], &cc, &c)),
                            h: std::array::from_fn(|mu| form_jet(&dot[mu], &cc, &c)),
                        }
                    })
                    .collect();
                Ok(Self {
                    sets,
                    jets,
                    mode: DerivativeMode::Analytic,
                })
            }
        }
    }

    /// Currents given pointwise; derivatives from stencils.
    pub fn from_sets(sets: FieldGrid<CurrentSet<C>>) -> Result<Self> {
        let scalar = |f: &dyn Fn(&CurrentSet<C>) -> C| stencil_jets(&sets.map(f));
        let s = scalar(&|c| c.s)?;
        let s_flat = scalar(&|c| c.s_flat)?;
        let z = scalar(&|c| c.z)?;
        let tilde_z = scalar(&|c| c.tilde_z)?;
        let mut j = Vec::with_capacity(4);
        let mut h = Vec::with_capacity(4);
        for mu in 0..4 {
            j.push(scalar(&|c| c.j[mu])?);
            h.push(scalar(&|c| c.h[mu])?);
        }
        let jets = (0..sets.len())
            .map(|i| CurrentJets {
                s: s.values()[i],
                s_flat: s_flat.values()[i],
                z: z.values()[i],
                tilde_z: tilde_z.values()[i],
                j: std::array::from_fn(|mu| j[mu].values()[i]),
                h: std::array::from_fn(|mu| h[mu].values()[i]),
            })
            .collect();
        Ok(Self {
            sets,
            jets,
            mode: DerivativeMode::Stencil,
        })
    }

    pub fn sets(&self) -> &FieldGrid<CurrentSet<C>> {
        &self.sets
    }

    pub fn jets(&self) -> &[CurrentJets] {
        &self.jets
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn shape(&self) -> &GridShape {
        self.sets.shape()
    }

    pub fn singular_mask(&self) -> Vec<bool> {
        singular_mask(&self.sets)
    }
}

/// `A_μ = (3m/2e) J_μ / Z`: the potential in the gauge where `Z̃` is real.
pub fn invert_potential_gauge_fixed(
    currents: &FieldGrid<CurrentSet<C>>,
    m: f64,
    e: f64,
) -> Result<MaskedField<FourVector<C>>> {
    check_parameters(m, e)?;
    let mask = singular_mask(currents);
    require_unmasked(&mask)?;
    let c = 1.5 * m / e;
    let v = currents.values();
    Ok(masked_from_fn(*currents.shape(), &mask, [ZERO; 4], |i| {
        v[i].j.map(|j| c * j / v[i].z)
    }))
}

/// `A_μ = (3m/2e) J_μ/Z + (1/2e) i(Φ̄ζ∂_μΦ − ∂_μΦ̄ζΦ)/Z`, where
/// `Φ̄ζ∂Φ = Φ̄∂Φ − Φ̄β²∂Φ`. Reproduces the potential of any solution exactly.
pub fn invert_potential_full(rep: &Rep, phi: &PhiField, m: f64, e: f64) -> Result<MaskedField<FourVector<C>>> {
    check_parameters(m, e)?;
    let sets = phi.values().map(|w| compute_currents(rep, w));
    let mask = singular_mask(&sets);
    require_unmasked(&mask)?;
    let dphi = phi.first_derivatives()?;
    let i_unit = C::i();
    let c = 1.5 * m / e;
    Ok(masked_from_fn(*phi.shape(), &mask, [ZERO; 4], |p| {
        let w = &phi.values().values()[p];
        let bar = w.bar(rep);
        let cs = &sets.values()[p];
        std::array::from_fn(|mu| {
            let d = &dphi[mu].values()[p];
            let zd = rep.zeta.mul_vec(&d.0);
            let zw = rep.zeta.mul_vec(&w.0);
            let x: C = (0..DIM).map(|a| bar[a] * zd[a]).sum();
            let x_rev: C = d.bar(rep).iter().zip(&zw).map(|(a, b)| a * b).sum();
            c * cs.j[mu] / cs.z + i_unit * (x - x_rev) / (2.0 * e * cs.z)
        })
    }))
}

/// `(1/2e) · ½i(∂_μZ̃/Z̃ − ∂_μZ̃*/Z̃*) = −(1/2e) Im(∂_μ ln Z̃)`, the pure-gauge
/// difference between the full and gauge-fixed potentials.
pub fn gauge_term(rep: &Rep, phi: &PhiField, e: f64) -> Result<MaskedField<FourVector<C>>> {
    gauge_term_from_currents(&CurrentField::from_phi(rep, phi)?, e)
}

pub fn gauge_term_from_currents(currents: &CurrentField, e: f64) -> Result<MaskedField<FourVector<C>>> {
    check_parameters(1.0, e)?;
    let mask = currents.singular_mask();
    require_unmasked(&mask)?;
    let jets = currents.jets();
    Ok(masked_from_fn(*currents.shape(), &mask, [ZERO; 4], |p| {
        let tz = jets[p].tilde_z;
        std::array::from_fn(|mu| {
            let log_d = tz.d[mu] / tz.v;
            let half_i = C::new(0.0, 0.5);
            half_i * (log_d - log_d.conj()) / (2.0 * e)
        })
    }))
}

fn curl(d: &[FourVector<C>; 4]) -> Tensor<C> {
    // d[a][b] = ∂_a A_b
    std::array::from_fn(|mu| std::array::from_fn(|nu| d[mu][nu] - d[nu][mu]))
}

/// `F_μν = ∂_μA_ν − ∂_νA_μ` by stencils.
pub fn field_strength_from_potential(a: &FieldGrid<FourVector<C>>) -> Result<FieldGrid<Tensor<C>>> {
    let g = gradient(a)?;
    Ok(FieldGrid::from_fn(*a.shape(), |p| {
        curl(&std::array::from_fn(|mu| g[mu].values()[p]))
    }))
}

/// `F_μν` from closed-form derivatives of the potential.
pub fn field_strength_from_jets(a: &[Jet; 4]) -> Tensor<C> {
    curl(&std::array::from_fn(|mu| std::array::from_fn(|nu| a[nu].d[mu])))
}

/// `F_μν = (3m/2e) [D_μJ_ν − D_νJ_μ] / Z` with `D_μ = ∂_μ + 3mi H_μ/Z`.
pub fn field_strength_bilinear(currents: &CurrentField, m: f64, e: f64) -> Result<MaskedField<Tensor<C>>> {
    check_parameters(m, e)?;
    let mask = currents.singular_mask();
    require_unmasked(&mask)?;
    let c = 1.5 * m / e;
    let three_mi = C::new(0.0, 3.0 * m);
    let jets = currents.jets();
    Ok(masked_from_fn(*currents.shape(), &mask, [[ZERO; 4]; 4], |p| {
        let cj = &jets[p];
        let z = cj.z.v;
        let dj = |mu: usize, nu: usize| cj.j[nu].d[mu] + three_mi * cj.h[mu].v * cj.j[nu].v / z;
        std::array::from_fn(|mu| std::array::from_fn(|nu| c * (dj(mu, nu) - dj(nu, mu)) / z))
    }))
}

/// Residuals of the current-divergence relations, each LHS − RHS.
#[derive(Clone, Debug)]
pub struct DivergenceResiduals {
    /// `∂_μJ^μ`
    pub dj: FieldGrid<C>,
    /// `∂_μH^μ − ⅓im(4S♭ − 10S)`
    pub dh: FieldGrid<C>,
    /// `eJ^μA_μ − [½i(Φ̄β^μ∂_μΦ − ∂_μΦ̄β^μΦ) − mS]`
    pub ja: FieldGrid<C>,
    /// `eH^μA_μ − ½i(Φ̄β•^μ∂_μΦ − ∂_μΦ̄β•^μΦ)`
    pub ha: FieldGrid<C>,
}

pub fn divergence_identities(
    rep: &Rep,
    phi: &PhiField,
    a: &FieldGrid<FourVector<C>>,
    m: f64,
    e: f64,
) -> Result<DivergenceResiduals> {
    divergence_from_currents(rep, phi, &CurrentField::from_phi(rep, phi)?, a, m, e)
}

fn divergence_from_currents(
    rep: &Rep,
    phi: &PhiField,
    currents: &CurrentField,
    a: &FieldGrid<FourVector<C>>,
    m: f64,
    e: f64,
) -> Result<DivergenceResiduals> {
    phi.shape().check_compatible(a.shape())?;
    let dphi = phi.first_derivatives()?;
    let shape = *phi.shape();
    let half_i = C::new(0.0, 0.5);
    let third_im = C::new(0.0, m / 3.0);
    let beta_up: [_; 4] = std::array::from_fn(|mu| rep.beta_up(mu));
    let dot_up: [_; 4] = std::array::from_fn(|mu| rep.beta_dot_up(mu));
    let n = shape.len();
    let (mut dj, mut dh, mut ja, mut ha) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for p in 0..n {
        let cj = &currents.jets()[p];
        let w = &phi.values().values()[p];
        let bar = w.bar(rep);
        let ap = &a.values()[p];
        let mut div_j = ZERO;
        let mut div_h = ZERO;
        let mut j_a = ZERO;
        let mut h_a = ZERO;
        let mut flow_j = ZERO;
        let mut flow_h = ZERO;
        for mu in 0..4 {
            let g = eta(mu);
            div_j += g * cj.j[mu].d[mu];
            div_h += g * cj.h[mu].d[mu];
            j_a += g * cj.j[mu].v * ap[mu];
            h_a += g * cj.h[mu].v * ap[mu];
            let d = &dphi[mu].values()[p];
            let d_bar = d.bar(rep);
            let sand = |mat: &DkpMatrix<C>, l: &[C; DIM], r: &[C; DIM]| -> C {
                l.iter().zip(&mat.mul_vec(r)).map(|(x, y)| x * y).sum()
            };
            flow_j += sand(&beta_up[mu], &bar, &d.0) - sand(&beta_up[mu], &d_bar, &w.0);
            flow_h += sand(&dot_up[mu], &bar, &d.0) - sand(&dot_up[mu], &d_bar, &w.0);
        }
        dj.push(div_j);
        dh.push(div_h - third_im * (4.0 * cj.s_flat.v - 10.0 * cj.s.v));
        ja.push(e * j_a - (half_i * flow_j - m * cj.s.v));
        ha.push(e * h_a - half_i * flow_h);
    }
    Ok(DivergenceResiduals {
        dj: FieldGrid::new(shape, dj)?,
        dh: FieldGrid::new(shape, dh)?,
        ja: FieldGrid::new(shape, ja)?,
        ha: FieldGrid::new(shape, ha)?,
    })
}

/// `H_μ − (i/3m) ∂_μZ`
pub fn h_elimination_residual(currents: &CurrentField, m: f64) -> Result<FieldGrid<FourVector<C>>> {
    check_parameters(m, 1.0)?;
    let c = C::new(0.0, 1.0 / (3.0 * m));
    let jets = currents.jets();
    Ok(FieldGrid::from_fn(*currents.shape(), |p| {
        std::array::from_fn(|mu| jets[p].h[mu].v - c * jets[p].z.d[mu])
    }))
}

/// `Z` and `𝒥_μ = J_μ/Z` with derivatives, the unknowns of the reduced system.
#[derive(Clone, Debug)]
pub struct ReducedState {
    shape: GridShape,
    pub z: Vec<Jet>,
    pub jcal: Vec<[Jet; 4]>,
    pub mask: Vec<bool>,
    pub m: f64,
    pub e: f64,
}

impl ReducedState {
    /// Analytic current jets give `𝒥` jets by the quotient rule; stencil
    /// currents give `𝒥` samples that are differentiated by stencils.
    pub fn from_currents(currents: &CurrentField, m: f64, e: f64) -> Result<Self> {
        check_parameters(m, e)?;
        let mask = currents.singular_mask();
        require_unmasked(&mask)?;
        let shape = *currents.shape();
        match currents.mode() {
            DerivativeMode::Analytic => {
                let jets = currents.jets();
                let jcal = (0..shape.len())
                    .map(|p| {
                        if mask[p] {
                            [Jet::default(); 4]
                        } else {
                            jets[p].j.map(|j| j / jets[p].z)
                        }
                    })
                    .collect();
                Ok(Self {
                    shape,
                    z: jets.iter().map(|c| c.z).collect(),
                    jcal,
                    mask,
                    m,
                    e,
                })
            }
            DerivativeMode::Stencil => {
                let sets = currents.sets();
                let z = sets.map(|c| c.z);
                let jcal = FieldGrid::from_fn(shape, |p| {
                    let c = &sets.values()[p];
                    if mask[p] {
                        [ZERO; 4]
                    } else {
                        c.j.map(|j| j / c.z)
                    }
                });
                Self::stencil(z, jcal, mask, m, e)
            }
        }
    }

    /// Sampled `Z` and `𝒥`; points with `|Z| < 1e-10` are masked.
    pub fn from_fields(z: FieldGrid<C>, jcal: FieldGrid<FourVector<C>>, m: f64, e: f64) -> Result<Self> {
        check_parameters(m, e)?;
        z.shape().check_compatible(jcal.shape())?;
        let mask: Vec<bool> = z.iter().map(|v| v.norm() < BARE_Z_THRESHOLD).collect();
        require_unmasked(&mask)?;
        Self::stencil(z, jcal, mask, m, e)
    }

    fn stencil(z: FieldGrid<C>, jcal: FieldGrid<FourVector<C>>, mask: Vec<bool>, m: f64, e: f64) -> Result<Self> {
        let shape = *z.shape();
        let mask = dilate_mask(&shape, &mask, STENCIL_REACH);
        require_unmasked(&mask)?;
        let zj = stencil_jets(&z)?;
        let comps = (0..4)
            .map(|mu| stencil_jets(&jcal.map(|v| v[mu])))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            shape,
            z: zj.into_values(),
            jcal: (0..shape.len())
                .map(|p| std::array::from_fn(|mu| comps[mu].values()[p]))
                .collect(),
            mask,
            m,
            e,
        })
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }
}

/// Residuals of the reduced system, each LHS − RHS.
#[derive(Clone, Debug)]
pub struct ReducedResiduals {
    /// `(∂²δ_μ^ν − ∂_μ∂^ν)𝒥_ν − (2e²/m) Z 𝒥_μ`; does not vanish in a fixed
    /// external potential.
    pub field_eq: MaskedField<FourVector<C>>,
    /// The field-equation LHS `∂²𝒥_μ − ∂_μ∂^ν𝒥_ν` alone.
    pub field_eq_lhs: MaskedField<FourVector<C>>,
    /// `Z ∂_μ𝒥^μ + 𝒥^μ ∂_μZ`
    pub conservation: MaskedField<C>,
    /// `𝒥_μ𝒥^μ − (2/9m²)[∂∂Z/Z − (∂Z)(∂Z)/2Z²] − 4/9`
    pub modulus: MaskedField<C>,
}

pub fn reduced_system_residuals(state: &ReducedState) -> Result<ReducedResiduals> {
    let (m, e) = (state.m, state.e);
    check_parameters(m, e)?;
    require_unmasked(&state.mask)?;
    let shape = state.shape;
    let mask = &state.mask;
    let lhs = |p: usize| -> FourVector<C> {
        let jc = &state.jcal[p];
        std::array::from_fn(|mu| {
            let grad_div: C = (0..4).map(|nu| eta(nu) * jc[nu].dd[mu][nu]).sum();
            jc[mu].dalembertian() - grad_div
        })
    };
    let field_eq_lhs = masked_from_fn(shape, mask, [ZERO; 4], lhs);
    let coupling = 2.0 * e * e / m;
    let field_eq = masked_from_fn(shape, mask, [ZERO; 4], |p| {
        let l = field_eq_lhs.values.values()[p];
        let z = state.z[p].v;
        std::array::from_fn(|mu| l[mu] - coupling * z * state.jcal[p][mu].v)
    });
    let conservation = masked_from_fn(shape, mask, ZERO, |p| {
        let (z, jc) = (&state.z[p], &state.jcal[p]);
        (0..4)
            .map(|mu| eta(mu) * (z.v * jc[mu].d[mu] + jc[mu].v * z.d[mu]))
            .sum()
    });
    let modulus = masked_from_fn(shape, mask, ZERO, |p| {
        let (z, jc) = (&state.z[p], &state.jcal[p]);
        let jj: C = (0..4).map(|mu| eta(mu) * jc[mu].v * jc[mu].v).sum();
        let dzdz: C = (0..4).map(|mu| eta(mu) * z.d[mu] * z.d[mu]).sum();
        let bracket = z.dalembertian() / z.v - dzdz / (2.0 * z.v * z.v);
        jj - 2.0 / (9.0 * m * m) * bracket - 4.0 / 9.0
    });
    Ok(ReducedResiduals {
        field_eq,
        field_eq_lhs,
        conservation,
        modulus,
    })
}

/// `∂^νF_νμ` by stencils.
pub fn field_strength_divergence(f: &FieldGrid<Tensor<C>>) -> Result<FieldGrid<FourVector<C>>> {
    let g = gradient(f)?;
    Ok(FieldGrid::from_fn(*f.shape(), |p| {
        std::array::from_fn(|mu| (0..4).map(|nu| eta(nu) * g[nu].values()[p][nu][mu]).sum())
    }))
}

/// `∂^νF_νμ` for `F = dA` from closed-form second derivatives of `A`.
pub fn field_strength_divergence_from_jets(a: &[Jet; 4]) -> FourVector<C> {
    std::array::from_fn(|mu| (0..4).map(|nu| eta(nu) * (a[mu].dd[nu][nu] - a[nu].dd[nu][mu])).sum())
}

/// Everything the inversion reconstructs from a wavefunction field.
#[derive(Clone, Debug)]
pub struct InversionOutput {
    pub mode: DerivativeMode,
    pub currents: CurrentField,
    pub singular_mask: Vec<bool>,
    pub a_full: MaskedField<FourVector<C>>,
    pub a_gauge_fixed: MaskedField<FourVector<C>>,
    pub gauge_term: MaskedField<FourVector<C>>,
    /// Curl of the gauge-fixed potential.
    pub f_from_a: MaskedField<Tensor<C>>,
    pub f_bilinear: MaskedField<Tensor<C>>,
    /// Divergence relations evaluated with the reconstructed `A_full`.
    pub divergence: DivergenceResiduals,
    pub h_elimination: FieldGrid<FourVector<C>>,
    pub reduced: ReducedResiduals,
    /// `(2e/3m) ∂^νF_νμ` from `f_from_a`; must match `reduced.field_eq_lhs`.
    pub field_eq_lhs_from_f: MaskedField<FourVector<C>>,
}

pub fn invert_pipeline(rep: &Rep, phi: &PhiField, m: f64, e: f64) -> Result<InversionOutput> {
    check_parameters(m, e)?;
    let currents = CurrentField::from_phi(rep, phi)?;
    let mask = currents.singular_mask();
    require_unmasked(&mask)?;
    let shape = *phi.shape();
    let a_full = invert_potential_full(rep, phi, m, e)?;
    let a_gauge_fixed = invert_potential_gauge_fixed(currents.sets(), m, e)?;
    let gauge = gauge_term_from_currents(&currents, e)?;
    let f_bilinear = field_strength_bilinear(&currents, m, e)?;
    let state = ReducedState::from_currents(&currents, m, e)?;
    let reduced = reduced_system_residuals(&state)?;
    let to_jcal = 2.0 * e / (3.0 * m);
    let (f_from_a, field_eq_lhs_from_f) = match currents.mode() {
        DerivativeMode::Analytic => {
            let c = 1.5 * m / e;
            let a_jets: Vec<[Jet; 4]> = state
                .jcal
                .iter()
                .map(|jc| jc.map(|j| j.scale(C::new(c, 0.0))))
                .collect();
            (
                masked_from_fn(shape, &mask, [[ZERO; 4]; 4], |p| field_strength_from_jets(&a_jets[p])),
                masked_from_fn(shape, &mask, [ZERO; 4], |p| {
                    field_strength_divergence_from_jets(&a_jets[p]).map(|x| to_jcal * x)
                }),
            )
        }
        DerivativeMode::Stencil => {
            let f = field_strength_from_potential(&a_gauge_fixed.values)?;
            let div = field_strength_divergence(&f)?;
            let first = dilate_mask(&shape, &mask, 2);
            let second = dilate_mask(&shape, &mask, STENCIL_REACH);
            (
                masked_from_fn(shape, &first, [[ZERO; 4]; 4], |p| f.values()[p]),
                masked_from_fn(shape, &second, [ZERO; 4], |p| div.values()[p].map(|x| to_jcal * x)),
            )
        }
    };
    let divergence = divergence_from_currents(rep, phi, &currents, &a_full.values, m, e)?;
    let h_elimination = h_elimination_residual(&currents, m)?;
    Ok(InversionOutput {
        mode: currents.mode(),
        singular_mask: mask,
        currents,
        a_full,
        a_gauge_fixed,
        gauge_term: gauge,
        f_from_a,
        f_bilinear,
        divergence,
        h_elimination,
        reduced,
        field_eq_lhs_from_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_representation;
    use crate::bilinears::Wavefunction;
    use crate::fields::{manufacture_plane_wave, Mode, ModeSum, PlaneWaveSpec};

    fn rep() -> Rep {
        build_representation()
    }

    fn shape() -> GridShape {
        GridShape::new([5, 4, 1, 3], [0.1, 0.15, 1.0, 0.2]).unwrap()
    }

    fn rest_wave() -> PhiField {
        let spec = PlaneWaveSpec {
            p: [1.0, 0.0, 0.0, 0.0],
            a: [0.0; 4],
            m: 1.0,
            e: 1.0,
            amplitude: C::new(1.0, 0.0),
        };
        manufacture_plane_wave(&spec, shape()).unwrap()
    }

    fn max4(f: &MaskedField<FourVector<C>>) -> f64 {
        f.unmasked().flatten().map(|x| x.norm()).fold(0.0, f64::max)
    }

    fn max_t(f: &MaskedField<Tensor<C>>) -> f64 {
        f.unmasked().flatten().flatten().map(|x| x.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn rest_frame_routes() {
        let r = rep();
        let phi = rest_wave();
        let full = invert_potential_full(&r, &phi, 1.0, 1.0).unwrap();
        assert!(max4(&full) < 1e-13);
        let sets = phi.values().map(|w| compute_currents(&r, w));
        let gf = invert_potential_gauge_fixed(&sets, 1.0, 1.0).unwrap();
        for v in gf.unmasked() {
            assert!((v[0] - C::new(-1.0, 0.0)).norm() < 1e-13);
            assert!(v[1..].iter().all(|x| x.norm() < 1e-13));
        }
        let gt = gauge_term(&r, &phi, 1.0).unwrap();
        for v in gt.unmasked() {
            assert!((v[0] - C::new(1.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn unit_scalar_slot_gives_zero_gauge_fixed_potential() {
        let cs = compute_currents(&rep(), &Wavefunction([0, 0, 0, 0, 1].map(|x| C::new(x as f64, 0.0))));
        let g = FieldGrid::constant(shape(), cs);
        let a = invert_potential_gauge_fixed(&g, 2.0, 0.5).unwrap();
        assert_eq!(max4(&a), 0.0);
    }

    #[test]
    fn parameter_errors() {
        let r = rep();
        let phi = rest_wave();
        assert!(matches!(
            invert_potential_full(&r, &phi, 1.0, 0.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            invert_potential_full(&r, &phi, 0.0, 1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn zero_field_is_empty_domain() {
        let phi = PhiField::sampled(FieldGrid::constant(shape(), Wavefunction::zero()));
        assert!(matches!(
            invert_pipeline(&rep(), &phi, 1.0, 1.0),
            Err(Error::EmptyDomain)
        ));
    }

    #[test]
    fn vanishing_scalar_slot_is_empty_domain() {
        let w = Wavefunction([C::new(1.0, 0.0), C::new(0.0, 2.0), C::new(0.5, 0.0), ZERO, ZERO]);
        let phi = PhiField::sampled(FieldGrid::constant(shape(), w));
        assert!(matches!(
            invert_pipeline(&rep(), &phi, 1.0, 1.0),
            Err(Error::EmptyDomain)
        ));
    }

    #[test]
    fn linear_potential_curl() {
        let b = 0.7;
        let a = FieldGrid::from_positions(shape(), |x| [ZERO, C::new(b * x[0], 0.0), ZERO, ZERO]);
        let f = field_strength_from_potential(&a).unwrap();
        for t in f.iter() {
            for mu in 0..4 {
                for nu in 0..4 {
                    let want = match (mu, nu) {
                        (0, 1) => b,
                        (1, 0) => -b,
                        _ => 0.0,
                    };
                    assert!((t[mu][nu] - C::new(want, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    fn wavy() -> ModeSum {
        let amp = |s: f64| -> [C; DIM] {
            std::array::from_fn(|a| C::new(0.3 * s + 0.1 * a as f64, 0.2 - 0.05 * s * a as f64))
        };
        ModeSum {
            modes: vec![
                Mode {
                    amplitude: amp(1.0),
                    momentum: [1.3, 0.4, 0.0, -0.2],
                },
                Mode {
                    amplitude: amp(-2.0),
                    momentum: [-0.7, 0.1, 0.0, 0.5],
                },
                Mode {
                    amplitude: [0.0, 0.0, 0.0, 0.0, 1.5].map(|x| C::new(x, 0.0)),
                    momentum: [0.0; 4],
                },
            ],
        }
    }

    #[test]
    fn decomposition_holds_for_non_solutions() {
        let r = rep();
        let phi = wavy().sample(shape()).unwrap();
        for field in [phi.clone(), phi.to_sampled()] {
            let out = invert_pipeline(&r, &field, 1.2, -0.8).unwrap();
            for p in 0..shape().len() {
                if out.singular_mask[p] {
                    continue;
                }
                for mu in 0..4 {
                    let lhs = out.a_full.values.values()[p][mu];
                    let rhs = out.a_gauge_fixed.values.values()[p][mu] + out.gauge_term.values.values()[p][mu];
                    let tol = if field.mode() == DerivativeMode::Analytic {
                        1e-10
                    } else {
                        0.05
                    };
                    assert!((lhs - rhs).norm() < tol * (1.0 + lhs.norm()), "{p} {mu}: {lhs} {rhs}");
                }
            }
        }
    }

    #[test]
    fn field_strength_routes_agree_when_h_is_eliminated() {
        // On a solution the routes agree; here the F difference must track the
        // H-elimination defect.
        let r = rep();
        let phi = wavy().sample(shape()).unwrap();
        let out = invert_pipeline(&r, &phi, 1.0, 1.0).unwrap();
        for t in out.f_bilinear.unmasked().chain(out.f_from_a.unmasked()) {
            for mu in 0..4 {
                for nu in 0..4 {
                    assert!((t[mu][nu] + t[nu][mu]).norm() == 0.0);
                }
            }
        }
        let jets = out.currents.jets();
        let (m, e) = (1.0, 1.0);
        for p in 0..shape().len() {
            if out.singular_mask[p] {
                continue;
            }
            let cj = &jets[p];
            let z = cj.z.v;
            let defect = out.h_elimination.values()[p];
            for mu in 0..4 {
                for nu in 0..4 {
                    // F_bil − F_A = (3m/2e)(3mi/Z²)(δH_μ J_ν − δH_ν J_μ)
                    let want = 1.5 * m / e * C::new(0.0, 3.0 * m) / (z * z)
                        * (defect[mu] * cj.j[nu].v - defect[nu] * cj.j[mu].v);
                    let got = out.f_bilinear.values.values()[p][mu][nu] - out.f_from_a.values.values()[p][mu][nu];
                    assert!((got - want).norm() < 1e-9 * (1.0 + want.norm()), "{got} {want}");
                }
            }
        }
        assert!(max_t(&out.f_bilinear) > 1e-3);
    }

    #[test]
    fn reduced_negative_control() {
        let s = shape();
        let state = ReducedState::from_fields(
            FieldGrid::constant(s, C::new(2.0, 0.0)),
            FieldGrid::constant(s, [ZERO; 4]),
            1.0,
            1.0,
        )
        .unwrap();
        let res = reduced_system_residuals(&state).unwrap();
        for v in res.modulus.unmasked() {
            assert!((v - C::new(-4.0 / 9.0, 0.0)).norm() < 1e-15);
        }
        assert!(res.conservation.unmasked().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn h_elimination_reports_imposed_h() {
        let s = shape();
        let mut cs = CurrentSet::from_scalars(C::new(2.0, 0.0), C::new(5.0, 0.0));
        cs.h = [C::new(0.0, 0.5), ZERO, C::new(0.0, -1.0), ZERO];
        let field = CurrentField::from_sets(FieldGrid::constant(s, cs.clone())).unwrap();
        let res = h_elimination_residual(&field, 1.0).unwrap();
        assert!(res.iter().all(|v| v == &cs.h));
    }

    #[test]
    fn dilation_reaches_along_active_axes_only() {
        let s = GridShape::new([7, 1, 1, 1], [1.0; 4]).unwrap();
        let mut mask = vec![false; 7];
        mask[3] = true;
        assert_eq!(
            dilate_mask(&s, &mask, 2),
            vec![false, true, true, true, true, true, false]
        );
    }
}
