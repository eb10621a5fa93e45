use crate::commands::grid::load_wavefunctions;
use crate::io::{emit, ensure_distinct, exit_code, parse_four, CliError, CliResult, Sidecar};
use clap::Args;
use dkp_core::algebra::{build_representation, KemmerRep};
use dkp_core::bilinears::FourVector;
use dkp_core::fields::{dkp_residual, manufacture_plane_wave, DerivativeMode, PhiField, PlaneWaveSpec};
use dkp_core::grid::{FieldGrid, GridShape};
use dkp_core::gridfile;
use dkp_core::inversion::{divergence_identities, invert_pipeline, CurrentField};
use dkp_core::report::{
    convergence, default_tolerance, inversion_report, inversion_report_with_profiles, measure, Magnitude, Profile,
    Report, ReportEntry,
};
use num_complex::Complex64 as C;
use std::path::{Path, PathBuf};

/// Largest relative gap between a grid and the plane wave its sidecar describes.
pub const SIDECAR_MATCH_TOL: f64 = 1e-12;

#[derive(Args, Debug)]
pub struct FieldSource {
    /// Wavefunction grid.
    pub input: PathBuf,
    /// Plane-wave parameters of the grid. Enables analytic derivatives and the reference potential.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Mass; taken from the sidecar when omitted.
    #[arg(long)]
    pub m: Option<f64>,
    /// Charge; taken from the sidecar when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub e: Option<f64>,
    /// Finite-difference derivatives even when a sidecar is given.
    #[arg(long)]
    pub fd: bool,
}

struct Loaded {
    phi: PhiField,
    spec: Option<PlaneWaveSpec>,
    m: f64,
    e: f64,
}

impl Loaded {
    fn reference(&self) -> Option<FieldGrid<FourVector<C>>> {
        self.spec.as_ref().map(|s| s.potential(*self.phi.shape()))
    }
}

fn parameter(flag: Option<f64>, car: Option<f64>, name: &str) -> CliResult<f64> {
    match (flag, car) {
        (Some(a), Some(b)) if a != b => Err(CliError::invalid(format!(
            "--{name} {a} disagrees with the sidecar value {b}"
        ))),
        (Some(a), _) | (None, Some(a)) => Ok(a),
        (None, None) => Err(CliError::invalid(format!("--{name} is required without a sidecar"))),
    }
}

fn matches_sidecar(grid: &FieldGrid<dkp_core::fields::Wave>, analytic: &PhiField) -> bool {
    let scale = 1.0 + grid.iter().map(Magnitude::magnitude).fold(0.0, f64::max);
    grid.iter().zip(analytic.values().iter()).all(|(a, b)| {
        a.0.iter()
            .zip(&b.0)
            .all(|(x, y)| (x - y).norm() <= SIDECAR_MATCH_TOL * scale)
    })
}

fn load(path: &Path, src: &FieldSource, stencil: bool) -> CliResult<Loaded> {
    let grid = load_wavefunctions(path)?;
    let shape = *grid.shape();
    let car = src.sidecar.as_deref().map(Sidecar::load).transpose()?;
    let m = parameter(src.m, car.as_ref().map(|c| c.m), "m")?;
    let e = parameter(src.e, car.as_ref().map(|c| c.e), "e")?;
    let spec = car.map(|c| c.spec());
    let phi = match &spec {
        Some(spec) => {
            let analytic = manufacture_plane_wave(spec, shape)?;
            if !matches_sidecar(&grid, &analytic) {
                return Err(CliError::invalid(format!(
                    "{} does not match its sidecar",
                    path.display()
                )));
            }
            if stencil {
                PhiField::sampled(grid)
            } else {
                analytic
            }
        }
        None => PhiField::sampled(grid),
    };
    Ok(Loaded { phi, spec, m, e })
}

fn profile_csv(path: &Path, shape: &GridShape, profiles: &[Profile]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["i0", "i1", "i2", "i3", "x0", "x1", "x2", "x3"]
        .map(String::from)
        .to_vec();
    header.extend(profiles.iter().map(|p| p.identity.clone()));
    w.write_record(&header)?;
    for p in 0..shape.len() {
        let idx = shape.multi_index(p).map(|i| i.to_string());
        let x = shape.position(p).map(|v| v.to_string());
        let cells = profiles
            .iter()
            .map(|pr| pr.values[p].map(|v| v.to_string()).unwrap_or_default());
        w.write_record(idx.into_iter().chain(x).chain(cells))?;
    }
    w.flush()?;
    Ok(())
}

fn summarize(report: &Report) {
    for e in &report.entries {
        let status = match (e.diagnostic, e.pass) {
            (true, _) => "INFO",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        eprintln!(
            "{status} {} max_abs={:e} tolerance={:e}",
            e.identity, e.max_abs, e.tolerance
        );
    }
    for c in &report.convergence {
        let status = if c.pass { "PASS" } else { "FAIL" };
        let ratio = c.ratio.map_or("round-off".to_string(), |r| format!("{r:.4}"));
        eprintln!("{status} convergence {} ratio={ratio}", c.identity);
    }
}

fn check_refinement(coarse: &GridShape, fine: &GridShape) -> CliResult<()> {
    for axis in 0..4 {
        let ok = if coarse.is_symmetry_axis(axis) {
            fine.is_symmetry_axis(axis)
        } else {
            let (hc, hf) = (coarse.spacing()[axis], fine.spacing()[axis]);
            !fine.is_symmetry_axis(axis) && (hc - 2.0 * hf).abs() <= 1e-12 * hc
        };
        if !ok {
            return Err(CliError::invalid(format!(
                "refined grid does not halve the spacing of axis {axis}"
            )));
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct InvertArgs {
    #[command(flatten)]
    pub source: FieldSource,
    /// The same field sampled at half the spacing; adds a second-order convergence check.
    #[arg(long, requires = "fd")]
    pub refined: Option<PathBuf>,
    /// Residual tolerance; defaults to 1e-10 analytic, 1e-2 finite differences.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Directory for the potential and field-strength grids, `report.json` and `residuals.csv`.
    /// Without it the report goes to stdout.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub const OUTPUT_GRIDS: [&str; 6] = [
    "a_full.dkp5",
    "a_gauge_fixed.dkp5",
    "gauge_term.dkp5",
    "f_from_a.dkp5",
    "f_bilinear.dkp5",
    "singular_mask.dkp5",
];

fn inputs(src: &FieldSource, extra: Option<&PathBuf>) -> Vec<PathBuf> {
    std::iter::once(&src.input)
        .chain(src.sidecar.as_ref())
        .chain(extra)
        .cloned()
        .collect()
}

fn tolerance(flag: Option<f64>, mode: DerivativeMode) -> CliResult<f64> {
    match flag {
        Some(t) if !(t.is_finite() && t > 0.0) => Err(CliError::invalid("--tol must be a positive real")),
        Some(t) => Ok(t),
        None => Ok(default_tolerance(mode)),
    }
}

pub fn invert(args: InvertArgs) -> CliResult<i32> {
    let src = &args.source;
    let outputs: Vec<PathBuf> = match &args.out_dir {
        Some(dir) => OUTPUT_GRIDS
            .iter()
            .chain(&["report.json", "residuals.csv"])
            .map(|f| dir.join(f))
            .collect(),
        None => Vec::new(),
    };
    let in_paths = inputs(src, args.refined.as_ref());
    ensure_distinct(&in_paths.iter().map(PathBuf::as_path).collect::<Vec<_>>(), &outputs)?;

    let rep = build_representation::<C>();
    let loaded = load(&src.input, src, src.fd)?;
    let (m, e) = (loaded.m, loaded.e);
    let out = invert_pipeline(&rep, &loaded.phi, m, e)?;
    let tol = tolerance(args.tol, out.mode)?;
    let reference = loaded.reference();
    let (entries, profiles) = inversion_report_with_profiles(&rep, &loaded.phi, &out, reference.as_ref(), m, e, tol)?;

    let conv = match &args.refined {
        Some(path) => {
            let fine = load(path, src, true)?;
            check_refinement(loaded.phi.shape(), fine.phi.shape())?;
            let fine_out = invert_pipeline(&rep, &fine.phi, m, e)?;
            let fine_entries = inversion_report(&rep, &fine.phi, &fine_out, fine.reference().as_ref(), m, e, tol)?;
            convergence(&entries, &fine_entries)
        }
        None => Vec::new(),
    };
    let report = Report::new(out.mode, tol, entries, conv);
    summarize(&report);
    let json = report.to_json_pretty();
    match &args.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let mask = FieldGrid::new(
                *out.currents.shape(),
                out.singular_mask
                    .iter()
                    .map(|&b| C::new(f64::from(u8::from(b)), 0.0))
                    .collect(),
            )?;
            gridfile::store(dir.join(OUTPUT_GRIDS[0]), &out.a_full.values)?;
            gridfile::store(dir.join(OUTPUT_GRIDS[1]), &out.a_gauge_fixed.values)?;
            gridfile::store(dir.join(OUTPUT_GRIDS[2]), &out.gauge_term.values)?;
            gridfile::store(dir.join(OUTPUT_GRIDS[3]), &out.f_from_a.values)?;
            gridfile::store(dir.join(OUTPUT_GRIDS[4]), &out.f_bilinear.values)?;
            gridfile::store(dir.join(OUTPUT_GRIDS[5]), &mask)?;
            std::fs::write(dir.join("report.json"), json + "\n")?;
            profile_csv(&dir.join("residuals.csv"), loaded.phi.shape(), &profiles)?;
        }
        None => emit(None, &json)?,
    }
    Ok(exit_code(report.pass))
}

#[derive(Args, Debug)]
pub struct ResidualsArgs {
    #[command(flatten)]
    pub source: FieldSource,
    /// Constant potential A_μ; defaults to the sidecar's.
    #[arg(long = "A", allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Residual tolerance; defaults to 1e-10 analytic, 1e-2 finite differences.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Report path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Per-point residual magnitudes as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn profile_of<T: Magnitude>(identity: &str, values: &[T], mask: Option<&[bool]>) -> Profile {
    Profile {
        identity: identity.into(),
        values: values
            .iter()
            .enumerate()
            .map(|(i, v)| (!mask.is_some_and(|m| m[i])).then(|| v.magnitude()))
            .collect(),
    }
}

fn equation_residuals(
    rep: &KemmerRep<C>,
    loaded: &Loaded,
    a: &FieldGrid<FourVector<C>>,
    tol: f64,
) -> CliResult<(Vec<ReportEntry>, Vec<Profile>)> {
    let (phi, m, e) = (&loaded.phi, loaded.m, loaded.e);
    let mask = CurrentField::from_phi(rep, phi)?.singular_mask();
    let dkp = dkp_residual(rep, phi, a, m, e)?;
    let conj_gap: Vec<[C; 5]> = dkp
        .primary
        .iter()
        .zip(dkp.conjugate.iter())
        .map(|(p, c)| {
            let adj = p.bar(rep);
            std::array::from_fn(|k| c[k] + adj[k])
        })
        .collect();
    let div = divergence_identities(rep, phi, a, m, e)?;
    let mut entries = vec![
        measure("dkp_residual", dkp.primary.values(), None, tol),
        measure("dkp_conjugate_consistency", &conj_gap, None, tol),
    ];
    let mut profiles = vec![
        profile_of("dkp_residual", dkp.primary.values(), None),
        profile_of("dkp_conjugate_consistency", &conj_gap, None),
    ];
    for (name, grid) in [
        ("current_conservation", &div.dj),
        ("companion_divergence", &div.dh),
        ("charge_coupling", &div.ja),
        ("companion_coupling", &div.ha),
    ] {
        entries.push(measure(name, grid.values(), Some(&mask), tol));
        profiles.push(profile_of(name, grid.values(), Some(&mask)));
    }
    Ok((entries, profiles))
}

pub fn residuals(args: ResidualsArgs) -> CliResult<i32> {
    let src = &args.source;
    let outputs: Vec<PathBuf> = args.out.iter().chain(&args.csv).cloned().collect();
    let in_paths = inputs(src, None);
    ensure_distinct(&in_paths.iter().map(PathBuf::as_path).collect::<Vec<_>>(), &outputs)?;
    let loaded = load(&src.input, src, src.fd)?;
    let shape = *loaded.phi.shape();
    let a = match (&args.a, &loaded.spec) {
        (Some(text), _) => FieldGrid::constant(shape, parse_four(text, None, "--A")?.map(|x| C::new(x, 0.0))),
        (None, Some(spec)) => spec.potential(shape),
        (None, None) => return Err(CliError::invalid("--A is required without a sidecar")),
    };
    if !(loaded.m.is_finite() && loaded.m > 0.0) {
        return Err(CliError::invalid("--m must be positive"));
    }
    let tol = tolerance(args.tol, loaded.phi.mode())?;
    let rep = build_representation::<C>();
    let (entries, profiles) = equation_residuals(&rep, &loaded, &a, tol)?;
    let report = Report::new(loaded.phi.mode(), tol, entries, Vec::new());
    summarize(&report);
    if let Some(path) = &args.csv {
        profile_csv(path, &shape, &profiles)?;
    }
    emit(args.out.as_deref(), &report.to_json_pretty())?;
    Ok(exit_code(report.pass))
}
