use crate::io::{
    ensure_distinct, parse_extents, parse_four, parse_reals, parse_spacing, CliError, CliResult, Sidecar, EXIT_PASS,
    PLANE_WAVE_KIND,
};
use clap::{Args, ValueEnum};
use dkp_core::algebra::build_representation;
use dkp_core::bilinears::{compute_currents, CurrentSet, Wavefunction};
use dkp_core::fields::{manufacture_plane_wave, PlaneWaveSpec};
use dkp_core::grid::{FieldGrid, GridShape};
use dkp_core::gridfile;
use num_complex::Complex64;
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Args, Debug)]
pub struct ManufactureArgs {
    /// Canonical momentum p_μ as four reals; the token `m` stands for the mass.
    #[arg(long, allow_hyphen_values = true)]
    pub p: String,
    /// Constant potential A_μ as four reals.
    #[arg(long = "A", allow_hyphen_values = true)]
    pub a: String,
    #[arg(long)]
    pub m: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub e: f64,
    /// Complex amplitude as `re` or `re,im`.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub amplitude: String,
    /// Points per axis, slowest (t) first.
    #[arg(long)]
    pub extents: String,
    /// One spacing for all axes or one per axis.
    #[arg(long)]
    pub spacing: String,
    /// Output grid; parameters go to `<out>.json`.
    #[arg(long, short)]
    pub out: PathBuf,
}

fn amplitude(text: &str) -> CliResult<[f64; 2]> {
    match parse_reals(text, None)?.as_slice() {
        [re] => Ok([*re, 0.0]),
        [re, im] => Ok([*re, *im]),
        _ => Err(CliError::invalid("amplitude is `re` or `re,im`")),
    }
}

pub fn manufacture(args: ManufactureArgs) -> CliResult<i32> {
    let mass = Some(args.m);
    let spec = PlaneWaveSpec {
        p: parse_four(&args.p, mass, "--p")?,
        a: parse_four(&args.a, mass, "--A")?,
        m: args.m,
        e: args.e,
        amplitude: {
            let [re, im] = amplitude(&args.amplitude)?;
            Complex64::new(re, im)
        },
    };
    if !args.e.is_finite() {
        return Err(CliError::invalid("--e must be finite"));
    }
    let shape = GridShape::new(parse_extents(&args.extents)?, parse_spacing(&args.spacing)?)?;
    let phi = manufacture_plane_wave(&spec, shape).map_err(|err| {
        if let dkp_core::Error::MassShell { violation } = err {
            eprintln!("|k^2 - m^2| = {:e}", violation.abs());
        }
        CliError::from(err)
    })?;
    let sidecar_path = Sidecar::path_for(&args.out);
    let sidecar = Sidecar {
        kind: PLANE_WAVE_KIND.into(),
        p: spec.p,
        a: spec.a,
        m: spec.m,
        e: spec.e,
        amplitude: [spec.amplitude.re, spec.amplitude.im],
        extents: shape.extents(),
        spacing: shape.spacing(),
    };
    gridfile::store(&args.out, phi.values())?;
    std::fs::write(&sidecar_path, sidecar.to_json_pretty() + "\n")?;
    eprintln!(
        "wrote {} ({} points) and {}",
        args.out.display(),
        shape.len(),
        sidecar_path.display()
    );
    Ok(EXIT_PASS)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct CurrentsArgs {
    /// Wavefunction grid.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
    /// Output path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn load_wavefunctions(path: &Path) -> CliResult<FieldGrid<Wavefunction<Complex64>>> {
    gridfile::load(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

fn currents_csv<W: Write>(sink: W, shape: &GridShape, sets: &[CurrentSet<Complex64>]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header: Vec<String> = ["i0", "i1", "i2", "i3", "x0", "x1", "x2", "x3"]
        .map(String::from)
        .to_vec();
    if let Some(first) = sets.first() {
        header.extend(first.columns().into_iter().map(|(name, _)| name));
    }
    w.write_record(&header)?;
    for (p, cs) in sets.iter().enumerate() {
        let idx = shape.multi_index(p).map(|i| i.to_string());
        let x = shape.position(p).map(|v| v.to_string());
        let row = idx
            .into_iter()
            .chain(x)
            .chain(cs.columns().into_iter().map(|(_, v)| v.to_string()));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn currents(args: CurrentsArgs) -> CliResult<i32> {
    if let Some(out) = &args.out {
        ensure_distinct(&[&args.input], std::slice::from_ref(out))?;
    }
    let grid = load_wavefunctions(&args.input)?;
    let rep = build_representation::<Complex64>();
    let shape = *grid.shape();
    let sets: Vec<_> = grid.iter().map(|phi| compute_currents(&rep, phi)).collect();
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    match args.format {
        TableFormat::Csv => currents_csv(sink, &shape, &sets)?,
        TableFormat::Json => {
            let points: Vec<_> = sets
                .iter()
                .enumerate()
                .map(|(p, cs)| json!({ "index": shape.multi_index(p), "x": shape.position(p), "currents": cs.to_json() }))
                .collect();
            let doc = json!({ "extents": shape.extents(), "spacing": shape.spacing(), "points": points });
            let mut sink = sink;
            writeln!(
                sink,
                "{}",
                serde_json::to_string_pretty(&doc).expect("currents serialize")
            )?;
        }
    }
    Ok(EXIT_PASS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitude_accepts_real_or_complex() {
        assert_eq!(amplitude("2").unwrap(), [2.0, 0.0]);
        assert_eq!(amplitude("-1,0.5").unwrap(), [-1.0, 0.5]);
        assert!(amplitude("1,2,3").is_err());
    }

    #[test]
    fn csv_has_one_row_per_point() {
        let shape = GridShape::new([3, 1, 1, 1], [0.1, 1.0, 1.0, 1.0]).unwrap();
        let rep = build_representation::<Complex64>();
        let mut phi = Wavefunction::<Complex64>::zero();
        phi.0[4] = Complex64::new(1.0, 0.0);
        let sets = vec![compute_currents(&rep, &phi); 3];
        let mut buf = Vec::new();
        currents_csv(&mut buf, &shape, &sets).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        let header: Vec<_> = lines[0].split(',').collect();
        let row: Vec<_> = lines[2].split(',').collect();
        let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
        assert_eq!(col("S"), "1");
        assert_eq!(col("Sflat"), "4");
        assert_eq!(col("Z"), "-3");
        assert_eq!(col("x0"), "0.1");
    }
}
