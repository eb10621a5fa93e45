use dkp_core::fields::PlaneWaveSpec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<dkp_core::Error> for CliError {
    fn from(err: dkp_core::Error) -> Self {
        let code = match err {
            dkp_core::Error::MassShell { .. } => EXIT_FAIL,
            _ => EXIT_INVALID,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self::invalid(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        Self::invalid(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn exit_code(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

/// Comma-separated reals. The token `m` (optionally signed) stands for `mass`.
pub fn parse_reals(text: &str, mass: Option<f64>) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            let tok = tok.trim();
            let (sign, body) = match tok.strip_prefix('-') {
                Some(rest) => (-1.0, rest),
                None => (1.0, tok.strip_prefix('+').unwrap_or(tok)),
            };
            if body == "m" {
                return mass
                    .map(|m| sign * m)
                    .ok_or_else(|| CliError::invalid("token `m` needs --m"));
            }
            match tok.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(CliError::invalid(format!("not a finite real: `{tok}`"))),
            }
        })
        .collect()
}

pub fn parse_four(text: &str, mass: Option<f64>, what: &str) -> CliResult<[f64; 4]> {
    let v = parse_reals(text, mass)?;
    v.try_into()
        .map_err(|v: Vec<f64>| CliError::invalid(format!("{what} needs 4 components, got {}", v.len())))
}

pub fn parse_extents(text: &str) -> CliResult<[usize; 4]> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::invalid(format!("not an extent: `{t}`")))
        })
        .collect::<CliResult<_>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<usize>| CliError::invalid(format!("extents need 4 values, got {}", v.len())))
}

/// One spacing for every axis or one per axis.
pub fn parse_spacing(text: &str) -> CliResult<[f64; 4]> {
    match parse_reals(text, None)?.as_slice() {
        [h] => Ok([*h; 4]),
        [a, b, c, d] => Ok([*a, *b, *c, *d]),
        other => Err(CliError::invalid(format!(
            "spacing needs 1 or 4 values, got {}",
            other.len()
        ))),
    }
}

fn resolved(path: &Path) -> PathBuf {
    if let Ok(p) = path.canonicalize() {
        return p;
    }
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    match (parent.canonicalize(), path.file_name()) {
        (Ok(dir), Some(name)) => dir.join(name),
        _ => path.to_path_buf(),
    }
}

/// Reject runs that would overwrite one of their inputs.
pub fn ensure_distinct(inputs: &[&Path], outputs: &[PathBuf]) -> CliResult<()> {
    for out in outputs {
        let o = resolved(out);
        if inputs.iter().any(|i| resolved(i) == o) {
            return Err(CliError::invalid(format!(
                "output {} would overwrite an input",
                out.display()
            )));
        }
    }
    Ok(())
}

/// Write `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

/// Parameters of a manufactured plane wave, stored next to its grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub kind: String,
    pub p: [f64; 4],
    #[serde(rename = "A")]
    pub a: [f64; 4],
    pub m: f64,
    pub e: f64,
    pub amplitude: [f64; 2],
    pub extents: [usize; 4],
    pub spacing: [f64; 4],
}

pub const PLANE_WAVE_KIND: &str = "plane_wave";

impl Sidecar {
    pub fn path_for(grid: &Path) -> PathBuf {
        let mut s = grid.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::invalid(format!("sidecar {}: {e}", path.display())))?;
        let car: Sidecar =
            serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("sidecar {}: {e}", path.display())))?;
        if car.kind != PLANE_WAVE_KIND {
            return Err(CliError::invalid(format!(
                "sidecar kind `{}` is not {PLANE_WAVE_KIND}",
                car.kind
            )));
        }
        Ok(car)
    }

    pub fn spec(&self) -> PlaneWaveSpec {
        PlaneWaveSpec {
            p: self.p,
            a: self.a,
            m: self.m,
            e: self.e,
            amplitude: Complex64::new(self.amplitude[0], self.amplitude[1]),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("sidecar serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_token_resolves_with_sign() {
        assert_eq!(parse_reals("m,0,-m,+m", Some(2.0)).unwrap(), vec![2.0, 0.0, -2.0, 2.0]);
        assert!(parse_reals("m", None).is_err());
        assert!(parse_reals("1,nan", None).is_err());
    }

    #[test]
    fn spacing_broadcasts_single_value() {
        assert_eq!(parse_spacing("0.1").unwrap(), [0.1; 4]);
        assert_eq!(parse_spacing("1,2,3,4").unwrap(), [1.0, 2.0, 3.0, 4.0]);
        assert!(parse_spacing("1,2").is_err());
    }

    #[test]
    fn four_vectors_need_four_components() {
        assert!(parse_four("1,2,3", None, "A").is_err());
        assert_eq!(parse_extents("8,1,1,1").unwrap(), [8, 1, 1, 1]);
    }

    #[test]
    fn mass_shell_failures_map_to_quantitative_exit() {
        let e: CliError = dkp_core::Error::MassShell { violation: 0.5 }.into();
        assert_eq!(e.code, EXIT_FAIL);
        let e: CliError = dkp_core::Error::EmptyDomain.into();
        assert_eq!(e.code, EXIT_INVALID);
    }

    #[test]
    fn identical_paths_are_rejected() {
        let dir = std::env::temp_dir();
        let a = dir.join("dkp-cli-distinct-check.dkp5");
        assert!(ensure_distinct(&[&a], std::slice::from_ref(&a)).is_err());
        assert!(ensure_distinct(&[&a], &[dir.join("other.dkp5")]).is_ok());
    }
}
