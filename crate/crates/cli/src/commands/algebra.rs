use crate::io::{emit, exit_code, CliError, CliResult};
use clap::{Args, ValueEnum};
use dkp_core::algebra::{
    build_representation, enumerate_basis, eval_basis_combination, verify_algebra_identities, word_product,
    IdentityRecord, KemmerRep,
};
use dkp_core::bilinears::{fierz_suite, Wavefunction};
use dkp_core::matrix::DkpMatrix;
use dkp_core::reduce::reduce_word;
use dkp_core::scalar::{Exact, Scalar};
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::path::PathBuf;

/// Longest word the sweep accepts; the sweep visits 4^n words per length n.
pub const MAX_SWEEP_LEN: usize = 8;
/// Numerator and denominator bound of the random Gaussian-rational samples.
const SAMPLE_NUM: i64 = 9;
const SAMPLE_DEN: i64 = 7;
const MAX_LISTED_FAILURES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScalarMode {
    Exact,
    Float,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = ScalarMode::Exact)]
    pub mode: ScalarMode,
    /// Check every generator word of length 1..=N against its reduction (0 skips the sweep).
    #[arg(long, default_value_t = 5)]
    pub max_word_len: usize,
    /// Float-mode tolerance; Fierz residuals are scaled by (1+|Φ|⁴). Exact mode demands zero.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Number of random wavefunctions for the Fierz relations.
    #[arg(long, default_value_t = 100)]
    pub fierz_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Replace every generator by zero.
    #[arg(long, hide = true)]
    pub zero_beta: bool,
    /// Add 1/2 to one entry of β₀.
    #[arg(long, hide = true, conflicts_with = "zero_beta")]
    pub perturb_beta: bool,
}

fn corrupted<S: Scalar>(args: &VerifyArgs) -> KemmerRep<S> {
    let rep = build_representation::<S>();
    if args.zero_beta {
        return KemmerRep::from_betas(std::array::from_fn(|_| DkpMatrix::zero()), rep.eta);
    }
    if args.perturb_beta {
        let mut beta = rep.beta.clone();
        beta[0][(0, 0)] = beta[0][(0, 0)].clone() + S::ratio(1, 2);
        return KemmerRep::from_betas(beta, rep.eta);
    }
    rep
}

struct Family {
    record: IdentityRecord,
}

impl Family {
    fn new(family: String) -> Self {
        Self {
            record: IdentityRecord {
                family,
                checks: 0,
                max_residual: 0.0,
                passed: true,
                failures: Vec::new(),
            },
        }
    }

    fn check(&mut self, residual: f64, ok: bool, label: impl FnOnce() -> String) {
        let r = &mut self.record;
        r.checks += 1;
        r.max_residual = r.max_residual.max(residual);
        if !ok {
            r.passed = false;
            if r.failures.len() < MAX_LISTED_FAILURES {
                r.failures.push(label());
            }
        }
    }
}

fn word_sweep<S: Scalar>(rep: &KemmerRep<S>, max_len: usize, tol: f64) -> CliResult<Vec<IdentityRecord>> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        let mut fam = Family::new(format!("word_reduction_length_{len}"));
        for code in 0..4usize.pow(len as u32) {
            let word: Vec<usize> = (0..len).map(|k| (code >> (2 * k)) & 3).collect();
            let reduced =
                reduce_word(&word)?.map(|c| S::from_rational(&c.re) + S::imag_unit() * S::from_rational(&c.im));
            let gap = &eval_basis_combination(rep, &reduced) - &word_product(rep, &word)?;
            fam.check(gap.max_abs(), gap.is_zero(tol), || format!("{word:?}"));
        }
        out.push(fam.record);
    }
    Ok(out)
}

fn fierz_families<S: Scalar>(
    rep: &KemmerRep<S>,
    samples: &[Wavefunction<Exact>],
    tol: f64,
    convert: impl Fn(&Wavefunction<Exact>) -> Wavefunction<S>,
) -> Vec<IdentityRecord> {
    let mut families: Vec<Family> = Vec::new();
    for (n, sample) in samples.iter().enumerate() {
        let phi = convert(sample);
        let bound = tol * (1.0 + phi.norm().powi(4));
        for check in fierz_suite(rep, &phi) {
            let name = format!("fierz_{}", check.relation);
            let i = match families.iter().position(|f| f.record.family == name) {
                Some(i) => i,
                None => {
                    families.push(Family::new(name));
                    families.len() - 1
                }
            };
            let fam = &mut families[i];
            if check.skipped {
                continue;
            }
            let ok = if S::EXACT {
                check.exact_zero
            } else {
                check.max_residual < bound
            };
            fam.check(check.max_residual, ok, || format!("sample {n}"));
        }
    }
    families.into_iter().map(|f| f.record).collect()
}

fn suite<S: Scalar>(
    args: &VerifyArgs,
    samples: &[Wavefunction<Exact>],
    tol: f64,
    convert: impl Fn(&Wavefunction<Exact>) -> Wavefunction<S>,
) -> CliResult<(usize, Vec<IdentityRecord>)> {
    let rep = corrupted::<S>(args);
    let rank = enumerate_basis(&rep, tol)?.rank;
    let mut records = verify_algebra_identities(&rep, tol).records;
    records.extend(word_sweep(&rep, args.max_word_len, tol)?);
    records.extend(fierz_families(&rep, samples, tol, convert));
    Ok((rank, records))
}

pub fn verify(args: VerifyArgs) -> CliResult<i32> {
    if args.max_word_len > MAX_SWEEP_LEN {
        return Err(CliError::invalid(format!("--max-word-len at most {MAX_SWEEP_LEN}")));
    }
    if !(args.tol.is_finite() && args.tol >= 0.0) {
        return Err(CliError::invalid("--tol must be a non-negative real"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let samples: Vec<_> = (0..args.fierz_samples)
        .map(|_| Wavefunction::<Exact>::random_rational(&mut rng, SAMPLE_NUM, SAMPLE_DEN))
        .collect();
    let (tol, result) = match args.mode {
        ScalarMode::Exact => (0.0, suite::<Exact>(&args, &samples, 0.0, Clone::clone)),
        ScalarMode::Float => (
            args.tol,
            suite::<Complex64>(&args, &samples, args.tol, Wavefunction::to_complex64),
        ),
    };
    let (rank, records) = result?;
    let pass = records.iter().all(|r| r.passed);
    let report = json!({
        "mode": match args.mode { ScalarMode::Exact => "exact", ScalarMode::Float => "float" },
        "tolerance": tol,
        "max_word_len": args.max_word_len,
        "fierz_samples": args.fierz_samples,
        "seed": args.seed,
        "basis_rank": rank,
        "families": records,
        "pass": pass,
    });
    for r in &records {
        let status = if r.passed { "PASS" } else { "FAIL" };
        eprintln!(
            "{status} {} checks={} max_residual={:e}",
            r.family, r.checks, r.max_residual
        );
    }
    let failed: Vec<&str> = records
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.family.as_str())
        .collect();
    if !failed.is_empty() {
        eprintln!("failed identities: {}", failed.join(", "));
    }
    emit(
        args.out.as_deref(),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    Ok(exit_code(pass))
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    /// Generator indices in 0..=3, as `0123` or `0,1,2,3`. Empty means the identity.
    pub word: String,
    /// Evaluate the reduction in the reference representation and compare with the matrix product.
    #[arg(long)]
    pub check: bool,
}

fn parse_word(text: &str) -> CliResult<Vec<usize>> {
    text.chars()
        .filter(|c| *c != ',' && !c.is_whitespace())
        .map(|c| {
            c.to_digit(10)
                .map(|d| d as usize)
                .ok_or_else(|| CliError::invalid(format!("not a generator index: `{c}`")))
        })
        .collect()
}

pub fn reduce(args: ReduceArgs) -> CliResult<i32> {
    let word = parse_word(&args.word)?;
    let reduced = reduce_word(&word)?;
    let terms: Vec<_> = reduced
        .nonzero_terms()
        .map(|(e, c)| json!({ "element": e.label(), "re": c.re.to_string(), "im": c.im.to_string() }))
        .collect();
    let mut report = json!({
        "word": word,
        "terms": terms,
        "coefficients": reduced.to_json(),
    });
    let mut pass = true;
    if args.check {
        let rep = build_representation::<Exact>();
        pass = eval_basis_combination(&rep, &reduced) == word_product(&rep, &word)?;
        report["matches_product"] = json!(pass);
    }
    emit(None, &serde_json::to_string(&report).expect("report serializes"))?;
    Ok(exit_code(pass))
}
