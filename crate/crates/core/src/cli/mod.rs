//! Command-line front end: triple generation, invariant verification and
//! grid evaluation with JSON/CSV I/O.
//!
//! Exit-code contract: 0 on success (and a passing verification), 1 when a
//! mathematical check fails or a computation cannot converge, 2 on usage or
//! I/O problems. Human-readable messages go to stderr; stdout carries only
//! optional progress lines (suppressed by `--quiet`).

pub mod grid;
pub mod json;
pub mod verify;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::gbdt;
use crate::matcore::CMatrix;
use crate::spectral;
use crate::transfer;
use crate::triples::{self, ParameterTriple, Signature, SystemKind};
use grid::GridSpec;
use verify::{run_full_verification, ReportDocument};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Attempt budget for CLI triple generation.
const GENERATE_ATTEMPTS: usize = 20_000;

/// Quantity evaluated by `eval`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalTarget {
    Potential,
    Fundamental,
    Weyl,
    Reflection,
}

fn fail_usage(message: &str) -> i32 {
    eprintln!("error: {message}");
    EXIT_USAGE
}

fn fail_math(message: &str) -> i32 {
    eprintln!("error: {message}");
    EXIT_CHECK_FAILED
}

fn load_triple(path: &Path) -> Result<ParameterTriple, i32> {
    let text = fs::read_to_string(path)
        .map_err(|e| fail_usage(&format!("cannot read {}: {e}", path.display())))?;
    json::triple_from_str(&text)
        .map_err(|e| fail_usage(&format!("cannot parse {}: {e}", path.display())))
}

/// `gen`: draw a strongly admissible triple and write its JSON file.
pub fn cmd_generate(
    kind: SystemKind,
    n: usize,
    m1: usize,
    m2: usize,
    seed: u64,
    out: &Path,
    quiet: bool,
) -> i32 {
    let sig = match Signature::new(m1, m2) {
        Ok(sig) => sig,
        Err(e) => return fail_usage(&e.to_string()),
    };
    if n == 0 {
        return fail_usage("n must be at least 1");
    }
    let triple = match triples::generate(kind, n, sig, seed, GENERATE_ATTEMPTS) {
        Ok(t) => t,
        Err(e) => return fail_math(&format!("generation failed: {e}")),
    };
    let text = json::triple_to_string(&triple);
    if let Err(e) = fs::write(out, text) {
        return fail_usage(&format!("cannot write {}: {e}", out.display()));
    }
    if !quiet {
        println!("wrote {}", out.display());
    }
    EXIT_OK
}

/// `verify`: run the full invariant suite and write the report JSON.
pub fn cmd_verify(
    triple_path: &Path,
    kmax: usize,
    tol: f64,
    report_out: Option<&Path>,
    quiet: bool,
) -> i32 {
    let raw = match fs::read(triple_path) {
        Ok(bytes) => bytes,
        Err(e) => return fail_usage(&format!("cannot read {}: {e}", triple_path.display())),
    };
    let triple = match json::triple_from_str(&String::from_utf8_lossy(&raw)) {
        Ok(t) => t,
        Err(e) => return fail_usage(&format!("cannot parse {}: {e}", triple_path.display())),
    };
    let digest = {
        let mut hasher = Sha256::new();
        hasher.update(&raw);
        let mut hex = String::with_capacity(64);
        for byte in hasher.finalize() {
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    };

    let started = Instant::now();
    let checks = match run_full_verification(&triple, kmax, tol) {
        Ok(checks) => checks,
        Err(e) => return fail_math(&format!("verification aborted: {e}")),
    };
    let pass = checks.iter().all(|c| c.pass);
    let document = ReportDocument {
        version: env!("CARGO_PKG_VERSION").to_string(),
        triple_sha256: digest,
        checks,
        pass,
        seconds: started.elapsed().as_secs_f64(),
    };

    if let Some(path) = report_out {
        let mut text = match serde_json::to_string_pretty(&document) {
            Ok(text) => text,
            Err(e) => return fail_usage(&format!("cannot serialize report: {e}")),
        };
        text.push('\n');
        if let Err(e) = fs::write(path, text) {
            return fail_usage(&format!("cannot write {}: {e}", path.display()));
        }
    }
    if !quiet {
        for check in &document.checks {
            println!(
                "{} {}: {:.3e} (tol {:.3e})",
                if check.pass { "pass" } else { "FAIL" },
                check.name,
                check.value,
                check.tol
            );
        }
        println!("overall: {}", if pass { "pass" } else { "FAIL" });
    }
    if pass {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn eval_rows(
    triple: &ParameterTriple,
    target: EvalTarget,
    points: &[num_complex::Complex64],
    k: usize,
) -> Result<(String, usize), Error> {
    let mut out = String::from("what,k,z_re,z_im,row,col,val_re,val_im\n");
    let mut skipped = 0usize;
    let what = match target {
        EvalTarget::Potential => "potential",
        EvalTarget::Fundamental => "fundamental",
        EvalTarget::Weyl => "weyl",
        EvalTarget::Reflection => "reflection",
    };
    let push_matrix = |out: &mut String, z: num_complex::Complex64, m: &CMatrix| {
        for row in 0..m.nrows() {
            for col in 0..m.ncols() {
                let v = m[(row, col)];
                let _ = writeln!(
                    out,
                    "{what},{k},{},{},{row},{col},{},{}",
                    z.re, z.im, v.re, v.im
                );
            }
        }
    };

    match target {
        EvalTarget::Potential => {
            let seq = gbdt::build_sequence(triple, k, crate::matcore::DEFAULT_TOL)?;
            push_matrix(&mut out, num_complex::Complex64::default(), seq.c(k));
        }
        EvalTarget::Fundamental => {
            let seq = gbdt::build_sequence(triple, k, crate::matcore::DEFAULT_TOL)?;
            for &z in points {
                match transfer::fundamental_closed(&seq, k, z) {
                    Ok(m) => push_matrix(&mut out, z, &m),
                    Err(_) => skipped += 1,
                }
            }
        }
        EvalTarget::Weyl => {
            let seq = gbdt::build_sequence(triple, 1, crate::matcore::DEFAULT_TOL)?;
            for &z in points {
                match spectral::weyl_value(&seq, z) {
                    Ok(m) => push_matrix(&mut out, z, &m),
                    Err(_) => skipped += 1,
                }
            }
        }
        EvalTarget::Reflection => {
            let realization = spectral::RationalRealization::from_triple(triple)?;
            for &z in points {
                match realization.evaluate(z) {
                    Ok(m) => push_matrix(&mut out, z, &m),
                    Err(_) => skipped += 1,
                }
            }
        }
    }
    Ok((out, skipped))
}

/// `eval`: tabulate a quantity over a grid as long-format CSV
/// (`what,k,z_re,z_im,row,col,val_re,val_im`, points in grid order, then
/// row-major within each matrix). Grid points at poles are skipped and
/// counted; if every point is skipped the command fails.
pub fn cmd_eval(
    triple_path: &Path,
    target: EvalTarget,
    grid: &GridSpec,
    k: usize,
    out: &Path,
    quiet: bool,
) -> i32 {
    let triple = match load_triple(triple_path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let points = match grid.points() {
        Ok(p) => p,
        Err(e) => return fail_usage(&e.to_string()),
    };
    let (csv, skipped) = match eval_rows(&triple, target, &points, k) {
        Ok(result) => result,
        Err(e) => return fail_math(&format!("evaluation failed: {e}")),
    };
    if target != EvalTarget::Potential && skipped == points.len() {
        return fail_math("all grid points fell on poles");
    }
    if let Err(e) = fs::write(out, csv) {
        return fail_usage(&format!("cannot write {}: {e}", out.display()));
    }
    if !quiet {
        if skipped > 0 {
            println!("wrote {} ({skipped} grid points skipped at poles)", out.display());
        } else {
            println!("wrote {}", out.display());
        }
    }
    EXIT_OK
}
