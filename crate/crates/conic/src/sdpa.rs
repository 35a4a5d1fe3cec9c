//! Export of a [`ConicProblem`] in the SDPA sparse text format (`.dat-s`),
//! for cross-checking against external real-valued SDP solvers.
//!
//! The problem is first lowered to `min <C,X> s.t. <A_i,X> = b_i, X >= 0`
//! (slacks added, free scalars split). That form is written as the SDPA
//! *dual* `max F_0 • Y s.t. F_i • Y = c_i, Y >= 0` with `F_0 = -C`,
//! `F_i = A_i`, `c_i = b_i`, so an external solver's dual objective equals
//! minus the standard-form minimum, i.e. the original maximization value.
//!
//! Complex Hermitian blocks of size `n` become real symmetric blocks of size
//! `2n` through [`embed_real`], scaled by one half so that
//! `F_i • embed(X) = Re tr(A_i X)`. The nonnegative scalars form a trailing
//! diagonal block (negative size in the block structure line).

use std::io::{self, Write};

use crate::linalg::embed_real;
use crate::problem::{ConicProblem, HermitianTerm};
use crate::standard::StandardForm;

pub fn write_sdpa<W: Write>(problem: &ConicProblem, out: &mut W) -> io::Result<()> {
    let sf = StandardForm::from_problem(problem);
    let m = sf.rows.len();
    let n_sdp = sf.blocks.len();
    let has_lp = sf.n_lp > 0;

    writeln!(
        out,
        "\"complex Hermitian blocks embedded as real symmetric 2n x 2n"
    )?;
    writeln!(out, "{m}")?;
    writeln!(out, "{}", n_sdp + usize::from(has_lp))?;
    let mut structure: Vec<String> = sf.blocks.iter().map(|n| (2 * n).to_string()).collect();
    if has_lp {
        structure.push(format!("-{}", sf.n_lp));
    }
    writeln!(out, "{}", structure.join(" "))?;
    let rhs: Vec<String> = sf.rows.iter().map(|r| format!("{:e}", r.rhs)).collect();
    writeln!(out, "{}", rhs.join(" "))?;

    // F_0 = -C.
    for (b, term) in sf.c_blocks.iter().enumerate() {
        write_block(out, 0, b + 1, term, -1.0)?;
    }
    if has_lp {
        for (k, &c) in sf.c_lp.iter().enumerate() {
            if c != 0.0 {
                writeln!(out, "0 {} {} {} {:e}", n_sdp + 1, k + 1, k + 1, -c)?;
            }
        }
    }
    for (i, row) in sf.rows.iter().enumerate() {
        let mut merged: Vec<Option<HermitianTerm>> = vec![None; n_sdp];
        for (b, term) in &row.blocks {
            merged[*b]
                .get_or_insert_with(|| HermitianTerm::zero(term.dim()))
                .extend(term, 1.0);
        }
        for (b, term) in merged.iter().enumerate() {
            if let Some(t) = term {
                write_block(out, i + 1, b + 1, t, 1.0)?;
            }
        }
        let mut lp = vec![0.0; sf.n_lp];
        for &(k, a) in &row.lp {
            lp[k] += a;
        }
        for (k, a) in lp.iter().enumerate() {
            if *a != 0.0 {
                writeln!(out, "{} {} {} {} {:e}", i + 1, n_sdp + 1, k + 1, k + 1, a)?;
            }
        }
    }
    Ok(())
}

fn write_block<W: Write>(
    out: &mut W,
    matno: usize,
    blkno: usize,
    term: &HermitianTerm,
    sign: f64,
) -> io::Result<()> {
    if term.is_empty() {
        return Ok(());
    }
    let real = embed_real(&term.to_dense());
    let n = real.nrows();
    for r in 0..n {
        for c in r..n {
            let v = 0.5 * sign * real[(r, c)];
            if v.abs() > 1e-300 {
                writeln!(out, "{matno} {blkno} {} {} {:e}", r + 1, c + 1, v)?;
            }
        }
    }
    Ok(())
}
