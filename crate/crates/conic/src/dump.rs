//! Plain-text sparse triplet dump of a program, one section per block.
//!
//! ```text
//! params <n>
//! [objective]
//! const <c>
//! <param> <coef>
//! [psd <label> dim <m>]
//! <i> <j> const <c>
//! <i> <j> <param> <coef>
//! [eq <label>] / [ineq <label>]
//! const <c>
//! <param> <coef>
//! ```
//!
//! PSD blocks are written after lifting to real symmetric form; only the
//! upper triangle appears.

use crate::expr::LinExpr;
use crate::program::ConicProgram;
use crate::realify::realify_program;
use std::fmt::Write;

fn write_lin(out: &mut String, prefix: &str, e: &LinExpr) {
    let mut e = e.clone();
    e.compact();
    if e.constant != 0.0 {
        let _ = writeln!(out, "{prefix}const {:e}", e.constant);
    }
    for (i, c) in e.terms {
        let _ = writeln!(out, "{prefix}{i} {c:e}");
    }
}

pub fn dump_program(p: &ConicProgram) -> String {
    let rp = realify_program(p);
    let mut out = String::new();
    let _ = writeln!(out, "params {}", rp.n_params);
    let _ = writeln!(out, "[objective]");
    write_lin(&mut out, "", &rp.objective);
    for blk in &rp.psd {
        let _ = writeln!(out, "[psd {} dim {}]", blk.label, blk.dim);
        let mut k = 0;
        for j in 0..blk.dim {
            for i in 0..=j {
                write_lin(&mut out, &format!("{i} {j} "), &blk.entries[k]);
                k += 1;
            }
        }
    }
    for (label, e) in &rp.eq {
        let _ = writeln!(out, "[eq {label}]");
        write_lin(&mut out, "", e);
    }
    for (label, e) in &rp.ineq {
        let _ = writeln!(out, "[ineq {label}]");
        write_lin(&mut out, "", e);
    }
    out
}
