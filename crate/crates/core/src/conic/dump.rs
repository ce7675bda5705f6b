//! Plain-text serialization of a [`ConicProgram`] for cross-solver debugging.
//!
//! ```text
//! conic-program v1
//! vars <n>
//! block <name> <start> <len>
//! objective <constant> <k> idx:coef ...
//! zero <constant> <k> idx:coef ...
//! nonneg <constant> <k> idx:coef ...
//! soc <m>            followed by m+1 `row` lines, the first one is t
//! lmi <dim>          followed by dim(dim+1)/2 `row` lines, lower triangle column-major
//! row <constant> <k> idx:coef ...
//! ```
//!
//! Coefficients are printed with `{:e}` so that the text round-trips exactly.

use alloc::string::String;
use core::fmt::Write;

use super::{AffineExpr, ConicProgram, Constraint};

fn write_expr(out: &mut String, tag: &str, e: &AffineExpr) {
    let _ = write!(out, "{tag} {:e} {}", e.constant, e.terms.len());
    for &(i, a) in &e.terms {
        let _ = write!(out, " {i}:{a:e}");
    }
    out.push('\n');
}

pub fn to_text(p: &ConicProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "conic-program v1");
    let _ = writeln!(out, "vars {}", p.num_vars());
    for b in p.blocks() {
        let _ = writeln!(out, "block {} {} {}", b.name, b.range.start, b.range.len());
    }
    write_expr(&mut out, "objective", p.objective());
    for c in p.constraints() {
        match c {
            Constraint::Zero(e) => write_expr(&mut out, "zero", e),
            Constraint::NonNeg(e) => write_expr(&mut out, "nonneg", e),
            Constraint::SecondOrder { t, u } => {
                let _ = writeln!(out, "soc {}", u.len());
                write_expr(&mut out, "row", t);
                for e in u {
                    write_expr(&mut out, "row", e);
                }
            }
            Constraint::Lmi { dim, lower } => {
                let _ = writeln!(out, "lmi {dim}");
                for e in lower {
                    write_expr(&mut out, "row", e);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_lists_every_constraint() {
        let mut p = ConicProgram::new();
        let x = p.add_scalar("x");
        p.minimize(AffineExpr::var(x));
        p.add_nonneg(AffineExpr::var(x) - AffineExpr::constant(3.0));
        p.add_symmetric_psd("S", 2);
        let t = to_text(&p);
        assert!(t.starts_with("conic-program v1\nvars 4\n"));
        assert!(t.contains("nonneg -3e0 1 0:1e0"));
        assert_eq!(t.matches("row ").count(), 3);
    }
}
