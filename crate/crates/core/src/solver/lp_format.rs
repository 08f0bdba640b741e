//! CPLEX-style LP text export.
//!
//! Output is stable: variables and rows appear in index order, numbers are
//! printed with Rust's shortest round-trip formatting, and names are
//! sanitized to the LP-format character set.

use std::fmt::Write;

use super::model::{LinearProgram, Relation, Sense, VarKind};

fn sanitize(name: &str, fallback: &str) -> String {
    let mut out: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.[]".contains(c) { c } else { '_' })
        .collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        out.insert_str(0, fallback);
    }
    out
}

fn write_terms(out: &mut String, names: &[String], terms: &[(usize, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0 ");
        out.push_str(&names[0]);
        return;
    }
    for (k, &(j, a)) in terms.iter().enumerate() {
        if k > 0 && k % 8 == 0 {
            out.push_str("\n   ");
        }
        if a < 0.0 {
            let _ = write!(out, " - {} {}", -a, names[j]);
        } else {
            let _ = write!(out, " + {} {}", a, names[j]);
        }
    }
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

pub fn write_lp(lp: &LinearProgram) -> String {
    let names: Vec<String> = lp
        .variables
        .iter()
        .enumerate()
        .map(|(j, v)| sanitize(&v.name, &format!("x{j}_")))
        .collect();
    let mut out = String::new();
    out.push_str(match lp.sense {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    out.push_str(" obj:");
    let obj: Vec<(usize, f64)> = lp
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.objective != 0.0)
        .map(|(j, v)| (j, v.objective))
        .collect();
    if lp.variables.is_empty() {
        out.push_str(" 0");
    } else {
        write_terms(&mut out, &names, &obj);
    }
    out.push_str("\nSubject To\n");
    for (i, c) in lp.constraints.iter().enumerate() {
        let _ = write!(out, " {}:", sanitize(&c.name, &format!("c{i}_")));
        write_terms(&mut out, &names, &c.coeffs);
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for (v, name) in lp.variables.iter().zip(&names) {
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else if v.lower == v.upper {
            let _ = writeln!(out, " {name} = {}", num(v.lower));
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", num(v.lower), num(v.upper));
        }
    }
    let generals: Vec<&String> = lp
        .variables
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Integer)
        .map(|(_, n)| n)
        .collect();
    let binaries: Vec<&String> = lp
        .variables
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n)
        .collect();
    for (header, list) in [("Generals", generals), ("Binaries", binaries)] {
        if list.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{header}");
        for chunk in list.chunks(10) {
            let line: Vec<&str> = chunk.iter().map(|s| s.as_str()).collect();
            let _ = writeln!(out, " {}", line.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
