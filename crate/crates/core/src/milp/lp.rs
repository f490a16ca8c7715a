//! LP text export in the fixed-keyword dialect
//! (`Minimize` / `Subject To` / `Bounds` / `Binaries` / `End`).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{LinearModel, VarKind};
use crate::error::MilpError;

const WRAP: usize = 100;

fn num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

/// Appends `name: a x + b y ...` with continuation lines so no line gets
/// longer than [`WRAP`] characters.
fn write_expr(out: &mut String, label: &str, terms: &[(String, f64)]) {
    let mut line = format!(" {label}:");
    if terms.is_empty() {
        line.push_str(" 0");
    }
    for (i, (name, coef)) in terms.iter().enumerate() {
        let sign = if *coef < 0.0 { "-" } else { "+" };
        let piece = if i == 0 && *coef >= 0.0 {
            format!(" {} {name}", num(*coef))
        } else {
            format!(" {sign} {} {name}", num(coef.abs()))
        };
        if line.len() + piece.len() > WRAP {
            out.push_str(&line);
            out.push('\n');
            line = String::from("  ");
        }
        line.push_str(&piece);
    }
    out.push_str(&line);
}

/// Renders the model. Rows are sorted by name and columns by name, so
/// the text is byte-stable for a given model.
pub fn lp_to_string(model: &LinearModel) -> String {
    let name_of = |j: usize| model.variables[j].name.clone();
    let sorted_terms = |terms: &[(usize, f64)]| {
        let mut named: Vec<(String, f64)> = terms.iter().map(|&(j, c)| (name_of(j), c)).collect();
        named.sort_by(|a, b| a.0.cmp(&b.0));
        named
    };

    let mut out = String::new();
    let _ = writeln!(out, "\\ model {}", model.name.replace(['\n', '\r'], " "));
    let _ = writeln!(out, "\\ {}", model.stats());
    out.push_str("Minimize\n");
    write_expr(&mut out, "obj", &sorted_terms(&model.objective));
    out.push('\n');

    out.push_str("Subject To\n");
    let mut rows: Vec<&super::Constraint> = model.constraints.iter().collect();
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    for row in rows {
        write_expr(&mut out, &row.name, &sorted_terms(&row.terms));
        let _ = writeln!(out, " {} {}", row.sense.symbol(), num(row.rhs));
    }

    let mut cols: Vec<&super::Variable> = model.variables.iter().collect();
    cols.sort_by(|a, b| a.name.cmp(&b.name));
    out.push_str("Bounds\n");
    for var in cols.iter().filter(|v| v.kind == VarKind::Continuous) {
        let _ = writeln!(out, " {} <= {} <= {}", num(var.lower), var.name, num(var.upper));
    }
    out.push_str("Binaries\n");
    for var in cols.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", var.name);
    }
    out.push_str("End\n");
    out
}

pub fn export_lp(model: &LinearModel, path: impl AsRef<Path>) -> Result<(), MilpError> {
    fs::write(path, lp_to_string(model))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::tiny_t1;
    use crate::milp::build_milp;
    use crate::model::Mode;

    #[test]
    fn export_is_byte_stable() {
        let (a, _) = build_milp(&tiny_t1(), Mode::Flexible).unwrap();
        let (b, _) = build_milp(&tiny_t1(), Mode::Flexible).unwrap();
        assert_eq!(lp_to_string(&a), lp_to_string(&b));
    }

    #[test]
    fn sections_in_order_and_lines_wrapped() {
        let (model, _) = build_milp(&tiny_t1(), Mode::Flexible).unwrap();
        let text = lp_to_string(&model);
        let pos = |s: &str| text.find(s).unwrap();
        assert!(pos("Minimize") < pos("Subject To"));
        assert!(pos("Subject To") < pos("Bounds"));
        assert!(pos("Bounds") < pos("Binaries"));
        assert!(text.ends_with("End\n"));
        assert!(text.lines().all(|l| l.len() <= WRAP + 40));
    }

    #[test]
    fn one_coverage_row_per_task() {
        let t1 = tiny_t1();
        let (model, _) = build_milp(&t1, Mode::Flexible).unwrap();
        let text = lp_to_string(&model);
        let demanded: usize = t1.demand.iter().flatten().map(|&g| g as usize).sum();
        assert_eq!(text.matches("C15").count(), demanded);
    }

    #[test]
    fn empty_model_is_still_well_formed() {
        let model = LinearModel {
            name: "empty".into(),
            mode: Mode::Flexible,
            variables: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
            big_m_count: 0.0,
            big_m_time: 0.0,
            epsilon: 1.0,
        };
        let text = lp_to_string(&model);
        assert!(text.contains("Minimize\n obj: 0\nSubject To\nBounds\nBinaries\nEnd\n"));
    }
}
