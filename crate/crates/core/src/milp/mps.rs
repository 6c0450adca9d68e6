//! Fixed-format MPS writer and a whitespace-separated reader.
//!
//! Fixed MPS limits names to eight characters, so columns are written as
//! `X0000000`.. and rows as `R0000000`..; the real names are kept in
//! `* COL` / `* ROW` comment lines ahead of `NAME`, which the reader uses to
//! restore them. Files without those comments read back with the short names.

use std::collections::{BTreeMap, HashMap};

use super::lpfile::ReadError;
use super::model::{format_rational, parse_rational, rat, Domain, Family, MilpModel, Rational, Sense, Symbol, Tag, VarId};

fn col_code(i: usize) -> String {
    format!("X{i:07}")
}

fn row_code(i: usize) -> String {
    format!("R{i:07}")
}

fn field_line(f1: &str, f2: &str, f3: &str, f4: &str, f5: &str, f6: &str) -> String {
    let line = format!(" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}   {f5:<8}  {f6:>12}");
    line.trim_end().to_string()
}

pub fn emit_mps(model: &MilpModel) -> String {
    let mut out = String::new();
    for (i, v) in model.vars.iter().enumerate() {
        out.push_str(&format!("* COL {} {}\n", col_code(i), v.symbol.name()));
    }
    for (i, c) in model.constraints.iter().enumerate() {
        out.push_str(&format!("* ROW {} {}\n", row_code(i), c.tag.name()));
    }
    out.push_str("NAME          VCPLACE\nOBJSENSE\n    MAX\nROWS\n N  OBJ\n");
    for (i, c) in model.constraints.iter().enumerate() {
        let kind = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        out.push_str(&format!(" {kind}  {}\n", row_code(i)));
    }

    // column-major entries; zero coefficients are kept so rows stay intact
    let mut columns: Vec<Vec<(String, &Rational)>> = vec![Vec::new(); model.vars.len()];
    for (c, v) in &model.objective {
        columns[v.0].push(("OBJ".to_string(), c));
    }
    for (i, row) in model.constraints.iter().enumerate() {
        for (c, v) in &row.terms {
            columns[v.0].push((row_code(i), c));
        }
    }
    let zero = rat(0);
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut markers = 0;
    for (i, v) in model.vars.iter().enumerate() {
        let binary = v.domain.is_binary();
        if binary != in_int {
            let kind = if binary { "'INTORG'" } else { "'INTEND'" };
            out.push_str(&format!("    M{markers:07}  'MARKER'                 {kind}\n"));
            markers += 1;
            in_int = binary;
        }
        let mut entries = columns[i].clone();
        if entries.is_empty() {
            entries.push(("OBJ".to_string(), &zero));
        }
        for pair in entries.chunks(2) {
            let (r1, c1) = &pair[0];
            let (r2, c2) = pair.get(1).map_or((String::new(), String::new()), |(r, c)| (r.clone(), format_rational(c)));
            out.push_str(&field_line("", &col_code(i), r1, &format_rational(c1), &r2, &c2));
            out.push('\n');
        }
    }
    if in_int {
        out.push_str(&format!("    M{markers:07}  'MARKER'                 'INTEND'\n"));
    }

    out.push_str("RHS\n");
    let rhs: Vec<(String, String)> = model
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| c.rhs != zero)
        .map(|(i, c)| (row_code(i), format_rational(&c.rhs)))
        .collect();
    for pair in rhs.chunks(2) {
        let (r2, c2) = pair.get(1).cloned().unwrap_or_default();
        out.push_str(&field_line("", "RHS", &pair[0].0, &pair[0].1, &r2, &c2));
        out.push('\n');
    }

    out.push_str("BOUNDS\n");
    for (i, v) in model.vars.iter().enumerate() {
        match &v.domain {
            Domain::Binary => out.push_str(&field_line("BV", "BND", &col_code(i), "", "", "")),
            Domain::Continuous { lower, upper } => {
                match upper {
                    Some(u) if u == lower => {
                        out.push_str(&field_line("FX", "BND", &col_code(i), &format_rational(u), "", ""));
                        out.push('\n');
                        continue;
                    }
                    _ => {}
                }
                // the default lower bound of 0 is still written so every
                // column appears in the section
                out.push_str(&field_line("LO", "BND", &col_code(i), &format_rational(lower), "", ""));
                if let Some(u) = upper {
                    out.push('\n');
                    out.push_str(&field_line("UP", "BND", &col_code(i), &format_rational(u), "", ""));
                }
            }
        }
        out.push('\n');
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Head,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Done,
}

struct ColumnData {
    name: String,
    integer: bool,
    lower: Option<Rational>,
    upper: Option<Rational>,
    binary: bool,
}

pub fn read_mps(text: &str) -> Result<MilpModel, ReadError> {
    let mut col_names: HashMap<String, String> = HashMap::new();
    let mut row_names: HashMap<String, String> = HashMap::new();
    let mut section = Section::Head;
    let mut objective_row: Option<String> = None;
    let mut rows: Vec<(String, Sense)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut columns: Vec<ColumnData> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut entries: Vec<BTreeMap<usize, Rational>> = Vec::new();
    let mut objective: BTreeMap<usize, Rational> = BTreeMap::new();
    let mut rhs: HashMap<usize, Rational> = HashMap::new();
    let mut in_int = false;
    let mut maximize = false;

    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if let Some(comment) = line.strip_prefix('*') {
            let parts: Vec<&str> = comment.split_whitespace().collect();
            match parts.as_slice() {
                ["COL", code, name] => {
                    col_names.insert(code.to_string(), name.to_string());
                }
                ["ROW", code, name] => {
                    row_names.insert(code.to_string(), name.to_string());
                }
                _ => {}
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !line.starts_with([' ', '\t']) {
            section = match fields[0].to_ascii_uppercase().as_str() {
                "NAME" => Section::Head,
                "OBJSENSE" => {
                    if let Some(s) = fields.get(1) {
                        if !s.eq_ignore_ascii_case("MAX") && !s.eq_ignore_ascii_case("MAXIMIZE") {
                            return Err(ReadError::Unsupported("only maximization models are supported".into()));
                        }
                        maximize = true;
                        Section::Head
                    } else {
                        Section::ObjSense
                    }
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                "RANGES" => return Err(ReadError::Unsupported("RANGES section".into())),
                other => return Err(ReadError::Syntax { line: line_no, message: format!("unknown section {other}") }),
            };
            continue;
        }
        let err = |m: String| ReadError::Syntax { line: line_no, message: m };
        let num = |s: &str| parse_rational(s).ok_or_else(|| err(format!("bad number {s}")));
        match section {
            Section::ObjSense => {
                if !fields[0].eq_ignore_ascii_case("MAX") && !fields[0].eq_ignore_ascii_case("MAXIMIZE") {
                    return Err(ReadError::Unsupported("only maximization models are supported".into()));
                }
                maximize = true;
            }
            Section::Rows => {
                let [kind, name] = fields.as_slice() else { return Err(err("row line needs two fields".into())) };
                let sense = match kind.to_ascii_uppercase().as_str() {
                    "N" => {
                        if objective_row.is_none() {
                            objective_row = Some(name.to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    k => return Err(err(format!("unknown row type {k}"))),
                };
                row_index.insert(name.to_string(), rows.len());
                rows.push((name.to_string(), sense));
                entries.push(BTreeMap::new());
            }
            Section::Columns => {
                if fields.get(1) == Some(&"'MARKER'") {
                    match fields.get(2).copied() {
                        Some("'INTORG'") => in_int = true,
                        Some("'INTEND'") => in_int = false,
                        _ => return Err(err("bad marker".into())),
                    }
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err("column line needs three or five fields".into()));
                }
                let col = *col_index.entry(fields[0].to_string()).or_insert_with(|| {
                    columns.push(ColumnData {
                        name: fields[0].to_string(),
                        integer: in_int,
                        lower: None,
                        upper: None,
                        binary: false,
                    });
                    columns.len() - 1
                });
                for pair in fields[1..].chunks(2) {
                    let value = num(pair[1])?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        objective.insert(col, value);
                    } else {
                        let r = *row_index.get(pair[0]).ok_or_else(|| err(format!("unknown row {}", pair[0])))?;
                        entries[r].insert(col, value);
                    }
                }
            }
            Section::Rhs => {
                let start = if fields.len() % 2 == 1 { 1 } else { 0 };
                for pair in fields[start..].chunks(2) {
                    let [row, v] = pair else { return Err(err("bad RHS line".into())) };
                    if Some(*row) == objective_row.as_deref() {
                        continue;
                    }
                    let r = *row_index.get(*row).ok_or_else(|| err(format!("unknown row {row}")))?;
                    rhs.insert(r, num(v)?);
                }
            }
            Section::Bounds => {
                let kind = fields[0].to_ascii_uppercase();
                let (col_name, value) = match fields.len() {
                    3 => (fields[2], None),
                    4 => (fields[2], Some(num(fields[3])?)),
                    _ => return Err(err("bad bound line".into())),
                };
                let col = *col_index.get(col_name).ok_or_else(|| err(format!("unknown column {col_name}")))?;
                let c = &mut columns[col];
                match (kind.as_str(), value) {
                    ("BV", _) => c.binary = true,
                    ("LO", Some(v)) => c.lower = Some(v),
                    ("UP", Some(v)) => c.upper = Some(v),
                    ("FX", Some(v)) => {
                        c.lower = Some(v);
                        c.upper = Some(v);
                    }
                    ("PL", None) => c.upper = None,
                    (k, _) => return Err(ReadError::Unsupported(format!("bound type {k}"))),
                }
            }
            Section::Head => return Err(err("data outside a section".into())),
            Section::Done => return Err(err("content after ENDATA".into())),
        }
    }

    if !maximize {
        // MPS minimizes unless told otherwise
        return Err(ReadError::Unsupported("missing OBJSENSE MAX".into()));
    }
    let mut model = MilpModel::new();
    let mut ids = Vec::with_capacity(columns.len());
    for c in &columns {
        let name = col_names.get(&c.name).cloned().unwrap_or_else(|| c.name.clone());
        let binary = c.binary
            || (c.integer && c.lower.unwrap_or(rat(0)) == rat(0) && c.upper.as_ref() == Some(&rat(1)));
        let domain = if binary {
            Domain::Binary
        } else if c.integer {
            return Err(ReadError::Unsupported(format!("general integer column {name}")));
        } else {
            Domain::Continuous { lower: c.lower.unwrap_or(rat(0)), upper: c.upper }
        };
        ids.push(model.add_var(Symbol::parse(&name), domain));
    }
    model.objective = objective.into_iter().map(|(c, v)| (v, ids[c])).collect();
    for (n, ((code, sense), terms)) in rows.into_iter().zip(entries).enumerate() {
        let name = row_names.get(&code).cloned().unwrap_or(code);
        let tag = Tag::parse(&name).unwrap_or_else(|| Tag::new(Family::Generic, vec![n]));
        let terms: Vec<(Rational, VarId)> = terms.into_iter().map(|(c, v)| (v, ids[c])).collect();
        model.add_constraint(terms, sense, rhs.remove(&n).unwrap_or(rat(0)), tag);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::model::models_equivalent;

    fn sample() -> MilpModel {
        let mut m = MilpModel::new();
        let a = m.add_var(Symbol::Aux("a".into()), Domain::Binary);
        let b = m.add_var(Symbol::Aux("b".into()), Domain::continuous(0, Some(3)));
        let c = m.add_var(Symbol::Aux("c".into()), Domain::continuous(-2, None));
        let d = m.add_var(Symbol::Aux("d".into()), Domain::Binary);
        m.objective = vec![(rat(3), a), (Rational::new(5, 2), b)];
        m.add_constraint(vec![(rat(1), a), (rat(1), b), (rat(0), c)], Sense::Le, rat(4), Tag::new(Family::Generic, vec![0]));
        m.add_constraint(vec![(rat(-1), b), (rat(2), c)], Sense::Ge, rat(0), Tag::new(Family::Generic, vec![1]));
        m.add_constraint(vec![(rat(1), a)], Sense::Eq, rat(-1), Tag::new(Family::Generic, vec![2]));
        let _ = d;
        m
    }

    #[test]
    fn round_trip() {
        let m = sample();
        let text = emit_mps(&m);
        let back = read_mps(&text).unwrap();
        models_equivalent(&m, &back).unwrap();
        assert!(back.vars[3].domain.is_binary());
    }

    #[test]
    fn codes_fit_fixed_fields() {
        let text = emit_mps(&sample());
        for line in text.lines().filter(|l| l.starts_with(' ')) {
            for f in line.split_whitespace() {
                assert!(f.len() <= 12, "{line}");
            }
        }
    }

    #[test]
    fn reads_without_name_comments() {
        let text = emit_mps(&sample());
        let stripped: String = text.lines().filter(|l| !l.starts_with('*')).map(|l| format!("{l}\n")).collect();
        let m = read_mps(&stripped).unwrap();
        assert_eq!(m.vars[0].symbol, Symbol::Aux("X0000000".into()));
        assert_eq!(m.constraints.len(), 3);
    }
}
