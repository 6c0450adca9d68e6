//! CPLEX LP format writer and reader.
//!
//! An empty objective is written as `obj: 0 x_dummy`, since some readers
//! reject an objective without terms; the reader drops `x_dummy` again when
//! that is its only occurrence. Every continuous variable is listed in
//! `Bounds` and every binary in `Binary`, so variables that appear in no row
//! survive a round trip.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::model::{format_rational, parse_rational, rat, Domain, Family, MilpModel, Rational, Sense, Symbol, Tag, VarId};

const DUMMY: &str = "x_dummy";
const MAX_LINE: usize = 255;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReadError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Unsupported(String),
}

fn syntax(line: usize, message: impl Into<String>) -> ReadError {
    ReadError::Syntax { line, message: message.into() }
}

/// Appends ` + c name` / ` - c name` terms, wrapping long lines.
fn push_terms(out: &mut String, line_start: usize, model: &MilpModel, terms: &[(Rational, VarId)]) -> usize {
    let mut line_start = line_start;
    for (n, (c, v)) in terms.iter().enumerate() {
        let name = model.vars[v.0].symbol.name();
        let term = if n == 0 {
            format!(" {} {name}", format_rational(c))
        } else if *c < rat(0) {
            format!(" - {} {name}", format_rational(&-c))
        } else {
            format!(" + {} {name}", format_rational(c))
        };
        if out.len() - line_start + term.len() > MAX_LINE {
            out.push_str("\n  ");
            line_start = out.len() - 2;
        }
        out.push_str(&term);
    }
    line_start
}

pub fn emit_lp(model: &MilpModel) -> String {
    let mut out = String::from("\\ virtual channel placement model\nMaximize\n obj:");
    if model.objective.is_empty() {
        out.push_str(&format!(" 0 {DUMMY}"));
    } else {
        let start = out.rfind('\n').map_or(0, |p| p + 1);
        push_terms(&mut out, start, model, &model.objective);
    }
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let start = out.len();
        out.push_str(&format!(" {}:", c.tag.name()));
        let start = push_terms(&mut out, start, model, &c.terms);
        let tail = format!(" {} {}", c.sense.symbol(), format_rational(&c.rhs));
        if out.len() - start + tail.len() > MAX_LINE {
            out.push_str("\n  ");
        }
        out.push_str(&tail);
        out.push('\n');
    }
    out.push_str("Bounds\n");
    for v in &model.vars {
        if let Domain::Continuous { lower, upper } = &v.domain {
            let name = v.symbol.name();
            match upper {
                Some(u) => out.push_str(&format!(" {} <= {name} <= {}\n", format_rational(lower), format_rational(u))),
                None => out.push_str(&format!(" {name} >= {}\n", format_rational(lower))),
            }
        }
    }
    out.push_str("Binary\n");
    for v in model.vars.iter().filter(|v| v.domain.is_binary()) {
        out.push_str(&format!(" {}\n", v.symbol.name()));
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binary,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    match line.trim().to_ascii_lowercase().as_str() {
        "maximize" | "maximise" | "maximum" | "max" => Some(Section::Objective),
        "minimize" | "minimise" | "minimum" | "min" => None,
        "subject to" | "such that" | "st" | "s.t." | "st." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binary" | "binaries" | "bin" => Some(Section::Binary),
        "end" => Some(Section::End),
        _ => None,
    }
}

/// Token with the line it came from.
type Tok = (usize, String);

fn tokenize(line_no: usize, line: &str, out: &mut Vec<Tok>) {
    let spaced = line.replace("<=", " <= ").replace(">=", " >= ").replace("=<", " <= ").replace("=>", " >= ");
    for raw in spaced.split_whitespace() {
        let mut rest = raw;
        // split a leading sign from what follows, and a trailing ':'
        while let Some(stripped) = rest.strip_prefix(['+', '-']).filter(|s| !s.is_empty()) {
            out.push((line_no, rest[..1].to_string()));
            rest = stripped;
        }
        if let Some(name) = rest.strip_suffix(':').filter(|s| !s.is_empty()) {
            out.push((line_no, name.to_string()));
            out.push((line_no, ":".to_string()));
        } else {
            out.push((line_no, rest.to_string()));
        }
    }
}

#[derive(Default)]
struct VarTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl VarTable {
    fn id(&mut self, name: &str) -> VarId {
        if let Some(&i) = self.index.get(name) {
            return VarId(i);
        }
        self.index.insert(name.to_string(), self.names.len());
        self.names.push(name.to_string());
        VarId(self.names.len() - 1)
    }
}

fn is_sense(t: &str) -> Option<Sense> {
    match t {
        "<=" | "<" => Some(Sense::Le),
        ">=" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

/// Parses `[name :] terms` up to a sense token or the end of the tokens.
fn parse_terms(toks: &[Tok], pos: &mut usize, vars: &mut VarTable) -> Result<Vec<(Rational, VarId)>, ReadError> {
    let mut terms = Vec::new();
    let mut sign = rat(1);
    let mut coef: Option<Rational> = None;
    while *pos < toks.len() && is_sense(&toks[*pos].1).is_none() {
        let (line, t) = &toks[*pos];
        *pos += 1;
        match t.as_str() {
            "+" => {}
            "-" => sign = -sign,
            _ => {
                if let Some(c) = parse_rational(t) {
                    if coef.is_some() {
                        return Err(syntax(*line, format!("two coefficients in a row near {t}")));
                    }
                    coef = Some(c);
                } else {
                    terms.push((sign * coef.take().unwrap_or(rat(1)), vars.id(t)));
                    sign = rat(1);
                }
            }
        }
    }
    if coef.is_some() {
        let line = toks.get(pos.saturating_sub(1)).map_or(0, |t| t.0);
        return Err(syntax(line, "coefficient without a variable"));
    }
    Ok(terms)
}

pub fn read_lp(text: &str) -> Result<MilpModel, ReadError> {
    let mut section = Section::None;
    let mut objective_toks = Vec::new();
    let mut row_toks = Vec::new();
    let mut bound_lines = Vec::new();
    let mut binary_names = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('\\').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if let Some(s) = section_of(line) {
            section = s;
            continue;
        }
        if matches!(line.trim().to_ascii_lowercase().as_str(), "minimize" | "minimise" | "minimum" | "min") {
            return Err(ReadError::Unsupported("only maximization models are supported".into()));
        }
        match section {
            Section::None => return Err(syntax(line_no, "content before the objective section")),
            Section::Objective => tokenize(line_no, line, &mut objective_toks),
            Section::Constraints => tokenize(line_no, line, &mut row_toks),
            Section::Bounds => bound_lines.push((line_no, line.to_string())),
            Section::Binary => binary_names.extend(line.split_whitespace().map(|s| (line_no, s.to_string()))),
            Section::End => return Err(syntax(line_no, "content after End")),
        }
    }

    let mut vars = VarTable::default();
    let mut pos = 0;
    if objective_toks.get(1).is_some_and(|t| t.1 == ":") {
        pos = 2;
    }
    let mut objective = parse_terms(&objective_toks, &mut pos, &mut vars)?;
    if pos != objective_toks.len() {
        return Err(syntax(objective_toks[pos].0, "unexpected relation in the objective"));
    }

    let mut rows = Vec::new();
    let mut pos = 0;
    while pos < row_toks.len() {
        let line = row_toks[pos].0;
        let name = if row_toks.get(pos + 1).is_some_and(|t| t.1 == ":") {
            pos += 2;
            Some(row_toks[pos - 2].1.clone())
        } else {
            None
        };
        let terms = parse_terms(&row_toks, &mut pos, &mut vars)?;
        let sense = row_toks.get(pos).and_then(|t| is_sense(&t.1)).ok_or_else(|| syntax(line, "constraint without relation"))?;
        pos += 1;
        let mut sign = rat(1);
        let mut rhs = None;
        while pos < row_toks.len() && rhs.is_none() {
            match row_toks[pos].1.as_str() {
                "+" => {}
                "-" => sign = -sign,
                t => rhs = Some(parse_rational(t).ok_or_else(|| syntax(row_toks[pos].0, format!("bad right-hand side {t}")))?),
            }
            pos += 1;
        }
        let rhs = rhs.ok_or_else(|| syntax(line, "missing right-hand side"))?;
        rows.push((name, terms, sense, sign * rhs));
    }

    let mut bounds: BTreeMap<usize, (Rational, Option<Rational>)> = BTreeMap::new();
    for (line_no, line) in &bound_lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| parse_rational(s).ok_or_else(|| syntax(*line_no, format!("bad bound {s}")));
        let (name, lower, upper) = match toks.as_slice() {
            [l, "<=", name, "<=", u] => (*name, Some(num(l)?), Some(num(u)?)),
            [name, ">=", l] => (*name, Some(num(l)?), None),
            [name, "<=", u] => (*name, None, Some(num(u)?)),
            [name, "=", v] => (*name, Some(num(v)?), Some(num(v)?)),
            _ => return Err(syntax(*line_no, "unsupported bound")),
        };
        let id = vars.id(name);
        let entry = bounds.entry(id.0).or_insert((rat(0), None));
        if let Some(l) = lower {
            entry.0 = l;
        }
        if let Some(u) = upper {
            entry.1 = Some(u);
        }
    }
    let mut binary = vec![false; 0];
    for (_, name) in &binary_names {
        let id = vars.id(name);
        if binary.len() <= id.0 {
            binary.resize(id.0 + 1, false);
        }
        binary[id.0] = true;
    }

    // drop the placeholder of an empty objective
    let dummy_only_in_objective = vars.index.get(DUMMY).is_some_and(|&d| {
        objective.len() == 1
            && objective[0].1 .0 == d
            && objective[0].0 == rat(0)
            && rows.iter().all(|(_, terms, _, _)| terms.iter().all(|(_, v)| v.0 != d))
            && !bounds.contains_key(&d)
            && !binary.get(d).copied().unwrap_or(false)
    });
    let skip = if dummy_only_in_objective {
        objective.clear();
        vars.index.get(DUMMY).copied()
    } else {
        None
    };

    let mut model = MilpModel::new();
    let mut remap = vec![VarId(usize::MAX); vars.names.len()];
    for (i, name) in vars.names.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        let domain = if binary.get(i).copied().unwrap_or(false) {
            Domain::Binary
        } else {
            let (lower, upper) = bounds.get(&i).cloned().unwrap_or((rat(0), None));
            Domain::Continuous { lower, upper }
        };
        remap[i] = model.add_var(Symbol::parse(name), domain);
    }
    model.objective = objective.into_iter().map(|(c, v)| (c, remap[v.0])).collect();
    for (n, (name, terms, sense, rhs)) in rows.into_iter().enumerate() {
        let tag = name.as_deref().and_then(Tag::parse).unwrap_or_else(|| Tag::new(Family::Generic, vec![n]));
        model.add_constraint(terms.into_iter().map(|(c, v)| (c, remap[v.0])).collect(), sense, rhs, tag);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::model::models_equivalent;

    #[test]
    fn empty_objective_uses_placeholder() {
        let mut m = MilpModel::new();
        let x = m.add_var(Symbol::Aux("y".into()), Domain::continuous(0, Some(4)));
        m.add_constraint(vec![(rat(1), x)], Sense::Le, rat(2), Tag::new(Family::Generic, vec![0]));
        let text = emit_lp(&m);
        assert!(text.contains("obj: 0 x_dummy"));
        let back = read_lp(&text).unwrap();
        assert!(back.objective.is_empty());
        models_equivalent(&m, &back).unwrap();
    }

    #[test]
    fn reads_hand_written_file() {
        let text = "Maximize\n obj: 3 a + 2 b\nSubject To\n c: a + b <= 4\n row_1: -a + 2.5 b >= -1\nBounds\n 0 <= b <= 3\nBinary\n a\nEnd\n";
        let m = read_lp(text).unwrap();
        assert_eq!(m.vars.len(), 2);
        assert!(m.vars[0].domain.is_binary());
        assert_eq!(m.constraints[1].terms[0].0, rat(-1));
        assert_eq!(m.constraints[1].rhs, rat(-1));
        assert_eq!(m.constraints[0].tag, Tag::new(Family::Generic, vec![0]));
    }

    #[test]
    fn long_rows_are_wrapped() {
        let mut m = MilpModel::new();
        let vars: Vec<_> =
            (0..100).map(|i| m.add_var(Symbol::Aux(format!("var_{i}")), Domain::Binary)).collect();
        m.objective = vars.iter().map(|&v| (rat(7), v)).collect();
        m.add_constraint(vars.iter().map(|&v| (rat(-3), v)).collect(), Sense::Ge, rat(-50), Tag::new(Family::Generic, vec![0]));
        let text = emit_lp(&m);
        assert!(text.lines().all(|l| l.len() <= MAX_LINE));
        models_equivalent(&m, &read_lp(&text).unwrap()).unwrap();
    }

    #[test]
    fn rejects_minimization() {
        assert!(matches!(read_lp("Minimize\n obj: x\nEnd\n"), Err(ReadError::Unsupported(_))));
    }
}
