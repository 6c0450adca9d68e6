//! Linear program IR shared by the builder, the solver and the file writers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

pub fn rat(v: i128) -> Rational {
    Rational::from_integer(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// How a virtual channel above level 0 is assembled from its two parents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Combo {
    /// payment channel `i-k`, then virtual channel `k->j`
    Pv,
    /// virtual channel `i->k`, then payment channel `k-j`
    Vp,
    /// virtual channels `i->k` and `k->j`
    Vv,
}

impl Combo {
    pub const ALL: [Combo; 3] = [Combo::Pv, Combo::Vp, Combo::Vv];

    pub fn code(self) -> &'static str {
        match self {
            Combo::Pv => "pv",
            Combo::Vp => "vp",
            Combo::Vv => "vv",
        }
    }

    fn from_code(s: &str) -> Option<Self> {
        Combo::ALL.into_iter().find(|c| c.code() == s)
    }
}

/// Meaning of a model variable. Node indices refer to the instance node
/// order; `t` is the position of a transaction within its (s, r) demand entry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    /// payment channel `i -> j` carries transaction `t` of `D_sr`
    Pt { i: usize, j: usize, s: usize, r: usize, t: usize },
    /// virtual channel `i -> j` carries transaction `t` of `D_sr`
    Vt { i: usize, j: usize, s: usize, r: usize, t: usize },
    /// transaction `t` of `D_sr` succeeds
    X { s: usize, r: usize, t: usize },
    /// level-0 virtual channel `i -> j` over `k`
    Vc0 { i: usize, j: usize, k: usize },
    Vc { q: usize, combo: Combo, i: usize, j: usize, k: usize },
    Cap0 { i: usize, j: usize, k: usize },
    Cap { q: usize, combo: Combo, i: usize, j: usize, k: usize },
    /// free-form variable of hand-built models
    Aux(String),
}

impl Symbol {
    pub fn name(&self) -> String {
        match self {
            Symbol::Pt { i, j, s, r, t } => format!("pt_{i}_{j}_{s}_{r}_{t}"),
            Symbol::Vt { i, j, s, r, t } => format!("vt_{i}_{j}_{s}_{r}_{t}"),
            Symbol::X { s, r, t } => format!("x_{s}_{r}_{t}"),
            Symbol::Vc0 { i, j, k } => format!("vc0_{i}_{j}_{k}"),
            Symbol::Vc { q, combo, i, j, k } => format!("vc{}_{q}_{i}_{j}_{k}", combo.code()),
            Symbol::Cap0 { i, j, k } => format!("cap0_{i}_{j}_{k}"),
            Symbol::Cap { q, combo, i, j, k } => format!("cap{}_{q}_{i}_{j}_{k}", combo.code()),
            Symbol::Aux(name) => name.clone(),
        }
    }

    /// Inverse of [`Symbol::name`]; names that match no structured pattern
    /// become [`Symbol::Aux`].
    pub fn parse(name: &str) -> Symbol {
        Self::parse_structured(name).unwrap_or_else(|| Symbol::Aux(name.to_string()))
    }

    fn parse_structured(name: &str) -> Option<Symbol> {
        let mut parts = name.split('_');
        let head = parts.next()?;
        let idx: Vec<usize> = parts.map(|p| p.parse().ok()).collect::<Option<_>>()?;
        let sym = match (head, idx.as_slice()) {
            ("pt", &[i, j, s, r, t]) => Symbol::Pt { i, j, s, r, t },
            ("vt", &[i, j, s, r, t]) => Symbol::Vt { i, j, s, r, t },
            ("x", &[s, r, t]) => Symbol::X { s, r, t },
            ("vc0", &[i, j, k]) => Symbol::Vc0 { i, j, k },
            ("cap0", &[i, j, k]) => Symbol::Cap0 { i, j, k },
            (h, &[q, i, j, k]) if h.starts_with("vc") => Symbol::Vc { q, combo: Combo::from_code(&h[2..])?, i, j, k },
            (h, &[q, i, j, k]) if h.starts_with("cap") => {
                Symbol::Cap { q, combo: Combo::from_code(&h[3..])?, i, j, k }
            }
            _ => return None,
        };
        // canonical spelling only, so that parse(name(s)) == s and nothing else
        (sym.name() == name).then_some(sym)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Binary,
    Continuous { lower: Rational, upper: Option<Rational> },
}

impl Domain {
    pub fn continuous(lower: i128, upper: Option<i128>) -> Self {
        Domain::Continuous { lower: rat(lower), upper: upper.map(rat) }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, Domain::Binary)
    }

    pub fn bounds(&self) -> (Rational, Option<Rational>) {
        match self {
            Domain::Binary => (rat(0), Some(rat(1))),
            Domain::Continuous { lower, upper } => (*lower, *upper),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub symbol: Symbol,
    pub domain: Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Sense::Le => lhs <= rhs,
            Sense::Eq => lhs == rhs,
            Sense::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// Constraint families of the placement model. `Lq*` families carry the
/// recursion level as their first tag index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    /// payment channel usage requires the channel
    PcExists,
    /// creation plus routing cost within budget
    Budget,
    PcUseImpliesSuccess,
    VcUseImpliesSuccess,
    SuccessNeedsChannel,
    FlowConservation,
    L0Exists,
    L0Capacity,
    L0Link,
    L0Unique,
    LqExists(Combo),
    LqCapacity(Combo),
    LqLink(Combo),
    LqUnique,
    /// at most one virtual channel per ordered pair over all levels
    VcUnique,
    VcUseRequiresVc,
    VcCapacity,
    PcCapacity,
    /// rows of hand-built models
    Generic,
}

impl Family {
    pub const ALL: [Family; 25] = [
        Family::PcExists,
        Family::Budget,
        Family::PcUseImpliesSuccess,
        Family::VcUseImpliesSuccess,
        Family::SuccessNeedsChannel,
        Family::FlowConservation,
        Family::L0Exists,
        Family::L0Capacity,
        Family::L0Link,
        Family::L0Unique,
        Family::LqExists(Combo::Pv),
        Family::LqExists(Combo::Vp),
        Family::LqExists(Combo::Vv),
        Family::LqCapacity(Combo::Pv),
        Family::LqCapacity(Combo::Vp),
        Family::LqCapacity(Combo::Vv),
        Family::LqLink(Combo::Pv),
        Family::LqLink(Combo::Vp),
        Family::LqLink(Combo::Vv),
        Family::LqUnique,
        Family::VcUnique,
        Family::VcUseRequiresVc,
        Family::VcCapacity,
        Family::PcCapacity,
        Family::Generic,
    ];

    /// Label used as the constraint-name prefix in emitted files.
    pub fn label(self) -> String {
        let s = match self {
            Family::PcExists => "c1",
            Family::Budget => "c2",
            Family::PcUseImpliesSuccess => "c3a",
            Family::VcUseImpliesSuccess => "c3b",
            Family::SuccessNeedsChannel => "c3c",
            Family::FlowConservation => "c4",
            Family::L0Exists => "L0.i",
            Family::L0Capacity => "L0.ii",
            Family::L0Link => "L0.iii",
            Family::L0Unique => "L0.iv",
            Family::LqExists(c) => return format!("Lq.{}.i", c.code()),
            Family::LqCapacity(c) => return format!("Lq.{}.ii", c.code()),
            Family::LqLink(c) => return format!("Lq.{}.iii", c.code()),
            Family::LqUnique => "Lq.close",
            Family::VcUnique => "global.a",
            Family::VcUseRequiresVc => "global.b",
            Family::VcCapacity => "global.d",
            Family::PcCapacity => "global.e",
            Family::Generic => "row",
        };
        s.to_string()
    }

    pub fn from_label(label: &str) -> Option<Family> {
        Self::ALL.into_iter().find(|f| f.label() == label)
    }
}

/// Family plus the indices that identify one row within it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tag {
    pub family: Family,
    pub index: Vec<usize>,
}

impl Tag {
    pub fn new(family: Family, index: impl Into<Vec<usize>>) -> Self {
        Self { family, index: index.into() }
    }

    pub fn name(&self) -> String {
        let mut s = self.family.label();
        for i in &self.index {
            s.push('_');
            s.push_str(&i.to_string());
        }
        s
    }

    pub fn parse(name: &str) -> Option<Tag> {
        let mut parts = name.split('_');
        let family = Family::from_label(parts.next()?)?;
        let index = parts.map(|p| p.parse().ok()).collect::<Option<Vec<usize>>>()?;
        Some(Tag { family, index })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    pub terms: Vec<(Rational, VarId)>,
    pub sense: Sense,
    pub rhs: Rational,
    pub tag: Tag,
}

impl LinearConstraint {
    pub fn lhs(&self, values: &[Rational]) -> Rational {
        self.terms.iter().map(|(c, v)| c * values[v.0]).sum()
    }
}

/// A maximization problem over binary and bounded continuous variables.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub vars: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    /// Maximized.
    pub objective: Vec<(Rational, VarId)>,
    pub symbol_index: HashMap<Symbol, VarId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub what: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.what, self.detail)
    }
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable. Panics if the symbol is already declared.
    pub fn add_var(&mut self, symbol: Symbol, domain: Domain) -> VarId {
        let id = VarId(self.vars.len());
        let previous = self.symbol_index.insert(symbol.clone(), id);
        assert!(previous.is_none(), "variable {symbol} declared twice");
        self.vars.push(Variable { symbol, domain });
        id
    }

    pub fn var(&self, symbol: &Symbol) -> Option<VarId> {
        self.symbol_index.get(symbol).copied()
    }

    pub fn add_constraint(&mut self, terms: Vec<(Rational, VarId)>, sense: Sense, rhs: Rational, tag: Tag) {
        self.constraints.push(LinearConstraint { terms, sense, rhs, tag });
    }

    pub fn num_binary(&self) -> usize {
        self.vars.iter().filter(|v| v.domain.is_binary()).count()
    }

    pub fn objective_value(&self, values: &[Rational]) -> Rational {
        self.objective.iter().map(|(c, v)| c * values[v.0]).sum()
    }

    pub fn objective_is_integral(&self) -> bool {
        self.objective.iter().all(|(c, v)| c.is_integer() && self.vars[v.0].domain.is_binary())
    }

    /// Exact check of an assignment against domains and every constraint.
    pub fn check_assignment(&self, values: &[Rational]) -> Vec<Violation> {
        let mut out = Vec::new();
        if values.len() != self.vars.len() {
            out.push(Violation {
                what: "assignment".into(),
                detail: format!("{} values for {} variables", values.len(), self.vars.len()),
            });
            return out;
        }
        for (var, value) in self.vars.iter().zip(values) {
            let ok = match &var.domain {
                Domain::Binary => value.is_zero() || *value == rat(1),
                Domain::Continuous { lower, upper } => value >= lower && upper.is_none_or(|u| *value <= u),
            };
            if !ok {
                out.push(Violation { what: var.symbol.name(), detail: format!("value {value} outside {:?}", var.domain) });
            }
        }
        for c in &self.constraints {
            let lhs = c.lhs(values);
            if !c.sense.holds(&lhs, &c.rhs) {
                out.push(Violation {
                    what: c.tag.name(),
                    detail: format!("{lhs} {} {} does not hold", c.sense.symbol(), c.rhs),
                });
            }
        }
        out
    }

    /// Structural problems independent of any model semantics: dangling
    /// variable references and repeated variables within one row.
    pub fn structural_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.vars.len();
        let mut check_terms = |what: String, terms: &[(Rational, VarId)]| {
            let mut seen = HashSet::new();
            for (_, v) in terms {
                if v.0 >= n {
                    out.push(Violation { what: what.clone(), detail: format!("references undeclared variable #{}", v.0) });
                } else if !seen.insert(*v) {
                    out.push(Violation {
                        what: what.clone(),
                        detail: format!("variable {} appears twice", self.vars[v.0].symbol),
                    });
                }
            }
        };
        check_terms("objective".into(), &self.objective);
        for c in &self.constraints {
            check_terms(c.tag.name(), &c.terms);
        }
        let mut names = HashSet::new();
        for c in &self.constraints {
            if !names.insert(c.tag.name()) {
                out.push(Violation { what: c.tag.name(), detail: "duplicate constraint name".into() });
            }
        }
        out
    }
}

/// Compares two models by variable and constraint names: same variable
/// domains, same objective (ignoring zero coefficients) and the same rows with
/// identical coefficients. Variable and row order are irrelevant.
pub fn models_equivalent(a: &MilpModel, b: &MilpModel) -> Result<(), String> {
    let domains = |m: &MilpModel| -> HashMap<String, Domain> {
        m.vars.iter().map(|v| (v.symbol.name(), v.domain.clone())).collect()
    };
    if domains(a) != domains(b) {
        return Err("variable sets or domains differ".into());
    }
    let named = |m: &MilpModel, terms: &[(Rational, VarId)], skip_zero: bool| -> BTreeMap<String, Rational> {
        terms
            .iter()
            .filter(|(c, _)| !(skip_zero && c.is_zero()))
            .map(|(c, v)| (m.vars[v.0].symbol.name(), *c))
            .collect()
    };
    if named(a, &a.objective, true) != named(b, &b.objective, true) {
        return Err("objectives differ".into());
    }
    let rows = |m: &MilpModel| -> BTreeMap<String, (Sense, Rational, BTreeMap<String, Rational>)> {
        m.constraints.iter().map(|c| (c.tag.name(), (c.sense, c.rhs, named(m, &c.terms, false)))).collect()
    };
    let (ra, rb) = (rows(a), rows(b));
    if ra.len() != a.constraints.len() || rb.len() != b.constraints.len() {
        return Err("duplicate constraint names".into());
    }
    for (name, row) in &ra {
        match rb.get(name) {
            None => return Err(format!("constraint {name} missing")),
            Some(other) if other != row => return Err(format!("constraint {name} differs")),
            Some(_) => {}
        }
    }
    if ra.len() != rb.len() {
        return Err("constraint sets differ".into());
    }
    Ok(())
}

/// Renders a rational as a decimal literal. Exact for terminating decimals,
/// otherwise the nearest `f64` with round-trip precision.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    let mut den = *r.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while den % 2 == 0 {
        den /= 2;
        twos += 1;
    }
    while den % 5 == 0 {
        den /= 5;
        fives += 1;
    }
    if den == 1 {
        let digits = twos.max(fives);
        let scale = 10i128.pow(digits);
        let scaled = (r * rat(scale)).to_integer();
        let sign = if scaled < 0 { "-" } else { "" };
        let abs = scaled.unsigned_abs();
        let int = abs / scale as u128;
        let frac = abs % scale as u128;
        return format!("{sign}{int}.{frac:0width$}", width = digits as usize);
    }
    format!("{:?}", r.to_f64().unwrap_or(f64::NAN))
}

/// Parses a decimal literal (optionally with exponent) into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(p) => (&s[..p], s[p + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let num: i128 = format!("{int}{frac}").parse().ok()?;
    let mut value = Rational::new(num, 10i128.checked_pow(frac.len() as u32)?);
    let scale = rat(10i128.checked_pow(exp.unsigned_abs())?);
    value = if exp >= 0 { value * scale } else { value / scale };
    Some(if neg { -value } else { value })
}
