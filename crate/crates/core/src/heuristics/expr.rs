//! A small arithmetic language over built-in heuristic values, used for
//! evolved heuristic definitions.
//!
//! ```text
//! # comment
//! name = weighted-ff
//! h = blind + round(1.5 * ff + 0.25 * goalcount)
//! ```
//!
//! Terminals are `blind`, `goalcount`, `hmax`, `hadd`, `ff` and `dtg` (sum of
//! DTG goal distances). Operators `+ - * /`, unary minus, parentheses and the
//! functions `min`, `max`, `round`, `ceil`, `floor`. A dead-end terminal makes
//! the whole value a dead end; a negative result is clamped to 0 and the
//! final value is rounded to the nearest integer.

use std::fmt;
use std::sync::Arc;

use super::relaxation::{HAdd, HMax};
use super::{
    Blind, BuildError, EvalError, Ff, GoalCount, Heuristic, HeuristicFactory, HeuristicValue,
};
use crate::cost::{self, INFINITY, MAX_FINITE};
use crate::graphs::{backward_goal_distances, DomainTransitionGraph, DtgDistanceTable};
use crate::task::{Task, Value, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Terminal {
    Blind,
    GoalCount,
    HMax,
    HAdd,
    Ff,
    Dtg,
}

impl Terminal {
    const ALL: [Terminal; 6] = [
        Self::Blind,
        Self::GoalCount,
        Self::HMax,
        Self::HAdd,
        Self::Ff,
        Self::Dtg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Blind => "blind",
            Self::GoalCount => "goalcount",
            Self::HMax => "hmax",
            Self::HAdd => "hadd",
            Self::Ff => "ff",
            Self::Dtg => "dtg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Round,
    Ceil,
    Floor,
}

impl Func {
    fn parse(name: &str) -> Option<(Self, usize)> {
        Some(match name {
            "min" => (Self::Min, 2),
            "max" => (Self::Max, 2),
            "round" => (Self::Round, 1),
            "ceil" => (Self::Ceil, 1),
            "floor" => (Self::Floor, 1),
            _ => return None,
        })
    }

    fn as_str(self) -> &'static str {
        match self {
            Self::Min => "min",
            Self::Max => "max",
            Self::Round => "round",
            Self::Ceil => "ceil",
            Self::Floor => "floor",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Term(Terminal),
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    fn collect_terminals(&self, out: &mut Vec<Terminal>) {
        match self {
            Expr::Num(_) => {}
            Expr::Term(t) => {
                if !out.contains(t) {
                    out.push(*t);
                }
            }
            Expr::Neg(e) => e.collect_terminals(out),
            Expr::Bin(_, a, b) => {
                a.collect_terminals(out);
                b.collect_terminals(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_terminals(out)),
        }
    }

    /// `None` means dead end.
    fn eval(&self, values: &[Option<f64>; 6]) -> Result<Option<f64>, EvalError> {
        Ok(match self {
            Expr::Num(x) => Some(*x),
            Expr::Term(t) => values[*t as usize],
            Expr::Neg(e) => e.eval(values)?.map(|x| -x),
            Expr::Bin(op, a, b) => {
                let (Some(x), Some(y)) = (a.eval(values)?, b.eval(values)?) else {
                    return Ok(None);
                };
                Some(match op {
                    '+' => x + y,
                    '-' => x - y,
                    '*' => x * y,
                    '/' => {
                        if y == 0.0 {
                            return Err(EvalError("division by zero".into()));
                        }
                        x / y
                    }
                    _ => unreachable!("parser only builds + - * /"),
                })
            }
            Expr::Call(f, args) => {
                let mut xs = Vec::with_capacity(args.len());
                for a in args {
                    match a.eval(values)? {
                        Some(x) => xs.push(x),
                        None => return Ok(None),
                    }
                }
                Some(match f {
                    Func::Min => xs[0].min(xs[1]),
                    Func::Max => xs[0].max(xs[1]),
                    Func::Round => xs[0].round(),
                    Func::Ceil => xs[0].ceil(),
                    Func::Floor => xs[0].floor(),
                })
            }
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x}"),
            Expr::Term(t) => f.write_str(t.as_str()),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {op} {b})"),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.as_str())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                i += 1;
                if i < chars.len() && (chars[i] == '-' || chars[i] == '+') {
                    i += 1;
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let x = text
                .parse::<f64>()
                .map_err(|_| format!("bad number `{text}`"))?;
            out.push(Tok::Num(x));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/(),".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), String> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<Expr, String> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                '+'
            } else if self.eat('-') {
                '-'
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, String> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                '*'
            } else if self.eat('/') {
                '/'
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, String> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, String> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(x)) => {
                self.pos += 1;
                Ok(Expr::Num(x))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(t) = Terminal::ALL.into_iter().find(|t| t.as_str() == name) {
                    return Ok(Expr::Term(t));
                }
                let Some((func, arity)) = Func::parse(&name) else {
                    return Err(format!("unknown name `{name}`"));
                };
                self.expect('(')?;
                let mut args = vec![self.expr()?];
                while self.eat(',') {
                    args.push(self.expr()?);
                }
                self.expect(')')?;
                if args.len() != arity {
                    return Err(format!(
                        "`{name}` takes {arity} argument(s), got {}",
                        args.len()
                    ));
                }
                Ok(Expr::Call(func, args))
            }
            Some(Tok::Sym(c)) => Err(format!("unexpected `{c}`")),
            None => Err("unexpected end of expression".into()),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, String> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(format!("trailing input at token {}", p.pos + 1));
    }
    Ok(e)
}

/// A parsed heuristic definition.
#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: Option<String>,
    pub expr: Expr,
    source: String,
}

impl Definition {
    pub fn parse(text: &str) -> Result<Self, BuildError> {
        let mut name = None;
        let mut expr = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| BuildError::Definition(format!("line {}: {m}", i + 1));
            let Some((key, value)) = line.split_once('=') else {
                return Err(err("expected `key = value`".into()));
            };
            match key.trim() {
                "name" => name = Some(value.trim().to_string()),
                "h" => {
                    if expr.is_some() {
                        return Err(err("duplicate `h` line".into()));
                    }
                    expr = Some(parse_expr(value).map_err(err)?);
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        let expr = expr.ok_or_else(|| BuildError::Definition("missing `h = ...` line".into()))?;
        Ok(Self {
            name,
            expr,
            source: text.to_string(),
        })
    }

    /// `blind + round(w[0]*ff + w[1]*hadd + w[2]*goalcount + w[3]*dtg)`,
    /// leaving out zero-weight terms. All-zero weights give plain `blind`.
    pub fn parametric(weights: &[f64; 4]) -> Self {
        const NAMES: [&str; 4] = ["ff", "hadd", "goalcount", "dtg"];
        let terms: Vec<String> = weights
            .iter()
            .zip(NAMES)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, n)| format!("{w} * {n}"))
            .collect();
        let body = if terms.is_empty() {
            "blind".to_string()
        } else {
            format!("blind + round({})", terms.join(" + "))
        };
        let source = format!("name = parametric\nh = {body}\n");
        Self::parse(&source).expect("generated definition parses")
    }

    /// Original text, suitable for writing back to a definition file.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn terminals(&self) -> Vec<Terminal> {
        let mut out = Vec::new();
        self.expr.collect_terminals(&mut out);
        out.sort();
        out
    }
}

impl HeuristicFactory for Definition {
    fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| "expr".into())
    }

    fn build(&self, task: &Arc<Task>) -> Result<Box<dyn Heuristic>, BuildError> {
        Ok(Box::new(ExprHeuristic::new(self, task)))
    }
}

/// Sum of unrefined DTG distances to every goal value.
struct DtgSum {
    goals: Vec<(VarId, DtgDistanceTable)>,
    work: u64,
}

impl DtgSum {
    fn new(task: &Task) -> Self {
        let goals: Vec<_> = task
            .goal()
            .iter()
            .map(|(v, x)| {
                (
                    v,
                    backward_goal_distances(&DomainTransitionGraph::build(task, v), x, None),
                )
            })
            .collect();
        let work = goals.iter().map(|(_, t)| t.dist.len() as u64).sum();
        Self { goals, work }
    }

    fn compute(&mut self, state: &[Value]) -> u64 {
        let mut h = 0;
        for (var, table) in &self.goals {
            self.work += 1;
            h = cost::add(h, table.get(state[*var]));
            if h == INFINITY {
                break;
            }
        }
        h
    }
}

/// Runtime of a [`Definition`] bound to one task. Only the terminals the
/// expression mentions are computed.
pub struct ExprHeuristic {
    name: String,
    expr: Expr,
    blind: Option<Blind>,
    goalcount: Option<GoalCount>,
    hmax: Option<HMax>,
    hadd: Option<HAdd>,
    ff: Option<Ff>,
    dtg: Option<DtgSum>,
}

impl ExprHeuristic {
    pub fn new(def: &Definition, task: &Arc<Task>) -> Self {
        let used = def.terminals();
        let has = |t: Terminal| used.contains(&t);
        let with_ff = has(Terminal::Ff);
        Self {
            name: def.name.clone().unwrap_or_else(|| "expr".into()),
            expr: def.expr.clone(),
            blind: has(Terminal::Blind).then(|| Blind::new(task.clone())),
            goalcount: has(Terminal::GoalCount).then(|| GoalCount::new(task.clone())),
            hmax: has(Terminal::HMax).then(|| HMax::new(task)),
            // h_add comes from the FF pass when both are needed
            hadd: (has(Terminal::HAdd) && !with_ff).then(|| HAdd::new(task)),
            ff: with_ff.then(|| Ff::new(task)),
            dtg: has(Terminal::Dtg).then(|| DtgSum::new(task)),
        }
    }

    fn terminal_values(&mut self, state: &[Value]) -> Result<[Option<f64>; 6], EvalError> {
        let finite = |c: u64| (c != INFINITY).then_some(c as f64);
        let mut v = [Some(0.0); 6];
        if let Some(h) = &mut self.blind {
            v[Terminal::Blind as usize] = h.evaluate(state)?.finite().map(|x| x as f64);
        }
        if let Some(h) = &mut self.goalcount {
            v[Terminal::GoalCount as usize] = h.evaluate(state)?.finite().map(|x| x as f64);
        }
        if let Some(h) = &mut self.hmax {
            v[Terminal::HMax as usize] = finite(h.compute(state));
        }
        if let Some(h) = &mut self.hadd {
            v[Terminal::HAdd as usize] = finite(h.compute(state));
        }
        if let Some(ff) = &mut self.ff {
            let h = ff.compute(state);
            v[Terminal::Ff as usize] = finite(h);
            let rt = ff.relaxed_task().clone();
            let total = rt
                .goal_facts()
                .iter()
                .fold(0, |acc, &g| cost::add(acc, ff.pass().fact_cost(g)));
            v[Terminal::HAdd as usize] = finite(total);
        }
        if let Some(h) = &mut self.dtg {
            v[Terminal::Dtg as usize] = finite(h.compute(state));
        }
        Ok(v)
    }
}

impl Heuristic for ExprHeuristic {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&mut self, state: &[Value]) -> Result<HeuristicValue, EvalError> {
        let values = self.terminal_values(state)?;
        match self.expr.eval(&values)? {
            None => Ok(HeuristicValue::DeadEnd),
            Some(x) if x.is_nan() => Err(EvalError("expression evaluated to NaN".into())),
            Some(x) if x <= 0.0 => Ok(HeuristicValue::Finite(0)),
            Some(x) if x >= MAX_FINITE as f64 => Ok(HeuristicValue::Finite(MAX_FINITE)),
            Some(x) => Ok(HeuristicValue::Finite(x.round() as u64)),
        }
    }

    fn work(&self) -> u64 {
        self.blind.as_ref().map_or(0, |h| h.work())
            + self.goalcount.as_ref().map_or(0, |h| h.work())
            + self.hmax.as_ref().map_or(0, |h| h.work())
            + self.hadd.as_ref().map_or(0, |h| h.work())
            + self.ff.as_ref().map_or(0, |h| h.work())
            + self.dtg.as_ref().map_or(0, |h| h.work)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn eval_on(def: &str, task: &Arc<Task>, state: &[Value]) -> HeuristicValue {
        let d = Definition::parse(def).unwrap();
        d.build(task).unwrap().evaluate(state).unwrap()
    }

    #[test]
    fn precedence_and_functions() {
        let e = parse_expr("1 + 2 * 3 - -4 / 2").unwrap();
        assert_eq!(e.eval(&[Some(0.0); 6]).unwrap(), Some(9.0));
        let e = parse_expr("max(min(1, 2), ceil(2.1)) + floor(1.9) + round(2.5)").unwrap();
        assert_eq!(e.eval(&[Some(0.0); 6]).unwrap(), Some(3.0 + 1.0 + 3.0));
        assert!(parse_expr("1 +").is_err());
        assert!(parse_expr("foo(1)").is_err());
        assert!(parse_expr("min(1)").is_err());
        assert!(parse_expr("(1").is_err());
        assert!(parse_expr("1 2").is_err());
    }

    #[test]
    fn definition_file_format() {
        let d = Definition::parse("# header\nname = mine\n\nh = ff * 2 # doubled\n").unwrap();
        assert_eq!(d.name.as_deref(), Some("mine"));
        assert_eq!(d.terminals(), vec![Terminal::Ff]);
        assert!(Definition::parse("name = x\n").is_err());
        assert!(Definition::parse("h = 1\nh = 2\n").is_err());
        assert!(Definition::parse("w = 1\n").is_err());
    }

    #[test]
    fn terminals_match_builtins() {
        let task = Arc::new(generators::logistics(3, 1, 2, 2));
        let init = task.initial_state().clone();
        let mut ff = Ff::new(&task);
        let r = ff.relaxed_plan(&init).unwrap();
        assert_eq!(
            eval_on("h = ff", &task, &init),
            HeuristicValue::Finite(r.h_ff)
        );
        assert_eq!(
            eval_on("h = hadd", &task, &init),
            HeuristicValue::Finite(r.h_add_total)
        );
        assert_eq!(
            eval_on("h = hadd + 0 * ff", &task, &init),
            HeuristicValue::Finite(r.h_add_total)
        );
        assert_eq!(
            eval_on("h = hmax", &task, &init),
            HeuristicValue::Finite(HMax::new(&task).compute(&init))
        );
        assert_eq!(
            eval_on("h = goalcount", &task, &init),
            HeuristicValue::Finite(2)
        );
        assert_eq!(
            eval_on("h = blind", &task, &init),
            HeuristicValue::Finite(1)
        );
    }

    #[test]
    fn parametric_zero_is_blind() {
        let task = Arc::new(generators::truck_package());
        let d = Definition::parametric(&[0.0; 4]);
        assert_eq!(d.terminals(), vec![Terminal::Blind]);
        let mut h = d.build(&task).unwrap();
        let mut blind = Blind::new(task.clone());
        for s in generators::reachable_states(&task, 100) {
            assert_eq!(h.evaluate(&s).unwrap(), blind.evaluate(&s).unwrap());
        }
    }

    #[test]
    fn parametric_source_round_trips() {
        let w = [0.1 + 0.2, 0.0, 1.0 / 3.0, 2.5];
        let d = Definition::parametric(&w);
        let again = Definition::parse(d.source()).unwrap();
        assert_eq!(d, again);
        assert_eq!(
            d.terminals(),
            vec![
                Terminal::Blind,
                Terminal::GoalCount,
                Terminal::Ff,
                Terminal::Dtg
            ]
        );
    }

    #[test]
    fn dead_end_propagates_and_negatives_clamp() {
        let task = Arc::new(generators::unsolvable_task());
        assert_eq!(eval_on("h = 0 * dtg", &task, &[0]), HeuristicValue::DeadEnd);
        assert_eq!(eval_on("h = 1 - 5", &task, &[0]), HeuristicValue::Finite(0));
        let d = Definition::parse("h = 1 / (goalcount - 1)").unwrap();
        assert!(d.build(&task).unwrap().evaluate(&[0]).is_err());
    }
}
