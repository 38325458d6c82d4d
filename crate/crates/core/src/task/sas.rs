//! Reader and writer for the Fast Downward translator output format
//! (version 3).
//!
//! Mutex groups are read and discarded. Axioms and conditional effects are
//! rejected.

use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Operator, PartialAssignment, State, Task, TaskError, Value, VarId, Variable};

#[derive(Debug, Error)]
pub enum SasError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unsupported SAS version {0} (only version 3 is supported)")]
    UnsupportedVersion(i64),
    #[error("line {line}: unsupported feature: {feature}")]
    UnsupportedFeature { line: usize, feature: String },
    #[error("invalid task: {0}")]
    Invalid(#[from] TaskError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().map(|l| l.trim_end_matches('\r')).collect(),
            pos: 0,
        }
    }

    /// 1-based number of the line returned by the last `next` call.
    fn line_no(&self) -> usize {
        self.pos
    }

    fn err(&self, message: impl Into<String>) -> SasError {
        SasError::Syntax {
            line: self.line_no().max(1),
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<&'a str, SasError> {
        match self.lines.get(self.pos) {
            Some(line) => {
                self.pos += 1;
                Ok(line)
            }
            None => {
                self.pos += 1;
                Err(self.err("unexpected end of input"))
            }
        }
    }

    fn expect(&mut self, marker: &str) -> Result<(), SasError> {
        let line = self.next()?;
        if line.trim() == marker {
            Ok(())
        } else {
            Err(self.err(format!("expected `{marker}`, found `{}`", line.trim())))
        }
    }

    fn ints(&mut self) -> Result<Vec<i64>, SasError> {
        let line = self.next()?;
        line.split_whitespace()
            .map(|tok| {
                tok.parse::<i64>()
                    .map_err(|_| self.err(format!("expected integer, found `{tok}`")))
            })
            .collect()
    }

    fn int(&mut self) -> Result<i64, SasError> {
        let v = self.ints()?;
        match v.as_slice() {
            [x] => Ok(*x),
            _ => Err(self.err(format!("expected one integer, found {} tokens", v.len()))),
        }
    }

    fn count(&mut self) -> Result<usize, SasError> {
        let v = self.int()?;
        usize::try_from(v).map_err(|_| self.err(format!("expected a count, found {v}")))
    }
}

fn var_value(lines: &Lines<'_>, var: i64, value: i64) -> Result<(VarId, Value), SasError> {
    let var = usize::try_from(var).map_err(|_| lines.err(format!("bad variable index {var}")))?;
    let value =
        Value::try_from(value).map_err(|_| lines.err(format!("bad value index {value}")))?;
    Ok((var, value))
}

fn assignment(
    lines: &Lines<'_>,
    pairs: Vec<(VarId, Value)>,
) -> Result<PartialAssignment, SasError> {
    PartialAssignment::new(pairs).map_err(|e| lines.err(e.to_string()))
}

/// Parses a complete translator output file.
pub fn parse_sas_str(text: &str) -> Result<Task, SasError> {
    let mut lines = Lines::new(text);

    lines.expect("begin_version")?;
    let version = lines.int()?;
    if version != 3 {
        return Err(SasError::UnsupportedVersion(version));
    }
    lines.expect("end_version")?;

    lines.expect("begin_metric")?;
    let metric = match lines.int()? {
        0 => false,
        1 => true,
        other => return Err(lines.err(format!("metric flag must be 0 or 1, found {other}"))),
    };
    lines.expect("end_metric")?;

    let num_vars = lines.count()?;
    let mut variables = Vec::with_capacity(num_vars);
    for _ in 0..num_vars {
        lines.expect("begin_variable")?;
        let name = lines.next()?.to_string();
        let layer = lines.int()?;
        if layer != -1 {
            return Err(SasError::UnsupportedFeature {
                line: lines.line_no(),
                feature: format!("axiom layer {layer} on variable `{name}` (derived variable)"),
            });
        }
        let domain = lines.count()?;
        let mut value_names = Vec::with_capacity(domain);
        for _ in 0..domain {
            value_names.push(lines.next()?.to_string());
        }
        lines.expect("end_variable")?;
        variables.push(Variable::new(name, value_names));
    }

    let num_mutexes = lines.count()?;
    for _ in 0..num_mutexes {
        lines.expect("begin_mutex_group")?;
        let size = lines.count()?;
        for _ in 0..size {
            let pair = lines.ints()?;
            if pair.len() != 2 {
                return Err(lines.err("mutex group entry must be `var value`"));
            }
        }
        lines.expect("end_mutex_group")?;
    }

    lines.expect("begin_state")?;
    let mut init = Vec::with_capacity(num_vars);
    for var in 0..num_vars {
        let v = lines.int()?;
        init.push(var_value(&lines, var as i64, v)?.1);
    }
    lines.expect("end_state")?;

    lines.expect("begin_goal")?;
    let num_goals = lines.count()?;
    let mut goal = Vec::with_capacity(num_goals);
    for _ in 0..num_goals {
        match lines.ints()?.as_slice() {
            [var, value] => goal.push(var_value(&lines, *var, *value)?),
            _ => return Err(lines.err("goal entry must be `var value`")),
        }
    }
    let goal = assignment(&lines, goal)?;
    lines.expect("end_goal")?;

    let num_ops = lines.count()?;
    let mut operators = Vec::with_capacity(num_ops);
    for _ in 0..num_ops {
        lines.expect("begin_operator")?;
        let name = lines.next()?.to_string();
        let mut pre = Vec::new();
        let mut eff = Vec::new();
        let num_prevail = lines.count()?;
        for _ in 0..num_prevail {
            match lines.ints()?.as_slice() {
                [var, value] => pre.push(var_value(&lines, *var, *value)?),
                _ => return Err(lines.err("prevail condition must be `var value`")),
            }
        }
        let num_effects = lines.count()?;
        for _ in 0..num_effects {
            let toks = lines.ints()?;
            let Some((&num_cond, rest)) = toks.split_first() else {
                return Err(lines.err("empty effect line"));
            };
            if num_cond != 0 {
                return Err(SasError::UnsupportedFeature {
                    line: lines.line_no(),
                    feature: format!("conditional effect in operator `{}`", name.trim()),
                });
            }
            let [var, pre_value, post] = rest else {
                return Err(lines.err("effect must be `0 var pre post`"));
            };
            if *pre_value != -1 {
                pre.push(var_value(&lines, *var, *pre_value)?);
            }
            eff.push(var_value(&lines, *var, *post)?);
        }
        let cost = lines.int()?;
        let cost = u64::try_from(cost).map_err(|_| lines.err(format!("negative cost {cost}")))?;
        lines.expect("end_operator")?;
        operators.push(Operator {
            name,
            precondition: assignment(&lines, pre)?,
            effect: assignment(&lines, eff)?,
            cost: if metric { cost } else { 1 },
        });
    }

    let num_axioms = lines.count()?;
    if num_axioms > 0 {
        return Err(SasError::UnsupportedFeature {
            line: lines.line_no(),
            feature: format!("{num_axioms} axiom rule(s)"),
        });
    }

    Ok(Task::new(
        variables,
        operators,
        State::new(init),
        goal,
        metric,
    )?)
}

pub fn parse_sas(mut reader: impl Read) -> Result<Task, SasError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_sas_str(&text)
}

pub fn parse_sas_file(path: impl AsRef<Path>) -> Result<Task, SasError> {
    parse_sas_str(&std::fs::read_to_string(path)?)
}

/// Renders `task` in translator format. Preconditions on variables that an
/// operator does not change become prevail conditions.
pub fn serialize_sas(task: &Task) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "begin_version\n3\nend_version");
    let _ = writeln!(
        w,
        "begin_metric\n{}\nend_metric",
        u8::from(task.metric_uses_costs())
    );
    let _ = writeln!(w, "{}", task.num_variables());
    for var in task.variables() {
        let _ = writeln!(w, "begin_variable\n{}\n-1\n{}", var.name, var.domain_size());
        for name in &var.value_names {
            let _ = writeln!(w, "{name}");
        }
        let _ = writeln!(w, "end_variable");
    }
    let _ = writeln!(w, "0");
    let _ = writeln!(w, "begin_state");
    for v in task.initial_state().iter() {
        let _ = writeln!(w, "{v}");
    }
    let _ = writeln!(w, "end_state");
    let _ = writeln!(w, "begin_goal\n{}", task.goal().len());
    for (var, value) in task.goal().iter() {
        let _ = writeln!(w, "{var} {value}");
    }
    let _ = writeln!(w, "end_goal");
    let _ = writeln!(w, "{}", task.num_operators());
    for op in task.operators() {
        let _ = writeln!(w, "begin_operator\n{}", op.name);
        let prevail: Vec<_> = op
            .precondition
            .iter()
            .filter(|&(var, _)| !op.effect.contains_var(var))
            .collect();
        let _ = writeln!(w, "{}", prevail.len());
        for (var, value) in prevail {
            let _ = writeln!(w, "{var} {value}");
        }
        let _ = writeln!(w, "{}", op.effect.len());
        for (var, post) in op.effect.iter() {
            let pre = op.precondition.get(var).map_or(-1, i64::from);
            let _ = writeln!(w, "0 {var} {pre} {post}");
        }
        let _ = writeln!(w, "{}\nend_operator", op.cost);
    }
    let _ = writeln!(w, "0");
    out
}

pub fn write_sas(task: &Task, mut writer: impl Write) -> io::Result<()> {
    writer.write_all(serialize_sas(task).as_bytes())
}
