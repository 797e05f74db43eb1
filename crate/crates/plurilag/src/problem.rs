//! The problem-file format.
//!
//! A problem file is a line-oriented UTF-8 document with sections
//! `[context]`, `[expr]`, `[field]`, `[form]`, `[system]` and `[task]`.
//! Lines starting with `#` and blank lines are ignored. The context must be
//! declared exactly once, before anything that uses it, and every name must
//! be defined before it is referenced.
//!
//! ```text
//! [context]
//! independent = x, y, z
//! dependent = u
//!
//! [expr]
//! L = 1/2*u_x*u_y - cos(u)
//! phi = u_xxx + 1/2*u_x^3
//!
//! # one characteristic per dependent variable, separated by `;`
//! [field]
//! flow = @phi
//!
//! # form coefficients by plane, antisymmetry handles permuted tuples
//! [form]
//! action[x,y] = @L
//!
//! # oriented rules `lead = rhs`, priority in declaration order
//! [system]
//! full = u_xy = sin(u); u_z = @phi
//!
//! [task]
//! check-symmetry name=vs lagrangian=L field=flow witnesses=N,M,Z
//! ```
//!
//! Comments occupy whole lines; there are no trailing comments, so
//! expression text is taken verbatim. Expression values use the grammar of
//! [`crate::parse`] extended with `@name` references to previously defined
//! `[expr]` entries; the referenced canonical expression is spliced in
//! place.

use crate::calculus::EvolutionaryField;
use crate::context::{Context, JetVar};
use crate::error::Error;
use crate::expr::{Atom, Expr};
use crate::parse::parse_expr_with_defs;
use crate::pluri::LagrangianForm;
use crate::reduction::{EquationSystem, Rule};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// A problem-file error carrying the 1-based line number.
#[derive(Debug)]
pub struct ProblemError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ProblemError {}

type PResult<T> = std::result::Result<T, ProblemError>;

fn fail<T>(line: usize, message: impl Into<String>) -> PResult<T> {
    Err(ProblemError {
        line,
        message: message.into(),
    })
}

fn lift<T>(line: usize, r: crate::error::Result<T>) -> PResult<T> {
    r.map_err(|e| ProblemError {
        line,
        message: e.to_string(),
    })
}

/// Which failure a `witness-search` task expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectedFailure {
    NotADivergence,
    AnsatzExhausted,
}

/// One task record; string fields name previously defined objects.
#[derive(Debug, Clone)]
pub enum TaskKind {
    CheckSymmetry {
        lagrangian: String,
        field: String,
        witnesses: Vec<String>,
        system: Option<String>,
    },
    Euler {
        of: String,
        dep: Option<String>,
        expect: Option<String>,
    },
    Reduce {
        of: String,
        system: String,
        expect: Option<String>,
    },
    DForm {
        form: String,
        expect_zero: bool,
    },
    Closure {
        form: String,
        system: String,
        expect: Option<String>,
    },
    DeriveEl {
        form: String,
        expect_count: Option<usize>,
    },
    ClassifyEl {
        form: String,
        system: String,
        expect_independent: Option<usize>,
    },
    Conservation {
        lagrangian: String,
        field: String,
        witnesses: Vec<String>,
        expect: Option<Vec<String>>,
    },
    WitnessSearch {
        of: String,
        order: u32,
        degree: u32,
        trig: bool,
        expect_failure: Option<ExpectedFailure>,
    },
}

impl TaskKind {
    /// The subcommand this task belongs to.
    pub fn command(&self) -> &'static str {
        match self {
            TaskKind::CheckSymmetry { .. } => "check-symmetry",
            TaskKind::Euler { .. } => "euler",
            TaskKind::Reduce { .. } => "reduce",
            TaskKind::DForm { .. } => "dform",
            TaskKind::Closure { .. } => "closure",
            TaskKind::DeriveEl { .. } => "derive-el",
            TaskKind::ClassifyEl { .. } => "classify-el",
            TaskKind::Conservation { .. } => "conservation",
            TaskKind::WitnessSearch { .. } => "witness-search",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Task {
    pub name: String,
    pub kind: TaskKind,
    pub line: usize,
}

/// A fully resolved problem file.
#[derive(Debug)]
pub struct ProblemFile {
    pub context: Arc<Context>,
    pub exprs: Vec<(String, Expr)>,
    pub fields: Vec<(String, EvolutionaryField)>,
    pub forms: Vec<(String, LagrangianForm)>,
    pub systems: Vec<(String, EquationSystem)>,
    pub tasks: Vec<Task>,
}

impl ProblemFile {
    pub fn expr(&self, name: &str) -> Option<&Expr> {
        self.exprs.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    pub fn field(&self, name: &str) -> Option<&EvolutionaryField> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    pub fn form(&self, name: &str) -> Option<&LagrangianForm> {
        self.forms.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    pub fn system(&self, name: &str) -> Option<&EquationSystem> {
        self.systems.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    /// Parses a problem file from text.
    pub fn parse(text: &str) -> PResult<ProblemFile> {
        Parser::default().run(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Context,
    Expr,
    Field,
    Form,
    System,
    Task,
}

#[derive(Default)]
struct Parser {
    context: Option<Arc<Context>>,
    indep_decl: Option<Vec<String>>,
    dep_decl: Option<Vec<String>>,
    exprs: Vec<(String, Expr)>,
    expr_index: HashMap<String, Expr>,
    fields: Vec<(String, EvolutionaryField)>,
    forms: Vec<(String, LagrangianForm)>,
    systems: Vec<(String, EquationSystem)>,
    tasks: Vec<Task>,
    task_counter: usize,
}

impl Parser {
    fn run(mut self, text: &str) -> PResult<ProblemFile> {
        let mut section = Section::None;
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(header) = line.strip_prefix('[') {
                let Some(name) = header.strip_suffix(']') else {
                    return fail(lineno, "malformed section header");
                };
                section = match name.trim() {
                    "context" => Section::Context,
                    "expr" => Section::Expr,
                    "field" => Section::Field,
                    "form" => Section::Form,
                    "system" => Section::System,
                    "task" => Section::Task,
                    other => return fail(lineno, format!("unknown section `[{other}]`")),
                };
                if section == Section::Context && self.context.is_some() {
                    return fail(lineno, "the context is declared more than once");
                }
                continue;
            }
            match section {
                Section::None => {
                    return fail(lineno, "content before the first section header");
                }
                Section::Context => self.context_line(lineno, line)?,
                Section::Expr => self.expr_line(lineno, line)?,
                Section::Field => self.field_line(lineno, line)?,
                Section::Form => self.form_line(lineno, line)?,
                Section::System => self.system_line(lineno, line)?,
                Section::Task => self.task_line(lineno, line)?,
            }
        }
        let Some(context) = self.context else {
            return fail(0, "missing [context] section");
        };
        Ok(ProblemFile {
            context,
            exprs: self.exprs,
            fields: self.fields,
            forms: self.forms,
            systems: self.systems,
            tasks: self.tasks,
        })
    }

    fn ctx(&self, lineno: usize) -> PResult<Arc<Context>> {
        match &self.context {
            Some(c) => Ok(c.clone()),
            None => fail(lineno, "the [context] section must come first"),
        }
    }

    fn context_line(&mut self, lineno: usize, line: &str) -> PResult<()> {
        let Some((key, value)) = line.split_once('=') else {
            return fail(lineno, "expected `independent = ...` or `dependent = ...`");
        };
        let names: Vec<String> = value
            .split(',')
            .map(|s| s.trim().to_owned())
            .filter(|s| !s.is_empty())
            .collect();
        if names.is_empty() {
            return fail(lineno, "expected at least one variable name");
        }
        match key.trim() {
            "independent" => {
                if self.indep_decl.is_some() {
                    return fail(lineno, "independent variables declared twice");
                }
                self.indep_decl = Some(names);
            }
            "dependent" => {
                if self.dep_decl.is_some() {
                    return fail(lineno, "dependent variables declared twice");
                }
                self.dep_decl = Some(names);
            }
            other => return fail(lineno, format!("unknown context key `{other}`")),
        }
        if let (Some(indep), Some(dep)) = (&self.indep_decl, &self.dep_decl) {
            let ctx = lift(lineno, Context::shared(indep, dep))?;
            self.context = Some(ctx);
        }
        Ok(())
    }

    fn parse_value(&self, lineno: usize, text: &str) -> PResult<Expr> {
        let ctx = self.ctx(lineno)?;
        parse_expr_with_defs(text.trim(), &ctx, &self.expr_index).map_err(|e| ProblemError {
            line: lineno,
            message: e.to_string(),
        })
    }

    fn check_fresh(&self, lineno: usize, kind: &str, name: &str) -> PResult<()> {
        let clash = match kind {
            "expr" => self.expr_index.contains_key(name),
            "field" => self.fields.iter().any(|(n, _)| n == name),
            "form" => self.forms.iter().any(|(n, _)| n == name),
            "system" => self.systems.iter().any(|(n, _)| n == name),
            _ => false,
        };
        if clash {
            fail(lineno, format!("duplicate {kind} name `{name}`"))
        } else {
            Ok(())
        }
    }

    fn expr_line(&mut self, lineno: usize, line: &str) -> PResult<()> {
        let Some((name, value)) = line.split_once('=') else {
            return fail(lineno, "expected `name = expression`");
        };
        let name = name.trim();
        if !is_identifier(name) {
            return fail(lineno, format!("invalid expression name `{name}`"));
        }
        self.check_fresh(lineno, "expr", name)?;
        let expr = self.parse_value(lineno, value)?;
        self.expr_index.insert(name.to_owned(), expr.clone());
        self.exprs.push((name.to_owned(), expr));
        Ok(())
    }

    fn field_line(&mut self, lineno: usize, line: &str) -> PResult<()> {
        let ctx = self.ctx(lineno)?;
        let Some((name, value)) = line.split_once('=') else {
            return fail(lineno, "expected `name = characteristic(; ...)`");
        };
        let name = name.trim();
        if !is_identifier(name) {
            return fail(lineno, format!("invalid field name `{name}`"));
        }
        self.check_fresh(lineno, "field", name)?;
        let chars: Vec<Expr> = value
            .split(';')
            .map(|part| self.parse_value(lineno, part))
            .collect::<PResult<_>>()?;
        let field = lift(lineno, EvolutionaryField::new(&ctx, chars))?;
        self.fields.push((name.to_owned(), field));
        Ok(())
    }

    fn form_line(&mut self, lineno: usize, line: &str) -> PResult<()> {
        let ctx = self.ctx(lineno)?;
        let Some((head, value)) = line.split_once('=') else {
            return fail(lineno, "expected `name[i,j,...] = expression`");
        };
        let head = head.trim();
        let Some((name, rest)) = head.split_once('[') else {
            return fail(lineno, "form coefficients are written `name[i,j,...] = ...`");
        };
        let name = name.trim();
        if !is_identifier(name) {
            return fail(lineno, format!("invalid form name `{name}`"));
        }
        let Some(tuple_text) = rest.trim().strip_suffix(']') else {
            return fail(lineno, "missing `]` in the coefficient tuple");
        };
        let mut tuple = Vec::new();
        for part in tuple_text.split(',') {
            let var = part.trim();
            match ctx.indep_index(var) {
                Some(i) => tuple.push(i),
                None => {
                    return fail(
                        lineno,
                        format!("`{var}` is not an independent variable of the context"),
                    )
                }
            }
        }
        let expr = self.parse_value(lineno, value)?;
        let position = self.forms.iter().position(|(n, _)| n == name);
        match position {
            Some(i) => {
                if self.forms[i].1.degree() != tuple.len() {
                    return fail(
                        lineno,
                        format!(
                            "form `{name}` has degree {}, got a {}-index coefficient",
                            self.forms[i].1.degree(),
                            tuple.len()
                        ),
                    );
                }
                let existing = lift(lineno, self.forms[i].1.coefficient(&tuple))?;
                if !existing.is_zero() {
                    return fail(
                        lineno,
                        format!("coefficient of form `{name}` at this tuple is already set"),
                    );
                }
                lift(lineno, self.forms[i].1.set_coefficient(&tuple, expr))?;
            }
            None => {
                let mut form = lift(lineno, LagrangianForm::new(&ctx, tuple.len()))?;
                lift(lineno, form.set_coefficient(&tuple, expr))?;
                self.forms.push((name.to_owned(), form));
            }
        }
        Ok(())
    }

    fn system_line(&mut self, lineno: usize, line: &str) -> PResult<()> {
        let ctx = self.ctx(lineno)?;
        let Some((name, value)) = line.split_once('=') else {
            return fail(lineno, "expected `name = lead = rhs; ...`");
        };
        let name = name.trim();
        if !is_identifier(name) {
            return fail(lineno, format!("invalid system name `{name}`"));
        }
        self.check_fresh(lineno, "system", name)?;
        let mut rules = Vec::new();
        for rule_text in value.split(';') {
            let Some((lead_text, rhs_text)) = rule_text.split_once('=') else {
                return fail(lineno, "each rule is written `lead = rhs`");
            };
            let lead = self.parse_jet_var(lineno, lead_text)?;
            let rhs = self.parse_value(lineno, rhs_text)?;
            rules.push(lift(lineno, Rule::new(lead, rhs))?);
        }
        let system = lift(lineno, EquationSystem::new(&ctx, rules))?;
        self.systems.push((name.to_owned(), system));
        Ok(())
    }

    /// A rule lead must be a single jet variable.
    fn parse_jet_var(&self, lineno: usize, text: &str) -> PResult<JetVar> {
        let expr = self.parse_value(lineno, text)?;
        let terms = expr.terms();
        if terms.len() == 1 && terms[0].coeff() == &num_rational::BigRational::from_integer(1.into())
        {
            if let [(Atom::Jet(v), 1)] = terms[0].factors() {
                return Ok(v.clone());
            }
        }
        fail(
            lineno,
            format!("`{}` is not a jet variable (rule leads must be)", text.trim()),
        )
    }

    fn task_line(&mut self, lineno: usize, line: &str) -> PResult<()> {
        let mut tokens = line.split_whitespace();
        let Some(kind_token) = tokens.next() else {
            return fail(lineno, "empty task line");
        };
        let mut pairs: HashMap<String, String> = HashMap::new();
        for token in tokens {
            let Some((k, v)) = token.split_once('=') else {
                return fail(lineno, format!("expected key=value, got `{token}`"));
            };
            if pairs.insert(k.to_owned(), v.to_owned()).is_some() {
                return fail(lineno, format!("duplicate key `{k}`"));
            }
        }
        let mut take = |key: &str| pairs.remove(key);

        let kind = match kind_token {
            "check-symmetry" => TaskKind::CheckSymmetry {
                lagrangian: self.want_expr(lineno, take("lagrangian"), "lagrangian")?,
                field: self.want_field(lineno, take("field"))?,
                witnesses: self.want_expr_list(lineno, take("witnesses"), "witnesses")?,
                system: self.maybe_system(lineno, take("system"))?,
            },
            "euler" => TaskKind::Euler {
                of: self.want_expr(lineno, take("of"), "of")?,
                dep: match take("dep") {
                    None => None,
                    Some(name) => {
                        if self.ctx(lineno)?.dep_index(&name).is_none() {
                            return fail(
                                lineno,
                                format!("`{name}` is not a dependent variable"),
                            );
                        }
                        Some(name)
                    }
                },
                expect: self.maybe_expr(lineno, take("expect"))?,
            },
            "reduce" => TaskKind::Reduce {
                of: self.want_expr(lineno, take("of"), "of")?,
                system: self.want_system(lineno, take("system"))?,
                expect: self.maybe_expr(lineno, take("expect"))?,
            },
            "dform" => TaskKind::DForm {
                form: self.want_form(lineno, take("form"))?,
                expect_zero: matches!(take("expect-zero").as_deref(), Some("true")),
            },
            "closure" => TaskKind::Closure {
                form: self.want_form(lineno, take("form"))?,
                system: self.want_system(lineno, take("system"))?,
                expect: self.maybe_expr(lineno, take("expect"))?,
            },
            "derive-el" => TaskKind::DeriveEl {
                form: self.want_form(lineno, take("form"))?,
                expect_count: parse_opt_number(lineno, take("expect-count"))?,
            },
            "classify-el" => TaskKind::ClassifyEl {
                form: self.want_form(lineno, take("form"))?,
                system: self.want_system(lineno, take("system"))?,
                expect_independent: parse_opt_number(lineno, take("expect-independent"))?,
            },
            "conservation" => TaskKind::Conservation {
                lagrangian: self.want_expr(lineno, take("lagrangian"), "lagrangian")?,
                field: self.want_field(lineno, take("field"))?,
                witnesses: self.want_expr_list(lineno, take("witnesses"), "witnesses")?,
                expect: match take("expect") {
                    Some(v) => Some(self.want_expr_list(lineno, Some(v), "expect")?),
                    None => None,
                },
            },
            "witness-search" => TaskKind::WitnessSearch {
                of: self.want_expr(lineno, take("of"), "of")?,
                order: parse_opt_number(lineno, take("order"))?
                    .ok_or_else(|| ProblemError {
                        line: lineno,
                        message: "witness-search needs `order=N`".to_owned(),
                    })?,
                degree: parse_opt_number(lineno, take("degree"))?
                    .ok_or_else(|| ProblemError {
                        line: lineno,
                        message: "witness-search needs `degree=N`".to_owned(),
                    })?,
                trig: match take("trig").as_deref() {
                    Some("on") => true,
                    Some("off") | None => false,
                    Some(other) => {
                        return fail(lineno, format!("trig is `on` or `off`, got `{other}`"))
                    }
                },
                expect_failure: match take("expect-failure").as_deref() {
                    None => None,
                    Some("not-a-divergence") => Some(ExpectedFailure::NotADivergence),
                    Some("ansatz-exhausted") => Some(ExpectedFailure::AnsatzExhausted),
                    Some(other) => {
                        return fail(
                            lineno,
                            format!("unknown expected failure `{other}`"),
                        )
                    }
                },
            },
            other => return fail(lineno, format!("unknown task type `{other}`")),
        };

        let name = match pairs.remove("name") {
            Some(n) => n,
            None => {
                self.task_counter += 1;
                format!("{}#{}", kind_token, self.task_counter)
            }
        };
        if let Some(stray) = pairs.keys().next() {
            return fail(lineno, format!("unknown key `{stray}` for `{kind_token}`"));
        }
        if self.tasks.iter().any(|t| t.name == name) {
            return fail(lineno, format!("duplicate task name `{name}`"));
        }
        self.tasks.push(Task {
            name,
            kind,
            line: lineno,
        });
        Ok(())
    }

    fn want_expr(&self, lineno: usize, v: Option<String>, key: &str) -> PResult<String> {
        let Some(name) = v else {
            return fail(lineno, format!("missing `{key}=`"));
        };
        if !self.expr_index.contains_key(&name) {
            return fail(lineno, format!("unknown expression `{name}`"));
        }
        Ok(name)
    }

    fn maybe_expr(&self, lineno: usize, v: Option<String>) -> PResult<Option<String>> {
        match v {
            None => Ok(None),
            Some(name) => {
                if !self.expr_index.contains_key(&name) {
                    return fail(lineno, format!("unknown expression `{name}`"));
                }
                Ok(Some(name))
            }
        }
    }

    fn want_expr_list(
        &self,
        lineno: usize,
        v: Option<String>,
        key: &str,
    ) -> PResult<Vec<String>> {
        let Some(list) = v else {
            return fail(lineno, format!("missing `{key}=`"));
        };
        let names: Vec<String> = list.split(',').map(|s| s.trim().to_owned()).collect();
        for name in &names {
            if !self.expr_index.contains_key(name) {
                return fail(lineno, format!("unknown expression `{name}`"));
            }
        }
        Ok(names)
    }

    fn want_field(&self, lineno: usize, v: Option<String>) -> PResult<String> {
        let Some(name) = v else {
            return fail(lineno, "missing `field=`");
        };
        if !self.fields.iter().any(|(n, _)| n == &name) {
            return fail(lineno, format!("unknown field `{name}`"));
        }
        Ok(name)
    }

    fn want_form(&self, lineno: usize, v: Option<String>) -> PResult<String> {
        let Some(name) = v else {
            return fail(lineno, "missing `form=`");
        };
        if !self.forms.iter().any(|(n, _)| n == &name) {
            return fail(lineno, format!("unknown form `{name}`"));
        }
        Ok(name)
    }

    fn want_system(&self, lineno: usize, v: Option<String>) -> PResult<String> {
        let Some(name) = v else {
            return fail(lineno, "missing `system=`");
        };
        if !self.systems.iter().any(|(n, _)| n == &name) {
            return fail(lineno, format!("unknown system `{name}`"));
        }
        Ok(name)
    }

    fn maybe_system(&self, lineno: usize, v: Option<String>) -> PResult<Option<String>> {
        match v {
            None => Ok(None),
            Some(name) => {
                if !self.systems.iter().any(|(n, _)| n == &name) {
                    return fail(lineno, format!("unknown system `{name}`"));
                }
                Ok(Some(name))
            }
        }
    }
}

fn parse_opt_number<T: std::str::FromStr>(lineno: usize, v: Option<String>) -> PResult<Option<T>> {
    match v {
        None => Ok(None),
        Some(text) => text.parse::<T>().map(Some).map_err(|_| ProblemError {
            line: lineno,
            message: format!("`{text}` is not a valid number"),
        }),
    }
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl From<ProblemError> for Error {
    fn from(e: ProblemError) -> Error {
        Error::Internal(e.to_string())
    }
}
