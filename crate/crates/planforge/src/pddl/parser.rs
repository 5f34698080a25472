//! Recursive-descent parser for the STRIPS subset: `:strips` and `:typing`
//! requirements, positive conjunctive preconditions and goals, and delete
//! effects written as `(not ...)` inside `:effect`. Anything outside the
//! subset is rejected with a located `Unsupported` diagnostic.
//!
//! Identifiers are case-insensitive and normalized to lower case.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::types::{
    ActionSchema, AtomTemplate, Domain, GroundAtom, Param, PredicateSchema, Problem, State,
    TemplateArg, TypeTree, OBJECT_TYPE,
};
use super::PddlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
enum Sexp {
    Sym(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Sym(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn sym(&self) -> Option<&str> {
        match self {
            Sexp::Sym(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    fn head(&self) -> Option<&str> {
        match self {
            Sexp::List(items, _) => items.first().and_then(|s| s.sym()),
            Sexp::Sym(..) => None,
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    col: usize,
}

#[derive(Debug, Clone)]
enum Token {
    LParen(Pos),
    RParen(Pos),
    Sym(String, Pos),
}

impl Token {
    fn pos(&self) -> Pos {
        match self {
            Token::LParen(p) | Token::RParen(p) => *p,
            Token::Sym(_, p) => *p,
        }
    }

    fn describe(&self) -> String {
        match self {
            Token::LParen(_) => "(".to_string(),
            Token::RParen(_) => ")".to_string(),
            Token::Sym(s, _) => format!("`{}`", s),
        }
    }
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, chars: src.char_indices().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let next = self.chars.next();
        if let Some((_, c)) = next {
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        next
    }

    fn tokens(mut self) -> Result<Vec<Token>, PddlError> {
        let mut out = Vec::new();
        while let Some(&(idx, c)) = self.chars.peek() {
            let pos = Pos { line: self.line, col: self.col };
            match c {
                ';' => {
                    while let Some(&(_, c)) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '(' => {
                    self.bump();
                    out.push(Token::LParen(pos));
                }
                ')' => {
                    self.bump();
                    out.push(Token::RParen(pos));
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                _ => {
                    let start = idx;
                    let mut end = idx + c.len_utf8();
                    self.bump();
                    while let Some(&(i, c)) = self.chars.peek() {
                        if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                            break;
                        }
                        end = i + c.len_utf8();
                        self.bump();
                    }
                    out.push(Token::Sym(self.src[start..end].to_lowercase(), pos));
                }
            }
        }
        Ok(out)
    }
}

fn syntax_err(expected: &str, found: &str, pos: Pos) -> PddlError {
    PddlError::Syntax {
        line: pos.line,
        col: pos.col,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

fn read_sexp(tokens: &[Token], at: &mut usize) -> Result<Sexp, PddlError> {
    match tokens.get(*at) {
        None => Err(syntax_err("expression", "end of input", Pos { line: 0, col: 0 })),
        Some(Token::Sym(s, p)) => {
            *at += 1;
            Ok(Sexp::Sym(s.clone(), *p))
        }
        Some(Token::RParen(p)) => Err(syntax_err("expression", ")", *p)),
        Some(Token::LParen(p)) => {
            let open = *p;
            *at += 1;
            let mut items = Vec::new();
            loop {
                match tokens.get(*at) {
                    None => return Err(syntax_err(")", "end of input", open)),
                    Some(Token::RParen(_)) => {
                        *at += 1;
                        return Ok(Sexp::List(items, open));
                    }
                    _ => items.push(read_sexp(tokens, at)?),
                }
            }
        }
    }
}

fn parse_sexp(src: &str) -> Result<Sexp, PddlError> {
    let tokens = Lexer::new(src).tokens()?;
    if tokens.is_empty() {
        return Err(syntax_err("(define ...)", "empty input", Pos { line: 1, col: 1 }));
    }
    let mut at = 0;
    let sexp = read_sexp(&tokens, &mut at)?;
    if let Some(extra) = tokens.get(at) {
        return Err(syntax_err("end of input", &extra.describe(), extra.pos()));
    }
    Ok(sexp)
}

/// Reads a typed name list: `a b - t c d - u e` where untyped trailing
/// names default to `object`.
fn parse_typed_list(items: &[Sexp]) -> Result<Vec<(String, String)>, PddlError> {
    let mut out: Vec<(String, String)> = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let sym = items[i]
            .sym()
            .ok_or_else(|| syntax_err("name", "list", items[i].pos()))?;
        if sym == "-" {
            let ty = items
                .get(i + 1)
                .and_then(|s| s.sym())
                .ok_or_else(|| syntax_err("type name", "end of list", items[i].pos()))?;
            for name in pending.drain(..) {
                out.push((name, ty.to_string()));
            }
            i += 2;
        } else {
            pending.push(sym.to_string());
            i += 1;
        }
    }
    for name in pending {
        out.push((name, OBJECT_TYPE.to_string()));
    }
    Ok(out)
}

const UNSUPPORTED_CONSTRUCTS: &[&str] = &[
    "not", "or", "imply", "forall", "exists", "when", "=", ">", "<", ">=", "<=", "increase",
    "decrease", "assign", "scale-up", "scale-down",
];

fn parse_atom_template(sexp: &Sexp) -> Result<AtomTemplate, PddlError> {
    match sexp {
        Sexp::Sym(s, p) => Err(syntax_err("atom", &format!("`{}`", s), *p)),
        Sexp::List(items, p) => {
            let head = items
                .first()
                .and_then(|s| s.sym())
                .ok_or_else(|| syntax_err("predicate name", "list", *p))?;
            if UNSUPPORTED_CONSTRUCTS.contains(&head) {
                return Err(PddlError::Unsupported {
                    name: head.to_string(),
                    line: p.line,
                    col: p.col,
                });
            }
            let mut args = Vec::new();
            for item in &items[1..] {
                let sym = item
                    .sym()
                    .ok_or_else(|| syntax_err("argument", "list", item.pos()))?;
                if let Some(var) = sym.strip_prefix('?') {
                    args.push(TemplateArg::Var(var.to_string()));
                } else {
                    args.push(TemplateArg::Const(sym.to_string()));
                }
            }
            Ok(AtomTemplate { predicate: head.to_string(), args })
        }
    }
}

/// Flattens `atom` or `(and atom*)` into a list of atoms.
fn parse_conjunction(sexp: &Sexp) -> Result<Vec<&Sexp>, PddlError> {
    match sexp {
        Sexp::List(items, _) if sexp.head() == Some("and") => Ok(items[1..].iter().collect()),
        Sexp::List(..) => Ok(vec![sexp]),
        Sexp::Sym(s, p) => Err(syntax_err("conjunction", &format!("`{}`", s), *p)),
    }
}

fn parse_params(sexp: &Sexp) -> Result<Vec<Param>, PddlError> {
    let items = match sexp {
        Sexp::List(items, _) => items,
        Sexp::Sym(s, p) => return Err(syntax_err("parameter list", &format!("`{}`", s), *p)),
    };
    let typed = parse_typed_list(items)?;
    let mut params = Vec::new();
    for (name, ty) in typed {
        let var = name
            .strip_prefix('?')
            .ok_or_else(|| syntax_err("?variable", &format!("`{}`", name), sexp.pos()))?;
        params.push(Param::new(var, ty));
    }
    Ok(params)
}

fn parse_action(items: &[Sexp], pos: Pos) -> Result<ActionSchema, PddlError> {
    let name = items
        .get(1)
        .and_then(|s| s.sym())
        .ok_or_else(|| syntax_err("action name", "nothing", pos))?
        .to_string();
    let mut params = Vec::new();
    let mut pre = BTreeSet::new();
    let mut add = BTreeSet::new();
    let mut del = BTreeSet::new();
    let mut i = 2;
    while i < items.len() {
        let key = items[i]
            .sym()
            .ok_or_else(|| syntax_err(":parameters/:precondition/:effect", "list", items[i].pos()))?;
        let value = items
            .get(i + 1)
            .ok_or_else(|| syntax_err("value after keyword", "end of action", items[i].pos()))?;
        match key {
            ":parameters" => params = parse_params(value)?,
            ":precondition" => {
                for atom in parse_conjunction(value)? {
                    pre.insert(parse_atom_template(atom)?);
                }
            }
            ":effect" => {
                for eff in parse_conjunction(value)? {
                    if eff.head() == Some("not") {
                        let inner = match eff {
                            Sexp::List(items, p) => items.get(1).ok_or_else(|| {
                                syntax_err("atom inside (not ...)", "nothing", *p)
                            })?,
                            Sexp::Sym(..) => unreachable!(),
                        };
                        del.insert(parse_atom_template(inner)?);
                    } else {
                        add.insert(parse_atom_template(eff)?);
                    }
                }
            }
            other => {
                let p = items[i].pos();
                return Err(PddlError::Unsupported {
                    name: other.to_string(),
                    line: p.line,
                    col: p.col,
                });
            }
        }
        i += 2;
    }
    Ok(ActionSchema { name, params, pre, add, del })
}

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing"];

/// Parses PDDL domain source into a checked [`Domain`].
pub fn parse_domain(src: &str) -> Result<Domain, PddlError> {
    let top = parse_sexp(src)?;
    let items = match &top {
        Sexp::List(items, _) if top.head() == Some("define") => items,
        other => return Err(syntax_err("(define ...)", "something else", other.pos())),
    };

    let mut name = String::new();
    let mut types = TypeTree::new();
    let mut predicates = BTreeMap::new();
    let mut actions = BTreeMap::new();

    for item in &items[1..] {
        let head = item
            .head()
            .ok_or_else(|| syntax_err("domain section", "symbol", item.pos()))?;
        let children = match item {
            Sexp::List(c, _) => c,
            Sexp::Sym(..) => unreachable!(),
        };
        match head {
            "domain" => {
                name = children
                    .get(1)
                    .and_then(|s| s.sym())
                    .ok_or_else(|| syntax_err("domain name", "nothing", item.pos()))?
                    .to_string();
            }
            ":requirements" => {
                for req in &children[1..] {
                    let r = req
                        .sym()
                        .ok_or_else(|| syntax_err("requirement", "list", req.pos()))?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r) {
                        let p = req.pos();
                        return Err(PddlError::Unsupported {
                            name: r.to_string(),
                            line: p.line,
                            col: p.col,
                        });
                    }
                }
            }
            ":types" => {
                for (ty, parent) in parse_typed_list(&children[1..])? {
                    types.declare(&ty, &parent);
                    if parent != OBJECT_TYPE {
                        types.declare(&parent, OBJECT_TYPE.to_string());
                    }
                }
            }
            ":predicates" => {
                for decl in &children[1..] {
                    let tmpl = parse_atom_template(decl)?;
                    let mut params = Vec::new();
                    let decl_items = match decl {
                        Sexp::List(items, _) => items,
                        Sexp::Sym(..) => unreachable!(),
                    };
                    let typed = parse_typed_list(&decl_items[1..])?;
                    for (pname, ty) in typed {
                        let var = pname.strip_prefix('?').ok_or_else(|| {
                            syntax_err("?variable", &format!("`{}`", pname), decl.pos())
                        })?;
                        params.push(Param::new(var, ty));
                    }
                    let schema = PredicateSchema { name: tmpl.predicate.clone(), params };
                    if predicates.insert(schema.name.clone(), schema).is_some() {
                        return Err(PddlError::Duplicate {
                            kind: "predicate".to_string(),
                            name: tmpl.predicate,
                        });
                    }
                }
            }
            ":action" => {
                let action = parse_action(children, item.pos())?;
                let aname = action.name.clone();
                if actions.insert(aname.clone(), action).is_some() {
                    return Err(PddlError::Duplicate { kind: "action".to_string(), name: aname });
                }
            }
            other => {
                let p = item.pos();
                return Err(PddlError::Unsupported {
                    name: other.to_string(),
                    line: p.line,
                    col: p.col,
                });
            }
        }
    }

    // Types referenced by params but never declared default to object children.
    let mut referenced: BTreeSet<String> = BTreeSet::new();
    for p in predicates.values() {
        referenced.extend(p.params.iter().map(|p| p.ty.clone()));
    }
    for a in actions.values() {
        referenced.extend(a.params.iter().map(|p| p.ty.clone()));
    }
    for ty in referenced {
        if !types.is_declared(&ty) {
            types.declare(ty, OBJECT_TYPE.to_string());
        }
    }

    let domain = Domain { name, types, predicates, actions };
    domain.check()?;
    Ok(domain)
}

fn parse_ground_atom(sexp: &Sexp) -> Result<GroundAtom, PddlError> {
    let tmpl = parse_atom_template(sexp)?;
    let mut args = Vec::new();
    for arg in tmpl.args {
        match arg {
            TemplateArg::Const(c) => args.push(c),
            TemplateArg::Var(v) => {
                return Err(syntax_err("object name", &format!("`?{}`", v), sexp.pos()))
            }
        }
    }
    Ok(GroundAtom::new(tmpl.predicate, args))
}

/// Parses PDDL problem source against an already-parsed domain.
pub fn parse_problem(src: &str, domain: &Arc<Domain>) -> Result<Problem, PddlError> {
    let top = parse_sexp(src)?;
    let items = match &top {
        Sexp::List(items, _) if top.head() == Some("define") => items,
        other => return Err(syntax_err("(define ...)", "something else", other.pos())),
    };

    let mut name = String::new();
    let mut objects = BTreeMap::new();
    let mut init = State::new();
    let mut goal = State::new();
    let mut saw_goal = false;

    for item in &items[1..] {
        let head = item
            .head()
            .ok_or_else(|| syntax_err("problem section", "symbol", item.pos()))?;
        let children = match item {
            Sexp::List(c, _) => c,
            Sexp::Sym(..) => unreachable!(),
        };
        match head {
            "problem" => {
                name = children
                    .get(1)
                    .and_then(|s| s.sym())
                    .ok_or_else(|| syntax_err("problem name", "nothing", item.pos()))?
                    .to_string();
            }
            ":domain" => {} // informational; the domain is supplied by the caller
            ":requirements" => {
                for req in &children[1..] {
                    let r = req
                        .sym()
                        .ok_or_else(|| syntax_err("requirement", "list", req.pos()))?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r) {
                        let p = req.pos();
                        return Err(PddlError::Unsupported {
                            name: r.to_string(),
                            line: p.line,
                            col: p.col,
                        });
                    }
                }
            }
            ":objects" => {
                for (obj, ty) in parse_typed_list(&children[1..])? {
                    if !domain.types.is_declared(&ty) {
                        return Err(PddlError::UnknownType(ty));
                    }
                    objects.insert(obj, ty);
                }
            }
            ":init" => {
                for atom in &children[1..] {
                    init.insert(parse_ground_atom(atom)?);
                }
            }
            ":goal" => {
                let body = children
                    .get(1)
                    .ok_or_else(|| syntax_err("goal body", "nothing", item.pos()))?;
                for atom in parse_conjunction(body)? {
                    goal.insert(parse_ground_atom(atom)?);
                }
                saw_goal = true;
            }
            other => {
                let p = item.pos();
                return Err(PddlError::Unsupported {
                    name: other.to_string(),
                    line: p.line,
                    col: p.col,
                });
            }
        }
    }

    if !saw_goal {
        return Err(syntax_err("(:goal ...)", "end of problem", top.pos()));
    }

    let problem = Problem { name, domain: Arc::clone(domain), objects, init, goal };
    for atom in problem.init.iter().chain(problem.goal.iter()) {
        problem.check_atom(atom)?;
    }
    Ok(problem)
}
