//! Reader and writer for the deterministic, state-based Rabin subset of HOA v1.
//!
//! Supported: `States`, `Start` (single state), `AP`, `Alias`, `Acceptance`,
//! `acc-name`, explicit edge labels built from `t`, `f`, AP indices, aliases,
//! `!`, `&`, `|` and parentheses, and state-based acceptance marks. Unknown
//! headers are skipped. Transition-based marks and implicit labels are rejected.

use std::collections::{BTreeMap, BTreeSet};

use super::{letter_names, map_props, AutomatonError, RabinAutomaton, RabinPair};
use crate::letter::Letter;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Header(String),
    Ident(String),
    Alias(String),
    Int(usize),
    Str(String),
    Sym(char),
    Body,
    End,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err(line: usize, col: usize, message: impl Into<String>) -> AutomatonError {
    AutomatonError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, AutomatonError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            let mut depth = 0usize;
            loop {
                if i >= chars.len() {
                    return Err(err(l0, c0, "unterminated comment"));
                }
                if chars[i] == '/' && chars.get(i + 1) == Some(&'*') {
                    depth += 1;
                    advance(&mut i, &mut line, &mut col, '/');
                    advance(&mut i, &mut line, &mut col, '*');
                } else if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    depth -= 1;
                    advance(&mut i, &mut line, &mut col, '*');
                    advance(&mut i, &mut line, &mut col, '/');
                    if depth == 0 {
                        break;
                    }
                } else {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
            }
        } else if c == '"' {
            advance(&mut i, &mut line, &mut col, c);
            let mut s = String::new();
            loop {
                let Some(&ch) = chars.get(i) else {
                    return Err(err(l0, c0, "unterminated string"));
                };
                advance(&mut i, &mut line, &mut col, ch);
                match ch {
                    '"' => break,
                    '\\' => {
                        let Some(&esc) = chars.get(i) else {
                            return Err(err(l0, c0, "unterminated string"));
                        };
                        advance(&mut i, &mut line, &mut col, esc);
                        s.push(esc);
                    }
                    _ => s.push(ch),
                }
            }
            out.push(Spanned {
                tok: Tok::Str(s),
                line: l0,
                col: c0,
            });
        } else if c.is_ascii_digit() {
            let mut n = String::new();
            while let Some(&d) = chars.get(i).filter(|d| d.is_ascii_digit()) {
                n.push(d);
                advance(&mut i, &mut line, &mut col, d);
            }
            let v = n.parse().map_err(|_| err(l0, c0, "integer too large"))?;
            out.push(Spanned {
                tok: Tok::Int(v),
                line: l0,
                col: c0,
            });
        } else if c == '-' && chars[i..].starts_with(&['-', '-']) {
            let mut w = String::new();
            while let Some(&d) = chars.get(i).filter(|d| !d.is_whitespace()) {
                w.push(d);
                advance(&mut i, &mut line, &mut col, d);
            }
            let tok = match w.as_str() {
                "--BODY--" => Tok::Body,
                "--END--" => Tok::End,
                "--ABORT--" => return Err(err(l0, c0, "automaton stream aborted")),
                _ => return Err(err(l0, c0, format!("unexpected `{w}`"))),
            };
            out.push(Spanned {
                tok,
                line: l0,
                col: c0,
            });
        } else if c.is_ascii_alphabetic() || c == '_' || c == '@' {
            let mut w = String::new();
            w.push(c);
            advance(&mut i, &mut line, &mut col, c);
            while let Some(&d) = chars
                .get(i)
                .filter(|d| d.is_ascii_alphanumeric() || **d == '_' || **d == '-')
            {
                w.push(d);
                advance(&mut i, &mut line, &mut col, d);
            }
            let tok = if chars.get(i) == Some(&':') && !w.starts_with('@') {
                advance(&mut i, &mut line, &mut col, ':');
                Tok::Header(w)
            } else if let Some(name) = w.strip_prefix('@') {
                Tok::Alias(name.to_string())
            } else {
                Tok::Ident(w)
            };
            out.push(Spanned {
                tok,
                line: l0,
                col: c0,
            });
        } else if "[]{}()!&|".contains(c) {
            out.push(Spanned {
                tok: Tok::Sym(c),
                line: l0,
                col: c0,
            });
            advance(&mut i, &mut line, &mut col, c);
        } else {
            return Err(err(l0, c0, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Label {
    True,
    False,
    Ap(usize),
    Not(Box<Label>),
    And(Box<Label>, Box<Label>),
    Or(Box<Label>, Box<Label>),
}

impl Label {
    fn eval(&self, ap_bits: &[usize], letter: Letter) -> bool {
        match self {
            Label::True => true,
            Label::False => false,
            Label::Ap(i) => letter.contains(ap_bits[*i]),
            Label::Not(e) => !e.eval(ap_bits, letter),
            Label::And(a, b) => a.eval(ap_bits, letter) && b.eval(ap_bits, letter),
            Label::Or(a, b) => a.eval(ap_bits, letter) || b.eval(ap_bits, letter),
        }
    }
}

#[derive(Debug, Clone)]
enum Acc {
    True,
    False,
    Fin(usize),
    Inf(usize),
    And(Box<Acc>, Box<Acc>),
    Or(Box<Acc>, Box<Acc>),
}

struct Parser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    aliases: BTreeMap<String, Label>,
    ap_count: Option<usize>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Spanned> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek()
            .or_else(|| self.toks.last())
            .map_or((1, 1), |t| (t.line, t.col))
    }

    fn fail(&self, message: impl Into<String>) -> AutomatonError {
        let (l, c) = self.here();
        err(l, c, message)
    }

    fn next(&mut self) -> Option<&'a Spanned> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Spanned { tok: Tok::Sym(s), .. }) if *s == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), AutomatonError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(self.fail(format!("expected `{c}`")))
        }
    }

    fn int(&mut self) -> Result<usize, AutomatonError> {
        match self.peek() {
            Some(Spanned { tok: Tok::Int(v), .. }) => {
                self.pos += 1;
                Ok(*v)
            }
            _ => Err(self.fail("expected an integer")),
        }
    }

    fn label_or(&mut self) -> Result<Label, AutomatonError> {
        let mut lhs = self.label_and()?;
        while self.eat_sym('|') {
            lhs = Label::Or(Box::new(lhs), Box::new(self.label_and()?));
        }
        Ok(lhs)
    }

    fn label_and(&mut self) -> Result<Label, AutomatonError> {
        let mut lhs = self.label_not()?;
        while self.eat_sym('&') {
            lhs = Label::And(Box::new(lhs), Box::new(self.label_not()?));
        }
        Ok(lhs)
    }

    fn label_not(&mut self) -> Result<Label, AutomatonError> {
        if self.eat_sym('!') {
            return Ok(Label::Not(Box::new(self.label_not()?)));
        }
        if self.eat_sym('(') {
            let e = self.label_or()?;
            self.expect_sym(')')?;
            return Ok(e);
        }
        let (line, col) = self.here();
        match self.next().map(|t| &t.tok) {
            Some(Tok::Ident(w)) if w == "t" => Ok(Label::True),
            Some(Tok::Ident(w)) if w == "f" => Ok(Label::False),
            Some(Tok::Int(i)) => match self.ap_count {
                Some(n) if *i < n => Ok(Label::Ap(*i)),
                _ => Err(err(line, col, format!("AP index {i} not declared"))),
            },
            Some(Tok::Alias(a)) => self
                .aliases
                .get(a)
                .cloned()
                .ok_or_else(|| err(line, col, format!("undefined alias @{a}"))),
            _ => Err(err(line, col, "expected a label expression")),
        }
    }

    fn acc_or(&mut self) -> Result<Acc, AutomatonError> {
        let mut lhs = self.acc_and()?;
        while self.eat_sym('|') {
            lhs = Acc::Or(Box::new(lhs), Box::new(self.acc_and()?));
        }
        Ok(lhs)
    }

    fn acc_and(&mut self) -> Result<Acc, AutomatonError> {
        let mut lhs = self.acc_atom()?;
        while self.eat_sym('&') {
            lhs = Acc::And(Box::new(lhs), Box::new(self.acc_atom()?));
        }
        Ok(lhs)
    }

    fn acc_atom(&mut self) -> Result<Acc, AutomatonError> {
        if self.eat_sym('(') {
            let e = self.acc_or()?;
            self.expect_sym(')')?;
            return Ok(e);
        }
        let (line, col) = self.here();
        match self.next().map(|t| &t.tok) {
            Some(Tok::Ident(w)) if w == "t" => Ok(Acc::True),
            Some(Tok::Ident(w)) if w == "f" => Ok(Acc::False),
            Some(Tok::Ident(w)) if w == "Fin" || w == "Inf" => {
                self.expect_sym('(')?;
                if self.eat_sym('!') {
                    return Err(AutomatonError::Unsupported(
                        "complemented acceptance sets".into(),
                    ));
                }
                let set = self.int()?;
                self.expect_sym(')')?;
                Ok(if w == "Fin" { Acc::Fin(set) } else { Acc::Inf(set) })
            }
            _ => Err(err(line, col, "expected an acceptance condition")),
        }
    }

    fn at_item_end(&self) -> bool {
        matches!(
            self.peek().map(|t| &t.tok),
            None | Some(Tok::Header(_)) | Some(Tok::Body) | Some(Tok::End)
        )
    }
}

/// A disjunct of the acceptance condition: Fin-sets to avoid, optional Inf-set.
struct RabinTerm {
    fin: Vec<usize>,
    inf: Option<usize>,
}

fn flatten_or(acc: Acc, out: &mut Vec<Acc>) {
    match acc {
        Acc::Or(a, b) => {
            flatten_or(*a, out);
            flatten_or(*b, out);
        }
        other => out.push(other),
    }
}

fn rabin_term(acc: Acc) -> Result<Option<RabinTerm>, AutomatonError> {
    fn walk(acc: Acc, term: &mut RabinTerm, dead: &mut bool) -> Result<(), AutomatonError> {
        match acc {
            Acc::True => {}
            Acc::False => *dead = true,
            Acc::Fin(s) => term.fin.push(s),
            Acc::Inf(s) => {
                if term.inf.replace(s).is_some() {
                    return Err(AutomatonError::NotRabin(
                        "a disjunct requires two Inf sets".into(),
                    ));
                }
            }
            Acc::And(a, b) => {
                walk(*a, term, dead)?;
                walk(*b, term, dead)?;
            }
            Acc::Or(..) => {
                return Err(AutomatonError::NotRabin(
                    "disjunction nested inside a conjunction".into(),
                ))
            }
        }
        Ok(())
    }
    let mut term = RabinTerm {
        fin: Vec::new(),
        inf: None,
    };
    let mut dead = false;
    walk(acc, &mut term, &mut dead)?;
    Ok((!dead).then_some(term))
}

struct Edge {
    label: Label,
    to: usize,
}

/// Parses an HOA automaton and expands it over the letters of `props`
/// (the model's proposition list). Automaton APs must be a subset of `props`.
pub fn parse_dra(text: &str, props: &[String]) -> Result<RabinAutomaton, AutomatonError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        aliases: BTreeMap::new(),
        ap_count: None,
    };

    match p.next() {
        Some(Spanned { tok: Tok::Header(h), .. }) if h == "HOA" => {}
        _ => return Err(err(1, 1, "expected `HOA: v1`")),
    }
    match p.next() {
        Some(Spanned { tok: Tok::Ident(v), .. }) if v == "v1" => {}
        Some(t) => return Err(err(t.line, t.col, "only HOA version v1 is supported")),
        None => return Err(err(1, 1, "expected `HOA: v1`")),
    }

    let mut n_states: Option<usize> = None;
    let mut start: Option<usize> = None;
    let mut aps: Vec<String> = Vec::new();
    let mut acceptance: Option<(usize, Acc)> = None;
    let mut rabin_name: Option<usize> = None;

    loop {
        let Some(t) = p.next() else {
            return Err(p.fail("missing `--BODY--`"));
        };
        let header = match &t.tok {
            Tok::Body => break,
            Tok::Header(h) => h.as_str(),
            _ => return Err(err(t.line, t.col, "expected a header item")),
        };
        match header {
            "States" => n_states = Some(p.int()?),
            "Start" => {
                let s = p.int()?;
                if p.eat_sym('&') {
                    return Err(AutomatonError::Unsupported("conjunctive initial states".into()));
                }
                if start.replace(s).is_some() {
                    return Err(AutomatonError::Unsupported(
                        "several initial states (automaton is not deterministic)".into(),
                    ));
                }
            }
            "AP" => {
                let count = p.int()?;
                for _ in 0..count {
                    match p.next() {
                        Some(Spanned { tok: Tok::Str(s), .. }) => aps.push(s.clone()),
                        _ => return Err(p.fail("expected a quoted proposition name")),
                    }
                }
                p.ap_count = Some(count);
            }
            "Alias" => {
                let name = match p.next() {
                    Some(Spanned { tok: Tok::Alias(a), .. }) => a.clone(),
                    _ => return Err(p.fail("expected an alias name")),
                };
                let e = p.label_or()?;
                p.aliases.insert(name, e);
            }
            "Acceptance" => {
                let sets = p.int()?;
                let cond = p.acc_or()?;
                acceptance = Some((sets, cond));
            }
            "acc-name" => {
                let name = match p.next() {
                    Some(Spanned { tok: Tok::Ident(n), .. }) => n.clone(),
                    _ => return Err(p.fail("expected an acceptance name")),
                };
                if name == "Rabin" {
                    rabin_name = Some(p.int()?);
                } else if !matches!(name.as_str(), "Buchi" | "all" | "none") {
                    return Err(AutomatonError::NotRabin(format!("acc-name `{name}`")));
                }
                while !p.at_item_end() {
                    p.pos += 1;
                }
            }
            _ => {
                while !p.at_item_end() {
                    p.pos += 1;
                }
            }
        }
        if !p.at_item_end() {
            return Err(p.fail(format!("unexpected token in `{header}:` item")));
        }
    }

    if p.ap_count.is_none() {
        p.ap_count = Some(0);
    }
    let n = n_states.ok_or_else(|| p.fail("missing `States:` header"))?;
    let initial = start.ok_or_else(|| p.fail("missing `Start:` header"))?;
    if initial >= n {
        return Err(AutomatonError::Invalid(format!("start state {initial} out of range")));
    }
    let (set_count, cond) = acceptance.ok_or_else(|| p.fail("missing `Acceptance:` header"))?;
    let ap_bits = map_props(&aps, props)?;

    let mut names: Vec<Option<String>> = vec![None; n];
    let mut marks: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut edges: Vec<Vec<Edge>> = (0..n).map(|_| Vec::new()).collect();
    let mut declared = vec![false; n];
    let mut current: Option<usize> = None;

    loop {
        let Some(t) = p.peek() else {
            return Err(p.fail("missing `--END--`"));
        };
        match &t.tok {
            Tok::End => {
                p.pos += 1;
                break;
            }
            Tok::Header(h) if h == "State" => {
                p.pos += 1;
                if matches!(p.peek(), Some(Spanned { tok: Tok::Sym('['), .. })) {
                    return Err(AutomatonError::Unsupported("state labels".into()));
                }
                let (line, col) = p.here();
                let s = p.int()?;
                if s >= n {
                    return Err(err(line, col, format!("state {s} out of range")));
                }
                if std::mem::replace(&mut declared[s], true) {
                    return Err(err(line, col, format!("state {s} declared twice")));
                }
                if let Some(Spanned { tok: Tok::Str(name), .. }) = p.peek() {
                    names[s] = Some(name.clone());
                    p.pos += 1;
                }
                if p.eat_sym('{') {
                    while !p.eat_sym('}') {
                        let (line, col) = p.here();
                        let m = p.int()?;
                        if m >= set_count {
                            return Err(err(line, col, format!("acceptance set {m} not declared")));
                        }
                        marks[s].insert(m);
                    }
                }
                current = Some(s);
            }
            Tok::Sym('[') => {
                let (line, col) = (t.line, t.col);
                p.pos += 1;
                let label = p.label_or()?;
                p.expect_sym(']')?;
                let (dl, dc) = p.here();
                let to = p.int()?;
                if to >= n {
                    return Err(err(dl, dc, format!("state {to} out of range")));
                }
                if p.eat_sym('&') {
                    return Err(AutomatonError::Unsupported("universal branching".into()));
                }
                if matches!(p.peek(), Some(Spanned { tok: Tok::Sym('{'), .. })) {
                    return Err(AutomatonError::Unsupported(
                        "transition-based acceptance marks".into(),
                    ));
                }
                let Some(s) = current else {
                    return Err(err(line, col, "edge outside of a state block"));
                };
                edges[s].push(Edge { label, to });
            }
            Tok::Int(_) => {
                return Err(AutomatonError::Unsupported("implicit edge labels".into()));
            }
            _ => return Err(p.fail("expected `State:`, an edge, or `--END--`")),
        }
    }
    if p.peek().is_some() {
        return Err(AutomatonError::Unsupported("multiple automata in one stream".into()));
    }

    let mut states: Vec<String> = Vec::with_capacity(n);
    for (i, name) in names.into_iter().enumerate() {
        states.push(name.unwrap_or_else(|| format!("s{i}")));
    }

    let mut delta = vec![vec![usize::MAX; 1 << props.len()]; n];
    for (s, out) in edges.iter().enumerate() {
        for letter in Letter::all(props.len()) {
            let mut succ: Option<usize> = None;
            for e in out.iter().filter(|e| e.label.eval(&ap_bits, letter)) {
                match succ {
                    Some(prev) if prev != e.to => {
                        return Err(AutomatonError::NonDeterministic {
                            state: states[s].clone(),
                            letter: letter_names(props, letter),
                        });
                    }
                    _ => succ = Some(e.to),
                }
            }
            match succ {
                Some(t) => delta[s][letter.index()] = t,
                None => {
                    return Err(AutomatonError::Incomplete {
                        state: states[s].clone(),
                        letter: letter_names(props, letter),
                    })
                }
            }
        }
    }

    let mut disjuncts = Vec::new();
    flatten_or(cond, &mut disjuncts);
    let mut pairs = Vec::new();
    let marks = &marks;
    for d in disjuncts {
        let Some(term) = rabin_term(d)? else {
            continue;
        };
        let marked = |set: usize| (0..n).filter(move |&s| marks[s].contains(&set));
        for &set in term.fin.iter().chain(&term.inf) {
            if set >= set_count {
                return Err(AutomatonError::NotRabin(format!(
                    "acceptance refers to undeclared set {set}"
                )));
            }
        }
        let fin: BTreeSet<usize> = term.fin.iter().flat_map(|&f| marked(f)).collect();
        let inf: BTreeSet<usize> = match term.inf {
            Some(set) => marked(set).collect(),
            None => (0..n).collect(),
        };
        pairs.push(RabinPair { fin, inf });
    }
    if pairs.is_empty() {
        // Condition `f`: no run is accepted.
        pairs.push(RabinPair::default());
    }
    if let Some(k) = rabin_name {
        if k != pairs.len() {
            return Err(AutomatonError::NotRabin(format!(
                "acc-name declares {k} pairs, condition has {}",
                pairs.len()
            )));
        }
    }
    RabinAutomaton::new(states, props.to_vec(), delta, initial, pairs)
}

fn letter_expr(letter: Letter, n: usize) -> String {
    if n == 0 {
        return "t".to_string();
    }
    (0..n)
        .map(|i| {
            if letter.contains(i) {
                i.to_string()
            } else {
                format!("!{i}")
            }
        })
        .collect::<Vec<_>>()
        .join("&")
}

pub(super) fn write_hoa(a: &RabinAutomaton) -> String {
    let k = a.pair_count();
    let mut out = String::new();
    out.push_str("HOA: v1\n");
    out.push_str(&format!("States: {}\n", a.len()));
    out.push_str(&format!("Start: {}\n", a.initial()));
    out.push_str(&format!("AP: {}", a.props().len()));
    for p in a.props() {
        out.push_str(&format!(" \"{}\"", p.replace('\\', "\\\\").replace('"', "\\\"")));
    }
    out.push('\n');
    out.push_str(&format!("acc-name: Rabin {k}\n"));
    let terms: Vec<String> = (0..k)
        .map(|i| format!("(Fin({})&Inf({}))", 2 * i, 2 * i + 1))
        .collect();
    out.push_str(&format!("Acceptance: {} {}\n", 2 * k, terms.join("|")));
    out.push_str("properties: trans-labels explicit-labels state-acc deterministic complete\n");
    out.push_str("--BODY--\n");
    for (s, name) in a.states().iter().enumerate() {
        let mut sets = Vec::new();
        for (i, pair) in a.pairs().iter().enumerate() {
            if pair.fin.contains(&s) {
                sets.push(2 * i);
            }
            if pair.inf.contains(&s) {
                sets.push(2 * i + 1);
            }
        }
        out.push_str(&format!("State: {s} \"{}\"", name.replace('\\', "\\\\").replace('"', "\\\"")));
        if !sets.is_empty() {
            let sets: Vec<String> = sets.iter().map(usize::to_string).collect();
            out.push_str(&format!(" {{{}}}", sets.join(" ")));
        }
        out.push('\n');
        for letter in Letter::all(a.props().len()) {
            out.push_str(&format!(
                "[{}] {}\n",
                letter_expr(letter, a.props().len()),
                a.step(s, letter)
            ));
        }
    }
    out.push_str("--END--\n");
    out
}
