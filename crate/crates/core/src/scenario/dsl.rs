//! The `.svl` scenario language.
//!
//! ```text
//! scenario  := { decl }
//! decl      := "scheme" NAME "{" "mask" "=" STRING ["groups" "=" INT {"," INT}] "}"
//!            | "entity" NAME "kind" "=" (NAME | STRING)
//!            | "ims" NAME "{" "scheme" "=" NAME ["bind" BIND {"," BIND}] "}"
//!            | "attribute" NAME "{" ATTR "}"
//!            | "table" NAME "{" "from" "=" NAME "to" "=" NAME "file" "=" STRING "}"
//!            | "provenance" NAME "{" "file" "=" STRING "}"
//!            | "surveil" "{" "key" "=" NAME "scheme" "=" NAME "}"
//!            | "sort" "{" NAMESET {"," NAMESET} "}"
//! BIND      := NAME "->" (NAME | STRING | INT)
//! ATTR      := "instant" NAME CMP VALUE
//!            | "session" "start" "=" VALUE "end" "=" VALUE "duration" (">"|"<") INT "ms"
//! CMP       := "=" | "!=" | "≠" | "<" | ">" | "in" | "∈"
//! VALUE     := NAME | STRING | NUMBER | "{" VALUE {"," VALUE} "}"   (sets only after "in")
//! NAMESET   := "{" [NAME {"," NAME}] "}"
//! ```
//!
//! `#` starts a comment that runs to the end of the line. Declarations
//! may reference names declared later in the file.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::model::{Entity, EntityId, EntityKind, Scheme};
use crate::surveillance::{AttributeDef, AttributeKind, DurationTest, Predicate};

use super::error::ScenarioError;
use super::{ImsDecl, ProvenanceDecl, ScenarioModel, SurveilDecl, TableDecl};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Str(String),
    Number(String),
    LBrace,
    RBrace,
    Eq,
    Ne,
    Lt,
    Gt,
    Comma,
    Arrow,
    Member,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Name(n) => format!("name {n:?}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Number(n) => format!("number {n}"),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::Eq => "'='".into(),
            Tok::Ne => "'!='".into(),
            Tok::Lt => "'<'".into(),
            Tok::Gt => "'>'".into(),
            Tok::Comma => "','".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Member => "'∈'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ScenarioError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let syntax = |line, column, expected: &str, found: String| ScenarioError::SyntaxError {
        line,
        column,
        expected: expected.to_string(),
        found,
    };
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let mut advance = |i: &mut usize, n: usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                *i += 1;
            }
        };
        match c {
            '\n' | ' ' | '\t' | '\r' => advance(&mut i, 1),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    advance(&mut i, 1);
                }
            }
            '{' | '}' | '=' | ',' | '<' | '>' | '≠' | '∈' => {
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '=' => Tok::Eq,
                    ',' => Tok::Comma,
                    '<' => Tok::Lt,
                    '>' => Tok::Gt,
                    '≠' => Tok::Ne,
                    _ => Tok::Member,
                };
                advance(&mut i, 1);
                out.push(Spanned { tok, line: start_line, column: start_col });
            }
            '!' => {
                if chars.get(i + 1) != Some(&'=') {
                    return Err(syntax(start_line, start_col, "'!='", "'!'".into()));
                }
                advance(&mut i, 2);
                out.push(Spanned { tok: Tok::Ne, line: start_line, column: start_col });
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                advance(&mut i, 2);
                out.push(Spanned { tok: Tok::Arrow, line: start_line, column: start_col });
            }
            '"' => {
                advance(&mut i, 1);
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => {
                            return Err(syntax(start_line, start_col, "closing '\"'", "end of line".into()))
                        }
                        Some('"') => {
                            advance(&mut i, 1);
                            break;
                        }
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some(&e @ ('"' | '\\')) => s.push(e),
                                Some('n') => s.push('\n'),
                                _ => return Err(syntax(line, col, "escape \\\" \\\\ or \\n", "'\\'".into())),
                            }
                            advance(&mut i, 2);
                        }
                        Some(&ch) => {
                            s.push(ch);
                            advance(&mut i, 1);
                        }
                    }
                }
                out.push(Spanned { tok: Tok::Str(s), line: start_line, column: start_col });
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) => {
                let mut s = String::from(c);
                advance(&mut i, 1);
                let mut seen_dot = false;
                while let Some(&d) = chars.get(i) {
                    if d.is_ascii_digit() || (d == '.' && !seen_dot && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
                        seen_dot |= d == '.';
                        s.push(d);
                        advance(&mut i, 1);
                    } else {
                        break;
                    }
                }
                out.push(Spanned { tok: Tok::Number(s), line: start_line, column: start_col });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.get(i) {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        advance(&mut i, 1);
                    } else {
                        break;
                    }
                }
                let tok = if s == "in" { Tok::Member } else { Tok::Name(s) };
                out.push(Spanned { tok, line: start_line, column: start_col });
            }
            other => return Err(syntax(start_line, start_col, "a token", format!("{other:?}"))),
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

struct Reference {
    kind: &'static str,
    name: String,
    line: usize,
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    refs: Vec<Reference>,
    binds: Vec<(String, usize, usize)>,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ScenarioError {
        let t = self.peek();
        ScenarioError::SyntaxError { line: t.line, column: t.column, expected: expected.to_string(), found: t.tok.describe() }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<Spanned, ScenarioError> {
        if self.peek().tok == tok {
            Ok(self.next())
        } else {
            Err(self.error(expected))
        }
    }

    fn keyword(&mut self, word: &str) -> Result<Spanned, ScenarioError> {
        match &self.peek().tok {
            Tok::Name(n) if n == word => Ok(self.next()),
            _ => Err(self.error(&format!("'{word}'"))),
        }
    }

    fn at_keyword(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Name(n) if n == word)
    }

    fn name(&mut self, what: &str) -> Result<(String, usize), ScenarioError> {
        match &self.peek().tok {
            Tok::Name(n) => {
                let n = n.clone();
                let line = self.next().line;
                Ok((n, line))
            }
            _ => Err(self.error(what)),
        }
    }

    fn string(&mut self, what: &str) -> Result<String, ScenarioError> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => Err(self.error(what)),
        }
    }

    fn integer(&mut self, what: &str) -> Result<u64, ScenarioError> {
        match &self.peek().tok {
            Tok::Number(n) => match n.parse::<u64>() {
                Ok(v) => {
                    self.next();
                    Ok(v)
                }
                Err(_) => Err(self.error(what)),
            },
            _ => Err(self.error(what)),
        }
    }

    fn scalar(&mut self, what: &str) -> Result<String, ScenarioError> {
        match &self.peek().tok {
            Tok::Name(s) | Tok::Str(s) | Tok::Number(s) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => Err(self.error(what)),
        }
    }

    fn assign(&mut self, word: &str) -> Result<(), ScenarioError> {
        self.keyword(word)?;
        self.expect(Tok::Eq, "'='")?;
        Ok(())
    }

    fn refer(&mut self, kind: &'static str, name: &str, line: usize) {
        self.refs.push(Reference { kind, name: name.to_string(), line });
    }

    fn scheme(&mut self, line: usize) -> Result<Scheme, ScenarioError> {
        let (name, _) = self.name("scheme name")?;
        self.expect(Tok::LBrace, "'{'")?;
        self.assign("mask")?;
        let mask = self.string("mask string")?;
        let mut groups = None;
        if self.at_keyword("groups") {
            self.assign("groups")?;
            let mut g = vec![self.integer("group length")? as usize];
            while self.peek().tok == Tok::Comma {
                self.next();
                g.push(self.integer("group length")? as usize);
            }
            groups = Some(g);
        }
        self.expect(Tok::RBrace, "'}' or 'groups'")?;
        Scheme::new(name, mask, groups).map_err(|e| ScenarioError::InvalidDeclaration { line, message: e.to_string() })
    }

    fn entity(&mut self, line: usize) -> Result<Entity, ScenarioError> {
        let (name, _) = self.name("entity name")?;
        self.assign("kind")?;
        let kind = self.scalar("entity kind")?;
        let kind: EntityKind = kind.parse().map_err(|e: crate::model::ModelError| {
            ScenarioError::InvalidDeclaration { line, message: e.to_string() }
        })?;
        let id = EntityId::new(name).map_err(|e| ScenarioError::InvalidDeclaration { line, message: e.to_string() })?;
        Ok(Entity { id, kind })
    }

    fn ims(&mut self) -> Result<ImsDecl, ScenarioError> {
        let (name, _) = self.name("system name")?;
        self.expect(Tok::LBrace, "'{'")?;
        self.assign("scheme")?;
        let (scheme, line) = self.name("scheme name")?;
        self.refer("scheme", &scheme, line);
        let mut binds = Vec::new();
        if self.at_keyword("bind") {
            self.next();
            loop {
                let (entity, line) = self.name("entity name")?;
                self.refer("entity", &entity, line);
                self.expect(Tok::Arrow, "'->'")?;
                let value = self.scalar("identifier value")?;
                self.binds.push((name.clone(), binds.len(), line));
                binds.push((EntityId::new(entity).expect("names are non-empty"), value));
                if self.peek().tok != Tok::Comma {
                    break;
                }
                self.next();
            }
        }
        self.expect(Tok::RBrace, "'}' or 'bind'")?;
        Ok(ImsDecl { name, scheme, binds })
    }

    fn value_set(&mut self) -> Result<BTreeSet<String>, ScenarioError> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut set = BTreeSet::from([self.scalar("set element")?]);
        while self.peek().tok == Tok::Comma {
            self.next();
            set.insert(self.scalar("set element")?);
        }
        self.expect(Tok::RBrace, "'}' or ','")?;
        Ok(set)
    }

    fn attribute(&mut self, line: usize) -> Result<AttributeDef, ScenarioError> {
        let (name, _) = self.name("attribute name")?;
        self.expect(Tok::LBrace, "'{'")?;
        let invalid = |e: crate::surveillance::AttributeError| ScenarioError::InvalidDeclaration { line, message: e.to_string() };
        let attr = if self.at_keyword("instant") {
            self.next();
            let (key, _) = self.name("payload key")?;
            let cmp = self.next();
            let predicate = match cmp.tok {
                Tok::Eq => Predicate::Eq(self.scalar("value")?),
                Tok::Ne => Predicate::Ne(self.scalar("value")?),
                Tok::Lt => Predicate::Lt(self.scalar("value")?),
                Tok::Gt => Predicate::Gt(self.scalar("value")?),
                Tok::Member => Predicate::In(self.value_set()?),
                _ => {
                    self.pos -= 1;
                    return Err(self.error("comparator (=, !=, <, >, in)"));
                }
            };
            AttributeDef::instant(name, key, predicate).map_err(invalid)?
        } else if self.at_keyword("session") {
            self.next();
            self.assign("start")?;
            let start = self.scalar("start event value")?;
            self.assign("end")?;
            let end = self.scalar("end event value")?;
            self.keyword("duration")?;
            let test = match self.peek().tok {
                Tok::Gt => DurationTest::LongerThan,
                Tok::Lt => DurationTest::ShorterThan,
                _ => return Err(self.error("'>' or '<'")),
            };
            self.next();
            let threshold = self.integer("duration in milliseconds")?;
            self.keyword("ms")?;
            AttributeDef::session(name, start, end, test, threshold).map_err(invalid)?
        } else {
            return Err(self.error("'instant' or 'session'"));
        };
        self.expect(Tok::RBrace, "'}'")?;
        Ok(attr)
    }

    fn table(&mut self) -> Result<TableDecl, ScenarioError> {
        let (name, _) = self.name("table name")?;
        self.expect(Tok::LBrace, "'{'")?;
        self.assign("from")?;
        let (from, line) = self.name("scheme name")?;
        self.refer("scheme", &from, line);
        self.assign("to")?;
        let (to, line) = self.name("scheme name")?;
        self.refer("scheme", &to, line);
        self.assign("file")?;
        let file = self.string("file path string")?;
        self.expect(Tok::RBrace, "'}'")?;
        Ok(TableDecl { name, from, to, file })
    }

    fn provenance(&mut self) -> Result<ProvenanceDecl, ScenarioError> {
        let (name, _) = self.name("graph name")?;
        self.expect(Tok::LBrace, "'{'")?;
        self.assign("file")?;
        let file = self.string("file path string")?;
        self.expect(Tok::RBrace, "'}'")?;
        Ok(ProvenanceDecl { name, file })
    }

    fn surveil(&mut self) -> Result<SurveilDecl, ScenarioError> {
        self.expect(Tok::LBrace, "'{'")?;
        self.assign("key")?;
        let (key, _) = self.name("payload key")?;
        self.assign("scheme")?;
        let (scheme, line) = self.name("scheme name")?;
        self.refer("scheme", &scheme, line);
        self.expect(Tok::RBrace, "'}'")?;
        Ok(SurveilDecl { key, scheme })
    }

    fn sort(&mut self) -> Result<Vec<BTreeSet<String>>, ScenarioError> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut keys = Vec::new();
        loop {
            self.expect(Tok::LBrace, "'{' opening an attribute set")?;
            let mut set = BTreeSet::new();
            if self.peek().tok != Tok::RBrace {
                loop {
                    let (attr, line) = self.name("attribute name")?;
                    self.refer("attribute", &attr, line);
                    set.insert(attr);
                    if self.peek().tok != Tok::Comma {
                        break;
                    }
                    self.next();
                }
            }
            self.expect(Tok::RBrace, "'}' or ','")?;
            keys.push(set);
            if self.peek().tok != Tok::Comma {
                break;
            }
            self.next();
        }
        self.expect(Tok::RBrace, "'}' or ','")?;
        Ok(keys)
    }
}

fn insert_unique<T>(map: &mut BTreeMap<String, T>, name: String, value: T, line: usize) -> Result<(), ScenarioError> {
    if map.contains_key(&name) {
        return Err(ScenarioError::DuplicateName { name, line });
    }
    map.insert(name, value);
    Ok(())
}

/// Parses scenario text and resolves every cross-reference.
pub fn parse_scenario(text: &str) -> Result<ScenarioModel, ScenarioError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, refs: Vec::new(), binds: Vec::new() };
    let mut model = ScenarioModel::default();
    loop {
        let head = p.peek().clone();
        let word = match &head.tok {
            Tok::Eof => break,
            Tok::Name(w) => w.clone(),
            _ => return Err(p.error("a declaration keyword")),
        };
        let line = head.line;
        match word.as_str() {
            "scheme" => {
                p.next();
                let s = p.scheme(line)?;
                insert_unique(&mut model.schemes, s.name().to_string(), s, line)?;
            }
            "entity" => {
                p.next();
                let e = p.entity(line)?;
                insert_unique(&mut model.entities, e.id.to_string(), e, line)?;
            }
            "ims" => {
                p.next();
                let d = p.ims()?;
                insert_unique(&mut model.systems, d.name.clone(), d, line)?;
            }
            "attribute" => {
                p.next();
                let a = p.attribute(line)?;
                insert_unique(&mut model.attributes, a.name.clone(), a, line)?;
            }
            "table" => {
                p.next();
                let t = p.table()?;
                insert_unique(&mut model.tables, t.name.clone(), t, line)?;
            }
            "provenance" => {
                p.next();
                let g = p.provenance()?;
                insert_unique(&mut model.provenance, g.name.clone(), g, line)?;
            }
            "surveil" => {
                p.next();
                let s = p.surveil()?;
                if model.surveil.is_some() {
                    return Err(ScenarioError::DuplicateName { name: "surveil".into(), line });
                }
                model.surveil = Some(s);
            }
            "sort" => {
                p.next();
                model.sort_keys.extend(p.sort()?);
            }
            _ => return Err(p.error("a declaration keyword")),
        }
    }
    for r in &p.refs {
        let known = match r.kind {
            "scheme" => model.schemes.contains_key(&r.name),
            "entity" => model.entities.contains_key(&r.name),
            "attribute" => model.attributes.contains_key(&r.name),
            _ => unreachable!("reference kinds are fixed"),
        };
        if !known {
            return Err(ScenarioError::UnresolvedReference { name: r.name.clone(), line: r.line });
        }
    }
    for (system, index, line) in &p.binds {
        let decl = &model.systems[system];
        let scheme = &model.schemes[&decl.scheme];
        let raw = &decl.binds[*index].1;
        if scheme.canonicalize(raw).is_none() {
            return Err(ScenarioError::InvalidDeclaration {
                line: *line,
                message: format!("{raw:?} does not match scheme {}", scheme.name()),
            });
        }
    }
    Ok(model)
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn kind_name(kind: EntityKind) -> &'static str {
    match kind {
        EntityKind::AccountHolder => "account_holder",
        other => other.as_str(),
    }
}

/// Renders a model back to scenario text that parses to an equal model.
pub fn to_dsl(model: &ScenarioModel) -> String {
    let mut out = String::new();
    for s in model.schemes.values() {
        let _ = write!(out, "scheme {} {{ mask = {}", s.name(), quote(s.mask()));
        if let Some(g) = s.display_groups() {
            let g: Vec<String> = g.iter().map(usize::to_string).collect();
            let _ = write!(out, " groups = {}", g.join(", "));
        }
        out.push_str(" }\n");
    }
    for e in model.entities.values() {
        let _ = writeln!(out, "entity {} kind = {}", e.id, kind_name(e.kind));
    }
    for a in model.attributes.values() {
        let _ = write!(out, "attribute {} {{ ", a.name);
        match &a.kind {
            AttributeKind::Instant { key, predicate } => {
                let _ = write!(out, "instant {key} ");
                let _ = match predicate {
                    Predicate::Eq(v) => write!(out, "= {}", quote(v)),
                    Predicate::Ne(v) => write!(out, "!= {}", quote(v)),
                    Predicate::Lt(v) => write!(out, "< {}", quote(v)),
                    Predicate::Gt(v) => write!(out, "> {}", quote(v)),
                    Predicate::In(set) => {
                        let items: Vec<String> = set.iter().map(|v| quote(v)).collect();
                        write!(out, "in {{ {} }}", items.join(", "))
                    }
                };
            }
            AttributeKind::Session(rule) => {
                let op = match rule.test {
                    DurationTest::LongerThan => '>',
                    DurationTest::ShorterThan => '<',
                };
                let _ = write!(
                    out,
                    "session start = {} end = {} duration {op} {} ms",
                    quote(&rule.start),
                    quote(&rule.end),
                    rule.threshold_ms
                );
            }
        }
        out.push_str(" }\n");
    }
    for d in model.systems.values() {
        let _ = write!(out, "ims {} {{ scheme = {}", d.name, d.scheme);
        if !d.binds.is_empty() {
            let binds: Vec<String> = d.binds.iter().map(|(e, v)| format!("{e} -> {}", quote(v))).collect();
            let _ = write!(out, " bind {}", binds.join(", "));
        }
        out.push_str(" }\n");
    }
    for t in model.tables.values() {
        let _ = writeln!(out, "table {} {{ from = {} to = {} file = {} }}", t.name, t.from, t.to, quote(&t.file));
    }
    for g in model.provenance.values() {
        let _ = writeln!(out, "provenance {} {{ file = {} }}", g.name, quote(&g.file));
    }
    if let Some(s) = &model.surveil {
        let _ = writeln!(out, "surveil {{ key = {} scheme = {} }}", s.key, s.scheme);
    }
    if !model.sort_keys.is_empty() {
        let keys: Vec<String> = model
            .sort_keys
            .iter()
            .map(|k| format!("{{{}}}", k.iter().cloned().collect::<Vec<_>>().join(", ")))
            .collect();
        let _ = writeln!(out, "sort {{ {} }}", keys.join(", "));
    }
    out
}
