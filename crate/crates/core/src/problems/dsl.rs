//! The `.dtp` problem format.
//!
//! ```text
//! version 1
//! problem NAME {
//!   note "free text"
//!   actions {a, b}
//!   observations {o1, o2}
//!   node ID : chance { values {x, y} parents [P] table { (p1) -> x@1/3, y@2/3 ... } }
//!   node ID : det { values {..} parents [..] table { (..) -> value ... } }
//!   node ID : decision { owner agent values {..} parents [..] }
//!   node ID : algorithm { values {..} pinned VALUE }
//!   node ID : utility { parents [..] table { (..) -> rational ... } }
//!   outcomes [r1, r2, ...]
//!   decision ID
//!   stage INT
//!   deterministic true|false
//!   prior { action -> rational ... }
//! }
//! ```
//!
//! Nodes also accept `stage INT` and `proof_predictor FALLBACK`. Tables are
//! explicit and total. Numbers are integers or `a/b`; decimals are rejected.

use std::fmt::Write as _;

use crate::rational::{Rational, RationalParseError};
use crate::worldmodel::{
    ChanceRow, DecisionProblem, DetRow, ModelError, Node, NodeId, NodeKind, PredictorMode, UtilityRow, WorldGraph,
};

use super::ProblemError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: expected {}, found {found}", expected.join(" or "))]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Colon,
    Arrow,
    At,
    Word(String),
    Str(String),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::At => "`@`".into(),
            Tok::Word(w) => format!("`{w}`"),
            Tok::Str(_) => "string".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '/' | '-')
}

fn lex(src: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            '@' => Some(Tok::At),
            _ => None,
        };
        if let Some(t) = single {
            bump(&mut chars);
            out.push(Spanned { tok: t, line: l0, col: c0 });
            continue;
        }
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                bump(&mut chars);
            }
            continue;
        }
        if c == '"' {
            bump(&mut chars);
            let mut s = String::new();
            loop {
                match bump(&mut chars) {
                    Some('"') => break,
                    Some('\\') => match bump(&mut chars) {
                        Some('n') => s.push('\n'),
                        Some(e @ ('"' | '\\')) => s.push(e),
                        _ => {
                            return Err(SyntaxError {
                                line,
                                col,
                                expected: vec!["escape `\\\"`, `\\\\` or `\\n`".into()],
                                found: "bad escape".into(),
                            })
                        }
                    },
                    Some(ch) => s.push(ch),
                    None => {
                        return Err(SyntaxError { line, col, expected: vec!["`\"`".into()], found: "end of input".into() })
                    }
                }
            }
            out.push(Spanned { tok: Tok::Str(s), line: l0, col: c0 });
            continue;
        }
        if c == '-' {
            let mut ahead = chars.clone();
            ahead.next();
            if ahead.peek() == Some(&'>') {
                bump(&mut chars);
                bump(&mut chars);
                out.push(Spanned { tok: Tok::Arrow, line: l0, col: c0 });
                continue;
            }
        }
        if is_word_char(c) {
            let mut w = String::new();
            while let Some(&ch) = chars.peek() {
                if !is_word_char(ch) {
                    break;
                }
                if ch == '-' && !w.is_empty() {
                    let mut ahead = chars.clone();
                    ahead.next();
                    if ahead.peek() == Some(&'>') {
                        break;
                    }
                }
                w.push(ch);
                bump(&mut chars);
            }
            out.push(Spanned { tok: Tok::Word(w), line: l0, col: c0 });
            continue;
        }
        return Err(SyntaxError { line, col, expected: vec!["a token".into()], found: format!("`{c}`") });
    }
    out.push(Spanned { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

fn kw(s: &str) -> String {
    format!("`{s}`")
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, SyntaxError> {
        let t = &self.toks[self.pos];
        Err(SyntaxError {
            line: t.line,
            col: t.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(&[&tok.describe()])
        }
    }

    fn word(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Word(w) => {
                self.pos += 1;
                Ok(w)
            }
            _ => self.fail(&[what]),
        }
    }

    fn keyword(&mut self, k: &str) -> Result<(), SyntaxError> {
        match self.peek() {
            Tok::Word(w) if w == k => {
                self.pos += 1;
                Ok(())
            }
            _ => self.fail(&[&kw(k)]),
        }
    }

    fn rational(&mut self) -> Result<Rational, SyntaxError> {
        let at = self.pos;
        let w = self.word("a rational")?;
        w.parse::<Rational>().map_err(|e| {
            let t = &self.toks[at];
            let expected = match e {
                RationalParseError::Decimal(_) => "a rational written as `a/b`, not a decimal",
                RationalParseError::ZeroDenominator(_) => "a nonzero denominator",
                _ => "a rational",
            };
            SyntaxError { line: t.line, col: t.col, expected: vec![expected.into()], found: format!("`{w}`") }
        })
    }

    fn integer(&mut self) -> Result<i64, SyntaxError> {
        let at = self.pos;
        let w = self.word("an integer")?;
        w.parse::<i64>().map_err(|_| {
            let t = &self.toks[at];
            SyntaxError { line: t.line, col: t.col, expected: vec!["an integer".into()], found: format!("`{w}`") }
        })
    }

    /// `open item (, item)* close`, allowing an empty list and a trailing comma.
    fn list<T>(&mut self, open: Tok, close: Tok, mut item: impl FnMut(&mut Self) -> Result<T, SyntaxError>) -> Result<Vec<T>, SyntaxError> {
        self.expect(open)?;
        let mut out = Vec::new();
        loop {
            if *self.peek() == close {
                self.pos += 1;
                return Ok(out);
            }
            out.push(item(self)?);
            match self.peek() {
                Tok::Comma => self.pos += 1,
                t if *t == close => {}
                _ => return self.fail(&["`,`", &close.describe()]),
            }
        }
    }

    fn words(&mut self, open: Tok, close: Tok, what: &str) -> Result<Vec<String>, SyntaxError> {
        self.list(open, close, |p| p.word(what))
    }

    fn bool(&mut self) -> Result<bool, SyntaxError> {
        match self.peek() {
            Tok::Word(w) if w == "true" => {
                self.pos += 1;
                Ok(true)
            }
            Tok::Word(w) if w == "false" => {
                self.pos += 1;
                Ok(false)
            }
            _ => self.fail(&["`true`", "`false`"]),
        }
    }

    fn once<T>(&self, slot: &Option<T>, field: &str) -> Result<(), SyntaxError> {
        if slot.is_some() {
            let t = &self.toks[self.pos - 1];
            return Err(SyntaxError {
                line: t.line,
                col: t.col,
                expected: vec![format!("at most one `{field}`")],
                found: format!("a second `{field}`"),
            });
        }
        Ok(())
    }

    fn missing<T>(&self, fields: &[(&str, bool)]) -> Result<T, SyntaxError> {
        let want: Vec<String> = fields.iter().filter(|(_, present)| !present).map(|(f, _)| kw(f)).collect();
        let t = &self.toks[self.pos];
        Err(SyntaxError { line: t.line, col: t.col, expected: want, found: t.tok.describe() })
    }
}

#[derive(Default)]
struct NodeFields {
    values: Option<Vec<String>>,
    parents: Option<Vec<String>>,
    table: Option<Vec<(Vec<String>, RowBody)>>,
    owner: Option<String>,
    stage: Option<i64>,
    pinned: Option<String>,
    predictor: Option<String>,
}

enum RowBody {
    Dist(Vec<(String, Rational)>),
    Word(String),
}

const NODE_KINDS: [&str; 5] = ["`chance`", "`decision`", "`algorithm`", "`det`", "`utility`"];

fn parse_node(p: &mut Parser) -> Result<Node, SyntaxError> {
    let id = p.word("a node name")?;
    p.expect(Tok::Colon)?;
    let kind = match p.peek() {
        Tok::Word(w) if ["chance", "decision", "algorithm", "det", "utility"].contains(&w.as_str()) => w.clone(),
        _ => return p.fail(&NODE_KINDS),
    };
    p.pos += 1;
    let mut f = NodeFields::default();
    let mut allowed: Vec<&str> = vec!["values", "parents", "stage", "proof_predictor"];
    match kind.as_str() {
        "chance" | "det" => allowed.push("table"),
        "utility" => {
            allowed.retain(|k| *k != "values");
            allowed.push("table");
        }
        "decision" => allowed.push("owner"),
        _ => {
            allowed.retain(|k| *k != "parents");
            allowed.push("pinned");
        }
    }
    p.expect(Tok::LBrace)?;
    loop {
        let field = match p.peek() {
            Tok::RBrace => {
                p.pos += 1;
                break;
            }
            Tok::Word(w) if allowed.contains(&w.as_str()) => w.clone(),
            _ => {
                let mut exp: Vec<String> = allowed.iter().map(|k| kw(k)).collect();
                exp.push("`}`".into());
                let refs: Vec<&str> = exp.iter().map(String::as_str).collect();
                return p.fail(&refs);
            }
        };
        p.pos += 1;
        match field.as_str() {
            "values" => {
                p.once(&f.values, "values")?;
                f.values = Some(p.words(Tok::LBrace, Tok::RBrace, "a value name")?);
            }
            "parents" => {
                p.once(&f.parents, "parents")?;
                f.parents = Some(p.words(Tok::LBracket, Tok::RBracket, "a node name")?);
            }
            "stage" => {
                p.once(&f.stage, "stage")?;
                f.stage = Some(p.integer()?);
            }
            "owner" => {
                p.once(&f.owner, "owner")?;
                f.owner = Some(p.word("an owner name")?);
            }
            "pinned" => {
                p.once(&f.pinned, "pinned")?;
                f.pinned = Some(p.word("a value name")?);
            }
            "proof_predictor" => {
                p.once(&f.predictor, "proof_predictor")?;
                f.predictor = Some(p.word("a fallback value")?);
            }
            _ => {
                p.once(&f.table, "table")?;
                f.table = Some(parse_table(p, &kind)?);
            }
        }
    }
    let needs_values = kind != "utility";
    let needs_table = matches!(kind.as_str(), "chance" | "det" | "utility");
    if (needs_values && f.values.is_none()) || (needs_table && f.table.is_none()) {
        p.pos -= 1;
        return p.missing(&[("values", !needs_values || f.values.is_some()), ("table", !needs_table || f.table.is_some())]);
    }
    let rows = f.table.unwrap_or_default();
    let kind = match kind.as_str() {
        "chance" => NodeKind::Chance {
            rows: rows
                .into_iter()
                .map(|(parents, body)| match body {
                    RowBody::Dist(dist) => ChanceRow { parents, dist },
                    RowBody::Word(_) => unreachable!("chance rows parse as distributions"),
                })
                .collect(),
        },
        "det" => NodeKind::Deterministic {
            rows: rows
                .into_iter()
                .map(|(parents, body)| match body {
                    RowBody::Word(value) => DetRow { parents, value },
                    RowBody::Dist(_) => unreachable!("det rows parse as values"),
                })
                .collect(),
        },
        "utility" => NodeKind::Utility {
            rows: rows
                .into_iter()
                .map(|(parents, body)| match body {
                    RowBody::Dist(mut d) => UtilityRow { parents, utility: d.remove(0).1 },
                    RowBody::Word(_) => unreachable!("utility rows parse as rationals"),
                })
                .collect(),
        },
        "decision" => NodeKind::Decision { owner: f.owner.unwrap_or_else(|| "agent".into()) },
        _ => NodeKind::Algorithm { pinned: f.pinned },
    };
    Ok(Node {
        id: NodeId::new(id),
        values: f.values.unwrap_or_default(),
        parents: f.parents.unwrap_or_default().into_iter().map(NodeId::new).collect(),
        kind,
        stage: f.stage,
        predictor: match f.predictor {
            Some(fallback) => PredictorMode::Proof { fallback },
            None => PredictorMode::Direct,
        },
    })
}

fn parse_table(p: &mut Parser, kind: &str) -> Result<Vec<(Vec<String>, RowBody)>, SyntaxError> {
    p.expect(Tok::LBrace)?;
    let mut rows = Vec::new();
    loop {
        match p.peek() {
            Tok::RBrace => {
                p.pos += 1;
                return Ok(rows);
            }
            Tok::LParen => {}
            _ => return p.fail(&["`(`", "`}`"]),
        }
        let parents = p.words(Tok::LParen, Tok::RParen, "a parent value")?;
        p.expect(Tok::Arrow)?;
        let body = match kind {
            "chance" => {
                let mut dist = Vec::new();
                loop {
                    let v = p.word("a value name")?;
                    p.expect(Tok::At)?;
                    dist.push((v, p.rational()?));
                    if *p.peek() != Tok::Comma {
                        break;
                    }
                    p.pos += 1;
                }
                RowBody::Dist(dist)
            }
            "det" => RowBody::Word(p.word("a value name")?),
            _ => RowBody::Dist(vec![(String::new(), p.rational()?)]),
        };
        rows.push((parents, body));
    }
}

#[derive(Default)]
struct ProblemFields {
    note: Option<String>,
    actions: Option<Vec<String>>,
    observations: Option<Vec<String>>,
    nodes: Vec<Node>,
    outcomes: Option<Vec<Rational>>,
    decision: Option<String>,
    stage: Option<i64>,
    deterministic: Option<bool>,
    prior: Option<Vec<(String, Rational)>>,
}

const PROBLEM_FIELDS: [&str; 10] =
    ["note", "actions", "observations", "node", "outcomes", "decision", "stage", "deterministic", "prior", "}"];

fn parse_document(src: &str) -> Result<(String, ProblemFields), SyntaxError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    p.keyword("version")?;
    let at = p.pos;
    let v = p.integer()?;
    if v != 1 {
        p.pos = at;
        return p.fail(&["`1`"]);
    }
    p.keyword("problem")?;
    let name = p.word("a problem name")?;
    p.expect(Tok::LBrace)?;
    let mut f = ProblemFields::default();
    loop {
        let field = match p.peek() {
            Tok::RBrace => break,
            Tok::Word(w) if PROBLEM_FIELDS.contains(&w.as_str()) => w.clone(),
            _ => {
                let exp: Vec<String> = PROBLEM_FIELDS.iter().map(|k| kw(k)).collect();
                let refs: Vec<&str> = exp.iter().map(String::as_str).collect();
                return p.fail(&refs);
            }
        };
        p.pos += 1;
        match field.as_str() {
            "note" => {
                p.once(&f.note, "note")?;
                match p.peek().clone() {
                    Tok::Str(s) => {
                        p.pos += 1;
                        f.note = Some(s);
                    }
                    _ => return p.fail(&["a quoted string"]),
                }
            }
            "actions" => {
                p.once(&f.actions, "actions")?;
                f.actions = Some(p.words(Tok::LBrace, Tok::RBrace, "an action name")?);
            }
            "observations" => {
                p.once(&f.observations, "observations")?;
                f.observations = Some(p.words(Tok::LBrace, Tok::RBrace, "an observation name")?);
            }
            "node" => f.nodes.push(parse_node(&mut p)?),
            "outcomes" => {
                p.once(&f.outcomes, "outcomes")?;
                f.outcomes = Some(p.list(Tok::LBracket, Tok::RBracket, |p| p.rational())?);
            }
            "decision" => {
                p.once(&f.decision, "decision")?;
                f.decision = Some(p.word("a node name")?);
            }
            "stage" => {
                p.once(&f.stage, "stage")?;
                f.stage = Some(p.integer()?);
            }
            "deterministic" => {
                p.once(&f.deterministic, "deterministic")?;
                f.deterministic = Some(p.bool()?);
            }
            _ => {
                p.once(&f.prior, "prior")?;
                p.expect(Tok::LBrace)?;
                let mut prior = Vec::new();
                while *p.peek() != Tok::RBrace {
                    let a = p.word("an action name or `}`")?;
                    p.expect(Tok::Arrow)?;
                    prior.push((a, p.rational()?));
                }
                p.pos += 1;
                f.prior = Some(prior);
            }
        }
    }
    let complete = [
        ("actions", f.actions.is_some()),
        ("observations", f.observations.is_some()),
        ("node", !f.nodes.is_empty()),
        ("outcomes", f.outcomes.is_some()),
        ("decision", f.decision.is_some()),
    ];
    if complete.iter().any(|(_, ok)| !ok) {
        return p.missing(&complete);
    }
    p.pos += 1;
    if *p.peek() != Tok::End {
        return p.fail(&["end of input"]);
    }
    Ok((name, f))
}

pub fn parse_problem(src: &str) -> Result<DecisionProblem, ProblemError> {
    let (name, f) = parse_document(src)?;
    let graph = WorldGraph::new(f.nodes)?;
    let problem = DecisionProblem::new(
        name,
        graph,
        f.actions.unwrap_or_default(),
        f.observations.unwrap_or_default(),
        NodeId::new(f.decision.unwrap_or_default()),
        f.outcomes.unwrap_or_default(),
        f.stage.unwrap_or(0),
        f.deterministic.unwrap_or(false),
        f.prior.unwrap_or_default(),
    )?;
    Ok(match f.note {
        Some(n) => problem.with_note(n),
        None => problem,
    })
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
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

fn tuple(vals: &[String]) -> String {
    format!("({})", vals.join(", "))
}

/// Canonical source text. Parsing it yields a problem equal to `problem`.
pub fn round_trip(problem: &DecisionProblem) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "version 1");
    let _ = writeln!(s, "problem {} {{", problem.name);
    if let Some(n) = &problem.note {
        let _ = writeln!(s, "  note {}", quote(n));
    }
    let _ = writeln!(s, "  actions {{{}}}", problem.actions.join(", "));
    let _ = writeln!(s, "  observations {{{}}}", problem.observations.join(", "));
    for n in problem.graph.nodes() {
        write_node(&mut s, n);
    }
    let outs: Vec<String> = problem.outcomes.iter().map(Rational::to_string).collect();
    let _ = writeln!(s, "  outcomes [{}]", outs.join(", "));
    let _ = writeln!(s, "  decision {}", problem.decision_node);
    let _ = writeln!(s, "  stage {}", problem.stage);
    let _ = writeln!(s, "  deterministic {}", problem.deterministic);
    let _ = writeln!(s, "  prior {{");
    for (a, w) in &problem.prior {
        let _ = writeln!(s, "    {a} -> {w}");
    }
    let _ = writeln!(s, "  }}");
    let _ = writeln!(s, "}}");
    s
}

fn write_node(s: &mut String, n: &Node) {
    let _ = writeln!(s, "  node {} : {} {{", n.id, n.kind.keyword());
    if let NodeKind::Decision { owner } = &n.kind {
        let _ = writeln!(s, "    owner {owner}");
    }
    if !n.is_utility() {
        let _ = writeln!(s, "    values {{{}}}", n.values.join(", "));
    }
    if !n.parents.is_empty() {
        let ps: Vec<&str> = n.parents.iter().map(NodeId::as_str).collect();
        let _ = writeln!(s, "    parents [{}]", ps.join(", "));
    }
    if let Some(st) = n.stage {
        let _ = writeln!(s, "    stage {st}");
    }
    if let NodeKind::Algorithm { pinned: Some(v) } = &n.kind {
        let _ = writeln!(s, "    pinned {v}");
    }
    if let PredictorMode::Proof { fallback } = &n.predictor {
        let _ = writeln!(s, "    proof_predictor {fallback}");
    }
    let rows: Vec<String> = match &n.kind {
        NodeKind::Chance { rows } => rows
            .iter()
            .map(|r| {
                let d: Vec<String> = r.dist.iter().map(|(v, p)| format!("{v}@{p}")).collect();
                format!("{} -> {}", tuple(&r.parents), d.join(", "))
            })
            .collect(),
        NodeKind::Deterministic { rows } => rows.iter().map(|r| format!("{} -> {}", tuple(&r.parents), r.value)).collect(),
        NodeKind::Utility { rows } => rows.iter().map(|r| format!("{} -> {}", tuple(&r.parents), r.utility)).collect(),
        _ => Vec::new(),
    };
    if matches!(n.kind, NodeKind::Chance { .. } | NodeKind::Deterministic { .. } | NodeKind::Utility { .. }) {
        let _ = writeln!(s, "    table {{");
        for r in rows {
            let _ = writeln!(s, "      {r}");
        }
        let _ = writeln!(s, "    }}");
    }
    let _ = writeln!(s, "  }}");
}

impl From<ModelError> for ProblemError {
    fn from(e: ModelError) -> Self {
        ProblemError::Semantic(e)
    }
}
