//! Formula grammar:
//!
//! ```text
//! formula := conj ("or" conj)*
//! conj    := unary ("and" unary)*
//! unary   := "not" unary | primary
//! primary := "true" | "false" | "(" formula ")" | "<" pattern ">"
//!          | "EX" ("<" pattern ">")? "(" formula ")"
//!          | ("EF" | "AG") "(" formula ")"
//!          | ("EU" | "AU") "(" formula "," formula ")"
//!          | var rel number
//! var     := "t" "[" ident "," ident "]"
//!          | "tf" "[" ("sum"|"min"|"max"|"count") "," ident "," ident "]"
//! rel     := ">=" | ">" | "<=" | "<" | "=" | "=="
//! pattern := "*" | side ("*" side)?
//! side    := (ident | "*" | "?") "." (ident | "*" | "?")
//! ```

use crate::syntax::{ParseError, Pos};

use super::{AggregateFn, Formula, Pattern, Relation, Slot, TrustVariable};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Star,
    Question,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(n) => format!("number {n}"),
        Tok::End => "end of input".into(),
        other => {
            let s = match other {
                Tok::LParen => "(",
                Tok::RParen => ")",
                Tok::LBrack => "[",
                Tok::RBrack => "]",
                Tok::Comma => ",",
                Tok::Dot => ".",
                Tok::Star => "*",
                Tok::Question => "?",
                Tok::Lt => "<",
                Tok::Le => "<=",
                Tok::Gt => ">",
                Tok::Ge => ">=",
                _ => "=",
            };
            format!("`{s}`")
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let (mut line, mut col) = (1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        let start = i;
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            i += 1;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            Tok::Num(
                text.parse()
                    .map_err(|_| ParseError::new(pos, format!("malformed number `{text}`")))?,
            )
        } else {
            let next = chars.get(i + 1).copied();
            let (tok, len) = match (c, next) {
                ('<', Some('=')) => (Tok::Le, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('=', Some('=')) => (Tok::Eq, 2),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                ('=', _) => (Tok::Eq, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('[', _) => (Tok::LBrack, 1),
                (']', _) => (Tok::RBrack, 1),
                (',', _) => (Tok::Comma, 1),
                ('.', _) => (Tok::Dot, 1),
                ('*', _) => (Tok::Star, 1),
                ('?', _) => (Tok::Question, 1),
                _ => return Err(ParseError::new(pos, format!("unexpected character `{c}`"))),
            };
            i += len;
            tok
        };
        col += i - start;
        out.push((tok, pos));
    }
    out.push((Tok::End, Pos { line, column: col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::new(self.pos(), format!("expected {wanted}, found {}", describe(self.peek())))
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(&describe(&t)))
        }
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.conj()?;
        while self.keyword("or") {
            self.next();
            f = Formula::or(f, self.conj()?);
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.keyword("and") {
            self.next();
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.keyword("not") {
            self.next();
            return Ok(Formula::not(self.unary()?));
        }
        self.primary()
    }

    fn paren(&mut self) -> Result<Formula, ParseError> {
        self.expect(Tok::LParen)?;
        let f = self.formula()?;
        self.expect(Tok::RParen)?;
        Ok(f)
    }

    fn paren2(&mut self) -> Result<(Formula, Formula), ParseError> {
        self.expect(Tok::LParen)?;
        let a = self.formula()?;
        self.expect(Tok::Comma)?;
        let b = self.formula()?;
        self.expect(Tok::RParen)?;
        Ok((a, b))
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::LParen => self.paren(),
            Tok::Lt => {
                self.next();
                let p = self.pattern()?;
                self.expect(Tok::Gt)?;
                Ok(Formula::Action(p))
            }
            Tok::Ident(kw) => match kw.as_str() {
                "true" => {
                    self.next();
                    Ok(Formula::True)
                }
                "false" => {
                    self.next();
                    Ok(Formula::False)
                }
                "EX" => {
                    self.next();
                    let p = if *self.peek() == Tok::Lt {
                        self.next();
                        let p = self.pattern()?;
                        self.expect(Tok::Gt)?;
                        p
                    } else {
                        Pattern::Any
                    };
                    Ok(Formula::ex(p, self.paren()?))
                }
                "EF" => {
                    self.next();
                    Ok(Formula::ef(self.paren()?))
                }
                "AG" => {
                    self.next();
                    Ok(Formula::ag(self.paren()?))
                }
                "EU" => {
                    self.next();
                    let (a, b) = self.paren2()?;
                    Ok(Formula::eu(a, b))
                }
                "AU" => {
                    self.next();
                    let (a, b) = self.paren2()?;
                    Ok(Formula::au(a, b))
                }
                "t" | "tf" => self.trust_atom(),
                _ => Err(self.unexpected("a formula")),
            },
            _ => Err(self.unexpected("a formula")),
        }
    }

    fn trust_atom(&mut self) -> Result<Formula, ParseError> {
        let kind = self.ident()?;
        self.expect(Tok::LBrack)?;
        let var = if kind == "tf" {
            let at = self.pos();
            let name = self.ident()?;
            let f = AggregateFn::from_name(&name)
                .ok_or_else(|| ParseError::new(at, format!("unknown aggregate `{name}`; expected sum, min, max or count")))?;
            self.expect(Tok::Comma)?;
            let rater = self.ident()?;
            self.expect(Tok::Comma)?;
            let target = self.ident()?;
            TrustVariable::Aggregate { f, rater, target }
        } else {
            let rater = self.ident()?;
            self.expect(Tok::Comma)?;
            let target = self.ident()?;
            TrustVariable::Model { rater, target }
        };
        self.expect(Tok::RBrack)?;
        let rel = match self.next() {
            Tok::Ge => Relation::Ge,
            Tok::Gt => Relation::Gt,
            Tok::Le => Relation::Le,
            Tok::Lt => Relation::Lt,
            Tok::Eq => Relation::Eq,
            _ => {
                self.at -= 1;
                return Err(self.unexpected("a comparison"));
            }
        };
        let k = match self.peek() {
            Tok::Num(n) => *n,
            _ => return Err(self.unexpected("a number")),
        };
        self.next();
        Ok(Formula::Trust { var, rel, k })
    }

    fn slot(&mut self, what: &str) -> Result<Slot, ParseError> {
        match self.peek().clone() {
            Tok::Star | Tok::Question => {
                self.next();
                Ok(None)
            }
            Tok::Ident(s) => {
                self.next();
                Ok(Some(s))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        let agent = self.slot("an agent name, `*` or `?`")?;
        if *self.peek() != Tok::Dot {
            return match agent {
                None => Ok(Pattern::Any),
                Some(_) => Err(self.unexpected("`.`")),
            };
        }
        self.next();
        let action = self.slot("an action name, `*` or `?`")?;
        if *self.peek() == Tok::Star {
            self.next();
            let reacting = self.slot("an agent name, `*` or `?`")?;
            self.expect(Tok::Dot)?;
            let input = self.slot("an action name, `*` or `?`")?;
            if action.as_deref() == Some("tau") || input.as_deref() == Some("tau") {
                return Err(ParseError::new(self.pos(), "`tau` cannot appear in a sync pattern"));
            }
            return Ok(Pattern::Sync {
                governing: agent,
                out: action,
                reacting,
                input,
            });
        }
        Ok(match action {
            Some(a) if a == "tau" => Pattern::Internal(agent),
            Some(a) => Pattern::Performs(agent, a),
            None => Pattern::Agent(agent),
        })
    }
}

/// Parses a formula. Agent names are checked later, against the system
/// being checked.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("end of formula"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(i: &str, j: &str) -> TrustVariable {
        TrustVariable::Model {
            rater: i.into(),
            target: j.into(),
        }
    }

    #[test]
    fn trust_atom() {
        assert_eq!(
            parse_formula("t[I,J] >= 0.5").unwrap(),
            Formula::Trust {
                var: model("I", "J"),
                rel: Relation::Ge,
                k: 0.5
            }
        );
        assert_eq!(
            parse_formula("tf[min,I,J] <= -1").unwrap(),
            Formula::Trust {
                var: TrustVariable::Aggregate {
                    f: AggregateFn::Min,
                    rater: "I".into(),
                    target: "J".into()
                },
                rel: Relation::Le,
                k: -1.0
            }
        );
    }

    #[test]
    fn nested_temporal() {
        let f = parse_formula("AG(not (tf[min,I,J] < 0))").unwrap();
        assert!(matches!(f, Formula::Ag(ref g) if matches!(**g, Formula::Not(_))));
        let f = parse_formula("EF(EX<I.req*J.recv>(true))").unwrap();
        assert_eq!(
            f,
            Formula::ef(Formula::ex(
                Pattern::Sync {
                    governing: Some("I".into()),
                    out: Some("req".into()),
                    reacting: Some("J".into()),
                    input: Some("recv".into())
                },
                Formula::True
            ))
        );
    }

    #[test]
    fn precedence() {
        let f = parse_formula("not true and false or true").unwrap();
        assert_eq!(
            f,
            Formula::or(Formula::and(Formula::not(Formula::True), Formula::False), Formula::True)
        );
    }

    #[test]
    fn patterns() {
        let p = |s: &str| match parse_formula(&format!("<{s}>")).unwrap() {
            Formula::Action(p) => p,
            _ => unreachable!(),
        };
        assert_eq!(p("*"), Pattern::Any);
        assert_eq!(p("I.tau"), Pattern::Internal(Some("I".into())));
        assert_eq!(p("I.*"), Pattern::Agent(Some("I".into())));
        assert_eq!(p("?.deny"), Pattern::Performs(None, "deny".into()));
        assert_eq!(
            p("I.a*?.b"),
            Pattern::Sync {
                governing: Some("I".into()),
                out: Some("a".into()),
                reacting: None,
                input: Some("b".into())
            }
        );
        assert!(matches!(p("*.a*J.b"), Pattern::Sync { governing: None, .. }));
    }

    #[test]
    fn errors() {
        assert!(parse_formula("EF(").is_err());
        assert!(parse_formula("t[I,J] 0.5").is_err());
        assert!(parse_formula("tf[avg,I,J] > 1").is_err());
        assert!(parse_formula("true true").is_err());
        assert!(parse_formula("<I.tau*J.b>").is_err());
        let e = parse_formula("AG(t[I,J] >= x)").unwrap_err();
        assert_eq!(e.column, 14);
    }

    fn arb_name() -> impl Strategy<Value = String> {
        prop::sample::select(vec!["I", "J", "P1_1", "C1"]).prop_map(String::from)
    }

    fn arb_slot() -> impl Strategy<Value = Slot> {
        prop::option::of(prop::sample::select(vec!["I", "req", "b2"]).prop_map(String::from))
    }

    fn arb_pattern() -> impl Strategy<Value = Pattern> {
        prop_oneof![
            Just(Pattern::Any),
            arb_slot().prop_map(Pattern::Internal),
            arb_slot().prop_map(Pattern::Agent),
            (arb_slot(), prop::sample::select(vec!["a", "deny"])).prop_map(|(s, a)| Pattern::Performs(s, a.into())),
            (arb_slot(), arb_slot(), arb_slot(), arb_slot()).prop_map(|(g, o, r, i)| Pattern::Sync {
                governing: g,
                out: o,
                reacting: r,
                input: i
            }),
        ]
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::True),
            Just(Formula::False),
            arb_pattern().prop_map(Formula::Action),
            (arb_name(), arb_name(), -4i32..8, 0usize..5).prop_map(|(i, j, k, r)| Formula::Trust {
                var: if r % 2 == 0 {
                    TrustVariable::Model { rater: i, target: j }
                } else {
                    TrustVariable::Aggregate {
                        f: AggregateFn::Count,
                        rater: i,
                        target: j,
                    }
                },
                rel: [Relation::Ge, Relation::Gt, Relation::Le, Relation::Lt, Relation::Eq][r],
                k: k as f64 / 4.0,
            }),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                (arb_pattern(), inner.clone()).prop_map(|(p, a)| Formula::ex(p, a)),
                inner.clone().prop_map(Formula::ef),
                inner.clone().prop_map(Formula::ag),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::eu(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Formula::au(a, b)),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_parses_back(f in arb_formula()) {
            let text = f.to_string();
            prop_assert_eq!(parse_formula(&text).unwrap(), f, "{}", text);
        }
    }
}
