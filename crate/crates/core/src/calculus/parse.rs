use crate::syntax::{Cursor, ParseError, Tok};

use super::{Action, ActionSignature, ProcessTerm};

/// Parses a standalone process term; every visible action must be declared
/// in `sig`.
///
/// `+` binds looser than `.`, and `a + b + c` associates to the left.
pub fn parse_term(text: &str, sig: &ActionSignature) -> Result<ProcessTerm, ParseError> {
    let mut cur = Cursor::new(text)?;
    let t = term(&mut cur, sig)?;
    if !cur.at_eof() {
        return Err(cur.unexpected("end of term"));
    }
    Ok(t)
}

/// Parses `process NAME := TERM`.
pub fn parse_definition(
    text: &str,
    sig: &ActionSignature,
) -> Result<(String, ProcessTerm), ParseError> {
    let mut cur = Cursor::new(text)?;
    let def = definition(&mut cur, sig)?;
    if !cur.at_eof() {
        return Err(cur.unexpected("end of definition"));
    }
    Ok(def)
}

pub(crate) fn definition(
    cur: &mut Cursor,
    sig: &ActionSignature,
) -> Result<(String, ProcessTerm), ParseError> {
    cur.expect_keyword("process")?;
    let name = cur.ident()?;
    cur.expect(Tok::Assign)?;
    Ok((name, term(cur, sig)?))
}

pub(crate) fn term(cur: &mut Cursor, sig: &ActionSignature) -> Result<ProcessTerm, ParseError> {
    let mut acc = summand(cur, sig)?;
    while cur.eat(&Tok::Plus) {
        let rhs = summand(cur, sig)?;
        acc = ProcessTerm::choice(acc, rhs);
    }
    Ok(acc)
}

const SPECIAL: [&str; 4] = ["ent", "esc", "obs", "fake_obs"];

fn summand(cur: &mut Cursor, sig: &ActionSignature) -> Result<ProcessTerm, ParseError> {
    match cur.peek().clone() {
        Tok::Int(0) => {
            cur.next();
            Ok(ProcessTerm::Nil)
        }
        Tok::LParen => {
            cur.next();
            let t = term(cur, sig)?;
            cur.expect(Tok::RParen)?;
            Ok(t)
        }
        Tok::Ident(name) => {
            let is_special = SPECIAL.contains(&name.as_str()) && *cur.peek2() == Tok::LParen;
            if is_special || *cur.peek2() == Tok::Dot {
                let act = action(cur, sig)?;
                cur.expect(Tok::Dot)?;
                let body = summand(cur, sig)?;
                Ok(ProcessTerm::prefix(act, body))
            } else {
                cur.next();
                Ok(ProcessTerm::Const(name))
            }
        }
        _ => Err(cur.unexpected("process term")),
    }
}

fn action(cur: &mut Cursor, sig: &ActionSignature) -> Result<Action, ParseError> {
    let pos = cur.pos();
    let name = cur.ident()?;
    if *cur.peek() == Tok::LParen && SPECIAL.contains(&name.as_str()) {
        cur.next();
        let act = match name.as_str() {
            "ent" => Action::Ent(cur.ident()?),
            "esc" => Action::Esc(cur.ident()?),
            "obs" => Action::Obs(cur.int()?),
            _ => {
                let target = cur.ident()?;
                cur.expect(Tok::Comma)?;
                let score = cur.int()?;
                Action::FakeObs { target, score }
            }
        };
        cur.expect(Tok::RParen)?;
        return Ok(act);
    }
    sig.lookup(&name)
        .map(Action::Plain)
        .ok_or_else(|| ParseError::new(pos, format!("undeclared action `{name}`")))
}
