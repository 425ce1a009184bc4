use std::collections::BTreeSet;

use crate::calculus::parse::term;
use crate::calculus::ActionKind;
use crate::syntax::{Cursor, ParseError, Tok};

use super::{Agent, GroupDecl, ModelSpec, OpinionDecl, SyncPair, SystemSpec};

/// Parses a system description (`.tas` file).
///
/// Statements may appear in any order, except that a `process` definition
/// can only use actions declared by an earlier `actions` block.
pub fn parse_system(text: &str) -> Result<SystemSpec, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut spec = SystemSpec::default();
    let mut model_seen = false;

    while !cur.at_eof() {
        let pos = cur.pos();
        let kw = cur.ident()?;
        match kw.as_str() {
            "actions" => actions(&mut cur, &mut spec)?,
            "sync" => {
                cur.expect(Tok::LBrace)?;
                while !cur.eat(&Tok::RBrace) {
                    let out = cur.ident()?;
                    cur.expect_keyword("x")?;
                    let input = cur.ident()?;
                    cur.expect(Tok::Semi)?;
                    let pair = SyncPair { out, input };
                    if !spec.sync.contains(&pair) {
                        spec.sync.push(pair);
                    }
                }
            }
            "process" => {
                let name = cur.ident()?;
                cur.expect(Tok::Assign)?;
                let body = term(&mut cur, &spec.signature)?;
                if spec.defs.bind(name.clone(), body).is_some() {
                    return Err(ParseError::new(pos, format!("constant `{name}` defined twice")));
                }
            }
            "agent" => {
                let name = cur.ident()?;
                cur.expect(Tok::Colon)?;
                let behavior = cur.ident()?;
                cur.expect_keyword("threshold")?;
                let threshold = cur.real()?;
                spec.agents.push(Agent {
                    name,
                    behavior,
                    threshold,
                });
            }
            "group" => {
                let name = cur.ident()?;
                cur.expect(Tok::Eq)?;
                cur.expect(Tok::LBrace)?;
                let mut members = Vec::new();
                if !cur.eat(&Tok::RBrace) {
                    loop {
                        members.push(cur.ident()?);
                        if cur.eat(&Tok::RBrace) {
                            break;
                        }
                        cur.expect(Tok::Comma)?;
                    }
                }
                spec.groups.push(GroupDecl { name, members });
            }
            "opinion" => {
                let rater = cur.ident()?;
                cur.expect(Tok::Arrow)?;
                let target = cur.ident()?;
                cur.expect(Tok::Colon)?;
                let score = cur.int()?;
                let count = if cur.is_keyword("x") {
                    cur.next();
                    let at = cur.pos();
                    let n = cur.int()?;
                    u32::try_from(n)
                        .ok()
                        .filter(|&n| n > 0)
                        .ok_or_else(|| ParseError::new(at, "multiplicity must be a positive integer"))?
                } else {
                    1
                };
                spec.opinions.push(OpinionDecl {
                    rater,
                    target,
                    score,
                    count,
                });
            }
            "model" => {
                if model_seen {
                    return Err(ParseError::new(pos, "more than one `model` clause"));
                }
                model_seen = true;
                spec.model = model(&mut cur)?;
            }
            other => {
                return Err(ParseError::new(
                    pos,
                    format!("unknown statement `{other}`; expected actions, sync, process, agent, group, opinion or model"),
                ))
            }
        }
    }
    Ok(spec)
}

fn actions(cur: &mut Cursor, spec: &mut SystemSpec) -> Result<(), ParseError> {
    cur.expect(Tok::LBrace)?;
    while !cur.eat(&Tok::RBrace) {
        let pos = cur.pos();
        let dir = cur.ident()?;
        let kind = match dir.as_str() {
            "out" => ActionKind::Output,
            "in" => ActionKind::Input,
            _ => return Err(ParseError::new(pos, format!("expected `out` or `in`, found `{dir}`"))),
        };
        let name_pos = cur.pos();
        let name = cur.ident()?;
        if !spec.signature.declare(name.clone(), kind) {
            return Err(ParseError::new(
                name_pos,
                format!("action `{name}` is reserved or already declared"),
            ));
        }
        if cur.eat(&Tok::At) {
            let cpos = cur.pos();
            match cur.ident()?.as_str() {
                "H" => spec.classification.high.insert(name),
                "L" => spec.classification.low.insert(name),
                other => return Err(ParseError::new(cpos, format!("expected `H` or `L`, found `{other}`"))),
            };
        }
    }
    Ok(())
}

fn ident_set(cur: &mut Cursor) -> Result<Vec<String>, ParseError> {
    cur.expect(Tok::LBrace)?;
    let mut out = Vec::new();
    while !cur.eat(&Tok::RBrace) {
        out.push(cur.ident()?);
        cur.eat(&Tok::Comma);
    }
    Ok(out)
}

fn model(cur: &mut Cursor) -> Result<ModelSpec, ParseError> {
    let pos = cur.pos();
    let kind = cur.ident()?;
    cur.expect(Tok::LBrace)?;
    match kind.as_str() {
        "club" => {
            let mut lambda = None;
            let mut cdsr = None;
            while !cur.eat(&Tok::RBrace) {
                let kpos = cur.pos();
                match cur.ident()?.as_str() {
                    "lambda" => lambda = Some(cur.real()?),
                    "cdsr" => cdsr = Some(ident_set(cur)?.into_iter().collect::<BTreeSet<_>>()),
                    other => return Err(ParseError::new(kpos, format!("unknown club parameter `{other}`"))),
                }
            }
            let lambda = lambda.ok_or_else(|| ParseError::new(pos, "club model requires `lambda`"))?;
            let mut m = ModelSpec::club(lambda);
            if let (ModelSpec::Club { cdsr: slot, .. }, Some(c)) = (&mut m, cdsr) {
                *slot = c;
            }
            Ok(m)
        }
        "eigentrust" => {
            let mut m = ModelSpec::eigentrust();
            let ModelSpec::EigenTrust {
                damping,
                pretrusted,
                epsilon,
                max_iter,
                per_group,
            } = &mut m
            else {
                unreachable!()
            };
            while !cur.eat(&Tok::RBrace) {
                let kpos = cur.pos();
                match cur.ident()?.as_str() {
                    "damping" => *damping = cur.real()?,
                    "pretrusted" => *pretrusted = ident_set(cur)?,
                    "epsilon" => *epsilon = cur.real()?,
                    "max_iter" => {
                        let at = cur.pos();
                        *max_iter = usize::try_from(cur.int()?)
                            .map_err(|_| ParseError::new(at, "max_iter must be non-negative"))?;
                    }
                    "per_group" => *per_group = true,
                    other => {
                        return Err(ParseError::new(kpos, format!("unknown eigentrust parameter `{other}`")))
                    }
                }
            }
            Ok(m)
        }
        other => Err(ParseError::new(pos, format!("unknown trust model `{other}`; expected club or eigentrust"))),
    }
}
