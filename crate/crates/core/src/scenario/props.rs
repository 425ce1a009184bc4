use crate::syntax::Pos;
use crate::ttl::parse_formula;
use crate::ParseError;

use super::Property;

/// Renders properties one per line as `name: formula  # expect: true`.
pub fn write_props(props: &[Property]) -> String {
    let mut out = String::new();
    for p in props {
        out.push_str(&format!("{}: {}", p.name, p.formula));
        if let Some(e) = p.expected {
            out.push_str(&format!("  # expect: {e}"));
        }
        out.push('\n');
    }
    out
}

/// Reads the format produced by [`write_props`]. Blank lines and lines
/// starting with `#` are ignored; the `# expect:` annotation is optional.
pub fn parse_props(text: &str) -> Result<Vec<Property>, ParseError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |msg: String| ParseError::new(Pos { line: n + 1, column: 1 }, msg);
        let (body, comment) = match line.split_once('#') {
            Some((b, c)) => (b, Some(c.trim())),
            None => (line, None),
        };
        let (name, formula) = body
            .split_once(':')
            .ok_or_else(|| at("expected `name: formula`".into()))?;
        let name = name.trim();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(at(format!("bad property name `{name}`")));
        }
        let formula = parse_formula(formula).map_err(|e| at(format!("property `{name}`: {e}")))?;
        let expected = match comment {
            None => None,
            Some(c) => match c.strip_prefix("expect:").map(str::trim) {
                Some("true") => Some(true),
                Some("false") => Some(false),
                Some(other) => return Err(at(format!("expected `true` or `false`, found `{other}`"))),
                None => None,
            },
        };
        out.push(Property {
            name: name.to_string(),
            formula,
            expected,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "# header\n\ninit: t[I,J] > 0.25  # expect: true\nreach: EF(<I.a*J.b>)\nnever: AG(false) # expect: false\n";
        let props = parse_props(text).unwrap();
        assert_eq!(props.len(), 3);
        assert_eq!(props[0].expected, Some(true));
        assert_eq!(props[1].expected, None);
        assert_eq!(props[2].expected, Some(false));
        assert_eq!(parse_props(&write_props(&props)).unwrap(), props);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_props("ok: true\nbroken true\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(parse_props("x: EF(\n").is_err());
        assert!(parse_props("x: true # expect: maybe\n").is_err());
    }
}
