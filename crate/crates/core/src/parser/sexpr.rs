use super::{ParseError, Span};

#[derive(Clone, Debug, PartialEq)]
pub enum SExpr {
    Atom(String, Span),
    List(Vec<SExpr>, Span),
}

impl SExpr {
    pub fn span(&self) -> Span {
        match self {
            SExpr::Atom(_, s) | SExpr::List(_, s) => *s,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a, _) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(l, _) => Some(l),
            _ => None,
        }
    }

    /// Head atom of a list, if any.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|l| l.first()).and_then(SExpr::atom)
    }
}

/// Parse a whole document into its top-level expressions. Atoms are
/// lower-cased; `;` starts a comment running to the end of the line.
pub fn parse_sexprs(text: &str) -> Result<Vec<SExpr>, ParseError> {
    let mut stack: Vec<(Vec<SExpr>, Span)> = Vec::new();
    let mut top = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        let here = Span { line, col };
        match c {
            '\n' => {
                line += 1;
                col = 1;
                continue;
            }
            ';' => {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
                continue;
            }
            '(' => stack.push((Vec::new(), here)),
            ')' => {
                let Some((items, span)) = stack.pop() else {
                    return Err(ParseError::new("unbalanced ')'", here).expecting("end of input or '('"));
                };
                let e = SExpr::List(items, span);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(e),
                    None => top.push(e),
                }
            }
            c if c.is_whitespace() => {}
            c => {
                let mut s = String::new();
                s.extend(c.to_lowercase());
                col += 1;
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' || n == ';' {
                        break;
                    }
                    s.extend(n.to_lowercase());
                    chars.next();
                    col += 1;
                }
                let e = SExpr::Atom(s, here);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(e),
                    None => top.push(e),
                }
                continue;
            }
        }
        col += 1;
    }
    if let Some((_, span)) = stack.pop() {
        return Err(ParseError::new("unclosed '('", span).expecting("')'"));
    }
    Ok(top)
}
