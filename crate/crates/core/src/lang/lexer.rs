use super::LangError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

// Longest symbols first so `<=` wins over `<`.
const SYMBOLS: &[&str] = &[
    ":=", "?=", "..", "<=", ">=", "!=", ";", ":", "(", ")", "{", "}", "[", "]", "^", ",", "+", "-", "*", "/", "<", ">",
    "=",
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, LangError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            let mut end = i;
            while end < chars.len() && chars[end].is_ascii_digit() {
                end += 1;
            }
            let is_float = end + 1 < chars.len() && chars[end] == '.' && chars[end + 1].is_ascii_digit();
            if is_float {
                end += 1;
                while end < chars.len() && chars[end].is_ascii_digit() {
                    end += 1;
                }
                let text: String = chars[start..end].iter().collect();
                let v: f64 = text.parse().map_err(|_| LangError::Syntax {
                    line: tl,
                    col: tc,
                    msg: format!("bad number `{text}`"),
                })?;
                out.push(Token {
                    tok: Tok::Float(v),
                    line: tl,
                    col: tc,
                });
            } else {
                let text: String = chars[start..end].iter().collect();
                let v: i64 = text.parse().map_err(|_| LangError::Syntax {
                    line: tl,
                    col: tc,
                    msg: format!("integer literal `{text}` out of range"),
                })?;
                out.push(Token {
                    tok: Tok::Int(v),
                    line: tl,
                    col: tc,
                });
            }
            advance(&mut i, &mut line, &mut col, end - start);
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            let mut end = i;
            while end < chars.len() && (chars[end].is_alphanumeric() || chars[end] == '_') {
                end += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..end].iter().collect()),
                line: tl,
                col: tc,
            });
            advance(&mut i, &mut line, &mut col, end - start);
            continue;
        }
        let sym = SYMBOLS
            .iter()
            .find(|s| s.chars().enumerate().all(|(k, sc)| chars.get(i + k) == Some(&sc)));
        match sym {
            Some(s) => {
                out.push(Token {
                    tok: Tok::Sym(s),
                    line: tl,
                    col: tc,
                });
                advance(&mut i, &mut line, &mut col, s.len());
            }
            None => {
                return Err(LangError::Syntax {
                    line: tl,
                    col: tc,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_is_not_a_float() {
        let toks = tokenize("0..3").unwrap();
        let kinds: Vec<_> = toks.into_iter().map(|t| t.tok).collect();
        assert_eq!(kinds, vec![Tok::Int(0), Tok::Sym(".."), Tok::Int(3), Tok::Eof]);
    }

    #[test]
    fn positions_track_lines() {
        let toks = tokenize("x\n  := 0.25 // note\n").unwrap();
        assert_eq!((toks[1].line, toks[1].col), (2, 3));
        assert_eq!(toks[2].tok, Tok::Float(0.25));
        assert_eq!(toks[3].tok, Tok::Eof);
    }

    #[test]
    fn rejects_stray_characters() {
        let err = tokenize("x := $").unwrap_err();
        assert!(matches!(err, LangError::Syntax { line: 1, col: 6, .. }));
    }
}
