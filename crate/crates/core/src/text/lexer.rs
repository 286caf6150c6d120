//! Tokenizer for `.qiro` text.

use super::SourceDiagnostic;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    /// `%name`
    Value(String),
    /// `@name`
    Symbol(String),
    /// `^name`
    Label(String),
    /// `!q.qubit`, `!qs.rstate` (angle-bracket payload lexed separately)
    TypeName(String),
    /// Bare identifier, keyword or op name (`qs.H`, `iter_args`, `i64`).
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Comma,
    Colon,
    Eq,
    Arrow,
    Question,
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$'
}

pub fn lex(src: &str) -> Result<Vec<Token>, SourceDiagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let pos = Pos { line, col };
        let err = |msg: String| SourceDiagnostic::error(pos, msg);
        let word = |i: &mut usize, col: &mut u32| {
            let start = *i;
            while *i < chars.len() && ident_char(chars[*i]) {
                *i += 1;
                *col += 1;
            }
            chars[start..*i].iter().collect::<String>()
        };
        let tok = match c {
            '%' | '@' | '^' | '!' => {
                bump!();
                let w = word(&mut i, &mut col);
                if w.is_empty() {
                    return Err(err(format!("expected a name after `{c}`")));
                }
                match c {
                    '%' => Tok::Value(w),
                    '@' => Tok::Symbol(w),
                    '^' => Tok::Label(w),
                    _ => Tok::TypeName(w),
                }
            }
            '"' => {
                bump!();
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return Err(err("unterminated string literal".into())),
                        Some('"') => {
                            bump!();
                            break;
                        }
                        Some('\\') => {
                            bump!();
                            let Some(&e) = chars.get(i) else {
                                return Err(err("unterminated string literal".into()));
                            };
                            s.push(match e {
                                'n' => '\n',
                                't' => '\t',
                                other => other,
                            });
                            bump!();
                        }
                        Some(&ch) => {
                            s.push(ch);
                            bump!();
                        }
                    }
                }
                Tok::Str(s)
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                bump!();
                bump!();
                Tok::Arrow
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).map_or(false, |d| d.is_ascii_digit())) => {
                let start = i;
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
                let mut is_float = false;
                if chars.get(i) == Some(&'.') && chars.get(i + 1).map_or(false, |d| d.is_ascii_digit()) {
                    is_float = true;
                    bump!();
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                }
                if matches!(chars.get(i), Some('e') | Some('E')) {
                    let mut j = i + 1;
                    if matches!(chars.get(j), Some('+') | Some('-')) {
                        j += 1;
                    }
                    if chars.get(j).map_or(false, |d| d.is_ascii_digit()) {
                        is_float = true;
                        while i < j {
                            bump!();
                        }
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            bump!();
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                if is_float {
                    Tok::Float(text.parse().map_err(|_| err(format!("invalid float literal `{text}`")))?)
                } else {
                    Tok::Int(text.parse().map_err(|_| err(format!("integer literal `{text}` out of range")))?)
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let w = word(&mut i, &mut col);
                Tok::Ident(w)
            }
            _ => {
                let t = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '<' => Tok::Lt,
                    '>' => Tok::Gt,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    '=' => Tok::Eq,
                    '?' => Tok::Question,
                    other => return Err(err(format!("unexpected character `{other}`"))),
                };
                bump!();
                t
            }
        };
        out.push(Token { tok, pos });
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lexes_op_line() {
        assert_eq!(
            toks("%1 = qs.R(-0.5) %0 // trailing\n"),
            vec![
                Tok::Value("1".into()),
                Tok::Eq,
                Tok::Ident("qs.R".into()),
                Tok::LParen,
                Tok::Float(-0.5),
                Tok::RParen,
                Tok::Value("0".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn lexes_types_and_arrow() {
        assert_eq!(
            toks("-> !qs.rstate<?> 1e-3 7"),
            vec![
                Tok::Arrow,
                Tok::TypeName("qs.rstate".into()),
                Tok::Lt,
                Tok::Question,
                Tok::Gt,
                Tok::Float(1e-3),
                Tok::Int(7),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let t = lex("\n  q.H").unwrap();
        assert_eq!(t[0].pos, Pos { line: 2, col: 3 });
    }

    #[test]
    fn bad_char_reports_position() {
        let e = lex("q.H #").unwrap_err();
        assert_eq!((e.line, e.column), (1, 5));
    }
}
