//! Tokenizer for `.rl` source files.

use std::fmt;

use crate::surface::SyntaxError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Client,
    Server,
    Fst,
    Snd,
    IntTy,
    UnitTy,
    Backslash,
    At,
    Dot,
    Colon,
    Semi,
    Comma,
    Star,
    Eq,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    /// `-` immediately before an arrow label, as in `A -l-> B`.
    Dash,
    /// `->` closing an arrow label.
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(x) => return write!(f, "identifier `{x}`"),
            Tok::Int(n) => return write!(f, "integer {n}"),
            Tok::Client => "`client`",
            Tok::Server => "`server`",
            Tok::Fst => "`fst`",
            Tok::Snd => "`snd`",
            Tok::IntTy => "`Int`",
            Tok::UnitTy => "`Unit`",
            Tok::Backslash => "`\\`",
            Tok::At => "`@`",
            Tok::Dot => "`.`",
            Tok::Colon => "`:`",
            Tok::Semi => "`;`",
            Tok::Comma => "`,`",
            Tok::Star => "`*`",
            Tok::Eq => "`=`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Dash => "`-`",
            Tok::Arrow => "`->`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub start: (u32, u32),
    pub end: (u32, u32),
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    Lexer::new(src).run()
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> (u32, u32) {
        (self.line, self.col)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn run(mut self) -> Result<Vec<Token>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let start = self.pos();
            let Some(c) = self.bump() else {
                out.push(Token {
                    tok: Tok::Eof,
                    start,
                    end: start,
                });
                return Ok(out);
            };
            let tok = match c {
                '\\' => Tok::Backslash,
                '@' => Tok::At,
                '.' => Tok::Dot,
                ':' => Tok::Colon,
                ';' => Tok::Semi,
                ',' => Tok::Comma,
                '*' => Tok::Star,
                '=' => Tok::Eq,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '-' => match self.peek() {
                    Some('>') => {
                        self.bump();
                        Tok::Arrow
                    }
                    Some(d) if d.is_ascii_digit() => Tok::Int(-self.number(start)?),
                    _ => Tok::Dash,
                },
                c if c.is_ascii_digit() => {
                    let mut digits = String::from(c);
                    while let Some(d) = self.peek().filter(char::is_ascii_digit) {
                        digits.push(d);
                        self.bump();
                    }
                    Tok::Int(parse_int(&digits, start)?)
                }
                c if c.is_ascii_alphabetic() => {
                    let mut ident = String::from(c);
                    while let Some(d) = self
                        .peek()
                        .filter(|d| d.is_ascii_alphanumeric() || *d == '_' || *d == '\'')
                    {
                        ident.push(d);
                        self.bump();
                    }
                    keyword(&ident).unwrap_or(Tok::Ident(ident))
                }
                other => return Err(SyntaxError::new(start, format!("unexpected character {other:?}"))),
            };
            out.push(Token {
                tok,
                start,
                end: self.pos(),
            });
        }
    }

    fn number(&mut self, start: (u32, u32)) -> Result<i64, SyntaxError> {
        let mut digits = String::new();
        while let Some(d) = self.peek().filter(char::is_ascii_digit) {
            digits.push(d);
            self.bump();
        }
        parse_int(&digits, start)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('-') => {
                    let mut ahead = self.chars.clone();
                    ahead.next();
                    if ahead.next() != Some('-') {
                        return;
                    }
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }
}

fn parse_int(digits: &str, at: (u32, u32)) -> Result<i64, SyntaxError> {
    digits
        .parse::<i64>()
        .map_err(|_| SyntaxError::new(at, format!("integer literal {digits} out of range")))
}

fn keyword(ident: &str) -> Option<Tok> {
    Some(match ident {
        "client" => Tok::Client,
        "server" => Tok::Server,
        "fst" => Tok::Fst,
        "snd" => Tok::Snd,
        "Int" => Tok::IntTy,
        "Unit" => Tok::UnitTy,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrow_labels_split_into_dash_and_arrow() {
        assert_eq!(
            toks("Int -client-> Int"),
            vec![
                Tok::IntTy,
                Tok::Dash,
                Tok::Client,
                Tok::Arrow,
                Tok::IntTy,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_negative_literals() {
        assert_eq!(
            toks("-- a comment\n-12 -- trailing\nx'"),
            vec![Tok::Int(-12), Tok::Ident("x'".into()), Tok::Eof]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("\n  foo").unwrap();
        assert_eq!(t[0].start, (2, 3));
        assert_eq!(t[0].end, (2, 6));
    }

    #[test]
    fn underscore_cannot_start_identifiers() {
        assert!(tokenize("_g1").is_err());
    }
}
