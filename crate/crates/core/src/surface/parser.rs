//! Recursive-descent parser for the concrete syntax.
//!
//! ```text
//! file   ::= term | (IDENT ':' type '=' term ';')+        -- last def is `main`
//! term   ::= '\' '(' IDENT ':' type ')' '@' loc '.' term
//!          | '{' IDENT+ '}' '.' term                      -- location abstraction
//!          | '[' IDENT+ ']' '.' term                      -- type abstraction
//!          | head arg*
//! head   ::= atom | 'fst' atom | 'snd' atom
//! arg    ::= atom | '{' loc+ '}' | '[' type ']'
//! atom   ::= IDENT | INT | '(' ')' | '(' term ')' | '(' term ',' term ')'
//! type   ::= '{' IDENT+ '}' '.' type | '[' IDENT+ ']' '.' type
//!          | prod ('-' loc '->' type)?
//! prod   ::= tyatom ('*' tyatom)*
//! tyatom ::= 'Int' | 'Unit' | IDENT | '(' type ')'
//! loc    ::= 'client' | 'server' | IDENT
//! ```

use std::collections::HashSet;

use crate::loc::Loc;
use crate::rpc::syntax::{Def, RpcTerm, RpcType, SourceProgram, Span, TermKind};
use crate::surface::lexer::{tokenize, Tok, Token};
use crate::surface::SyntaxError;

pub fn parse_program(src: &str) -> Result<SourceProgram, SyntaxError> {
    let mut p = Parser::new(src)?;
    let program = p.program()?;
    check_scoping(&program)?;
    Ok(program)
}

pub fn parse_term(src: &str) -> Result<RpcTerm, SyntaxError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    p.expect(Tok::Eof)?;
    Ok(t)
}

pub fn parse_type(src: &str) -> Result<RpcType, SyntaxError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.expect(Tok::Eof)?;
    Ok(t)
}

/// Definitions may mention only earlier definitions; `main` any of them.
fn check_scoping(program: &SourceProgram) -> Result<(), SyntaxError> {
    let mut known: HashSet<String> = HashSet::new();
    let check = |body: &RpcTerm, known: &HashSet<String>| -> Result<(), SyntaxError> {
        let Some(x) = body.free_vars_ordered().into_iter().find(|x| !known.contains(x)) else {
            return Ok(());
        };
        let span = body
            .subterms()
            .into_iter()
            .find(|t| matches!(&t.kind, TermKind::Var(y) if *y == x) && is_free_at(body, t))
            .map_or(body.span, |t| t.span);
        Err(SyntaxError::spanned(
            span,
            format!("reference to undefined name {x}"),
        ))
    };
    for def in &program.defs {
        check(&def.body, &known)?;
        known.insert(def.name.clone());
    }
    check(&program.main, &known)
}

/// Whether the particular occurrence `target` is free in `root`.
fn is_free_at(root: &RpcTerm, target: &RpcTerm) -> bool {
    fn go(t: &RpcTerm, target: &RpcTerm, bound: &mut Vec<String>) -> Option<bool> {
        if std::ptr::eq(t, target) {
            if let TermKind::Var(x) = &t.kind {
                return Some(!bound.contains(x));
            }
        }
        match &t.kind {
            TermKind::Var(_) | TermKind::Int(_) | TermKind::Unit => None,
            TermKind::Lam { param, body, .. } => {
                bound.push(param.clone());
                let r = go(body, target, bound);
                bound.pop();
                r
            }
            TermKind::TAbs { body, .. }
            | TermKind::LAbs { body, .. }
            | TermKind::TApp(body, _)
            | TermKind::LApp(body, _)
            | TermKind::Proj(_, body) => go(body, target, bound),
            TermKind::App(a, b) | TermKind::Pair(a, b) => {
                go(a, target, bound).or_else(|| go(b, target, bound))
            }
        }
    }
    go(root, target, &mut Vec::new()).unwrap_or(false)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser, SyntaxError> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn start(&self) -> (u32, u32) {
        self.toks[self.pos].start
    }

    fn last_end(&self) -> (u32, u32) {
        if self.pos == 0 {
            self.toks[0].start
        } else {
            self.toks[self.pos - 1].end
        }
    }

    fn span_from(&self, start: (u32, u32)) -> Span {
        Span::new(start, self.last_end().max(start))
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, SyntaxError> {
        Err(SyntaxError::new(
            self.start(),
            format!("expected {expected}, found {}", self.peek()),
        ))
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            self.error(&tok.to_string())
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.advance();
                Ok(x)
            }
            _ => self.error("an identifier"),
        }
    }

    fn program(&mut self) -> Result<SourceProgram, SyntaxError> {
        let is_defs = matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Colon;
        if !is_defs {
            let main = self.term()?;
            self.expect(Tok::Eof)?;
            return Ok(SourceProgram::from_main(main));
        }
        let mut defs: Vec<Def> = Vec::new();
        while *self.peek() != Tok::Eof {
            let start = self.start();
            let name = self.ident()?;
            if defs.iter().any(|d| d.name == name) {
                return Err(SyntaxError::new(
                    start,
                    format!("duplicate definition name {name}"),
                ));
            }
            self.expect(Tok::Colon)?;
            let declared = self.ty()?;
            self.expect(Tok::Eq)?;
            let body = self.term()?;
            let span = self.span_from(start);
            // The final semicolon is optional.
            if *self.peek() != Tok::Eof {
                self.expect(Tok::Semi)?;
            }
            defs.push(Def {
                name,
                declared,
                body,
                span,
            });
        }
        match defs.pop() {
            Some(last) if last.name == "main" => Ok(SourceProgram {
                defs,
                main: last.body,
                main_type: Some(last.declared),
            }),
            Some(last) => Err(SyntaxError::spanned(
                last.span,
                "the last definition must be named main",
            )),
            None => unreachable!("definition list starts with an identifier"),
        }
    }

    pub fn term(&mut self) -> Result<RpcTerm, SyntaxError> {
        let start = self.start();
        match self.peek() {
            Tok::Backslash => {
                self.advance();
                self.expect(Tok::LParen)?;
                let param = self.ident()?;
                self.expect(Tok::Colon)?;
                let annot = self.ty()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::At)?;
                let loc = self.loc()?;
                self.expect(Tok::Dot)?;
                let body = self.term()?;
                Ok(RpcTerm::with_span(
                    TermKind::Lam {
                        loc,
                        param,
                        annot,
                        body: Box::new(body),
                    },
                    self.span_from(start),
                ))
            }
            Tok::LBrace | Tok::LBracket => {
                let is_loc = *self.peek() == Tok::LBrace;
                let close = if is_loc { Tok::RBrace } else { Tok::RBracket };
                self.advance();
                let mut vars = vec![self.ident()?];
                while matches!(self.peek(), Tok::Ident(_)) {
                    vars.push(self.ident()?);
                }
                self.expect(close)?;
                self.expect(Tok::Dot)?;
                let mut body = self.term()?;
                let span = self.span_from(start);
                for var in vars.into_iter().rev() {
                    let kind = if is_loc {
                        TermKind::LAbs {
                            var,
                            body: Box::new(body),
                        }
                    } else {
                        TermKind::TAbs {
                            var,
                            body: Box::new(body),
                        }
                    };
                    body = RpcTerm::with_span(kind, span);
                }
                Ok(body)
            }
            _ => self.application(),
        }
    }

    fn application(&mut self) -> Result<RpcTerm, SyntaxError> {
        let start = self.start();
        let mut head = match self.peek() {
            Tok::Fst | Tok::Snd => {
                let index = if self.advance() == Tok::Fst { 1 } else { 2 };
                let arg = self.atom()?;
                RpcTerm::with_span(TermKind::Proj(index, Box::new(arg)), self.span_from(start))
            }
            _ => self.atom()?,
        };
        loop {
            match self.peek() {
                Tok::LBrace => {
                    self.advance();
                    let mut locs = vec![self.loc()?];
                    while *self.peek() != Tok::RBrace {
                        locs.push(self.loc()?);
                    }
                    self.advance();
                    let span = self.span_from(start);
                    for loc in locs {
                        head = RpcTerm::with_span(TermKind::LApp(Box::new(head), loc), span);
                    }
                }
                Tok::LBracket => {
                    self.advance();
                    let ty = self.ty()?;
                    self.expect(Tok::RBracket)?;
                    head = RpcTerm::with_span(TermKind::TApp(Box::new(head), ty), self.span_from(start));
                }
                Tok::Ident(_) | Tok::Int(_) | Tok::LParen => {
                    let arg = self.atom()?;
                    head = RpcTerm::with_span(
                        TermKind::App(Box::new(head), Box::new(arg)),
                        self.span_from(start),
                    );
                }
                _ => return Ok(head),
            }
        }
    }

    fn atom(&mut self) -> Result<RpcTerm, SyntaxError> {
        let start = self.start();
        let kind = match self.peek().clone() {
            Tok::Ident(x) => {
                self.advance();
                TermKind::Var(x)
            }
            Tok::Int(n) => {
                self.advance();
                TermKind::Int(n)
            }
            Tok::LParen => {
                self.advance();
                if *self.peek() == Tok::RParen {
                    self.advance();
                    TermKind::Unit
                } else {
                    let first = self.term()?;
                    if *self.peek() == Tok::Comma {
                        self.advance();
                        let second = self.term()?;
                        self.expect(Tok::RParen)?;
                        TermKind::Pair(Box::new(first), Box::new(second))
                    } else {
                        self.expect(Tok::RParen)?;
                        // Parentheses only group; keep the inner span shape.
                        return Ok(RpcTerm::with_span(first.kind, self.span_from(start)));
                    }
                }
            }
            _ => return self.error("a term"),
        };
        Ok(RpcTerm::with_span(kind, self.span_from(start)))
    }

    fn loc(&mut self) -> Result<Loc, SyntaxError> {
        match self.peek().clone() {
            Tok::Client => {
                self.advance();
                Ok(Loc::Client)
            }
            Tok::Server => {
                self.advance();
                Ok(Loc::Server)
            }
            Tok::Ident(l) => {
                self.advance();
                Ok(Loc::Var(l))
            }
            _ => self.error("a location"),
        }
    }

    fn ty(&mut self) -> Result<RpcType, SyntaxError> {
        match self.peek() {
            Tok::LBrace | Tok::LBracket => {
                let is_loc = *self.peek() == Tok::LBrace;
                let close = if is_loc { Tok::RBrace } else { Tok::RBracket };
                self.advance();
                let mut vars = vec![self.ident()?];
                while matches!(self.peek(), Tok::Ident(_)) {
                    vars.push(self.ident()?);
                }
                self.expect(close)?;
                self.expect(Tok::Dot)?;
                let mut body = self.ty()?;
                for var in vars.into_iter().rev() {
                    body = if is_loc {
                        RpcType::forall_loc(var, body)
                    } else {
                        RpcType::forall_ty(var, body)
                    };
                }
                Ok(body)
            }
            _ => {
                let arg = self.product()?;
                if *self.peek() == Tok::Dash {
                    self.advance();
                    let loc = self.loc()?;
                    self.expect(Tok::Arrow)?;
                    let res = self.ty()?;
                    Ok(RpcType::fun(arg, loc, res))
                } else {
                    Ok(arg)
                }
            }
        }
    }

    fn product(&mut self) -> Result<RpcType, SyntaxError> {
        let mut ty = self.type_atom()?;
        while *self.peek() == Tok::Star {
            self.advance();
            let rhs = self.type_atom()?;
            ty = RpcType::pair(ty, rhs);
        }
        Ok(ty)
    }

    fn type_atom(&mut self) -> Result<RpcType, SyntaxError> {
        match self.peek().clone() {
            Tok::IntTy => {
                self.advance();
                Ok(RpcType::INT)
            }
            Tok::UnitTy => {
                self.advance();
                Ok(RpcType::UNIT)
            }
            Tok::Ident(a) => {
                self.advance();
                Ok(RpcType::Var(a))
            }
            Tok::LParen => {
                self.advance();
                let ty = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(ty)
            }
            _ => self.error("a type"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_with_location_and_annotation() {
        let t = parse_term(r"(\(x : Int) @ client . x)").unwrap();
        assert_eq!(t, RpcTerm::lam(Loc::Client, "x", RpcType::INT, RpcTerm::var("x")));
    }

    #[test]
    fn running_example_shape() {
        let t = parse_term(r"({l}. \(g : Int -client-> Int) @ l . g 1) {server} (\(x : Int) @ client . x)")
            .unwrap();
        let g_ty = RpcType::fun(RpcType::INT, Loc::Client, RpcType::INT);
        let inner = RpcTerm::lam(
            Loc::var("l"),
            "g",
            g_ty,
            RpcTerm::app(RpcTerm::var("g"), RpcTerm::int(1)),
        );
        let expected = RpcTerm::app(
            RpcTerm::lapp(RpcTerm::labs("l", inner), Loc::Server),
            RpcTerm::lam(Loc::Client, "x", RpcType::INT, RpcTerm::var("x")),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn multi_binder_sugar_nests() {
        let t = parse_term(r"{l1 l2}. [a]. \(x : a) @ l1 . x").unwrap();
        let expected = RpcTerm::labs(
            "l1",
            RpcTerm::labs(
                "l2",
                RpcTerm::tabs(
                    "a",
                    RpcTerm::lam(Loc::var("l1"), "x", RpcType::Var("a".into()), RpcTerm::var("x")),
                ),
            ),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn arrows_associate_right_and_bind_looser_than_products() {
        let ty = parse_type("Int * Unit -l-> Int -client-> Int").unwrap();
        assert_eq!(
            ty,
            RpcType::fun(
                RpcType::pair(RpcType::INT, RpcType::UNIT),
                Loc::var("l"),
                RpcType::fun(RpcType::INT, Loc::Client, RpcType::INT)
            )
        );
    }

    #[test]
    fn projections_head_application_chains() {
        let t = parse_term("fst p 1").unwrap();
        assert_eq!(
            t,
            RpcTerm::app(RpcTerm::proj(1, RpcTerm::var("p")), RpcTerm::int(1))
        );
    }

    #[test]
    fn definitions_and_scoping() {
        let p = parse_program("one : Int = 1;\nmain : Int = one").unwrap();
        assert_eq!(p.defs.len(), 1);
        assert_eq!(p.main, RpcTerm::var("one"));
        let e = parse_program("a : Int = b;\nb : Int = 1;\nmain : Int = a").unwrap_err();
        assert!(e.message.contains("undefined name b"), "{e}");
        let e = parse_program("a : Int = 1;\na : Int = 2;\nmain : Int = a").unwrap_err();
        assert!(e.message.contains("duplicate definition name a"), "{e}");
        let e = parse_program("a : Int = 1;\nb : Int = a").unwrap_err();
        assert!(e.message.contains("main"), "{e}");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_term("\\(x Int) @ client . x").unwrap_err();
        assert_eq!(e.start, (1, 5));
    }
}
