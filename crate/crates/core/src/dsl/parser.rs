//! Recursive-descent parser for the pipeline grammar. Whitespace-insensitive;
//! errors carry the byte offset where the expected token should have started
//! and a deterministic expected-token message.

use super::{Pipeline, Stage};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at offset {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for SyntaxError {}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src: src.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn err(&self, message: &str) -> SyntaxError {
        SyntaxError { offset: self.pos, message: message.to_string() }
    }

    fn ident(&mut self) -> Result<(String, usize), SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => {}
            _ => return Err(self.err("expected primitive name")),
        }
        while let Some(b) = self.peek() {
            if b.is_ascii_alphanumeric() || b == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        Ok((name, start))
    }

    fn int(&mut self) -> Result<i64, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            self.pos = start;
            return Err(self.err("expected integer argument"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<i64>().map_err(|_| SyntaxError {
            offset: start,
            message: "integer literal out of range".to_string(),
        })
    }

    fn stage(&mut self) -> Result<Stage, SyntaxError> {
        let (name, offset) = self.ident()?;
        let mut args = Vec::new();
        self.skip_ws();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            args.push(self.int()?);
            loop {
                self.skip_ws();
                match self.peek() {
                    Some(b',') => {
                        self.pos += 1;
                        args.push(self.int()?);
                    }
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.err("expected ',' or ')'")),
                }
            }
        }
        Ok(Stage { name, args, offset })
    }

    fn pipeline(&mut self) -> Result<Pipeline, SyntaxError> {
        let mut stages = vec![self.stage()?];
        loop {
            self.skip_ws();
            match self.peek() {
                None => break,
                Some(b'|') => {
                    if self.src.get(self.pos + 1) == Some(&b'>') {
                        self.pos += 2;
                        stages.push(self.stage()?);
                    } else {
                        return Err(self.err("expected '|>' or end of input"));
                    }
                }
                Some(_) => return Err(self.err("expected '|>' or end of input")),
            }
        }
        Ok(Pipeline { stages })
    }
}

/// Parse DSL source into a pipeline.
pub fn parse(source: &str) -> Result<Pipeline, SyntaxError> {
    Parser::new(source).pipeline()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_stage() {
        let p = parse("mirror_h").unwrap();
        assert_eq!(p.stages.len(), 1);
        assert_eq!(p.stages[0].name, "mirror_h");
        assert!(p.stages[0].args.is_empty());
    }

    #[test]
    fn two_stages_with_args() {
        let p = parse("rot90 |> replace(3,4)").unwrap();
        assert_eq!(p.stages.len(), 2);
        assert_eq!(p.stages[1].name, "replace");
        assert_eq!(p.stages[1].args, vec![3, 4]);
    }

    #[test]
    fn unterminated_args() {
        let e = parse("replace(3").unwrap_err();
        assert_eq!(e.offset, 9);
        assert_eq!(e.message, "expected ',' or ')'");
    }

    #[test]
    fn whitespace_insensitive() {
        assert_eq!(parse("  rot90|>replace( 3 , 4 )  ").unwrap(), parse("rot90 |> replace(3,4)").unwrap());
    }

    #[test]
    fn negative_args() {
        let p = parse("translate(-1,2,0)").unwrap();
        assert_eq!(p.stages[0].args, vec![-1, 2, 0]);
    }

    #[test]
    fn empty_input() {
        let e = parse("").unwrap_err();
        assert_eq!(e.offset, 0);
        assert_eq!(e.message, "expected primitive name");
    }

    #[test]
    fn trailing_pipe() {
        let e = parse("rot90 |>").unwrap_err();
        assert_eq!(e.message, "expected primitive name");
        assert_eq!(e.offset, 8);
    }

    #[test]
    fn garbage_after_stage() {
        let e = parse("rot90 $").unwrap_err();
        assert_eq!(e.message, "expected '|>' or end of input");
        assert_eq!(e.offset, 6);
    }

    #[test]
    fn missing_argument() {
        let e = parse("replace(,4)").unwrap_err();
        assert_eq!(e.message, "expected integer argument");
        assert_eq!(e.offset, 8);
    }

    #[test]
    fn huge_literal_rejected() {
        let e = parse("fill(99999999999999999999)").unwrap_err();
        assert_eq!(e.message, "integer literal out of range");
    }

    #[test]
    fn print_canonicalizes() {
        let p = parse(" rot90|>identity ").unwrap();
        assert_eq!(p.print(), "rot90 |> identity");
        assert_eq!(parse(&p.print()).unwrap(), p);
    }
}
