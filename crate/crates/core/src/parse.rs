//! Expression grammar shared by operation combinations and algebra elements.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := [coefficient] factor+ | coefficient
//! factor := 'Q' '^' int | ['b'] 'P' '^' int | 'Sq' '^' int | identifier
//! int    := ['-'] digits
//! ```
//!
//! Whitespace is insignificant. A lone coefficient denotes a multiple of the
//! identity (resp. of the unit).

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::modp::{FpScalar, Prime};
use crate::terms::{LinComb, OpLetter, OpWord, Side, TermError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the input.
    pub position: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(position: usize, message: impl Into<String>) -> ParseError {
        ParseError { position, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.position, self.message)
    }
}

impl core::error::Error for ParseError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LetterKind {
    Q,
    Sq,
    P,
    BetaP,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Token {
    Number(u64),
    Plus,
    Minus,
    Letter(LetterKind, i64),
    Ident(String),
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub token: Token,
    pub position: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn read_word(&mut self) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if is_ident_continue(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        &self.src[start..self.pos]
    }

    fn read_digits(&mut self) -> Result<u64, ParseError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos {
            return Err(ParseError::new(start, "expected digits"));
        }
        self.src[start..self.pos].parse::<u64>().map_err(|_| ParseError::new(start, "integer out of range"))
    }

    /// `'^' ['-'] digits`, after a letter keyword.
    fn read_exponent(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        if self.peek() != Some('^') {
            return Err(ParseError::new(self.pos, "expected '^'"));
        }
        self.pos += 1;
        self.skip_ws();
        let negative = if self.peek() == Some('-') {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        };
        let start = self.pos;
        let n = self.read_digits()?;
        let n = i64::try_from(n).map_err(|_| ParseError::new(start, "index out of range"))?;
        Ok(if negative { -n } else { n })
    }

    /// Whether the next non-space character is `^`, without consuming.
    fn caret_follows(&self) -> bool {
        self.src[self.pos..].trim_start().starts_with('^')
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut lx = Lexer { src, pos: 0 };
    let mut out = Vec::new();
    loop {
        lx.skip_ws();
        let position = lx.pos;
        let Some(c) = lx.peek() else { break };
        let token = if c.is_ascii_digit() {
            Token::Number(lx.read_digits()?)
        } else if c == '+' {
            lx.pos += 1;
            Token::Plus
        } else if c == '-' {
            lx.pos += 1;
            Token::Minus
        } else if is_ident_start(c) {
            let word = lx.read_word();
            match word {
                "Q" | "Sq" | "P" | "bP" if lx.caret_follows() => {
                    let kind = match word {
                        "Q" => LetterKind::Q,
                        "Sq" => LetterKind::Sq,
                        "P" => LetterKind::P,
                        _ => LetterKind::BetaP,
                    };
                    Token::Letter(kind, lx.read_exponent()?)
                }
                "b" => {
                    // `b P^s` with intervening space
                    let save = lx.pos;
                    lx.skip_ws();
                    if lx.peek() == Some('P') {
                        let w2 = lx.read_word();
                        if w2 == "P" && lx.caret_follows() {
                            Token::Letter(LetterKind::BetaP, lx.read_exponent()?)
                        } else {
                            lx.pos = save;
                            Token::Ident(word.to_string())
                        }
                    } else {
                        lx.pos = save;
                        Token::Ident(word.to_string())
                    }
                }
                _ => Token::Ident(word.to_string()),
            }
        } else {
            return Err(ParseError::new(position, alloc::format!("unexpected character '{c}'")));
        };
        out.push(Spanned { token, position });
    }
    Ok(out)
}

/// Converts a lexed letter into an [`OpLetter`], enforcing the prime/side rules.
pub(crate) fn letter_for(kind: LetterKind, index: i64, prime: Prime, side: Side, position: usize) -> Result<OpLetter, ParseError> {
    let letter = match (kind, prime.is_two(), side) {
        (LetterKind::Q, true, Side::B) => OpLetter::plain(index),
        (LetterKind::Sq, true, Side::A) => OpLetter::plain(index),
        (LetterKind::P, false, _) => OpLetter::new(0, index),
        (LetterKind::BetaP, false, _) => OpLetter::new(1, index),
        (LetterKind::BetaP, true, _) => {
            return Err(ParseError::new(position, "Bockstein letters do not exist at p = 2"));
        }
        (LetterKind::P, true, _) => {
            return Err(ParseError::new(position, "p = 2 uses Q^s (side B) or Sq^s (side A)"));
        }
        (LetterKind::Q, true, Side::A) => {
            return Err(ParseError::new(position, "side A at p = 2 uses Sq^s"));
        }
        (LetterKind::Sq, true, Side::B) => {
            return Err(ParseError::new(position, "side B at p = 2 uses Q^s"));
        }
        (LetterKind::Q | LetterKind::Sq, false, _) => {
            return Err(ParseError::new(position, "odd primes use P^s and bP^s"));
        }
    };
    if side == Side::A && index < 0 {
        return Err(ParseError::new(position, "Steenrod indices must be nonnegative"));
    }
    Ok(letter)
}

/// One additive term: a signed coefficient followed by raw factor tokens.
pub(crate) struct RawTerm<'t> {
    pub coefficient: FpScalar,
    pub factors: &'t [Spanned],
    pub position: usize,
}

/// Splits a token stream into signed terms.
pub(crate) fn split_terms(tokens: &[Spanned], prime: Prime, end: usize) -> Result<Vec<RawTerm<'_>>, ParseError> {
    if tokens.is_empty() {
        return Err(ParseError::new(end, "empty expression"));
    }
    let mut terms = Vec::new();
    let mut i = 0;
    let mut sign = 1i64;
    if let Token::Minus = tokens[0].token {
        sign = -1;
        i = 1;
    }
    loop {
        let position = tokens.get(i).map_or(end, |t| t.position);
        let mut coefficient = FpScalar::new(sign, prime);
        let mut had_number = false;
        if let Some(Spanned { token: Token::Number(n), .. }) = tokens.get(i) {
            coefficient = FpScalar::new(sign * (*n % prime.get() as u64) as i64, prime);
            had_number = true;
            i += 1;
        }
        let start = i;
        while i < tokens.len() && matches!(tokens[i].token, Token::Letter(..) | Token::Ident(_)) {
            i += 1;
        }
        if !had_number && start == i {
            return Err(ParseError::new(position, "expected a coefficient or factor"));
        }
        terms.push(RawTerm { coefficient, factors: &tokens[start..i], position });
        match tokens.get(i) {
            None => break,
            Some(Spanned { token: Token::Plus, .. }) => sign = 1,
            Some(Spanned { token: Token::Minus, .. }) => sign = -1,
            Some(t) => return Err(ParseError::new(t.position, "expected '+' or '-'")),
        }
        i += 1;
        if i == tokens.len() {
            return Err(ParseError::new(end, "dangling operator"));
        }
    }
    Ok(terms)
}

/// Parses an operation expression into canonical form.
pub fn parse(text: &str, prime: Prime, side: Side) -> Result<LinComb, ParseError> {
    let tokens = tokenize(text)?;
    let mut out = LinComb::zero(prime, side);
    for term in split_terms(&tokens, prime, text.len())? {
        let mut letters = Vec::with_capacity(term.factors.len());
        for f in term.factors {
            match &f.token {
                Token::Letter(kind, index) => letters.push(letter_for(*kind, *index, prime, side, f.position)?),
                Token::Ident(name) => {
                    return Err(ParseError::new(f.position, alloc::format!("'{name}' is not an operation letter")));
                }
                _ => unreachable!("split_terms only yields factor tokens"),
            }
        }
        let word = OpWord::new(prime, side, letters).map_err(|e: TermError| ParseError::new(term.position, e.to_string()))?;
        out.add_term(word, term.coefficient);
    }
    Ok(out)
}
