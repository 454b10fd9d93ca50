//! Lightweight lexers for C and Java.
//!
//! The lexers classify every lexeme into one of five token classes and drop
//! whitespace and comments. They do not parse, expand macros or resolve
//! contextual keywords.

use serde::{Deserialize, Serialize};

use super::{CorpusError, Language};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Literal,
    Operator,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    pub file: String,
    /// 1-based.
    pub line: usize,
    /// 1-based, counted in characters.
    pub column: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexErrorKind {
    UnterminatedString,
    UnterminatedChar,
    UnterminatedComment,
    UnterminatedTextBlock,
    UnterminatedHeaderName,
    UnexpectedCharacter(char),
}

impl std::fmt::Display for LexErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LexErrorKind::UnterminatedString => f.write_str("unterminated string literal"),
            LexErrorKind::UnterminatedChar => f.write_str("unterminated character literal"),
            LexErrorKind::UnterminatedComment => f.write_str("unterminated block comment"),
            LexErrorKind::UnterminatedTextBlock => f.write_str("unterminated text block"),
            LexErrorKind::UnterminatedHeaderName => f.write_str("unterminated header name"),
            LexErrorKind::UnexpectedCharacter(c) => write!(f, "unexpected character {c:?}"),
        }
    }
}

const C_KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
    "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef",
    "union", "unsigned", "void", "volatile", "while", "_Alignas", "_Alignof", "_Atomic", "_Bool",
    "_Complex", "_Generic", "_Imaginary", "_Noreturn", "_Static_assert", "_Thread_local",
];

const JAVA_KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try",
    "void", "volatile", "while",
];

const JAVA_LITERAL_WORDS: &[&str] = &["true", "false", "null"];

// Longest first within each language so that greedy matching works.
const C_OPERATORS: &[&str] = &[
    "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "*=", "/=",
    "%=", "+=", "-=", "&=", "^=", "|=", "##", "+", "-", "*", "/", "%", "=", "<", ">", "!", "~",
    "&", "|", "^", "?", ":", ".",
];

const JAVA_OPERATORS: &[&str] = &[
    ">>>=", ">>>", "<<=", ">>=", "->", "::", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&",
    "||", "*=", "/=", "%=", "+=", "-=", "&=", "^=", "|=", "+", "-", "*", "/", "%", "=", "<", ">",
    "!", "~", "&", "|", "^", "?", ":", ".",
];

const C_PUNCTUATION: &[&str] = &["...", "(", ")", "[", "]", "{", "}", ";", ",", "#"];
const JAVA_PUNCTUATION: &[&str] = &["...", "(", ")", "[", "]", "{", "}", ";", ",", "@"];

/// Tokenizes `source` as `language`, tagging tokens with an empty file name.
pub fn tokenize(source: &str, language: Language) -> Result<Vec<Token>, CorpusError> {
    tokenize_named(source, language, "")
}

/// Tokenizes `source`, tagging every token and error with `file`.
pub fn tokenize_named(
    source: &str,
    language: Language,
    file: &str,
) -> Result<Vec<Token>, CorpusError> {
    Lexer::new(source, language, file).run()
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    language: Language,
    file: &'a str,
    tokens: Vec<Token>,
    // Preprocessor tracking (C only): index of the line's first token when it is `#`.
    directive_start: Option<usize>,
    line_has_token: bool,
}

impl<'a> Lexer<'a> {
    fn new(source: &str, language: Language, file: &'a str) -> Self {
        Lexer {
            chars: source.chars().collect(),
            pos: 0,
            line: 1,
            column: 1,
            language,
            file,
            tokens: Vec::new(),
            directive_start: None,
            line_has_token: false,
        }
    }

    fn peek(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
            self.line_has_token = false;
            self.directive_start = None;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, kind: LexErrorKind, line: usize, column: usize) -> CorpusError {
        CorpusError::Lex {
            file: self.file.to_owned(),
            line,
            column,
            kind,
        }
    }

    fn push(&mut self, start: usize, line: usize, column: usize, kind: TokenKind) {
        let text: String = self.chars[start..self.pos].iter().collect();
        if !self.line_has_token && self.language == Language::C && text == "#" {
            self.directive_start = Some(self.tokens.len());
        }
        self.line_has_token = true;
        self.tokens.push(Token {
            text,
            kind,
            file: self.file.to_owned(),
            line,
            column,
        });
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn run(mut self) -> Result<Vec<Token>, CorpusError> {
        while let Some(c) = self.peek(0) {
            let (line, column, start) = (self.line, self.column, self.pos);
            if c.is_whitespace() {
                self.bump();
            } else if c == '\\' && self.language == Language::C && self.continuation_follows() {
                // backslash-newline splices lines
                self.bump();
                while self.peek(0).is_some_and(|c| c != '\n') {
                    self.bump();
                }
                let (directive, had) = (self.directive_start, self.line_has_token);
                self.bump();
                self.directive_start = directive;
                self.line_has_token = had;
            } else if self.starts_with("//") {
                while self.peek(0).is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else if self.starts_with("/*") {
                self.block_comment(line, column)?;
            } else if self.header_name_expected() && c == '<' {
                self.header_name(line, column)?;
                self.push(start, line, column, TokenKind::Literal);
            } else if self.language == Language::Java && self.starts_with("\"\"\"") {
                self.text_block(line, column)?;
                self.push(start, line, column, TokenKind::Literal);
            } else if c == '"' {
                self.quoted('"', LexErrorKind::UnterminatedString, line, column)?;
                self.push(start, line, column, TokenKind::Literal);
            } else if c == '\'' {
                self.quoted('\'', LexErrorKind::UnterminatedChar, line, column)?;
                self.push(start, line, column, TokenKind::Literal);
            } else if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) {
                self.number();
                self.push(start, line, column, TokenKind::Literal);
            } else if is_ident_start(c) {
                self.identifier(start, line, column)?;
            } else if let Some((len, kind)) = self.symbol() {
                for _ in 0..len {
                    self.bump();
                }
                self.push(start, line, column, kind);
            } else {
                return Err(self.error(LexErrorKind::UnexpectedCharacter(c), line, column));
            }
        }
        Ok(self.tokens)
    }

    fn continuation_follows(&self) -> bool {
        let mut i = 1;
        while let Some(c) = self.peek(i) {
            match c {
                '\n' => return true,
                ' ' | '\t' | '\r' => i += 1,
                _ => return false,
            }
        }
        false
    }

    fn header_name_expected(&self) -> bool {
        let Some(start) = self.directive_start else {
            return false;
        };
        self.tokens.len() == start + 2
            && matches!(
                self.tokens[start + 1].text.as_str(),
                "include" | "include_next" | "import"
            )
    }

    fn header_name(&mut self, line: usize, column: usize) -> Result<(), CorpusError> {
        self.bump();
        loop {
            match self.peek(0) {
                Some('>') => {
                    self.bump();
                    return Ok(());
                }
                Some('\n') | None => {
                    return Err(self.error(LexErrorKind::UnterminatedHeaderName, line, column))
                }
                Some(_) => {
                    self.bump();
                }
            }
        }
    }

    fn block_comment(&mut self, line: usize, column: usize) -> Result<(), CorpusError> {
        self.bump();
        self.bump();
        let directive = self.directive_start;
        let had_token = self.line_has_token;
        let start_line = self.line;
        loop {
            if self.starts_with("*/") {
                self.bump();
                self.bump();
                if self.line == start_line {
                    self.directive_start = directive;
                    self.line_has_token = had_token;
                }
                return Ok(());
            }
            if self.bump().is_none() {
                return Err(self.error(LexErrorKind::UnterminatedComment, line, column));
            }
        }
    }

    fn quoted(
        &mut self,
        quote: char,
        unterminated: LexErrorKind,
        line: usize,
        column: usize,
    ) -> Result<(), CorpusError> {
        self.bump();
        loop {
            match self.peek(0) {
                None | Some('\n') => return Err(self.error(unterminated, line, column)),
                Some('\\') => {
                    self.bump();
                    if self.peek(0).is_none() {
                        return Err(self.error(unterminated, line, column));
                    }
                    if self.peek(0) == Some('\r') && self.peek(1) == Some('\n') {
                        self.bump();
                    }
                    // Escaped newlines are line splices in C; keep the directive state.
                    let directive = self.directive_start;
                    let had = self.line_has_token;
                    self.bump();
                    self.directive_start = directive;
                    self.line_has_token = had;
                }
                Some(c) if c == quote => {
                    self.bump();
                    return Ok(());
                }
                Some(_) => {
                    self.bump();
                }
            }
        }
    }

    fn text_block(&mut self, line: usize, column: usize) -> Result<(), CorpusError> {
        for _ in 0..3 {
            self.bump();
        }
        loop {
            if self.starts_with("\"\"\"") {
                for _ in 0..3 {
                    self.bump();
                }
                return Ok(());
            }
            match self.bump() {
                None => return Err(self.error(LexErrorKind::UnterminatedTextBlock, line, column)),
                Some('\\') => {
                    if self.bump().is_none() {
                        return Err(self.error(LexErrorKind::UnterminatedTextBlock, line, column));
                    }
                }
                Some(_) => {}
            }
        }
    }

    /// Preprocessing-number grammar, which covers every numeric literal
    /// form in both languages (hex, binary, floats, suffixes, digit separators).
    fn number(&mut self) {
        self.bump();
        while let Some(c) = self.peek(0) {
            if matches!(c, 'e' | 'E' | 'p' | 'P') && matches!(self.peek(1), Some('+' | '-')) {
                self.bump();
                self.bump();
            } else if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn identifier(&mut self, start: usize, line: usize, column: usize) -> Result<(), CorpusError> {
        while self.peek(0).is_some_and(is_ident_continue) {
            self.bump();
        }
        let text: String = self.chars[start..self.pos].iter().collect();

        // C character/string prefixes: L"..", u8"..", U'..'
        if self.language == Language::C
            && matches!(text.as_str(), "L" | "u" | "U" | "u8")
            && matches!(self.peek(0), Some('"' | '\''))
        {
            let (q, err) = if self.peek(0) == Some('"') {
                ('"', LexErrorKind::UnterminatedString)
            } else {
                ('\'', LexErrorKind::UnterminatedChar)
            };
            self.quoted(q, err, line, column)?;
            self.push(start, line, column, TokenKind::Literal);
            return Ok(());
        }

        let kind = match self.language {
            Language::C if C_KEYWORDS.contains(&text.as_str()) => TokenKind::Keyword,
            Language::Java if JAVA_KEYWORDS.contains(&text.as_str()) => TokenKind::Keyword,
            Language::Java if JAVA_LITERAL_WORDS.contains(&text.as_str()) => TokenKind::Literal,
            _ => TokenKind::Identifier,
        };
        self.push(start, line, column, kind);
        Ok(())
    }

    fn symbol(&self) -> Option<(usize, TokenKind)> {
        let (ops, punct) = match self.language {
            Language::C => (C_OPERATORS, C_PUNCTUATION),
            Language::Java => (JAVA_OPERATORS, JAVA_PUNCTUATION),
        };
        let best_op = ops.iter().find(|s| self.starts_with(s)).map(|s| s.chars().count());
        let best_punct = punct.iter().find(|s| self.starts_with(s)).map(|s| s.chars().count());
        match (best_op, best_punct) {
            (Some(o), Some(p)) if p > o => Some((p, TokenKind::Punctuation)),
            (Some(o), _) => Some((o, TokenKind::Operator)),
            (None, Some(p)) => Some((p, TokenKind::Punctuation)),
            (None, None) => None,
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}
