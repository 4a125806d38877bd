#![allow(dead_code)]

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i128),
    Float(f64),
    Punct(String),
}

const C89_KEYWORDS: [&str; 32] = [
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "int", "long", "register", "return",
    "short", "signed", "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned",
    "void", "volatile", "while",
];

const C99_ONLY: [&str; 5] = ["inline", "restrict", "_Bool", "_Complex", "_Imaginary"];

const PUNCT: [&str; 46] = [
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "*=", "/=", "%=", "+=", "-=", "&=", "^=", "|=", "[", "]", "(", ")", "{", "}", ".", "&",
    "*", "+", "-", "~", "!", "/", "%", "<", ">", "^", "|", "?", ":", ";", "=", ",",
];

/// Tokenizes C89 source after stripping comments; preprocessor lines are
/// checked and dropped. Errors name the first construct outside C89.
pub fn tokenize_c89(src: &str) -> Result<Vec<Tok>, String> {
    let mut code = String::new();
    let mut rest = src;
    while let Some(i) = rest.find(['/', '"']) {
        code.push_str(&rest[..i]);
        let tail = &rest[i..];
        if tail.starts_with("//") {
            return Err("line comment".into());
        } else if tail.starts_with("/*") {
            let end = tail.find("*/").ok_or("unterminated comment")?;
            code.push(' ');
            rest = &tail[end + 2..];
        } else if tail.starts_with('"') {
            return Err("string literal".into());
        } else {
            code.push('/');
            rest = &tail[1..];
        }
    }
    code.push_str(rest);

    let mut toks = Vec::new();
    for line in code.lines() {
        let t = line.trim_start();
        if let Some(directive) = t.strip_prefix('#') {
            let word = directive.split_whitespace().next().unwrap_or("");
            if !matches!(word, "define" | "ifndef" | "ifdef" | "endif" | "undef" | "if" | "else" | "include") {
                return Err(format!("directive #{word}"));
            }
            continue;
        }
        let b = line.as_bytes();
        let mut i = 0;
        while i < b.len() {
            let c = b[i] as char;
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let s = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                let w = &line[s..i];
                if C99_ONLY.contains(&w) {
                    return Err(format!("keyword {w}"));
                }
                toks.push(Tok::Ident(w.to_string()));
            } else if c.is_ascii_digit() {
                let s = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'.') {
                    i += 1;
                }
                let lit = &line[s..i];
                if lit.contains('.') {
                    toks.push(Tok::Float(lit.parse().map_err(|_| format!("literal {lit}"))?));
                } else {
                    let digits = lit.trim_end_matches(['u', 'U', 'l', 'L']);
                    let suffix = &lit[digits.len()..].to_ascii_lowercase();
                    if !matches!(suffix.as_str(), "" | "u" | "l" | "ul" | "lu") {
                        return Err(format!("literal suffix {suffix}"));
                    }
                    toks.push(Tok::Int(digits.parse().map_err(|_| format!("literal {lit}"))?));
                }
            } else {
                let p = PUNCT
                    .iter()
                    .find(|p| line[i..].starts_with(**p))
                    .ok_or_else(|| format!("character {c:?}"))?;
                toks.push(Tok::Punct(p.to_string()));
                i += p.len();
            }
        }
    }
    Ok(toks)
}

fn is_type_start(t: &Tok, typedefs: &[String]) -> bool {
    match t {
        Tok::Ident(w) => {
            matches!(
                w.as_str(),
                "static" | "const" | "int" | "long" | "short" | "char" | "float" | "double"
                    | "signed" | "unsigned" | "void" | "register" | "auto" | "volatile" | "extern"
            ) || typedefs.contains(w)
        }
        _ => false,
    }
}

/// Tokenizer-level C89 check: no line comments, no C99 keywords or `long
/// long`, balanced brackets, and declarations before statements in every
/// block.
pub fn check_c89(src: &str) -> Result<(), String> {
    let toks = tokenize_c89(src)?;
    let mut typedefs = vec!["fx_int".to_string()];
    let mut stack: Vec<(String, bool)> = Vec::new();
    let mut at_statement_start = true;
    for (k, t) in toks.iter().enumerate() {
        if let Tok::Ident(w) = t {
            if w == "long" && toks.get(k + 1) == Some(&Tok::Ident("long".into())) {
                return Err("long long".into());
            }
            if !C89_KEYWORDS.contains(&w.as_str()) && k > 0 && toks[k - 1] == Tok::Ident("typedef".into()) {
                typedefs.push(w.clone());
            }
        }
        if let Tok::Punct(p) = t {
            match p.as_str() {
                "(" | "[" | "{" => {
                    stack.push((p.clone(), false));
                    at_statement_start = p == "{";
                    continue;
                }
                ")" | "]" | "}" => {
                    let (open, _) = stack.pop().ok_or("unbalanced close")?;
                    let want = match p.as_str() {
                        ")" => "(",
                        "]" => "[",
                        _ => "{",
                    };
                    if open != want {
                        return Err(format!("mismatched {p}"));
                    }
                    at_statement_start = p == "}";
                    continue;
                }
                ";" => {
                    at_statement_start = true;
                    continue;
                }
                _ => {}
            }
        }
        if at_statement_start {
            if let Some((open, seen_statement)) = stack.last_mut() {
                if open == "{" {
                    let decl = is_type_start(t, &typedefs)
                        && !matches!(toks.get(k + 1), Some(Tok::Punct(p)) if p == "=");
                    if decl && *seen_statement {
                        return Err("declaration after statement".into());
                    }
                    if !decl {
                        *seen_statement = true;
                    }
                }
            }
            at_statement_start = false;
        }
    }
    if !stack.is_empty() {
        return Err("unbalanced open".into());
    }
    Ok(())
}

/// Integer expression evaluator for the subset the emitter produces:
/// literals, variables, `+ - *`, unary minus, parentheses, `FX_SHR` and
/// `FX_SHL`.
struct Expr<'a> {
    toks: &'a [Tok],
    pos: usize,
    env: &'a HashMap<String, i128>,
}

impl Expr<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.peek() == Some(&Tok::Punct(p.into())) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> i128 {
        let mut v = self.product();
        loop {
            if self.eat("+") {
                v += self.product();
            } else if self.eat("-") {
                v -= self.product();
            } else {
                return v;
            }
        }
    }

    fn product(&mut self) -> i128 {
        let mut v = self.unary();
        while self.eat("*") {
            v *= self.unary();
        }
        v
    }

    fn unary(&mut self) -> i128 {
        if self.eat("-") {
            return -self.unary();
        }
        if self.eat("(") {
            let v = self.sum();
            assert!(self.eat(")"));
            return v;
        }
        let t = self.peek().cloned().expect("operand");
        self.pos += 1;
        match t {
            Tok::Int(v) => v,
            Tok::Ident(f) if f == "FX_SHR" || f == "FX_SHL" => {
                assert!(self.eat("("));
                let v = self.sum();
                assert!(self.eat(","));
                let k = self.sum() as u32;
                assert!(self.eat(")"));
                if f == "FX_SHL" {
                    v * (1i128 << k)
                } else if v < 0 {
                    -((-v) >> k)
                } else {
                    v >> k
                }
            }
            Tok::Ident(name) => *self.env.get(&name).unwrap_or_else(|| panic!("unbound {name}")),
            other => panic!("unexpected {other:?}"),
        }
    }
}

/// Runs every integer assignment in the function body of `src`, skipping
/// conversions from the float argument (their targets must be preset in
/// `env`) and state copies.
pub fn interpret_c_assignments(src: &str, env: &mut HashMap<String, i128>) {
    let body = &src[src.find('{').expect("function body")..];
    for line in body.lines() {
        let line = line.trim();
        if line.contains("yin") || line.starts_with("return") || line.starts_with("uout") {
            continue;
        }
        let Some((lhs, rhs)) = line.strip_suffix(';').and_then(|l| l.split_once(" = ")) else {
            continue;
        };
        if lhs.contains(' ') {
            continue;
        }
        let toks = tokenize_c89(rhs).expect("tokenizes");
        if toks.len() == 1 {
            if let Tok::Ident(_) = toks[0] {
                // State copy at the end of the step.
                continue;
            }
        }
        let mut e = Expr {
            toks: &toks,
            pos: 0,
            env,
        };
        let v = e.sum();
        assert_eq!(e.pos, toks.len(), "trailing tokens in `{line}`");
        env.insert(lhs.to_string(), v);
    }
}
