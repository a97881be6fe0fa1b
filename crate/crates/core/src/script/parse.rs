use super::lex::{tokenize, Tok, Token};
use super::{BinOp, Expr, FuncLit, Num, Program, ScriptError, Stmt};

/// Parse a whole program. A lone function literal parses as a single
/// expression statement, which is how map/reduce sources arrive.
pub fn parse_program(src: &str) -> Result<Program, ScriptError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0, src_len: src.len() };
    let mut stmts = Vec::new();
    p.skip_semis();
    while !p.at_end() {
        stmts.push(p.stmt()?);
        p.skip_semis();
    }
    Ok(Program { stmts })
}

/// Parse a source that must consist of exactly one function literal.
pub fn parse_function_literal(src: &str) -> Result<FuncLit, ScriptError> {
    let program = parse_program(src)?;
    match program.stmts.as_slice() {
        [Stmt::Expr(Expr::Func(f))] => Ok(f.clone()),
        _ => Err(ScriptError::Parse {
            offset: 0,
            message: "expected a single function literal".into(),
        }),
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    src_len: usize,
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.offset).unwrap_or(self.src_len)
    }

    fn err(&self, message: impl Into<String>) -> ScriptError {
        ScriptError::Parse { offset: self.offset(), message: message.into() }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ScriptError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, ScriptError> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn skip_semis(&mut self) {
        while self.eat(&Tok::Semi) {}
    }

    fn stmt(&mut self) -> Result<Stmt, ScriptError> {
        match self.peek() {
            Some(Tok::Var) => {
                let stmt = self.var_decl()?;
                self.skip_semis();
                Ok(stmt)
            }
            Some(Tok::For) => self.for_stmt(),
            Some(Tok::Return) => {
                self.pos += 1;
                let value = match self.peek() {
                    None | Some(Tok::Semi | Tok::RBrace) => None,
                    _ => Some(self.expr()?),
                };
                self.skip_semis();
                Ok(Stmt::Return(value))
            }
            // A `{` in statement position is a block, not an object
            // literal — the injected balancing payload depends on this.
            Some(Tok::LBrace) => {
                self.pos += 1;
                let body = self.stmt_list_until_rbrace()?;
                Ok(Stmt::Block(body))
            }
            Some(_) => {
                let e = self.expr()?;
                self.skip_semis();
                Ok(Stmt::Expr(e))
            }
            None => Err(self.err("expected a statement")),
        }
    }

    fn var_decl(&mut self) -> Result<Stmt, ScriptError> {
        self.expect(Tok::Var, "'var'")?;
        let name = self.expect_ident("a variable name")?;
        self.expect(Tok::Eq, "'=' after variable name")?;
        let init = self.expr()?;
        Ok(Stmt::VarDecl { name, init })
    }

    fn for_stmt(&mut self) -> Result<Stmt, ScriptError> {
        self.expect(Tok::For, "'for'")?;
        self.expect(Tok::LParen, "'(' after for")?;
        let init = if self.peek() == Some(&Tok::Var) {
            self.var_decl()?
        } else {
            Stmt::Expr(self.expr()?)
        };
        self.expect(Tok::Semi, "';' after for initializer")?;
        let cond = self.expr()?;
        self.expect(Tok::Semi, "';' after for condition")?;
        let step = Stmt::Expr(self.expr()?);
        self.expect(Tok::RParen, "')' after for step")?;
        self.expect(Tok::LBrace, "'{' before for body")?;
        let body = self.stmt_list_until_rbrace()?;
        Ok(Stmt::For { init: Box::new(init), cond, step: Box::new(step), body })
    }

    fn stmt_list_until_rbrace(&mut self) -> Result<Vec<Stmt>, ScriptError> {
        let mut stmts = Vec::new();
        self.skip_semis();
        while self.peek() != Some(&Tok::RBrace) {
            if self.at_end() {
                return Err(self.err("expected '}'"));
            }
            stmts.push(self.stmt()?);
            self.skip_semis();
        }
        self.pos += 1; // consume '}'
        Ok(stmts)
    }

    fn expr(&mut self) -> Result<Expr, ScriptError> {
        // Assignment only targets plain identifiers.
        if let (Some(Tok::Ident(name)), Some(Tok::Eq)) =
            (self.peek(), self.toks.get(self.pos + 1).map(|t| &t.tok))
        {
            let name = name.clone();
            self.pos += 2;
            let value = self.expr()?;
            return Ok(Expr::Assign(name, Box::new(value)));
        }
        self.relational()
    }

    fn relational(&mut self) -> Result<Expr, ScriptError> {
        let mut left = self.additive()?;
        while self.eat(&Tok::Lt) {
            let right = self.additive()?;
            left = Expr::Binary(BinOp::Lt, Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn additive(&mut self) -> Result<Expr, ScriptError> {
        let mut left = self.postfix()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let right = self.postfix()?;
            left = Expr::Binary(op, Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn postfix(&mut self) -> Result<Expr, ScriptError> {
        let mut e = self.primary()?;
        loop {
            match self.peek() {
                Some(Tok::Dot) => {
                    self.pos += 1;
                    let name = self.expect_ident("a member name after '.'")?;
                    e = Expr::Member(Box::new(e), name);
                }
                Some(Tok::LBracket) => {
                    self.pos += 1;
                    let idx = self.expr()?;
                    self.expect(Tok::RBracket, "']' after index")?;
                    e = Expr::Index(Box::new(e), Box::new(idx));
                }
                Some(Tok::LParen) => {
                    if !matches!(e, Expr::Ident(_) | Expr::Member(..)) {
                        return Err(self.err("expression is not callable"));
                    }
                    self.pos += 1;
                    let args = self.call_args()?;
                    e = Expr::Call(Box::new(e), args);
                }
                Some(Tok::PlusPlus) => {
                    let Expr::Ident(name) = e else {
                        return Err(self.err("'++' target must be a variable"));
                    };
                    self.pos += 1;
                    e = Expr::PostIncr(name);
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, ScriptError> {
        let mut args = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            match self.bump() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => return Ok(args),
                _ => {
                    self.pos = self.pos.saturating_sub(1);
                    return Err(self.err("expected ',' or ')' in argument list"));
                }
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ScriptError> {
        match self.peek().cloned() {
            Some(Tok::Num(raw)) => {
                self.pos += 1;
                Ok(Expr::Num(parse_num(&raw)))
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Expr::Str(s))
            }
            Some(Tok::This) => {
                self.pos += 1;
                Ok(Expr::This)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(Expr::Ident(name))
            }
            Some(Tok::Function) => self.func_lit(),
            Some(Tok::LBrace) => self.obj_lit(),
            Some(tok) => Err(self.err(format!("unexpected token {tok:?}"))),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn func_lit(&mut self) -> Result<Expr, ScriptError> {
        self.expect(Tok::Function, "'function'")?;
        self.expect(Tok::LParen, "'(' after function")?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                params.push(self.expect_ident("a parameter name")?);
                match self.bump() {
                    Some(Tok::Comma) => continue,
                    Some(Tok::RParen) => break,
                    _ => {
                        self.pos = self.pos.saturating_sub(1);
                        return Err(self.err("expected ',' or ')' in parameter list"));
                    }
                }
            }
        }
        self.expect(Tok::LBrace, "'{' before function body")?;
        let body = self.stmt_list_until_rbrace()?;
        Ok(Expr::Func(FuncLit { params, body }))
    }

    fn obj_lit(&mut self) -> Result<Expr, ScriptError> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut pairs = Vec::new();
        if self.eat(&Tok::RBrace) {
            return Ok(Expr::ObjLit(pairs));
        }
        loop {
            let key = match self.bump() {
                Some(Tok::Ident(name)) => name,
                Some(Tok::Str(s)) => s,
                _ => {
                    self.pos = self.pos.saturating_sub(1);
                    return Err(self.err("expected an object key"));
                }
            };
            self.expect(Tok::Colon, "':' after object key")?;
            pairs.push((key, self.expr()?));
            match self.bump() {
                Some(Tok::Comma) => continue,
                Some(Tok::RBrace) => return Ok(Expr::ObjLit(pairs)),
                _ => {
                    self.pos = self.pos.saturating_sub(1);
                    return Err(self.err("expected ',' or '}' in object literal"));
                }
            }
        }
    }
}

fn parse_num(raw: &str) -> Num {
    if raw.contains('.') {
        Num::Float(raw.parse().unwrap_or(f64::NAN))
    } else {
        match raw.parse::<i64>() {
            Ok(i) => Num::Int(i),
            Err(_) => Num::Float(raw.parse().unwrap_or(f64::NAN)),
        }
    }
}
