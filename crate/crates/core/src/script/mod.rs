//! Tokenizer, parser and evaluator for the restricted script subset that
//! mapReduce runs: `function`/`var`/`for`/`return`, member and index
//! access, calls, object literals, `<`, `+`, `-`, postfix `++` and simple
//! assignment. Anything outside the subset is a parse error, which the
//! hardened endpoints surface as a rejection.
//!
//! Evaluation is budgeted: every statement and expression costs one step
//! and exceeding the budget raises an error instead of hanging.

mod eval;
mod lex;
mod parse;

pub use eval::{
    eval_function, exec_top_level, run_map_reduce, ExecOutcome, ScriptValue,
    DEFAULT_STEP_BUDGET,
};
pub use lex::{tokenize, Tok, Token};
pub use parse::{parse_function_literal, parse_program};

/// A parsed program: top-level statements in source order.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    VarDecl { name: String, init: Expr },
    For { init: Box<Stmt>, cond: Expr, step: Box<Stmt>, body: Vec<Stmt> },
    Return(Option<Expr>),
    Expr(Expr),
    Block(Vec<Stmt>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Num {
    Int(i64),
    Float(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuncLit {
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Lt,
    Add,
    Sub,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Num),
    Str(String),
    ObjLit(Vec<(String, Expr)>),
    Ident(String),
    This,
    Member(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>),
    Call(Box<Expr>, Vec<Expr>),
    Func(FuncLit),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    PostIncr(String),
    Assign(String, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScriptError {
    #[error("lex error at byte {offset}: {message}")]
    Lex { offset: usize, message: String },
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("step budget exceeded")]
    BudgetExceeded,
}

impl ScriptError {
    pub fn is_parse(&self) -> bool {
        matches!(self, ScriptError::Lex { .. } | ScriptError::Parse { .. })
    }
}
