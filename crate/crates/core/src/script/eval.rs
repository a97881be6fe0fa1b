use super::parse::{parse_function_literal, parse_program};
use super::{BinOp, Expr, FuncLit, Num, ScriptError, Stmt};
use crate::store::Store;
use crate::value::Value;
use indexmap::IndexMap;

/// Evaluation step budget: generous for the lab workloads, final for
/// runaway loops.
pub const DEFAULT_STEP_BUDGET: u64 = 100_000;

/// A runtime value: plain data or a function literal in flight between
/// mapReduce arguments.
#[derive(Debug, Clone, PartialEq)]
pub enum ScriptValue {
    Data(Value),
    Func(FuncLit),
}

impl ScriptValue {
    fn type_name(&self) -> &'static str {
        match self {
            ScriptValue::Data(_) => "value",
            ScriptValue::Func(_) => "function",
        }
    }

    fn into_data(self, context: &str) -> Result<Value, ScriptError> {
        match self {
            ScriptValue::Data(v) => Ok(v),
            ScriptValue::Func(_) => Err(ScriptError::Runtime(format!(
                "{context} cannot be a function"
            ))),
        }
    }
}

/// What a top-level execution did to the world.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecOutcome {
    pub completed: bool,
    pub statements_executed: usize,
    /// Store writes performed outside mapReduce out-collections:
    /// `(collection, doc_id)` per insert.
    pub side_effects: Vec<(String, i64)>,
    pub error: Option<ScriptError>,
}

/// Execute concatenated statement text against the live store.
///
/// A parse error means nothing ran. A runtime error leaves every prior
/// statement applied — there is no rollback, exactly like server-side
/// script execution. A top-level `return` stops execution; statements
/// after it are parsed but never run.
pub fn exec_top_level(src: &str, store: &mut Store) -> Result<ExecOutcome, ScriptError> {
    let program = parse_program(src)?;
    let mut interp = Interp::new(store, DEFAULT_STEP_BUDGET);
    let mut frame = Frame::top_level();
    let mut executed = 0;
    for stmt in &program.stmts {
        match interp.exec_stmt(stmt, &mut frame) {
            Ok(Flow::Normal) => executed += 1,
            Ok(Flow::Returned(_)) => {
                executed += 1;
                break;
            }
            Err(e) => {
                return Ok(ExecOutcome {
                    completed: false,
                    statements_executed: executed,
                    side_effects: interp.side_effects,
                    error: Some(e),
                });
            }
        }
    }
    Ok(ExecOutcome {
        completed: true,
        statements_executed: executed,
        side_effects: interp.side_effects,
        error: None,
    })
}

/// Parse map/reduce sources (each a single function literal) and run the
/// full cycle, replacing the `out` collection named in `options`.
pub fn run_map_reduce(
    store: &mut Store,
    collection: &str,
    map_src: &str,
    reduce_src: &str,
    options: &Value,
) -> Result<String, ScriptError> {
    let map_fn = parse_function_literal(map_src)?;
    let reduce_fn = parse_function_literal(reduce_src)?;
    let out = mapreduce_out_name(options)?;
    let mut interp = Interp::new(store, DEFAULT_STEP_BUDGET);
    interp.map_reduce_cycle(collection, &map_fn, &reduce_fn, &out)?;
    Ok(out)
}

/// Run one function with `this` bound and emit available; returns the
/// result and the emissions it produced.
pub fn eval_function(
    store: &mut Store,
    func: &FuncLit,
    this_binding: Value,
    args: Vec<Value>,
) -> Result<(Value, Vec<(Value, Value)>), ScriptError> {
    let mut interp = Interp::new(store, DEFAULT_STEP_BUDGET);
    interp.emit_sink = Some(Vec::new());
    let result = interp.call_function(
        func,
        this_binding,
        args.into_iter().map(ScriptValue::Data).collect(),
    );
    let emits = interp.emit_sink.take().unwrap_or_default();
    Ok((result?.into_data("function result")?, emits))
}

fn mapreduce_out_name(options: &Value) -> Result<String, ScriptError> {
    options
        .get("out")
        .and_then(Value::as_text)
        .map(str::to_string)
        .ok_or_else(|| {
            ScriptError::Runtime("mapReduce options must carry a text 'out' entry".into())
        })
}

enum Flow {
    Normal,
    Returned(ScriptValue),
}

struct Frame {
    this_val: Value,
    vars: IndexMap<String, ScriptValue>,
}

impl Frame {
    fn top_level() -> Frame {
        Frame { this_val: Value::Null, vars: IndexMap::new() }
    }
}

struct Interp<'a> {
    store: &'a mut Store,
    steps: u64,
    budget: u64,
    side_effects: Vec<(String, i64)>,
    /// `Some` while a map function runs; emit appends here.
    emit_sink: Option<Vec<(Value, Value)>>,
}

impl<'a> Interp<'a> {
    fn new(store: &'a mut Store, budget: u64) -> Interp<'a> {
        Interp { store, steps: 0, budget, side_effects: Vec::new(), emit_sink: None }
    }

    fn step(&mut self) -> Result<(), ScriptError> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(ScriptError::BudgetExceeded)
        } else {
            Ok(())
        }
    }

    fn exec_stmt(&mut self, stmt: &Stmt, frame: &mut Frame) -> Result<Flow, ScriptError> {
        self.step()?;
        match stmt {
            Stmt::VarDecl { name, init } => {
                let v = self.eval(init, frame)?;
                frame.vars.insert(name.clone(), v);
                Ok(Flow::Normal)
            }
            Stmt::Expr(e) => {
                self.eval(e, frame)?;
                Ok(Flow::Normal)
            }
            Stmt::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e, frame)?,
                    None => ScriptValue::Data(Value::Null),
                };
                Ok(Flow::Returned(v))
            }
            Stmt::Block(stmts) => self.exec_list(stmts, frame),
            Stmt::For { init, cond, step, body } => {
                self.exec_stmt(init, frame)?;
                loop {
                    self.step()?;
                    match self.eval(cond, frame)? {
                        ScriptValue::Data(Value::Bool(true)) => {}
                        ScriptValue::Data(Value::Bool(false)) => return Ok(Flow::Normal),
                        other => {
                            return Err(ScriptError::Runtime(format!(
                                "for condition must be a boolean, got a {}",
                                other.type_name()
                            )));
                        }
                    }
                    if let Flow::Returned(v) = self.exec_list(body, frame)? {
                        return Ok(Flow::Returned(v));
                    }
                    self.exec_stmt(step, frame)?;
                }
            }
        }
    }

    fn exec_list(&mut self, stmts: &[Stmt], frame: &mut Frame) -> Result<Flow, ScriptError> {
        for stmt in stmts {
            if let Flow::Returned(v) = self.exec_stmt(stmt, frame)? {
                return Ok(Flow::Returned(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn eval(&mut self, expr: &Expr, frame: &mut Frame) -> Result<ScriptValue, ScriptError> {
        self.step()?;
        match expr {
            Expr::Num(Num::Int(i)) => Ok(ScriptValue::Data(Value::Int(*i))),
            Expr::Num(Num::Float(f)) => Ok(ScriptValue::Data(Value::Float(*f))),
            Expr::Str(s) => Ok(ScriptValue::Data(Value::Text(s.clone()))),
            Expr::This => Ok(ScriptValue::Data(frame.this_val.clone())),
            Expr::Ident(name) => frame
                .vars
                .get(name)
                .cloned()
                .ok_or_else(|| ScriptError::Runtime(format!("undefined variable '{name}'"))),
            Expr::Func(f) => Ok(ScriptValue::Func(f.clone())),
            Expr::ObjLit(pairs) => {
                let mut map = IndexMap::new();
                for (k, e) in pairs {
                    let v = self.eval(e, frame)?.into_data("an object literal entry")?;
                    map.insert(k.clone(), v);
                }
                Ok(ScriptValue::Data(Value::Object(map)))
            }
            Expr::Member(target, name) => {
                let target = self.eval(target, frame)?;
                Ok(ScriptValue::Data(member_access(&target, name)))
            }
            Expr::Index(target, index) => {
                let target = self.eval(target, frame)?;
                let index = self.eval(index, frame)?;
                index_access(&target, &index).map(ScriptValue::Data)
            }
            Expr::Binary(op, left, right) => {
                let l = self.eval(left, frame)?.into_data("a comparison operand")?;
                let r = self.eval(right, frame)?.into_data("a comparison operand")?;
                binary_op(*op, &l, &r).map(ScriptValue::Data)
            }
            Expr::PostIncr(name) => {
                let old = match frame.vars.get(name) {
                    Some(ScriptValue::Data(v @ (Value::Int(_) | Value::Float(_)))) => v.clone(),
                    Some(_) => {
                        return Err(ScriptError::Runtime(format!(
                            "'{name}++' requires a numeric variable"
                        )))
                    }
                    None => {
                        return Err(ScriptError::Runtime(format!("undefined variable '{name}'")))
                    }
                };
                let bumped = match &old {
                    Value::Int(i) => i
                        .checked_add(1)
                        .map(Value::Int)
                        .unwrap_or(Value::Float(*i as f64 + 1.0)),
                    Value::Float(f) => Value::Float(f + 1.0),
                    _ => unreachable!(),
                };
                frame.vars.insert(name.clone(), ScriptValue::Data(bumped));
                Ok(ScriptValue::Data(old))
            }
            Expr::Assign(name, value) => {
                let v = self.eval(value, frame)?;
                if !frame.vars.contains_key(name) {
                    return Err(ScriptError::Runtime(format!(
                        "assignment to undeclared variable '{name}'"
                    )));
                }
                frame.vars.insert(name.clone(), v.clone());
                Ok(v)
            }
            Expr::Call(callee, args) => self.eval_call(callee, args, frame),
        }
    }

    fn eval_call(
        &mut self,
        callee: &Expr,
        args: &[Expr],
        frame: &mut Frame,
    ) -> Result<ScriptValue, ScriptError> {
        match callee {
            Expr::Ident(name) if name == "emit" => {
                let mut values = self.eval_args(args, frame)?;
                if self.emit_sink.is_none() {
                    return Err(ScriptError::Runtime(
                        "emit is only available inside a map function".into(),
                    ));
                }
                values.resize(2, ScriptValue::Data(Value::Null));
                let mut it = values.into_iter();
                let key = it.next().unwrap().into_data("an emitted key")?;
                let value = it.next().unwrap().into_data("an emitted value")?;
                self.emit_sink
                    .as_mut()
                    .expect("checked above")
                    .push((key, value));
                Ok(ScriptValue::Data(Value::Null))
            }
            Expr::Member(target, method) => match (target.as_ref(), method.as_str()) {
                (Expr::Ident(ns), "sum") if ns == "Array" => {
                    let values = self.eval_args(args, frame)?;
                    let [arg] = values.as_slice() else {
                        return Err(ScriptError::Runtime(
                            "Array.sum takes exactly one argument".into(),
                        ));
                    };
                    array_sum(arg).map(ScriptValue::Data)
                }
                (Expr::Member(db, collection), "insert") if is_db_ident(db) => {
                    let mut values = self.eval_args(args, frame)?;
                    let [doc] = values.as_mut_slice() else {
                        return Err(ScriptError::Runtime(
                            "insert takes exactly one argument".into(),
                        ));
                    };
                    let doc = std::mem::replace(doc, ScriptValue::Data(Value::Null))
                        .into_data("an inserted document")?;
                    let id = self
                        .store
                        .insert(collection, doc)
                        .map_err(|e| ScriptError::Runtime(e.to_string()))?;
                    self.side_effects.push((collection.clone(), id));
                    Ok(ScriptValue::Data(Value::Int(id)))
                }
                (Expr::Member(db, collection), "mapReduce") if is_db_ident(db) => {
                    let values = self.eval_args(args, frame)?;
                    let [map_fn, reduce_fn, options] = values.as_slice() else {
                        return Err(ScriptError::Runtime(
                            "mapReduce takes map, reduce and options arguments".into(),
                        ));
                    };
                    let (ScriptValue::Func(map_fn), ScriptValue::Func(reduce_fn)) =
                        (map_fn, reduce_fn)
                    else {
                        return Err(ScriptError::Runtime(
                            "mapReduce map and reduce arguments must be functions".into(),
                        ));
                    };
                    let options = options.clone().into_data("mapReduce options")?;
                    let out = mapreduce_out_name(&options)?;
                    let collection = collection.clone();
                    let map_fn = map_fn.clone();
                    let reduce_fn = reduce_fn.clone();
                    self.map_reduce_cycle(&collection, &map_fn, &reduce_fn, &out)?;
                    Ok(ScriptValue::Data(Value::Text(out)))
                }
                _ => Err(ScriptError::Runtime(format!(
                    "'{method}' is not a function"
                ))),
            },
            Expr::Ident(name) => match frame.vars.get(name).cloned() {
                Some(ScriptValue::Func(f)) => {
                    let values = self.eval_args(args, frame)?;
                    self.call_function(&f, Value::Null, values)
                }
                Some(ScriptValue::Data(_)) | None => {
                    Err(ScriptError::Runtime(format!("'{name}' is not a function")))
                }
            },
            _ => Err(ScriptError::Runtime("expression is not callable".into())),
        }
    }

    fn eval_args(
        &mut self,
        args: &[Expr],
        frame: &mut Frame,
    ) -> Result<Vec<ScriptValue>, ScriptError> {
        args.iter().map(|a| self.eval(a, frame)).collect()
    }

    fn call_function(
        &mut self,
        func: &FuncLit,
        this_val: Value,
        args: Vec<ScriptValue>,
    ) -> Result<ScriptValue, ScriptError> {
        let mut vars = IndexMap::new();
        let mut args = args.into_iter();
        for param in &func.params {
            let v = args.next().unwrap_or(ScriptValue::Data(Value::Null));
            vars.insert(param.clone(), v);
        }
        let mut frame = Frame { this_val, vars };
        match self.exec_list(&func.body, &mut frame)? {
            Flow::Returned(v) => Ok(v),
            Flow::Normal => Ok(ScriptValue::Data(Value::Null)),
        }
    }

    /// Map over every document, group emissions by key, reduce per key
    /// and replace the out collection. Out-collection writes are not
    /// side effects; they are the product.
    fn map_reduce_cycle(
        &mut self,
        collection: &str,
        map_fn: &FuncLit,
        reduce_fn: &FuncLit,
        out: &str,
    ) -> Result<(), ScriptError> {
        let docs: Vec<Value> = self.store.docs(collection).to_vec();
        let mut groups: IndexMap<String, (Value, Vec<Value>)> = IndexMap::new();
        for doc in docs {
            let outer_sink = self.emit_sink.replace(Vec::new());
            let result = self.call_function(map_fn, doc, Vec::new());
            let emits = std::mem::replace(&mut self.emit_sink, outer_sink)
                .expect("sink installed above");
            result?;
            for (key, value) in emits {
                groups
                    .entry(key.to_canonical_json())
                    .or_insert_with(|| (key, Vec::new()))
                    .1
                    .push(value);
            }
        }
        let mut out_docs = Vec::with_capacity(groups.len());
        for (_, (key, values)) in groups {
            let outer_sink = self.emit_sink.take();
            let reduced = self.call_function(
                reduce_fn,
                Value::Null,
                vec![
                    ScriptValue::Data(key.clone()),
                    ScriptValue::Data(Value::Array(values)),
                ],
            );
            self.emit_sink = outer_sink;
            let value = reduced?.into_data("a reduce result")?;
            out_docs.push(Value::object([("key", key), ("value", value)]));
        }
        self.store
            .replace_collection(out, out_docs)
            .map_err(|e| ScriptError::Runtime(e.to_string()))?;
        Ok(())
    }
}

fn is_db_ident(e: &Expr) -> bool {
    matches!(e, Expr::Ident(name) if name == "db")
}

/// Forgiving member access: a missing field, or a member on anything
/// that has no members, yields null. The array injection relies on this
/// when the attacker names a field that does not exist.
fn member_access(target: &ScriptValue, name: &str) -> Value {
    match target {
        ScriptValue::Data(Value::Object(map)) => map.get(name).cloned().unwrap_or(Value::Null),
        ScriptValue::Data(Value::Array(items)) if name == "length" => {
            Value::Int(items.len() as i64)
        }
        _ => Value::Null,
    }
}

fn index_access(target: &ScriptValue, index: &ScriptValue) -> Result<Value, ScriptError> {
    match (target, index) {
        (ScriptValue::Data(Value::Array(items)), ScriptValue::Data(idx)) => {
            let i = match idx {
                Value::Int(i) => *i,
                Value::Float(f) if f.fract() == 0.0 => *f as i64,
                _ => {
                    return Err(ScriptError::Runtime(
                        "array index must be an integer".into(),
                    ))
                }
            };
            if i >= 0 && (i as usize) < items.len() {
                Ok(items[i as usize].clone())
            } else {
                Ok(Value::Null)
            }
        }
        (ScriptValue::Data(Value::Object(map)), ScriptValue::Data(Value::Text(key))) => {
            Ok(map.get(key).cloned().unwrap_or(Value::Null))
        }
        (ScriptValue::Data(Value::Object(_)), _) => Err(ScriptError::Runtime(
            "object index must be text".into(),
        )),
        _ => Err(ScriptError::Runtime("cannot index into a scalar".into())),
    }
}

fn binary_op(op: BinOp, l: &Value, r: &Value) -> Result<Value, ScriptError> {
    match op {
        BinOp::Lt => match (l, r) {
            (Value::Int(a), Value::Int(b)) => Ok(Value::Bool(a < b)),
            (a, b) if both_numeric(a, b) => Ok(Value::Bool(as_f64(a) < as_f64(b))),
            (Value::Text(a), Value::Text(b)) => Ok(Value::Bool(a < b)),
            _ => Err(ScriptError::Runtime("'<' requires two numbers or two texts".into())),
        },
        BinOp::Add => match (l, r) {
            (Value::Int(a), Value::Int(b)) => Ok(a
                .checked_add(*b)
                .map(Value::Int)
                .unwrap_or(Value::Float(*a as f64 + *b as f64))),
            (a, b) if both_numeric(a, b) => Ok(Value::Float(as_f64(a) + as_f64(b))),
            (Value::Text(a), Value::Text(b)) => Ok(Value::Text(format!("{a}{b}"))),
            _ => Err(ScriptError::Runtime("'+' requires two numbers or two texts".into())),
        },
        BinOp::Sub => match (l, r) {
            (Value::Int(a), Value::Int(b)) => Ok(a
                .checked_sub(*b)
                .map(Value::Int)
                .unwrap_or(Value::Float(*a as f64 - *b as f64))),
            (a, b) if both_numeric(a, b) => Ok(Value::Float(as_f64(a) - as_f64(b))),
            _ => Err(ScriptError::Runtime("'-' requires two numbers".into())),
        },
    }
}

fn both_numeric(a: &Value, b: &Value) -> bool {
    matches!(a, Value::Int(_) | Value::Float(_)) && matches!(b, Value::Int(_) | Value::Float(_))
}

fn as_f64(v: &Value) -> f64 {
    match v {
        Value::Int(i) => *i as f64,
        Value::Float(f) => *f,
        _ => f64::NAN,
    }
}

/// Integer-preserving sum; mixed Int/Float promotes to Float, anything
/// non-numeric is a runtime error.
fn array_sum(arg: &ScriptValue) -> Result<Value, ScriptError> {
    let ScriptValue::Data(Value::Array(items)) = arg else {
        return Err(ScriptError::Runtime("Array.sum expects an array".into()));
    };
    let mut acc = Value::Int(0);
    for item in items {
        if !matches!(item, Value::Int(_) | Value::Float(_)) {
            return Err(ScriptError::Runtime(
                "Array.sum expects an array of numbers".into(),
            ));
        }
        acc = binary_op(BinOp::Add, &acc, item)?;
    }
    Ok(acc)
}
