//! Normal-order evaluation.
//!
//! The evaluator is a strong Krivine machine over an index arena: weak
//! head reduction with delayed substitution (closures), then read-back
//! under binders, arguments left to right. Without sharing this performs
//! exactly the leftmost-outermost β-steps of textbook normal order.
//!
//! Program data is modelled by an `Input(k)` node standing for the data
//! stream from position `k`. Forcing it (bringing it to head position, or
//! reading it back) demands bit `k` from a [`BitSource`] and rewrites the
//! node in place to the list cell `λf. f b_k Input(k+1)`. A demand costs
//! one step, like a β-step.

use thiserror::Error;

use super::bits::BitString;
use super::term::Term;

/// Step budget for a single evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Gas {
    pub max_steps: u64,
}

impl Gas {
    pub const DEFAULT_STEPS: u64 = 100_000;

    pub fn new(max_steps: u64) -> Gas {
        assert!(max_steps > 0, "gas must be positive");
        Gas { max_steps }
    }
}

impl Default for Gas {
    fn default() -> Self {
        Gas {
            max_steps: Self::DEFAULT_STEPS,
        }
    }
}

/// Ceiling on read-back size; larger normal forms count as running out of gas.
pub const MAX_NF_NODES: usize = 1 << 20;
const MAX_ARENA: usize = 1 << 24;

/// Supplies data bits on demand. `None` means the data is exhausted.
pub trait BitSource {
    fn bit(&mut self, pos: usize) -> Option<bool>;
}

impl BitSource for &[bool] {
    fn bit(&mut self, pos: usize) -> Option<bool> {
        self.get(pos).copied()
    }
}

/// A source with no bits at all.
pub struct NoInput;

impl BitSource for NoInput {
    fn bit(&mut self, _pos: usize) -> Option<bool> {
        None
    }
}

/// Adapts a closure `FnMut(pos) -> Option<bool>` into a [`BitSource`].
pub struct FnSource<F>(pub F);

impl<F: FnMut(usize) -> Option<bool>> BitSource for FnSource<F> {
    fn bit(&mut self, pos: usize) -> Option<bool> {
        (self.0)(pos)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReduceError {
    #[error("out of gas after {steps} steps")]
    OutOfGas { steps: u64 },
}

/// Reduces `t` to β-normal form, leftmost-outermost.
pub fn reduce(t: &Term, gas: Gas) -> Result<(Term, u64), ReduceError> {
    let mut m = Machine::new();
    m.load_term(t);
    let exec = m.execute(&mut NoInput, gas);
    match exec.result {
        Ok(nf) => Ok((m.nf_to_term(nf), exec.steps)),
        Err(Stop::OutOfGas) | Err(Stop::TooBig) => Err(ReduceError::OutOfGas { steps: exec.steps }),
        Err(Stop::NeedsInput) => unreachable!("plain terms contain no input node"),
    }
}

const NIL: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
enum Node {
    Var(u32),
    Lam(u32),
    App(u32, u32),
    Input(u32),
}

#[derive(Clone, Copy, Debug)]
enum Value {
    Closure(u32, u32),
    Level(u32),
}

#[derive(Clone, Copy, Debug)]
struct EnvCell {
    value: Value,
    next: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Nf {
    Var(u32),
    Lam(u32),
    App(u32, u32),
}

enum Lookup {
    Found(Value),
    Free(u32),
}

enum Head {
    Lam(u32, u32),
    Neutral(NeutralVar),
}

enum NeutralVar {
    Level(u32),
    Free(u32),
}

enum Task {
    Eval { node: u32, env: u32, depth: u32 },
    BuildLam,
    BuildApp { head: u32, nargs: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Stop {
    OutOfGas,
    TooBig,
    NeedsInput,
}

pub(crate) struct Exec {
    pub result: Result<u32, Stop>,
    pub steps: u64,
}

/// Reusable evaluation state. Load a term or program once, then call
/// [`Machine::execute`] any number of times with different bit sources.
pub(crate) struct Machine {
    nodes: Vec<Node>,
    base_len: usize,
    input0: Option<u32>,
    root: u32,
    var1: u32,
    bit_nodes: [u32; 2],
    envs: Vec<EnvCell>,
    stack: Vec<(u32, u32)>,
    out: Vec<Nf>,
    tasks: Vec<Task>,
    values: Vec<u32>,
    steps: u64,
    max_steps: u64,
    demanded: Vec<bool>,
}

impl Machine {
    pub fn new() -> Machine {
        Machine {
            nodes: Vec::new(),
            base_len: 0,
            input0: None,
            root: 0,
            var1: 0,
            bit_nodes: [0, 0],
            envs: Vec::new(),
            stack: Vec::new(),
            out: Vec::new(),
            tasks: Vec::new(),
            values: Vec::new(),
            steps: 0,
            max_steps: 0,
            demanded: Vec::new(),
        }
    }

    fn reset_arena(&mut self) {
        self.nodes.clear();
        self.var1 = self.push(Node::Var(1));
        let v1 = self.var1;
        // false = λλ1, true = λλ2
        let l = self.push(Node::Lam(v1));
        let f = self.push(Node::Lam(l));
        let v2 = self.push(Node::Var(2));
        let l = self.push(Node::Lam(v2));
        let t = self.push(Node::Lam(l));
        self.bit_nodes = [f, t];
        self.input0 = None;
    }

    fn push(&mut self, n: Node) -> u32 {
        self.nodes.push(n);
        (self.nodes.len() - 1) as u32
    }

    fn push_term(&mut self, t: &Term) -> u32 {
        // Post-order over an explicit stack.
        enum Visit<'a> {
            Enter(&'a Term),
            Exit(&'a Term),
        }
        let mut stack = vec![Visit::Enter(t)];
        let mut ids: Vec<u32> = Vec::new();
        while let Some(v) = stack.pop() {
            match v {
                Visit::Enter(t) => {
                    stack.push(Visit::Exit(t));
                    match t {
                        Term::Var(_) => {}
                        Term::Lam(b) => stack.push(Visit::Enter(b)),
                        Term::App(f, a) => {
                            stack.push(Visit::Enter(a));
                            stack.push(Visit::Enter(f));
                        }
                    }
                }
                Visit::Exit(t) => {
                    let id = match t {
                        Term::Var(i) => self.push(Node::Var(*i)),
                        Term::Lam(_) => {
                            let b = ids.pop().unwrap();
                            self.push(Node::Lam(b))
                        }
                        Term::App(_, _) => {
                            let a = ids.pop().unwrap();
                            let f = ids.pop().unwrap();
                            self.push(Node::App(f, a))
                        }
                    };
                    ids.push(id);
                }
            }
        }
        ids.pop().unwrap()
    }

    pub fn load_term(&mut self, t: &Term) {
        self.reset_arena();
        self.root = self.push_term(t);
        self.base_len = self.nodes.len();
    }

    /// Loads `code z D` where `D` is the demand-driven data stream.
    pub fn load_program(&mut self, code: &Term, z_list: &Term) {
        self.reset_arena();
        let c = self.push_term(code);
        let z = self.push_term(z_list);
        let input = self.push(Node::Input(0));
        let cz = self.push(Node::App(c, z));
        self.root = self.push(Node::App(cz, input));
        self.input0 = Some(input);
        self.base_len = self.nodes.len();
    }

    fn reset_run(&mut self, gas: u64) {
        self.nodes.truncate(self.base_len);
        if let Some(i) = self.input0 {
            self.nodes[i as usize] = Node::Input(0);
        }
        self.envs.clear();
        self.stack.clear();
        self.out.clear();
        self.tasks.clear();
        self.values.clear();
        self.steps = 0;
        self.max_steps = gas;
        self.demanded.clear();
    }

    /// Data bits demanded by the last execution, in order.
    pub fn demanded(&self) -> &[bool] {
        &self.demanded
    }

    #[inline]
    fn tick(&mut self) -> Result<(), Stop> {
        if self.steps >= self.max_steps {
            return Err(Stop::OutOfGas);
        }
        self.steps += 1;
        Ok(())
    }

    #[inline]
    fn lookup(&self, mut env: u32, i: u32) -> Lookup {
        let mut walked = 0;
        loop {
            if env == NIL {
                return Lookup::Free(i - walked);
            }
            let cell = self.envs[env as usize];
            if walked + 1 == i {
                return Lookup::Found(cell.value);
            }
            env = cell.next;
            walked += 1;
        }
    }

    fn push_env(&mut self, value: Value, next: u32) -> Result<u32, Stop> {
        if self.envs.len() >= MAX_ARENA {
            return Err(Stop::TooBig);
        }
        self.envs.push(EnvCell { value, next });
        Ok((self.envs.len() - 1) as u32)
    }

    fn expand<S: BitSource>(&mut self, id: u32, k: u32, src: &mut S) -> Result<(), Stop> {
        debug_assert_eq!(k as usize, self.demanded.len());
        let b = src.bit(k as usize).ok_or(Stop::NeedsInput)?;
        self.tick()?;
        self.demanded.push(b);
        if self.nodes.len() >= MAX_ARENA {
            return Err(Stop::TooBig);
        }
        let next = self.push(Node::Input(k + 1));
        let bit = self.bit_nodes[b as usize];
        let var1 = self.var1;
        let fb = self.push(Node::App(var1, bit));
        let cell = self.push(Node::App(fb, next));
        self.nodes[id as usize] = Node::Lam(cell);
        Ok(())
    }

    fn whnf<S: BitSource>(
        &mut self,
        mut node: u32,
        mut env: u32,
        base: usize,
        src: &mut S,
    ) -> Result<Head, Stop> {
        loop {
            match self.nodes[node as usize] {
                Node::App(f, a) => {
                    if self.stack.len() >= MAX_ARENA {
                        return Err(Stop::TooBig);
                    }
                    self.stack.push((a, env));
                    node = f;
                }
                Node::Lam(b) => {
                    if self.stack.len() > base {
                        let (an, ae) = self.stack.pop().unwrap();
                        self.tick()?;
                        env = self.push_env(Value::Closure(an, ae), env)?;
                        node = b;
                    } else {
                        return Ok(Head::Lam(b, env));
                    }
                }
                Node::Var(i) => match self.lookup(env, i) {
                    Lookup::Found(Value::Closure(n, e)) => {
                        node = n;
                        env = e;
                    }
                    Lookup::Found(Value::Level(l)) => return Ok(Head::Neutral(NeutralVar::Level(l))),
                    Lookup::Free(f) => return Ok(Head::Neutral(NeutralVar::Free(f))),
                },
                Node::Input(k) => {
                    self.expand(node, k, src)?;
                    env = NIL;
                }
            }
        }
    }

    fn emit(&mut self, n: Nf) -> Result<u32, Stop> {
        if self.out.len() >= MAX_NF_NODES {
            return Err(Stop::TooBig);
        }
        self.out.push(n);
        Ok((self.out.len() - 1) as u32)
    }

    fn normalize<S: BitSource>(&mut self, src: &mut S) -> Result<u32, Stop> {
        self.tasks.push(Task::Eval {
            node: self.root,
            env: NIL,
            depth: 0,
        });
        while let Some(task) = self.tasks.pop() {
            match task {
                Task::Eval { node, env, depth } => {
                    let base = self.stack.len();
                    match self.whnf(node, env, base, src)? {
                        Head::Lam(body, env) => {
                            let env = self.push_env(Value::Level(depth), env)?;
                            self.tasks.push(Task::BuildLam);
                            self.tasks.push(Task::Eval {
                                node: body,
                                env,
                                depth: depth + 1,
                            });
                        }
                        Head::Neutral(v) => {
                            let head = match v {
                                NeutralVar::Level(l) => depth - l,
                                NeutralVar::Free(f) => depth + f,
                            };
                            let nargs = (self.stack.len() - base) as u32;
                            self.tasks.push(Task::BuildApp { head, nargs });
                            // The stack top is the first argument, so pushing
                            // bottom-up leaves the first argument on top.
                            for (an, ae) in self.stack.drain(base..) {
                                self.tasks.push(Task::Eval {
                                    node: an,
                                    env: ae,
                                    depth,
                                });
                            }
                        }
                    }
                }
                Task::BuildLam => {
                    let b = self.values.pop().unwrap();
                    let id = self.emit(Nf::Lam(b))?;
                    self.values.push(id);
                }
                Task::BuildApp { head, nargs } => {
                    let start = self.values.len() - nargs as usize;
                    let mut h = self.emit(Nf::Var(head))?;
                    for i in start..self.values.len() {
                        let a = self.values[i];
                        h = self.emit(Nf::App(h, a))?;
                    }
                    self.values.truncate(start);
                    self.values.push(h);
                }
            }
        }
        Ok(self.values.pop().unwrap())
    }

    pub fn execute<S: BitSource>(&mut self, src: &mut S, gas: Gas) -> Exec {
        self.reset_run(gas.max_steps);
        let result = self.normalize(src);
        Exec {
            result,
            steps: self.steps,
        }
    }

    pub fn nf(&self, id: u32) -> Nf {
        self.out[id as usize]
    }

    pub fn nf_to_term(&self, root: u32) -> Term {
        // Children always precede parents in the output arena.
        let mut built: Vec<Option<Term>> = Vec::with_capacity(root as usize + 1);
        for id in 0..=root as usize {
            let t = match self.out[id] {
                Nf::Var(i) => Term::Var(i),
                Nf::Lam(b) => Term::lam(built[b as usize].take().unwrap()),
                Nf::App(f, a) => {
                    let f = built[f as usize].take().unwrap();
                    let a = built[a as usize].take().unwrap();
                    Term::app(f, a)
                }
            };
            built.push(Some(t));
        }
        built[root as usize].take().unwrap()
    }

    /// Structural decode of a normal form as a list of Church booleans.
    pub fn nf_to_bits(&self, mut id: u32) -> Option<BitString> {
        let mut out = BitString::new();
        loop {
            let Nf::Lam(inner) = self.nf(id) else {
                return None;
            };
            match self.nf(inner) {
                // nil = λλ1
                Nf::Lam(v) if self.nf(v) == Nf::Var(1) => return Some(out),
                // cons h t = λf. f h t
                Nf::App(fh, tail) => {
                    let Nf::App(f, h) = self.nf(fh) else {
                        return None;
                    };
                    if self.nf(f) != Nf::Var(1) {
                        return None;
                    }
                    out.push(self.nf_bool(h)?);
                    id = tail;
                }
                _ => return None,
            }
        }
    }

    fn nf_bool(&self, id: u32) -> Option<bool> {
        let Nf::Lam(a) = self.nf(id) else {
            return None;
        };
        let Nf::Lam(b) = self.nf(a) else {
            return None;
        };
        match self.nf(b) {
            Nf::Var(1) => Some(false),
            Nf::Var(2) => Some(true),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::syntax::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn identity_application_takes_one_step() {
        let (nf, steps) = reduce(&t("(\\x. x) (\\x. x)"), Gas::default()).unwrap();
        assert_eq!((nf, steps), (t("\\x. x"), 1));
    }

    #[test]
    fn normal_form_takes_no_steps() {
        assert_eq!(reduce(&t("\\ 1"), Gas::default()).unwrap(), (t("\\ 1"), 0));
    }

    #[test]
    fn omega_runs_out_of_gas() {
        let omega = t("(\\x. x x) (\\x. x x)");
        assert_eq!(
            reduce(&omega, Gas::new(100)),
            Err(ReduceError::OutOfGas { steps: 100 })
        );
    }

    #[test]
    fn normal_order_discards_divergent_argument() {
        let k_omega = t("(\\a b. a) (\\x. x) ((\\x. x x) (\\x. x x))");
        assert_eq!(reduce(&k_omega, Gas::new(100)).unwrap(), (t("\\x. x"), 2));
    }

    #[test]
    fn reduces_under_binders_and_in_arguments() {
        // λy. (λx.x) y  →  λy. y
        assert_eq!(
            reduce(&t("\\y. (\\x. x) y"), Gas::default()).unwrap(),
            (t("\\y. y"), 1)
        );
        // λy. y ((λx.x) y)  →  λy. y y
        assert_eq!(
            reduce(&t("\\y. y ((\\x. x) y)"), Gas::default()).unwrap(),
            (t("\\y. y y"), 1)
        );
    }

    #[test]
    fn capture_avoidance() {
        // (λx. λy. x) y_free, with the free variable under one binder:
        // λz. (λx. λy. x) z  →  λz. λy. z  = \ \ 2
        assert_eq!(
            reduce(&t("\\z. (\\x y. x) z"), Gas::default()).unwrap().0,
            t("\\ \\ 2")
        );
        // Free variables of open terms keep their identity.
        assert_eq!(
            reduce(&t("(\\x y. x) 1"), Gas::default()).unwrap().0,
            t("\\ 2")
        );
    }

    #[test]
    fn church_arithmetic() {
        let two = "(\\f x. f (f x))";
        let mul = "(\\m n f. m (n f))";
        let (nf, _) = reduce(&t(&format!("{mul} {two} {two}")), Gas::default()).unwrap();
        assert_eq!(nf, t("\\f x. f (f (f (f x)))"));
    }

    #[test]
    fn size_blowup_is_reported_as_out_of_gas() {
        // 2^(2^(2^2)) Church numeral's normal form has 65536 applications;
        // four more exponentiations exceed the read-back ceiling.
        let two = "(\\f x. f (f x))";
        let src = format!("{two} {two} {two} {two} {two} {two}");
        assert!(reduce(&t(&src), Gas::new(u64::MAX / 2)).is_err());
    }
}
