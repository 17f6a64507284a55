//! Reachability by activation patterns: exhaustive enumeration, or a
//! depth-first search that prunes partial patterns whose relaxation is
//! infeasible.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::eval::{activation_pattern_of, check_witness};
use crate::lp::{feasible, AffineExpr, Contradiction, Eliminator, FeasibilityResult, LinearProgram};
use crate::model::{Activation, Instance, Specification, VarRef};
use crate::rational::Rational;
use crate::relu_lp::{build_program, fix_pattern, project_to_inputs, ActivationPattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Enumerate,
    Branch,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Enumerate => "enumerate",
            Mode::Branch => "branch",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Reachable {
        input: Vec<Rational>,
        pattern: ActivationPattern,
    },
    Unreachable,
}

impl Verdict {
    pub fn is_reachable(&self) -> bool {
        matches!(self, Verdict::Reachable { .. })
    }

    fn from_witness(inst: &Instance, input: Vec<Rational>) -> Self {
        debug_assert_eq!(check_witness(inst, &input), Ok(true));
        let pattern = activation_pattern_of(&inst.network, &input).expect("witness has input dimension");
        Verdict::Reachable { input, pattern }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveStats {
    pub lp_calls: u64,
    /// Enumerate: complete patterns tried. Branch: search nodes, complete
    /// or partial, whose relaxation was solved.
    pub patterns_explored: u64,
    pub mode: Mode,
}

impl SolveStats {
    fn new(mode: Mode) -> Self {
        SolveStats {
            lp_calls: 0,
            patterns_explored: 0,
            mode,
        }
    }

    /// `stat <name> <value>` lines.
    pub fn lines(&self) -> String {
        format!(
            "stat mode {}\nstat lp_calls {}\nstat patterns_explored {}\n",
            self.mode, self.lp_calls, self.patterns_explored
        )
    }
}

pub fn solve(inst: &Instance, mode: Mode, threads: usize, deterministic: bool) -> (Verdict, SolveStats) {
    let threads = threads.max(1);
    match (mode, threads) {
        (Mode::Enumerate, 1) => solve_enumerate(inst),
        (Mode::Enumerate, t) => enumerate_parallel(inst, t, deterministic),
        (Mode::Branch, 1) => solve_branch(inst),
        (Mode::Branch, t) => branch_parallel(inst, t, deterministic),
    }
}

fn pattern_count(l: usize) -> u64 {
    assert!(l < 64, "{l} ReLU nodes are too many to enumerate");
    1u64 << l
}

/// Tries every pattern in lexicographic order, 1 before 0.
pub fn solve_enumerate(inst: &Instance) -> (Verdict, SolveStats) {
    let program = build_program(inst);
    let l = program.relu_count();
    let mut stats = SolveStats::new(Mode::Enumerate);
    for index in 0..pattern_count(l) {
        let a = ActivationPattern::nth_in_order(l, index);
        let lp = fix_pattern(&program, &a).expect("pattern length matches");
        stats.lp_calls += 1;
        stats.patterns_explored += 1;
        if let FeasibilityResult::Feasible(point) = feasible(&lp) {
            let x = project_to_inputs(&point, inst).expect("full assignment");
            return (Verdict::from_witness(inst, x), stats);
        }
    }
    (Verdict::Unreachable, stats)
}

fn enumerate_parallel(inst: &Instance, threads: usize, deterministic: bool) -> (Verdict, SolveStats) {
    let program = build_program(inst);
    let l = program.relu_count();
    let total = pattern_count(l);
    let next = AtomicU64::new(0);
    let best = AtomicU64::new(u64::MAX);
    let lp_calls = AtomicU64::new(0);
    let found: Mutex<Option<(u64, Vec<Rational>)>> = Mutex::new(None);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= total {
                    break;
                }
                let bound = best.load(Ordering::Acquire);
                if (deterministic && index > bound) || (!deterministic && bound != u64::MAX) {
                    break;
                }
                let a = ActivationPattern::nth_in_order(l, index);
                let lp = fix_pattern(&program, &a).expect("pattern length matches");
                lp_calls.fetch_add(1, Ordering::Relaxed);
                if let FeasibilityResult::Feasible(point) = feasible(&lp) {
                    let mut slot = found.lock().expect("no poisoned lock");
                    if slot.as_ref().map_or(true, |(i, _)| index < *i) {
                        *slot = Some((index, point));
                    }
                    best.fetch_min(index, Ordering::Release);
                }
            });
        }
    });
    let calls = lp_calls.into_inner();
    let stats = SolveStats {
        lp_calls: calls,
        patterns_explored: calls,
        mode: Mode::Enumerate,
    };
    match found.into_inner().expect("no poisoned lock") {
        Some((_, point)) => {
            let x = project_to_inputs(&point, inst).expect("full assignment");
            (Verdict::from_witness(inst, x), stats)
        }
        None => (Verdict::Unreachable, stats),
    }
}

struct NodeInfo {
    relu: Option<usize>,
    bias: Rational,
    incoming: Vec<(usize, Rational)>,
}

/// Shared, immutable data of a branch search.
///
/// LP variables are the input coordinates `0..n` followed by one free
/// variable `n + r` per ReLU `r` whose phase is not fixed. The relaxation
/// for a fixed prefix of the pattern is obtained by evaluating the network
/// symbolically, so node variables never enter the LP.
struct Searcher<'a> {
    inst: &'a Instance,
    n: usize,
    l: usize,
    layers: Vec<Vec<NodeInfo>>,
    relu_layer: Vec<usize>,
    relu_node: Vec<usize>,
    inputs: Vec<AffineExpr>,
    base_rows: Vec<AffineExpr>,
    out_rows: Vec<(Rational, Vec<(usize, Rational)>)>,
    input_contradiction: bool,
}

/// Per-worker search state.
struct Ctx {
    bits: Vec<bool>,
    sign_rows: Vec<AffineExpr>,
    /// Values of layers whose ReLUs all have a fixed phase; index 0 is the
    /// input layer.
    cache: Vec<Vec<AffineExpr>>,
    /// Pre-activations of fixed ReLUs scaled to a leading coefficient of 1,
    /// with the sign of that coefficient and the phase.
    fixed: HashMap<AffineExpr, (bool, bool)>,
    /// Whether each pushed bit added an entry to `fixed`.
    fixed_keys: Vec<Option<AffineExpr>>,
    lp_calls: u64,
    nodes: u64,
}

enum Visit {
    Witness(Vec<Rational>),
    Exhausted,
    Cancelled,
}

enum NodeCheck {
    Pruned,
    Witness(Vec<Rational>),
    Open,
}

impl<'a> Searcher<'a> {
    fn new(inst: &'a Instance) -> Self {
        let net = &inst.network;
        let n = net.input_dim();
        let mut layers = Vec::with_capacity(net.layers().len());
        let mut relu_layer = Vec::new();
        let mut relu_node = Vec::new();
        for (li, layer) in net.layers().iter().enumerate() {
            let mut infos = Vec::with_capacity(layer.width());
            for (ni, node) in layer.nodes.iter().enumerate() {
                let relu = (node.activation == Activation::Relu).then(|| {
                    relu_layer.push(li + 1);
                    relu_node.push(ni);
                    relu_layer.len() - 1
                });
                infos.push(NodeInfo {
                    relu,
                    bias: node.bias.clone(),
                    incoming: node
                        .weights
                        .iter()
                        .enumerate()
                        .filter(|(_, w)| !w.is_zero())
                        .map(|(i, w)| (i, w.clone()))
                        .collect(),
                });
            }
            layers.push(infos);
        }
        let l = relu_layer.len();

        let mut elim = Eliminator::new(n);
        let rows = input_rows(&inst.input_spec);
        let (base_rows, input_contradiction) = match crate::lp::presolve_rows(&mut elim, &rows) {
            Ok(rest) => (rest, false),
            Err(Contradiction) => (Vec::new(), true),
        };
        let inputs = (0..n)
            .map(|i| elim.substitution(i).cloned().unwrap_or_else(|| AffineExpr::var(i)))
            .collect();

        let out_rows = inst
            .output_spec
            .conjuncts
            .iter()
            .map(|c| {
                let terms = c.terms.iter().map(|(k, v)| (v.index(), k.clone())).collect();
                (-&c.bound, terms)
            })
            .collect();

        Searcher {
            inst,
            n,
            l,
            layers,
            relu_layer,
            relu_node,
            inputs,
            base_rows,
            out_rows,
            input_contradiction,
        }
    }

    fn new_ctx(&self) -> Ctx {
        Ctx {
            bits: Vec::with_capacity(self.l),
            sign_rows: Vec::with_capacity(self.l),
            cache: vec![self.inputs.clone()],
            fixed: HashMap::new(),
            fixed_keys: Vec::with_capacity(self.l),
            lp_calls: 0,
            nodes: 0,
        }
    }

    /// Deepest layer whose ReLUs are all among the first `k`.
    fn determined(&self, k: usize) -> usize {
        if k == self.l {
            self.layers.len()
        } else {
            self.relu_layer[k] - 1
        }
    }

    fn node_value(&self, info: &NodeInfo, prev: &[AffineExpr], bits: &[bool]) -> AffineExpr {
        if let Some(r) = info.relu {
            if r >= bits.len() {
                return AffineExpr::var(self.n + r);
            }
            if !bits[r] {
                return AffineExpr::default();
            }
        }
        self.pre_activation(info, prev)
    }

    fn pre_activation(&self, info: &NodeInfo, prev: &[AffineExpr]) -> AffineExpr {
        let mut e = AffineExpr::constant_only(info.bias.clone());
        for (i, w) in &info.incoming {
            e.add_scaled(&prev[*i], w);
        }
        e
    }

    fn layer_values(&self, layer: usize, prev: &[AffineExpr], bits: &[bool]) -> Vec<AffineExpr> {
        self.layers[layer - 1]
            .iter()
            .map(|info| self.node_value(info, prev, bits))
            .collect()
    }

    fn ensure_cache(&self, ctx: &mut Ctx, k: usize) {
        let d = self.determined(k);
        while ctx.cache.len() <= d {
            let j = ctx.cache.len();
            let next = self.layer_values(j, &ctx.cache[j - 1], &ctx.bits[..k]);
            ctx.cache.push(next);
        }
    }

    /// Pre-activation of ReLU `r`; needs the cache up to its layer.
    fn relu_pre(&self, ctx: &Ctx, r: usize) -> AffineExpr {
        let layer = self.relu_layer[r];
        let info = &self.layers[layer - 1][self.relu_node[r]];
        self.pre_activation(info, &ctx.cache[layer - 1])
    }

    /// Phases worth exploring for the next ReLU. A constant pre-activation
    /// decides the phase, and so does a positive or negative multiple of a
    /// fixed ReLU's pre-activation: the other phase could only add points
    /// where the pre-activation is 0, where both phases give the same value.
    fn phases(&self, ctx: &mut Ctx) -> &'static [bool] {
        let r = ctx.bits.len();
        self.ensure_cache(ctx, r);
        let pre = self.relu_pre(ctx, r);
        let forced = match canonical(&pre) {
            None => Some(!pre.constant().is_negative()),
            Some((key, positive)) => ctx
                .fixed
                .get(&key)
                .map(|&(pos, bit)| if pos == positive { bit } else { !bit }),
        };
        match forced {
            Some(true) => &[true],
            Some(false) => &[false],
            None => &[true, false],
        }
    }

    fn relaxation(&self, ctx: &Ctx, k: usize) -> LinearProgram {
        let d = self.determined(k);
        let bits = &ctx.bits[..k];
        let mut owned: Option<Vec<AffineExpr>> = None;
        for j in d + 1..=self.layers.len() {
            let prev = owned.as_deref().unwrap_or(&ctx.cache[d]);
            owned = Some(self.layer_values(j, prev, bits));
        }
        let outputs = owned.as_deref().unwrap_or(&ctx.cache[d]);
        let mut lp = LinearProgram::new(self.n + self.l);
        lp.inequalities.reserve(self.base_rows.len() + ctx.sign_rows.len() + self.out_rows.len());
        lp.inequalities.extend(self.base_rows.iter().cloned());
        lp.inequalities.extend(ctx.sign_rows.iter().cloned());
        for (constant, terms) in &self.out_rows {
            let mut e = AffineExpr::constant_only(constant.clone());
            for (i, c) in terms {
                e.add_scaled(&outputs[*i], c);
            }
            lp.inequalities.push(e);
        }
        lp
    }

    fn input_of(&self, point: &[Rational]) -> Vec<Rational> {
        self.inputs.iter().map(|f| f.eval(point)).collect()
    }

    /// Solves the relaxation of the current prefix of `ctx.bits`.
    fn check(&self, ctx: &mut Ctx) -> NodeCheck {
        let k = ctx.bits.len();
        ctx.nodes += 1;
        ctx.lp_calls += 1;
        if self.input_contradiction {
            return NodeCheck::Pruned;
        }
        self.ensure_cache(ctx, k);
        let lp = self.relaxation(ctx, k);
        let FeasibilityResult::Feasible(point) = feasible(&lp) else {
            return NodeCheck::Pruned;
        };
        let x = self.input_of(&point);
        if check_witness(self.inst, &x) == Ok(true) {
            return NodeCheck::Witness(x);
        }
        debug_assert!(k < self.l, "a feasible complete pattern yields a witness");
        if k == self.l {
            return NodeCheck::Pruned;
        }
        NodeCheck::Open
    }

    fn push_bit(&self, ctx: &mut Ctx, active: bool) {
        let r = ctx.bits.len();
        self.ensure_cache(ctx, r);
        let pre = self.relu_pre(ctx, r);
        let key = canonical(&pre).and_then(|(key, positive)| {
            (!ctx.fixed.contains_key(&key)).then(|| {
                ctx.fixed.insert(key.clone(), (positive, active));
                key
            })
        });
        ctx.fixed_keys.push(key);
        ctx.sign_rows.push(if active { pre.negated() } else { pre });
        ctx.bits.push(active);
    }

    fn pop_bit(&self, ctx: &mut Ctx) {
        ctx.bits.pop();
        ctx.sign_rows.pop();
        if let Some(key) = ctx.fixed_keys.pop().flatten() {
            ctx.fixed.remove(&key);
        }
        let keep = self.determined(ctx.bits.len()) + 1;
        ctx.cache.truncate(keep);
    }

    fn visit(&self, ctx: &mut Ctx, cancelled: &dyn Fn() -> bool) -> Visit {
        if cancelled() {
            return Visit::Cancelled;
        }
        match self.check(ctx) {
            NodeCheck::Witness(x) => return Visit::Witness(x),
            NodeCheck::Pruned => return Visit::Exhausted,
            NodeCheck::Open => {}
        }
        for &active in self.phases(ctx) {
            self.push_bit(ctx, active);
            let r = self.visit(ctx, cancelled);
            self.pop_bit(ctx);
            if !matches!(r, Visit::Exhausted) {
                return r;
            }
        }
        Visit::Exhausted
    }

    fn enter(&self, ctx: &mut Ctx, prefix: &[bool]) {
        for &b in prefix {
            self.push_bit(ctx, b);
        }
    }
}

/// `expr / a` and the sign of `a`, where `a` is the first coefficient;
/// `None` for constants.
fn canonical(expr: &AffineExpr) -> Option<(AffineExpr, bool)> {
    let (_, a) = expr.terms().first()?;
    Some((expr.scaled(&a.recip()), a.is_positive()))
}

fn input_rows(spec: &Specification) -> Vec<AffineExpr> {
    spec.conjuncts
        .iter()
        .map(|c| {
            AffineExpr::new(
                -&c.bound,
                c.terms.iter().map(|(k, v)| match v {
                    VarRef::Input(i) => (*i, k.clone()),
                    VarRef::Output(_) => unreachable!("input specification"),
                }),
            )
        })
        .collect()
}

/// Depth-first over phases in canonical ReLU order, active first.
pub fn solve_branch(inst: &Instance) -> (Verdict, SolveStats) {
    let s = Searcher::new(inst);
    let mut ctx = s.new_ctx();
    let r = s.visit(&mut ctx, &|| false);
    let stats = SolveStats {
        lp_calls: ctx.lp_calls,
        patterns_explored: ctx.nodes,
        mode: Mode::Branch,
    };
    match r {
        Visit::Witness(x) => (Verdict::from_witness(inst, x), stats),
        Visit::Exhausted => (Verdict::Unreachable, stats),
        Visit::Cancelled => unreachable!("sequential search is never cancelled"),
    }
}

enum Item {
    Found(Vec<Rational>),
    Subtree(Vec<bool>),
}

/// Expands the top levels in pre-order, recording node witnesses and the
/// subtrees left for workers. Stops at the first witness, as the sequential
/// search would.
fn expand_top(s: &Searcher<'_>, ctx: &mut Ctx, depth: usize, items: &mut Vec<Item>) -> bool {
    if ctx.bits.len() == depth {
        items.push(Item::Subtree(ctx.bits.clone()));
        return false;
    }
    match s.check(ctx) {
        NodeCheck::Witness(x) => {
            items.push(Item::Found(x));
            return true;
        }
        NodeCheck::Pruned => return false,
        NodeCheck::Open => {}
    }
    for &active in s.phases(ctx) {
        s.push_bit(ctx, active);
        let stop = expand_top(s, ctx, depth, items);
        s.pop_bit(ctx);
        if stop {
            return true;
        }
    }
    false
}

fn branch_parallel(inst: &Instance, threads: usize, deterministic: bool) -> (Verdict, SolveStats) {
    let s = Searcher::new(inst);
    let depth = s.l.min(threads.next_power_of_two().trailing_zeros() as usize + 3);
    let mut top = s.new_ctx();
    let mut items = Vec::new();
    expand_top(&s, &mut top, depth, &mut items);

    let best = AtomicUsize::new(usize::MAX);
    let stop = AtomicBool::new(false);
    let results: Mutex<Vec<Option<Vec<Rational>>>> = Mutex::new(vec![None; items.len()]);
    for (i, item) in items.iter().enumerate() {
        if let Item::Found(x) = item {
            results.lock().expect("no poisoned lock")[i] = Some(x.clone());
            best.fetch_min(i, Ordering::Release);
            stop.store(true, Ordering::Release);
        }
    }
    let next = AtomicUsize::new(0);
    let lp_calls = AtomicU64::new(top.lp_calls);
    let nodes = AtomicU64::new(top.nodes);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| {
                let mut calls = 0;
                let mut visited = 0;
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(item) = items.get(i) else { break };
                    let Item::Subtree(prefix) = item else { continue };
                    let cancelled = || {
                        if deterministic {
                            best.load(Ordering::Acquire) < i
                        } else {
                            stop.load(Ordering::Acquire)
                        }
                    };
                    if cancelled() {
                        continue;
                    }
                    let mut ctx = s.new_ctx();
                    s.enter(&mut ctx, prefix);
                    let r = s.visit(&mut ctx, &cancelled);
                    calls += ctx.lp_calls;
                    visited += ctx.nodes;
                    if let Visit::Witness(x) = r {
                        results.lock().expect("no poisoned lock")[i] = Some(x);
                        best.fetch_min(i, Ordering::Release);
                        stop.store(true, Ordering::Release);
                    }
                }
                lp_calls.fetch_add(calls, Ordering::Relaxed);
                nodes.fetch_add(visited, Ordering::Relaxed);
            });
        }
    });
    let stats = SolveStats {
        lp_calls: lp_calls.into_inner(),
        patterns_explored: nodes.into_inner(),
        mode: Mode::Branch,
    };
    let results = results.into_inner().expect("no poisoned lock");
    match results.into_iter().flatten().next() {
        Some(x) => (Verdict::from_witness(inst, x), stats),
        None => (Verdict::Unreachable, stats),
    }
}
