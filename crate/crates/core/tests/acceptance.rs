//! Acceptance criteria, one PASS/FAIL line each. Runs without the test
//! harness so the lines are always printed; exits non-zero on any failure.

mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nnreach::cnf::{random_cnf, CnfFormula};
use nnreach::eval::check_witness;
use nnreach::formats::serialize_verdict;
use nnreach::lp::{check_point, feasible, FeasibilityResult};
use nnreach::model::{Activation, Instance, Layer, Network, Node, Specification, VarRef};
use nnreach::rational::{q, Rational};
use nnreach::reductions::gadgets::{bool_star, flawed_bool, restricted, RestrictedKind};
use nnreach::reductions::{Reduction, ReductionOutput};
use nnreach::relu_lp::{build_program, extend_assignment, fix_pattern};
use nnreach::sat::{brute_force_sat, check_assignment};
use nnreach::{solve, solve_branch, solve_enumerate, Mode, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::fourier_motzkin::fm_feasible;
use support::random_instances::random_instance;
use support::sat_oracle::{all_small_formulas, satisfiable};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(elapsed: Duration, limit: Duration) -> Outcome {
    ensure!(elapsed < limit, "took {elapsed:.2?}, limit {limit:?}");
    Ok(format!("{elapsed:.2?}"))
}

// ---------------------------------------------------------------- 1

fn discretizer() -> Outcome {
    let start = Instant::now();
    let g = bool_star();
    for x in [q(0, 1), q(1, 1)] {
        ensure!(g.eval(&[x.clone()])[0].is_zero(), "BOOL*({x}) is not 0");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut sampled = 0;
    while sampled < 1000 {
        let x = q(rng.gen_range(-2000..=2000), rng.gen_range(1..=500));
        if x.is_zero() || x == Rational::one() {
            continue;
        }
        sampled += 1;
        ensure!(!g.eval(&[x.clone()])[0].is_zero(), "BOOL*({x}) = 0");
    }
    for eps in [q(1, 10), q(1, 4), q(1, 3)] {
        let f = flawed_bool(&eps).map_err(|e| e.to_string())?;
        let x = &eps + &eps;
        ensure!(f.eval(&[x.clone()])[0].is_zero(), "flawed gadget with eps {eps} is not 0 at {x}");
    }
    for eps in [q(1, 10), q(1, 4), q(1, 3), q(1, 2), q(1, 1000)] {
        let f = flawed_bool(&eps).map_err(|e| e.to_string())?;
        for k in 0..100 {
            let x = q(k, 99);
            let z = &f.eval(&[x.clone()])[0];
            ensure!(!z.is_negative() && *z <= eps, "flawed gadget with eps {eps} gives {z} at {x}");
        }
    }
    within(start.elapsed(), Duration::from_secs(1)).map(|t| format!("1000 samples, 5 grids, {t}"))
}

// ---------------------------------------------------------------- 2

fn restricted_gadgets() -> Outcome {
    let start = Instant::now();
    let grid = [q(1, 2), q(1, 1), q(2, 1), q(3, 1)];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let samples: Vec<Rational> = (0..200).map(|_| q(rng.gen_range(-400..=400), rng.gen_range(1..=40))).collect();
    let mut checks = 0;
    for c in &grid {
        for d in &grid {
            let gadget = |k| restricted(k, c, d).map_err(|e| e.to_string());
            let allowed = [-c, Rational::zero(), d.clone()];
            let t = c.recip();
            let f = -(d / &(c * c));
            let dc = d * c;

            let disc = gadget(RestrictedKind::Disc)?;
            for x in samples.iter().chain([&t, &f, &Rational::zero()]) {
                let zero = disc.eval(&[x.clone(), x.clone()])[0].is_zero();
                ensure!(zero == (*x == t || *x == f), "DISC({x}, {x}) zero={zero} at c={c} d={d}");
                checks += 1;
            }

            let norm = gadget(RestrictedKind::Norm)?;
            ensure!(norm.eval(&[f.clone()])[0].is_zero(), "NORM(-d/c²) at c={c} d={d}");
            ensure!(norm.eval(&[t.clone()])[0] == -&dc, "NORM(1/c) at c={c} d={d}");
            let norm_bar = gadget(RestrictedKind::NormBar)?;
            ensure!(norm_bar.eval(&[-&f])[0] == -&dc, "NORM̄(d/c²) at c={c} d={d}");
            ensure!(norm_bar.eval(&[-&t])[0].is_zero(), "NORM̄(-1/c) at c={c} d={d}");
            checks += 4;

            let c4 = c.pow(4);
            let (kind, idle) = if *c >= Rational::one() {
                (RestrictedKind::OrA(3), d * &(&c4 - &c.pow(3)))
            } else {
                (RestrictedKind::OrB(3), d * &(&c4 - &c.pow(5)))
            };
            let or = gadget(kind)?;
            for mask in 0..8u32 {
                let x: Vec<Rational> =
                    (0..3).map(|i| if mask >> i & 1 == 1 { -&dc } else { Rational::zero() }).collect();
                let expect = if mask == 0 { idle.clone() } else { d * &c4 };
                let got = or.eval(&x)[0].clone();
                ensure!(got == expect, "{kind:?}{x:?} = {got}, expected {expect} at c={c} d={d}");
                checks += 1;
            }

            for g in [&disc, &norm, &norm_bar, &or, &gadget(RestrictedKind::Eq0)?, &gadget(RestrictedKind::AndR(3))?] {
                ensure!(
                    g.constants().iter().all(|v| allowed.contains(v)),
                    "{} uses constants {:?} at c={c} d={d}",
                    g.name,
                    g.constants()
                );
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(5)).map(|t| format!("16 parameter pairs, {checks} checks, {t}"))
}

// ---------------------------------------------------------------- 3–5

#[derive(Default)]
struct Soundness {
    reachable: usize,
    failures: Vec<String>,
}

impl Soundness {
    /// The witness is exact, decodes to a model, extends to a solution of
    /// the program fixed to its pattern, and the point the LP core finds for
    /// that program satisfies every ReLU-equality.
    fn record(&mut self, label: &str, cnf: &CnfFormula, out: &ReductionOutput, v: &Verdict) {
        let Verdict::Reachable { input, pattern } = v else { return };
        self.reachable += 1;
        let inst = &out.instance;
        let mut fail = |m: &str| self.failures.push(format!("{label}: {m}"));
        if check_witness(inst, input) != Ok(true) {
            return fail("witness rejected");
        }
        if check_assignment(cnf, &out.var_map.decode(input)) != Ok(true) {
            return fail("decoded assignment is not a model");
        }
        let program = build_program(inst);
        let Ok(lp) = fix_pattern(&program, pattern) else { return fail("pattern length") };
        let Ok(full) = extend_assignment(inst, input) else { return fail("extension") };
        if check_point(&lp, &full) != Ok(true) {
            return fail("extended witness violates the fixed program");
        }
        match feasible(&lp) {
            FeasibilityResult::Feasible(p) if program.is_solved_by(&p) => {}
            FeasibilityResult::Feasible(_) => fail("fixed-program solution breaks a ReLU-equality"),
            FeasibilityResult::Infeasible => fail("fixed program reported infeasible"),
        }
    }
}

struct Tally {
    instances: usize,
    solve_time: Duration,
}

fn agree(
    reductions: &[Reduction],
    corpus: &[CnfFormula],
    sound: &mut Soundness,
    mismatches: &mut Vec<String>,
) -> Result<Tally, String> {
    let mut tally = Tally { instances: 0, solve_time: Duration::ZERO };
    for cnf in corpus {
        let sat = brute_force_sat(cnf).map_err(|e| e.to_string())?.is_sat();
        ensure!(sat == satisfiable(cnf), "SAT oracles disagree on {:?}", cnf.clauses());
        for r in reductions {
            let out = r.compile(cnf).map_err(|e| format!("{r}: {e}"))?;
            let t = Instant::now();
            let (v, _) = solve(&out.instance, Mode::Branch, 1, true);
            tally.solve_time += t.elapsed();
            tally.instances += 1;
            let label = format!("{r} on n={} {:?}", cnf.var_count(), cnf.clauses());
            if v.is_reachable() != sat {
                mismatches.push(format!("{label}: solver {}, oracle {sat}", v.is_reachable()));
            }
            sound.record(&label, cnf, &out, &v);
        }
    }
    Ok(tally)
}

fn random_corpus(seed: u64, count: usize, max_vars: usize, max_clauses: usize) -> Vec<CnfFormula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_vars);
            let m = rng.gen_range(0..=max_clauses);
            random_cnf(n, m, rng.gen())
        })
        .collect()
}

fn reduction_equivalence(sound: &mut Soundness) -> Outcome {
    let start = Instant::now();
    let reductions = [
        Reduction::BoolStar,
        Reduction::SingleLayer,
        Reduction::OneInputRelu,
        Reduction::Restricted { c: q(1, 2), d: q(1, 1) },
        Reduction::Restricted { c: q(1, 1), d: q(1, 1) },
        Reduction::Restricted { c: q(2, 1), d: q(3, 1) },
    ];
    let mut corpus = all_small_formulas(4);
    ensure!(corpus.len() == 1 + 20 + 190 + 1140 + 4845, "corpus has {} formulas", corpus.len());
    corpus.extend(random_corpus(3, 200, 5, 8));
    let mut mismatches = Vec::new();
    let tally = agree(&reductions, &corpus, sound, &mut mismatches)?;
    ensure!(mismatches.is_empty(), "{} mismatches, first: {}", mismatches.len(), mismatches[0]);
    let t = within(start.elapsed(), Duration::from_secs(30 * 60))?;
    Ok(format!(
        "{} formulas x {} reductions = {} instances agree, solving {:.2?}, total {t}",
        corpus.len(),
        reductions.len(),
        tally.instances,
        tally.solve_time
    ))
}

fn no_zero_equivalence(sound: &mut Soundness) -> Outcome {
    let start = Instant::now();
    let corpus = random_corpus(4, 20, 4, 6);
    let cs = [q(1, 2), q(1, 1), q(2, 1)];
    for c in &cs {
        for cnf in &corpus {
            let out = Reduction::NoZero { c: c.clone() }.compile(cnf).map_err(|e| e.to_string())?;
            let set = out.instance.network.constant_set();
            ensure!(set == vec![-c, c.clone()], "constants {set:?} for c = {c}");
        }
    }
    let reductions: Vec<Reduction> = cs.iter().map(|c| Reduction::NoZero { c: c.clone() }).collect();
    let mut mismatches = Vec::new();
    let tally = agree(&reductions, &corpus, sound, &mut mismatches)?;
    ensure!(mismatches.is_empty(), "{} mismatches, first: {}", mismatches.len(), mismatches[0]);
    let sat = corpus.iter().filter(|f| satisfiable(f)).count();
    Ok(format!(
        "{} instances agree ({sat}/20 formulas satisfiable), constants exactly {{-c, c}}, {:.2?}",
        tally.instances,
        start.elapsed()
    ))
}

fn internal_soundness(sound: &Soundness) -> Outcome {
    ensure!(
        sound.failures.is_empty(),
        "{} failures, first: {}",
        sound.failures.len(),
        sound.failures[0]
    );
    ensure!(sound.reachable > 0, "no reachable verdicts to check");
    Ok(format!("{} reachable verdicts checked", sound.reachable))
}

// ---------------------------------------------------------------- 6

/// Six ReLUs, then `padding` identity nodes in layers of width 10, each
/// copying one node of the layer before. The output must be negative,
/// which no pattern allows.
fn padded(padding: usize) -> Instance {
    let relus: Vec<Node> = (0..6).map(|i| Node::new(Activation::Relu, q(i - 3, 1), vec![q(1, 1)])).collect();
    let mut layers = vec![Layer::new(relus)];
    let mut prev = 6;
    let mut left = padding;
    while left > 0 {
        let w = left.min(10);
        let nodes = (0..w)
            .map(|j| {
                let mut weights = vec![Rational::zero(); prev];
                weights[j % prev] = Rational::one();
                Node::new(Activation::Identity, Rational::zero(), weights)
            })
            .collect();
        layers.push(Layer::new(nodes));
        prev = w;
        left -= w;
    }
    layers.push(Layer::new(vec![Node::new(Activation::Identity, q(0, 1), vec![q(1, 1); prev])]));
    let net = Network::new(1, layers).expect("valid network");
    let mut out = Specification::top();
    out.push_le(vec![(q(1, 1), VarRef::Output(0))], q(-1, 1));
    Instance::new(net, Specification::top(), out).expect("valid instance")
}

fn relu_count_bound() -> Outcome {
    let sizes = [10usize, 100, 1000, 10_000];
    let mut points = Vec::new();
    for &s in &sizes {
        let inst = padded(s);
        ensure!(inst.network.relu_count() == 6, "ReLU count {}", inst.network.relu_count());
        let t = Instant::now();
        let (v, st) = solve_enumerate(&inst);
        let secs = t.elapsed().as_secs_f64();
        ensure!(v == Verdict::Unreachable, "padding {s}: expected UNREACHABLE");
        ensure!(st.lp_calls <= 64, "padding {s}: {} LP calls", st.lp_calls);
        points.push((inst.network.node_count() as f64, secs));
    }
    // least-squares slope of log time over log size
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.max(1e-6).ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = num / den;
    // a factor of 2 in time across the measured range
    let span = points.last().unwrap().0 / points[0].0;
    let limit = 2.0 + 2f64.ln() / span.ln();
    let times: Vec<String> = points.iter().map(|(x, y)| format!("{x}:{y:.3}s")).collect();
    ensure!(slope <= limit, "fitted exponent {slope:.2} > {limit:.2} ({})", times.join(" "));
    Ok(format!("64 LP calls at every size, fitted exponent {slope:.2} <= {limit:.2} ({})", times.join(" ")))
}

// ---------------------------------------------------------------- 7

fn lp_oracle() -> Outcome {
    use nnreach::lp::{AffineExpr, LinearProgram};
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut feasible_count, mut points) = (0, 0);
    for i in 0..500 {
        let vars = rng.gen_range(1..=5);
        let mut lp = LinearProgram::new(vars);
        for _ in 0..rng.gen_range(0..=10) {
            let mut terms: Vec<(usize, Rational)> = Vec::new();
            for v in 0..vars {
                if rng.gen_bool(0.7) {
                    terms.push((v, q(rng.gen_range(-4..=4), rng.gen_range(1..=3))));
                }
            }
            lp.push_le(AffineExpr::new(q(rng.gen_range(-6..=6), rng.gen_range(1..=2)), terms));
        }
        let got = feasible(&lp);
        let want = fm_feasible(&lp);
        ensure!(got.is_feasible() == want, "program {i}: simplex {} vs elimination {want}", got.is_feasible());
        if let FeasibilityResult::Feasible(p) = got {
            feasible_count += 1;
            ensure!(check_point(&lp, &p) == Ok(true), "program {i}: point fails its rows");
            points += 1;
        }
    }
    Ok(format!("500/500 agree, {feasible_count} feasible, {points} points checked"))
}

// ---------------------------------------------------------------- 8

fn schedule_independence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut reachable = 0;
    for i in 0..500 {
        let inst = random_instance(&mut rng, 3, 6);
        let (e, _) = solve_enumerate(&inst);
        let (b, _) = solve_branch(&inst);
        ensure!(e.is_reachable() == b.is_reachable(), "instance {i}: enumerate and branch disagree");
        reachable += usize::from(e.is_reachable());
        for mode in [Mode::Enumerate, Mode::Branch] {
            let (one, _) = solve(&inst, mode, 1, true);
            let (eight, _) = solve(&inst, mode, 8, true);
            let (free, _) = solve(&inst, mode, 8, false);
            ensure!(
                one.is_reachable() == eight.is_reachable() && one.is_reachable() == free.is_reachable(),
                "instance {i}: thread budget changes the {mode} verdict"
            );
            ensure!(
                serialize_verdict(&one) == serialize_verdict(&eight),
                "instance {i}: deterministic {mode} runs differ"
            );
        }
    }
    Ok(format!("500 instances ({reachable} reachable), modes and thread budgets agree, deterministic output identical"))
}

// ----------------------------------------------------------------

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    match &result {
        Ok(detail) => println!("PASS {name}: {detail} [{elapsed:.2?}]"),
        Err(why) => println!("FAIL {name}: {why} [{elapsed:.2?}]"),
    }
    result.is_ok()
}

fn main() -> ExitCode {
    let mut sound = Soundness::default();
    let results = [
        run("1 discretizing gadget", discretizer),
        run("2 restricted-weight gadgets", restricted_gadgets),
        run("3 reductions agree with the SAT oracle", || reduction_equivalence(&mut sound)),
        run("4 zero-free reduction agrees with the SAT oracle", || no_zero_equivalence(&mut sound)),
        run("5 witnesses and fixed programs are sound", || internal_soundness(&sound)),
        run("6 LP calls bounded by the ReLU count", relu_count_bound),
        run("7 LP core agrees with Fourier-Motzkin", lp_oracle),
        run("8 mode and schedule independence", schedule_independence),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
