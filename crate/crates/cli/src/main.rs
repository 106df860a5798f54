//! `berknash` command-line front end.
//!
//! Exit status: 0 when the run converged or the check passed, 2 when the
//! result is a diagnosis (non-convergence, mass escape, failed drift
//! condition), 1 on errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use berknash::discretize::{discretize_smdp, level_box, truncation_bounds, CheckGrid, FiniteSMDP, GridSizes};
use berknash::divergence::weighted_kl_all;
use berknash::equilibrium::{ladder_diagnose, lyapunov_check, solve_berk_nash, verify_equilibrium, LadderOptions, Lyapunov, SolveOptions, Tolerances, Verdict};
use berknash::examples::{default_grid, make_example, oracle, ExampleId};
use berknash::export;
use berknash::learning::{identification_check, simulate_learning, Belief, LearningOptions, PolicyMode};
use berknash::model::{parse_document, ActionDomain, GridHints, SMDPSpec, SolveHints, Spacing};
use berknash::stationary::{JointMeasure, Policy};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

type Res<T> = std::result::Result<T, Box<dyn std::error::Error>>;

const OUT_ENV: &str = "BERKNASH_OUT";

#[derive(Parser)]
#[command(name = "berknash", version, about = "Berk-Nash equilibria of misspecified Markov decision processes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the finite grid and write its cells, actions and parameters.
    Discretize {
        #[command(flatten)]
        common: Common,
        /// Also write the true kernel, one line per nonzero entry.
        #[arg(long)]
        truth: bool,
    },
    /// Search for an equilibrium.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
    },
    /// Check a stored `(m, nu)` pair.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
        /// Measure CSV as written by `solve`.
        #[arg(long = "m")]
        m: PathBuf,
        /// Belief CSV as written by `solve`.
        #[arg(long)]
        nu: PathBuf,
    },
    /// Solve on growing truncation boxes and diagnose mass escape.
    Ladder {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Simulate a Bayesian learner.
    Learn {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        horizon: usize,
        #[arg(long, default_value_t = 100)]
        resolve_every: usize,
        #[arg(long, value_enum, default_value_t = LearnPolicy::Anticipated)]
        policy: LearnPolicy,
    },
    /// Closed-form quantities of a built-in example.
    Example(Common),
    /// Drift check of `V(s) = |s|` on sampled states.
    Lyapunov {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Largest sampled `V(s)`.
        #[arg(long, default_value_t = 20.0)]
        max_norm: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnPolicy {
    /// Re-plan against the current posterior.
    Anticipated,
    /// Uniform random actions.
    Uniform,
}

#[derive(Args)]
struct Common {
    /// Model document.
    #[arg(long, conflicts_with = "example")]
    model: Option<PathBuf>,
    /// Built-in example: savings, cost, ar1, ar1-action, revenue.
    #[arg(long)]
    example: Option<String>,
    /// Example constant or model document key, `key=value`. Repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
    #[arg(long)]
    a0: Option<f64>,
    #[arg(long)]
    b0: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    /// Cells per state axis, comma separated.
    #[arg(long, value_delimiter = ',')]
    states: Option<Vec<usize>>,
    /// Truncation radius for unbounded state axes.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    actions: Option<usize>,
    /// Parameter axis as `lo:hi:n`, one flag per axis.
    #[arg(long)]
    theta: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; `BERKNASH_OUT` takes precedence.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Solver {
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    tol_opt: Option<f64>,
    #[arg(long)]
    tol_belief: Option<f64>,
    #[arg(long)]
    tol_stat: Option<f64>,
}

/// A resolved model with its grid hints.
struct Problem {
    spec: SMDPSpec,
    id: Option<ExampleId>,
    consts: BTreeMap<String, f64>,
    grid: GridHints,
    solve: SolveHints,
}

struct Run {
    header: Vec<String>,
    out: PathBuf,
    seed: u64,
}

impl Run {
    fn write(&self, name: &str, body: &str) -> Res<()> {
        let path = self.out.join(name);
        fs::write(&path, body).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        Ok(())
    }

    fn report(&self, pairs: &[(String, String)]) -> Res<()> {
        self.write("report.txt", &export::report_text(pairs, &self.header))
    }
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn parse_kv(s: &str) -> Res<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn parse_num(key: &str, v: &str) -> Res<f64> {
    v.parse::<f64>().map_err(|_| format!("{key}: expected a number, got `{v}`").into())
}

fn parse_axis(s: &str) -> Res<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || format!("--theta expects lo:hi:n, got `{s}`");
    if parts.len() != 3 {
        return Err(bad().into());
    }
    let lo = parts[0].trim().parse::<f64>().map_err(|_| bad())?;
    let hi = parts[1].trim().parse::<f64>().map_err(|_| bad())?;
    let n = parts[2].trim().parse::<usize>().map_err(|_| bad())?;
    if !(lo <= hi) || n == 0 {
        return Err(bad().into());
    }
    Ok((lo, hi, n))
}

/// Replaces or appends `key = value` lines of a model document.
fn override_document(text: &str, overrides: &[(String, String)]) -> String {
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    for (k, v) in overrides {
        let hit = lines.iter().position(|l| {
            let content = l.split('#').next().unwrap_or("");
            content.split_once('=').is_some_and(|(key, _)| key.trim() == k)
        });
        match hit {
            Some(i) => lines[i] = format!("{k} = {v}"),
            None => lines.push(format!("{k} = {v}")),
        }
    }
    lines.join("\n")
}

fn load(c: &Common) -> Res<Problem> {
    let mut overrides = Vec::new();
    for p in &c.params {
        overrides.push(parse_kv(p)?);
    }
    for (k, v) in [("a0", c.a0), ("b0", c.b0), ("c0", c.c0)] {
        if let Some(v) = v {
            overrides.push((k.to_string(), v.to_string()));
        }
    }
    match (&c.model, &c.example) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| format!("cannot read model file {}: {e}", path.display()))?;
            let doc = parse_document(&override_document(&text, &overrides))?;
            Ok(Problem { spec: doc.spec, id: None, consts: BTreeMap::new(), grid: doc.grid, solve: doc.solve })
        }
        (None, Some(name)) => {
            let id: ExampleId = name.parse()?;
            let mut consts = BTreeMap::new();
            for (k, v) in &overrides {
                consts.insert(k.clone(), parse_num(k, v)?);
            }
            let spec = make_example(id, &consts)?;
            let g = default_grid(id, &spec);
            let grid = GridHints {
                states: Some(g.sizes.states),
                state_box: None,
                radius: Some(g.radius),
                actions: Some(g.sizes.actions),
                theta: Some(g.sizes.params),
            };
            Ok(Problem { spec, id: Some(id), consts, grid, solve: SolveHints::default() })
        }
        _ => Err("give exactly one of --model or --example".into()),
    }
}

fn sizes(p: &Problem, c: &Common) -> Res<GridSizes> {
    let dim = p.spec.state_axes.len();
    let states = c.states.clone().or_else(|| p.grid.states.clone()).unwrap_or_else(|| vec![101; dim]);
    if states.len() != dim || states.contains(&0) {
        return Err(format!("--states needs {dim} positive counts").into());
    }
    let actions = c.actions.or(p.grid.actions).unwrap_or(match &p.spec.actions {
        ActionDomain::Points(v) => v.len(),
        ActionDomain::Interval { .. } => 11,
    });
    if actions == 0 {
        return Err("--actions must be positive".into());
    }
    let params = if c.theta.is_empty() {
        p.grid.theta.clone().unwrap_or_else(|| p.spec.params.lo.iter().zip(&p.spec.params.hi).map(|(l, h)| (*l, *h, 11)).collect())
    } else {
        c.theta.iter().map(|s| parse_axis(s)).collect::<Res<_>>()?
    };
    if params.len() != p.spec.params.dim() {
        return Err(format!("--theta needs {} axes", p.spec.params.dim()).into());
    }
    Ok(GridSizes { states, actions, params })
}

fn radius(p: &Problem, c: &Common) -> f64 {
    c.radius.or(p.grid.radius).unwrap_or(10.0)
}

fn state_box(p: &Problem, c: &Common) -> Vec<(f64, f64)> {
    match (&p.grid.state_box, c.radius) {
        (Some(b), None) => b.clone(),
        _ => level_box(&p.spec, radius(p, c)),
    }
}

fn seed(p: &Problem, c: &Common) -> u64 {
    c.seed.or(p.solve.seed).unwrap_or(0)
}

fn solve_options(p: &Problem, s: &Solver, seed: u64) -> SolveOptions {
    let d = SolveOptions::default();
    let h = &p.solve;
    SolveOptions {
        damping: s.damping.or(h.damping).unwrap_or(d.damping),
        max_outer: s.max_outer.or(h.max_outer).unwrap_or(d.max_outer),
        restarts: s.restarts.or(h.restarts).unwrap_or(d.restarts),
        seed,
        tolerances: Tolerances {
            optimality: s.tol_opt.or(h.tol_opt).unwrap_or(d.tolerances.optimality),
            belief: s.tol_belief.or(h.tol_belief),
            stationarity: s.tol_stat.or(h.tol_stat).unwrap_or(d.tolerances.stationarity),
        },
        ..d
    }
}

fn start(c: &Common, seed: u64, argv: &[String]) -> Res<Run> {
    let out = match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => c.out.clone().unwrap_or_else(|| PathBuf::from("berknash-out")),
    };
    fs::create_dir_all(&out).map_err(|e| format!("cannot create output directory {}: {e}", out.display()))?;
    let header = vec![
        format!("berknash {}", env!("CARGO_PKG_VERSION")),
        format!("argv {}", argv.join(" ")),
        format!("seed {seed}"),
    ];
    Ok(Run { header, out, seed })
}

fn equilibrium_artifacts(run: &Run, f: &FiniteSMDP, rep: &berknash::equilibrium::EquilibriumReport, trace: &str) -> Res<()> {
    let kl = weighted_kl_all(&rep.m, f)?;
    run.write("m.csv", &export::measure_csv(f, &rep.m, &run.header))?;
    run.write("nu.csv", &export::belief_csv(f, &rep.nu, &run.header))?;
    run.write("kl.csv", &export::kl_csv(f, &kl, &run.header))?;
    run.write(&format!("trace_{trace}.csv"), &export::trace_csv(rep, &run.header))?;
    Ok(())
}

fn box_text(b: &[(f64, f64)]) -> String {
    b.iter().map(|(l, h)| format!("[{l},{h}]")).collect::<Vec<_>>().join("x")
}

fn code(ok: bool) -> u8 {
    if ok {
        0
    } else {
        2
    }
}

/// Rows of a CSV artifact after the `#` header and the column line.
fn csv_rows(path: &Path) -> Res<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).enumerate().skip(1) {
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| format!("{}: row {i} is not numeric", path.display()))?;
        rows.push(row);
    }
    Ok(rows)
}

fn read_measure(f: &FiniteSMDP, path: &Path) -> Res<JointMeasure> {
    let (n, na, dim) = (f.n_states(), f.n_actions(), f.spec.state_axes.len());
    let mut w = vec![0.0; n * na];
    for row in csv_rows(path)? {
        if row.len() != dim + 2 {
            return Err(format!("{}: expected {} columns", path.display(), dim + 2).into());
        }
        let s = f.states.locate(&row[..dim]);
        let x = (0..na).min_by(|a, b| (f.actions[*a] - row[dim]).abs().total_cmp(&(f.actions[*b] - row[dim]).abs())).unwrap_or(0);
        w[s * na + x] += row[dim + 1];
    }
    Ok(JointMeasure::new(n, na, w)?)
}

fn read_belief(f: &FiniteSMDP, path: &Path) -> Res<Belief> {
    let dim = f.spec.params.dim();
    let mut w = vec![0.0; f.n_params()];
    for row in csv_rows(path)? {
        if row.len() != dim + 1 {
            return Err(format!("{}: expected {} columns", path.display(), dim + 1).into());
        }
        w[f.params.nearest(&row[..dim])] += row[dim];
    }
    Ok(Belief::new(w)?)
}

fn lyapunov_states(spec: &SMDPSpec, n: usize, max_norm: f64) -> Vec<f64> {
    let a = &spec.state_axes[0];
    let t = |i: usize| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
    match a.spacing {
        Spacing::Log => (0..n).map(|i| (-max_norm + 2.0 * max_norm * t(i)).exp()).collect(),
        _ => {
            let lo = a.lo.max(-max_norm);
            let hi = a.hi.min(max_norm);
            if lo < 0.0 && hi > 0.0 {
                // Nonnegative half; the norm is symmetric.
                (0..n).map(|i| hi * t(i)).collect()
            } else {
                (0..n).map(|i| lo + (hi - lo) * t(i)).collect()
            }
        }
    }
}

fn run(cli: Cli, argv: &[String]) -> Res<u8> {
    match cli.cmd {
        Cmd::Discretize { common: c, truth } => {
            let p = load(&c)?;
            let run = start(&c, seed(&p, &c), argv)?;
            let bounds = state_box(&p, &c);
            let f = discretize_smdp(&p.spec, &bounds, &sizes(&p, &c)?)?;
            run.write("grid.csv", &export::grid_csv(&f, &run.header))?;
            run.write("actions.csv", &export::actions_csv(&f, &run.header))?;
            run.write("params.csv", &export::params_csv(&f, &run.header))?;
            if truth {
                run.write("truth.csv", &export::truth_csv(&f, &run.header))?;
            }
            run.report(&[
                kv("command", "discretize"),
                kv("box", box_text(&bounds)),
                kv("states", f.n_states()),
                kv("actions", f.n_actions()),
                kv("params", f.n_params()),
                kv("flagged_params", f.flagged_params.len()),
            ])?;
            Ok(0)
        }
        Cmd::Solve { common: c, solver } => {
            let p = load(&c)?;
            let run = start(&c, seed(&p, &c), argv)?;
            let bounds = state_box(&p, &c);
            let f = discretize_smdp(&p.spec, &bounds, &sizes(&p, &c)?)?;
            let rep = solve_berk_nash(&f, &solve_options(&p, &solver, run.seed))?;
            equilibrium_artifacts(&run, &f, &rep, "solve")?;
            let mut pairs = vec![kv("command", "solve"), kv("box", box_text(&bounds))];
            pairs.extend(export::report_pairs(&f, &rep));
            run.report(&pairs)?;
            Ok(code(rep.converged))
        }
        Cmd::Verify { common: c, solver, m, nu } => {
            let p = load(&c)?;
            let run = start(&c, seed(&p, &c), argv)?;
            let f = discretize_smdp(&p.spec, &state_box(&p, &c), &sizes(&p, &c)?)?;
            let (m, nu) = (read_measure(&f, &m)?, read_belief(&f, &nu)?);
            let tol = solve_options(&p, &solver, run.seed).tolerances;
            let rep = verify_equilibrium(&f, &m, &nu, &tol)?;
            let kl = weighted_kl_all(&m, &f)?;
            run.write("kl.csv", &export::kl_csv(&f, &kl, &run.header))?;
            let mut pairs = vec![kv("command", "verify")];
            pairs.extend(export::report_pairs(&f, &rep));
            run.report(&pairs)?;
            Ok(code(rep.converged))
        }
        Cmd::Ladder { common: c, solver, levels } => {
            let p = load(&c)?;
            let run = start(&c, seed(&p, &c), argv)?;
            let mut s = sizes(&p, &c)?;
            // Without --radius the first level is half the default box at
            // twice the default cell width; the ladder solves once per level.
            let base = match c.radius {
                Some(r) => r,
                None => {
                    let r = radius(&p, &c);
                    if c.states.is_none() {
                        for (n, a) in s.states.iter_mut().zip(&p.spec.state_axes) {
                            if !a.is_bounded() {
                                *n = (*n - 1) / 4 + 1;
                            }
                        }
                    }
                    r / 2.0
                }
            };
            let base = if base > 0.0 { base } else { 1.0 };
            let ladder = truncation_bounds(&p.spec, levels, base, &CheckGrid::default())?;
            let opts = LadderOptions { solve: solve_options(&p, &solver, run.seed), ..LadderOptions::default() };
            let d = ladder_diagnose(&p.spec, &ladder, &s, &opts)?;
            let mut trace = run.header.iter().map(|h| format!("# {h}\n")).collect::<String>();
            trace.push_str("level,box,states,converged,iterations,boundary_mass,inner_mass,theta_mean\n");
            let mut pairs = vec![kv("command", "ladder"), kv("verdict", d.verdict), kv("levels", d.levels.len())];
            for (k, l) in d.levels.iter().enumerate() {
                let f = discretize_smdp(&p.spec, &l.bounds, &GridSizes { states: l.states.clone(), ..s.clone() })?;
                let top = l.report.theta_mean(&f).iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
                trace.push_str(&format!(
                    "{k},{},{},{},{},{},{},{}\n",
                    box_text(&l.bounds),
                    l.states.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x"),
                    l.report.converged,
                    l.report.iterations,
                    l.boundary_mass,
                    l.inner_mass,
                    top
                ));
                pairs.push(kv(&format!("level{k}_box"), box_text(&l.bounds)));
                pairs.push(kv(&format!("level{k}_converged"), l.report.converged));
                pairs.push(kv(&format!("level{k}_boundary_mass"), l.boundary_mass));
                pairs.push(kv(&format!("level{k}_inner_mass"), l.inner_mass));
            }
            run.write("trace_ladder.csv", &trace)?;
            if let Some(l) = d.levels.last() {
                let f = discretize_smdp(&p.spec, &l.bounds, &GridSizes { states: l.states.clone(), ..s.clone() })?;
                equilibrium_artifacts(&run, &f, &l.report, "solve")?;
                pairs.extend(export::report_pairs(&f, &l.report));
            }
            run.report(&pairs)?;
            Ok(code(d.verdict == Verdict::EquilibriumFound))
        }
        Cmd::Learn { common: c, horizon, resolve_every, policy } => {
            let p = load(&c)?;
            let run = start(&c, seed(&p, &c), argv)?;
            let f = discretize_smdp(&p.spec, &state_box(&p, &c), &sizes(&p, &c)?)?;
            let mode = match policy {
                LearnPolicy::Anticipated => PolicyMode::AnticipatedUtility,
                LearnPolicy::Uniform => PolicyMode::Fixed(Policy::uniform(f.n_states(), f.n_actions())),
            };
            let opts = LearningOptions { resolve_every, ..LearningOptions::new(horizon, run.seed) };
            let tr = simulate_learning(&f, &mode, &Belief::uniform(f.n_params()), &opts)?;
            run.write("trace_history.csv", &export::history_csv(&f, &tr, &run.header))?;
            run.write("trace_beliefs.csv", &export::beliefs_csv(&f, &tr, &run.header))?;
            run.write("trace_freq.csv", &export::frequencies_csv(&f, &tr, &run.header))?;
            let mut pairs = vec![kv("command", "learn"), kv("horizon", horizon)];
            if let (Some((_, m)), Some((_, mu))) = (tr.freq.last(), tr.beliefs.last()) {
                run.write("m.csv", &export::measure_csv(&f, m, &run.header))?;
                run.write("nu.csv", &export::belief_csv(&f, mu, &run.header))?;
                let (mode, w) = mu.weights.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, w)| if w > b.1 { (i, w) } else { b });
                let id = identification_check(&f, m, 1e-6)?;
                pairs.push(kv("posterior_mode", f.params.points[mode].iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")));
                pairs.push(kv("posterior_mode_weight", w));
                pairs.push(kv("identified", id.identified));
            }
            run.report(&pairs)?;
            Ok(0)
        }
        Cmd::Example(c) => {
            let p = load(&c)?;
            let id = p.id.ok_or("`example` needs --example")?;
            let run = start(&c, seed(&p, &c), argv)?;
            let o = oracle(id, &p.consts)?;
            let s = sizes(&p, &c)?;
            let mut pairs = vec![kv("command", "example"), kv("example", id.name()), kv("no_equilibrium", o.no_equilibrium)];
            for (k, v) in &o.quantities {
                pairs.push(kv(k, v));
            }
            for (i, n) in o.notes.iter().enumerate() {
                pairs.push(kv(&format!("note{i}"), n));
            }
            pairs.push(kv("grid_states", s.states.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")));
            pairs.push(kv("grid_actions", s.actions));
            pairs.push(kv("grid_theta", s.params.iter().map(|(l, h, n)| format!("{l}:{h}:{n}")).collect::<Vec<_>>().join(" ")));
            pairs.push(kv("grid_radius", radius(&p, &c)));
            run.report(&pairs)?;
            Ok(0)
        }
        Cmd::Lyapunov { common: c, samples, max_norm } => {
            let p = load(&c)?;
            let run = start(&c, seed(&p, &c), argv)?;
            let states = lyapunov_states(&p.spec, samples, max_norm);
            let actions = p.spec.actions.grid(c.actions.unwrap_or(11));
            let r = lyapunov_check(&p.spec, &Lyapunov::AbsNorm, &states, &actions)?;
            let mut pairs = vec![kv("command", "lyapunov"), kv("samples", states.len()), kv("alpha", r.alpha), kv("beta", r.beta), kv("pass", r.pass)];
            if let Some((s, x, ratio)) = r.witness {
                pairs.push(kv("witness_state", s));
                pairs.push(kv("witness_action", x));
                pairs.push(kv("witness_ratio", ratio));
            }
            run.report(&pairs)?;
            Ok(code(r.pass))
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli, &argv) {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
