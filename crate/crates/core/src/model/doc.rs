//! The line-oriented model document.
//!
//! Each non-blank line is `section.key = value`; `#` starts a comment.
//! Sections are `state`, `action`, `theta`, `kernel.true`, `kernel.model`,
//! `payoff` and `solve`. Values are numbers (`inf` allowed), intervals `[a,b]`,
//! grids `grid(lo,hi,n)`, bindings `param[i]`, words, or comma lists. Axis
//! and component indices are trailing or embedded integers, e.g.
//! `state.bounds.1 = [0, 1]` or `kernel.true.1.family = uniform`.

use super::*;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

/// Discretization settings a document may carry; all optional.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GridHints {
    /// Cells per state axis.
    pub states: Option<Vec<usize>>,
    /// Explicit level box, from `state.grid = grid(lo, hi, n)`.
    pub state_box: Option<Vec<(f64, f64)>>,
    /// Truncation radius for unbounded axes.
    pub radius: Option<f64>,
    pub actions: Option<usize>,
    /// `(lo, hi, points)` per parameter axis.
    pub theta: Option<Vec<(f64, f64, usize)>>,
}

/// Solver settings a document may carry; all optional.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveHints {
    pub seed: Option<u64>,
    pub damping: Option<f64>,
    pub max_outer: Option<usize>,
    pub restarts: Option<usize>,
    pub tol_opt: Option<f64>,
    pub tol_belief: Option<f64>,
    pub tol_stat: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelDocument {
    pub spec: SMDPSpec,
    pub grid: GridHints,
    pub solve: SolveHints,
}

/// Parses and validates a model document.
pub fn build_smdp(text: &str) -> Result<SMDPSpec> {
    Ok(parse_document(text)?.spec)
}

pub fn parse_document(text: &str) -> Result<ModelDocument> {
    let doc = Doc::parse(text)?;
    let out = doc.build()?;
    doc.reject_unused()?;
    out.spec.validate()?;
    Ok(out)
}

const SECTIONS: [&str; 7] = ["kernel.true", "kernel.model", "state", "action", "theta", "payoff", "solve"];

struct Doc {
    entries: BTreeMap<String, (usize, String)>,
    used: RefCell<BTreeSet<String>>,
}

impl Doc {
    fn parse(text: &str) -> Result<Doc> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Parse { path: content.to_string(), line, msg: "expected `section.key = value`".into() });
            };
            let key = key.trim().to_string();
            if !SECTIONS.iter().any(|s| key.starts_with(&format!("{s}."))) {
                return Err(Error::Parse { path: key, line, msg: format!("unknown section (expected one of {})", SECTIONS.join(", ")) });
            }
            if entries.insert(key.clone(), (line, value.trim().to_string())).is_some() {
                return Err(Error::Parse { path: key, line, msg: "duplicate key".into() });
            }
        }
        Ok(Doc { entries, used: RefCell::new(BTreeSet::new()) })
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        let (line, v) = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some((*line, v.as_str()))
    }

    fn err(&self, key: &str, msg: impl Into<String>) -> Error {
        let line = self.entries.get(key).map_or(0, |e| e.0);
        Error::Parse { path: key.to_string(), line, msg: msg.into() }
    }

    fn missing(&self, key: &str) -> Error {
        Error::Parse { path: key.to_string(), line: 0, msg: "required key is missing".into() }
    }

    fn reject_unused(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.entries.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(self.err(k, "unknown key")),
            None => Ok(()),
        }
    }

    fn num(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, v)) => parse_num(v).map(Some).ok_or_else(|| self.err(key, format!("expected a number, got `{v}`"))),
        }
    }

    fn req_num(&self, key: &str) -> Result<f64> {
        self.num(key)?.ok_or_else(|| self.missing(key))
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        match self.num(key)? {
            Some(v) if v >= 0.0 && v.fract() == 0.0 => Ok(Some(v as usize)),
            Some(v) => Err(self.err(key, format!("expected a nonnegative integer, got {v}"))),
            None => Ok(None),
        }
    }

    /// `n` or `grid(lo, hi, n)`.
    fn grid(&self, key: &str) -> Result<Option<(Option<(f64, f64)>, usize)>> {
        let Some((_, v)) = self.raw(key) else { return Ok(None) };
        let bad = || self.err(key, format!("expected a count or `grid(lo, hi, n)`, got `{v}`"));
        let as_count = |x: f64| (x >= 1.0 && x.fract() == 0.0).then_some(x as usize);
        if let Some(a) = func_args(v, "grid") {
            if a.len() != 3 || !(a[0] <= a[1]) {
                return Err(bad());
            }
            return Ok(Some((Some((a[0], a[1])), as_count(a[2]).ok_or_else(bad)?)));
        }
        let n = parse_num(v).and_then(as_count).ok_or_else(bad)?;
        Ok(Some((None, n)))
    }

    fn word(&self, key: &str) -> Option<String> {
        self.raw(key).map(|(_, v)| v.to_string())
    }

    fn interval(&self, key: &str) -> Result<Option<(f64, f64)>> {
        let Some((_, v)) = self.raw(key) else { return Ok(None) };
        let inner = v.strip_prefix('[').and_then(|r| r.strip_suffix(']'));
        let parts = inner.map(|r| r.split(',').map(|t| parse_num(t.trim())).collect::<Option<Vec<f64>>>());
        match parts {
            Some(Some(p)) if p.len() == 2 => Ok(Some((p[0], p[1]))),
            _ => Err(self.err(key, format!("expected an interval `[a, b]`, got `{v}`"))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some((_, v)) = self.raw(key) else { return Ok(None) };
        v.split(',')
            .map(|t| parse_num(t.trim()))
            .collect::<Option<Vec<f64>>>()
            .map(Some)
            .ok_or_else(|| self.err(key, format!("expected a comma-separated list of numbers, got `{v}`")))
    }

    fn coef(&self, key: &str) -> Result<Option<Coef>> {
        let Some((_, v)) = self.raw(key) else { return Ok(None) };
        if let Some(i) = v.strip_prefix("param[").and_then(|r| r.strip_suffix(']')) {
            return i.trim().parse().map(|i| Some(Coef::Param(i))).map_err(|_| self.err(key, format!("bad binding `{v}`")));
        }
        parse_num(v).map(|x| Some(Coef::Const(x))).ok_or_else(|| self.err(key, format!("expected a number or `param[i]`, got `{v}`")))
    }

    fn req_coef(&self, key: &str) -> Result<Coef> {
        self.coef(key)?.ok_or_else(|| self.missing(key))
    }

    fn spacing(&self, key: &str) -> Result<Option<Spacing>> {
        let Some((_, v)) = self.raw(key) else { return Ok(None) };
        match v {
            "linear" => Ok(Some(Spacing::Linear)),
            "log" => Ok(Some(Spacing::Log)),
            _ => match func_args(v, "power") {
                Some(a) if a.len() == 1 => Ok(Some(Spacing::Power(a[0]))),
                _ => Err(self.err(key, format!("expected `linear`, `log` or `power(p)`, got `{v}`"))),
            },
        }
    }

    /// `key.i` for axis `i`, falling back to `key` for axis 0.
    fn axis_key(&self, key: &str, i: usize) -> String {
        let indexed = format!("{key}.{i}");
        if i == 0 && !self.entries.contains_key(&indexed) {
            key.to_string()
        } else {
            indexed
        }
    }

    fn build(&self) -> Result<ModelDocument> {
        let dim = self.count("state.dim")?.unwrap_or(1);
        if dim == 0 {
            return Err(self.err("state.dim", "state dimension must be positive"));
        }
        let mut axes = Vec::with_capacity(dim);
        for i in 0..dim {
            let bk = self.axis_key("state.bounds", i);
            let (lo, hi) = self.interval(&bk)?.ok_or_else(|| self.missing(&bk))?;
            let name = self.word(&self.axis_key("state.name", i)).unwrap_or_else(|| format!("s{i}"));
            let spacing = self.spacing(&self.axis_key("state.spacing", i))?.unwrap_or(Spacing::Linear);
            axes.push(StateAxis { name, lo, hi, spacing });
        }
        let initial = match self.raw("state.initial") {
            None => InitialDist::Uniform,
            Some((_, "uniform")) => InitialDist::Uniform,
            Some((_, v)) => match func_args(v, "point") {
                Some(p) => InitialDist::Point(p),
                None => return Err(self.err("state.initial", format!("expected `uniform` or `point(...)`, got `{v}`"))),
            },
        };

        let actions = match (self.interval("action.domain")?, self.list("action.points")?) {
            (Some((lo, hi)), None) => {
                ActionDomain::Interval { lo, hi, spacing: self.spacing("action.spacing")?.unwrap_or(Spacing::Linear) }
            }
            (None, Some(p)) => ActionDomain::Points(p),
            (None, None) => return Err(self.missing("action.domain")),
            (Some(_), Some(_)) => return Err(self.err("action.points", "give either action.domain or action.points")),
        };

        let pdim = self.count("theta.dim")?.unwrap_or(1);
        let (mut lo, mut hi, mut tgrid) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..pdim {
            let dk = self.axis_key("theta.domain", i);
            let (l, h) = self.interval(&dk)?.ok_or_else(|| self.missing(&dk))?;
            if !(l.is_finite() && h.is_finite()) {
                return Err(Error::Domain(format!("parameter domain `{dk}` = [{l}, {h}] is unbounded")));
            }
            lo.push(l);
            hi.push(h);
            let gk = self.axis_key("theta.grid", i);
            if let Some((range, n)) = self.grid(&gk)? {
                let (gl, gh) = range.unwrap_or((l, h));
                if gl < l || gh > h {
                    return Err(self.err(&gk, "parameter grid leaves the parameter domain"));
                }
                tgrid.push((gl, gh, n));
            }
        }
        if !tgrid.is_empty() && tgrid.len() != pdim {
            return Err(self.err("theta.grid", "give a grid size for every parameter axis or none"));
        }

        let true_kernel = self.kernel("kernel.true", dim)?;
        let model_family = self.kernel("kernel.model", dim)?;
        let payoff = self.payoff()?;
        let discount = self.req_num("solve.discount")?;

        let (mut states, mut boxes) = (Vec::new(), Vec::new());
        for i in 0..dim {
            if let Some((range, n)) = self.grid(&self.axis_key("state.grid", i))? {
                states.push(n);
                boxes.extend(range);
            }
        }
        if !states.is_empty() && states.len() != dim {
            return Err(self.err("state.grid", "give a cell count for every state axis or none"));
        }
        if !boxes.is_empty() && boxes.len() != dim {
            return Err(self.err("state.grid", "give `grid(lo, hi, n)` for every state axis or none"));
        }
        let grid = GridHints {
            states: (!states.is_empty()).then_some(states),
            state_box: (!boxes.is_empty()).then_some(boxes),
            radius: self.num("state.radius")?,
            actions: self.count("action.grid")?,
            theta: (!tgrid.is_empty()).then_some(tgrid),
        };
        let solve = SolveHints {
            seed: self.count("solve.seed")?.map(|s| s as u64),
            damping: self.num("solve.damping")?,
            max_outer: self.count("solve.max_outer")?,
            restarts: self.count("solve.restarts")?,
            tol_opt: self.num("solve.tol_opt")?,
            tol_belief: self.num("solve.tol_belief")?,
            tol_stat: self.num("solve.tol_stat")?,
        };
        let spec = SMDPSpec { state_axes: axes, actions, params: ParamDomain::new(lo, hi), true_kernel, model_family, payoff, discount, initial };
        Ok(ModelDocument { spec, grid, solve })
    }

    fn kernel(&self, prefix: &str, dim: usize) -> Result<KernelSpec> {
        let fk = format!("{prefix}.family");
        let family = self.word(&fk).ok_or_else(|| self.missing(&fk))?;
        if family == "product" {
            let parts = (0..dim).map(|i| self.component(&format!("{prefix}.{i}"), prefix)).collect::<Result<Vec<_>>>()?;
            return Ok(KernelSpec::Product(parts));
        }
        self.component(prefix, prefix)
    }

    fn component(&self, p: &str, root: &str) -> Result<KernelSpec> {
        let fk = format!("{p}.family");
        let family = self.word(&fk).ok_or_else(|| self.missing(&fk))?;
        let k = |name: &str| format!("{p}.{name}");
        let zero = Coef::Const(0.0);
        Ok(match family.as_str() {
            "gaussian-linear" => KernelSpec::GaussianLinear {
                a: self.req_coef(&k("a"))?,
                c: self.coef(&k("c"))?.unwrap_or(zero),
                d: self.coef(&k("d"))?.unwrap_or(zero),
                b: self.req_coef(&k("b"))?,
            },
            "lognormal-linear" => KernelSpec::LognormalLinear {
                alpha: self.coef(&k("alpha"))?.unwrap_or(zero),
                beta: self.req_coef(&k("beta"))?,
                gamma: self.coef(&k("gamma"))?.unwrap_or(zero),
                sigma: self.coef(&k("sigma"))?.unwrap_or(Coef::Const(1.0)),
                shock_axis: self.count(&k("shock_axis"))?,
            },
            "truncated-exponential" => {
                let bound = match (self.coef(&k("bound"))?, self.num(&k("bound_multiple"))?) {
                    (Some(c), None) => TruncBound::Fixed(c),
                    (None, Some(m)) => TruncBound::RateMultiple(m),
                    _ => return Err(self.err(&k("bound"), "give exactly one of `bound` and `bound_multiple`")),
                };
                KernelSpec::TruncatedExponential {
                    theta: self.req_coef(&k("theta"))?,
                    bound,
                    action_power: self.num(&k("action_power"))?.unwrap_or(0.0),
                }
            }
            "uniform" => KernelSpec::Uniform { lo: self.req_coef(&k("lo"))?, hi: self.req_coef(&k("hi"))? },
            "tabulated" => self.table(p, root == "kernel.model")?,
            other => return Err(self.err(&fk, format!("unknown kernel family `{other}`"))),
        })
    }

    fn table(&self, p: &str, indexed: bool) -> Result<KernelSpec> {
        let n = self.count(&format!("{p}.states"))?.ok_or_else(|| self.missing(&format!("{p}.states")))?;
        let na = self.count(&format!("{p}.actions"))?.unwrap_or(1);
        let nt = if indexed { self.count(&format!("{p}.tables"))?.unwrap_or(1) } else { 1 };
        let mut tables = Vec::with_capacity(nt);
        for t in 0..nt {
            let mut table = Vec::with_capacity(n * na * n);
            for s in 0..n {
                for x in 0..na {
                    let key = if indexed { format!("{p}.row.{t}.{s}.{x}") } else { format!("{p}.row.{s}.{x}") };
                    let row = self.list(&key)?.ok_or_else(|| self.missing(&key))?;
                    if row.len() != n {
                        return Err(self.err(&key, format!("row has {} entries, expected {n}", row.len())));
                    }
                    table.extend(row);
                }
            }
            tables.push(table);
        }
        Ok(KernelSpec::Tabulated(Table { n_states: n, n_actions: na, tables }))
    }

    fn payoff(&self) -> Result<PayoffSpec> {
        let kind_word = self.word("payoff.kind").ok_or_else(|| self.missing("payoff.kind"))?;
        let axis = |name: &str, default: usize| -> Result<usize> { Ok(self.count(&format!("payoff.{name}"))?.unwrap_or(default)) };
        let kind = match kind_word.as_str() {
            "constant" => PayoffKind::Constant(self.num("payoff.value")?.unwrap_or(0.0)),
            "next-state" => PayoffKind::NextState { axis: axis("axis", 0)? },
            "log-consumption" => PayoffKind::LogConsumption { wealth_axis: axis("wealth_axis", 0)?, shock_axis: self.count("payoff.shock_axis")? },
            "production-cost" => PayoffKind::ProductionCost { shock_axis: axis("shock_axis", 0)?, cost_axis: axis("cost_axis", 1)? },
            "revenue-cost" => PayoffKind::RevenueCost { shock_axis: axis("shock_axis", 0)?, price_axis: axis("price_axis", 1)? },
            "tabulated" => {
                let n = self.count("payoff.states")?.ok_or_else(|| self.missing("payoff.states"))?;
                let na = self.count("payoff.actions")?.unwrap_or(1);
                let mut values = Vec::with_capacity(n * na * n);
                for s in 0..n {
                    for x in 0..na {
                        let key = format!("payoff.row.{s}.{x}");
                        let row = self.list(&key)?.ok_or_else(|| self.missing(&key))?;
                        if row.len() != n {
                            return Err(self.err(&key, format!("row has {} entries, expected {n}", row.len())));
                        }
                        values.extend(row);
                    }
                }
                PayoffKind::Tabulated { n_states: n, n_actions: na, values }
            }
            other => return Err(self.err("payoff.kind", format!("unknown payoff kind `{other}`"))),
        };
        let growth = match self.word("payoff.growth").as_deref() {
            None | Some("bounded") => Growth::Bounded,
            Some("state-bounded") => Growth::StateBounded { a: self.req_num("payoff.A")?, b: self.req_num("payoff.B")? },
            Some(other) => return Err(self.err("payoff.growth", format!("unknown growth class `{other}`"))),
        };
        Ok(PayoffSpec { kind, growth })
    }
}

fn parse_num(v: &str) -> Option<f64> {
    match v {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => v.parse::<f64>().ok().filter(|x| !x.is_nan()),
    }
}

/// Arguments of `name(a, b, ...)`.
fn func_args(v: &str, name: &str) -> Option<Vec<f64>> {
    let inner = v.strip_prefix(name)?.trim().strip_prefix('(')?.strip_suffix(')')?;
    inner.split(',').map(|t| parse_num(t.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const AR1: &str = "\
# AR(1) with a bounded payoff
state.bounds = [-inf, inf]
state.grid = 401
state.radius = 10
action.points = 0
theta.dim = 2
theta.domain.0 = [0, 2]
theta.domain.1 = [0, 1]
theta.grid.0 = 21
theta.grid.1 = grid(0, 1, 11)
kernel.true.family = gaussian-linear
kernel.true.a = 0.5
kernel.true.b = 1
kernel.model.family = gaussian-linear
kernel.model.a = param[0]
kernel.model.b = param[1]
payoff.kind = constant
payoff.value = 0
solve.discount = 0.9
";

    #[test]
    fn parses_ar1_document() {
        let doc = parse_document(AR1).unwrap();
        let s = &doc.spec;
        assert_eq!(s.true_kernel, KernelSpec::gaussian(Coef::Const(0.5), Coef::Const(1.0)));
        assert_eq!(s.model_family, KernelSpec::gaussian(Coef::Param(0), Coef::Param(1)));
        assert_eq!(s.params, ParamDomain::new(vec![0.0, 0.0], vec![2.0, 1.0]));
        assert_eq!(s.actions, ActionDomain::Points(vec![0.0]));
        assert_eq!(doc.grid.states, Some(vec![401]));
        assert_eq!(doc.grid.theta, Some(vec![(0.0, 2.0, 21), (0.0, 1.0, 11)]));
        assert_eq!(doc.grid.radius, Some(10.0));
    }

    #[test]
    fn discount_one_is_domain_error() {
        let text = AR1.replace("solve.discount = 0.9", "solve.discount = 1.0");
        assert!(matches!(build_smdp(&text), Err(Error::Domain(_))));
    }

    #[test]
    fn unbounded_theta_is_domain_error() {
        let text = AR1.replace("theta.domain.0 = [0, 2]", "theta.domain.0 = [0, inf]");
        assert!(matches!(build_smdp(&text), Err(Error::Domain(_))));
    }

    #[test]
    fn parse_errors_name_the_field() {
        let text = AR1.replace("kernel.true.a = 0.5", "kernel.true.a = half");
        match build_smdp(&text) {
            Err(Error::Parse { path, line, .. }) => {
                assert_eq!(path, "kernel.true.a");
                assert_eq!(line, 12);
            }
            other => panic!("{other:?}"),
        }
        let text = format!("{AR1}payoff.colour = red\n");
        assert!(matches!(build_smdp(&text), Err(Error::Parse { path, .. }) if path == "payoff.colour"));
        let text = format!("{AR1}bogus.key = 1\n");
        assert!(matches!(build_smdp(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn product_and_tabulated_kernels() {
        let text = "\
state.dim = 2
state.bounds.0 = [0, 1]
state.bounds.1 = [0, 20]
action.domain = [0.01, 2]
theta.domain = [0, 2]
kernel.true.family = product
kernel.true.0.family = uniform
kernel.true.0.lo = 0
kernel.true.0.hi = 1
kernel.true.1.family = truncated-exponential
kernel.true.1.theta = 0.5
kernel.true.1.bound = 3
kernel.true.1.action_power = 1
kernel.model.family = product
kernel.model.0.family = uniform
kernel.model.0.lo = 0
kernel.model.0.hi = 1
kernel.model.1.family = truncated-exponential
kernel.model.1.theta = param[0]
kernel.model.1.bound_multiple = 10
payoff.kind = production-cost
solve.discount = 0.5
";
        let s = build_smdp(text).unwrap();
        assert_eq!(s.state_dim(), 2);
        assert!(matches!(&s.model_family, KernelSpec::Product(p) if p.len() == 2));

        let tab = "\
state.bounds = [0, 2]
action.points = 0
theta.domain = [0, 1]
kernel.true.family = tabulated
kernel.true.states = 2
kernel.true.row.0.0 = 0.9, 0.1
kernel.true.row.1.0 = 0.2, 0.8
kernel.model.family = tabulated
kernel.model.states = 2
kernel.model.tables = 2
kernel.model.row.0.0.0 = 0.5, 0.5
kernel.model.row.0.1.0 = 0.5, 0.5
kernel.model.row.1.0.0 = 0.8, 0.2
kernel.model.row.1.1.0 = 0.3, 0.7
payoff.kind = tabulated
payoff.states = 2
payoff.row.0.0 = 1, 0
payoff.row.1.0 = 0, 1
solve.discount = 0.9
";
        let s = build_smdp(tab).unwrap();
        assert!(matches!(&s.model_family, KernelSpec::Tabulated(t) if t.tables.len() == 2));
        let bad = tab.replace("0.2, 0.8", "0.2, 0.7");
        assert!(matches!(build_smdp(&bad), Err(Error::Domain(_))));
    }
}
