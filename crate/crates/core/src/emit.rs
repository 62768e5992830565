//! LP-format export of the makespan MILP, and import of external solver
//! assignments back into solutions.
//!
//! The model: binary w_k_i_j pick truck k's arcs, u_k_j marks truck k
//! visiting node j, z_k_j picks group size k for a mission to customer
//! j, continuous f_i_j carry drone flow between consecutive missions
//! (depot = first/last), binary y_i_j witness nonzero flow, T_j are
//! mission completion times, and alpha is the makespan.
//!
//! Beyond the tour, degree, assignment, linking, and big-M timing rows,
//! the emitter always writes flow conservation (`fin`, `fbal`, `fcap`):
//! without them nothing forces flow to actually pass through missions,
//! y can sit at zero, every timing row goes slack, and the drone side
//! prices at zero. With them the timing rows chain along drone
//! successions, cycles off the depot are impossible (durations are
//! positive), and any feasible assignment corresponds to a real
//! schedule finishing by alpha.
//!
//! Subtour elimination for truck arcs is exponential, so only bounded
//! subsets are emitted; anything larger must be separated lazily (see
//! [`crate::exact::separate_subtours`]). The header says so whenever the
//! emitted set is incomplete.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::exact::{separate_subtours, ArcSet, ArcSetError};
use crate::instance::{Instance, NodeId};
use crate::scheduler::{schedule_greedy, schedule_exact_with, ExactOpts, MissionSet};
use crate::solution::{Solution, Violation};
use crate::time::Minutes;

/// How many subtour-elimination rows to write out explicitly.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SecMode {
    /// None; all separation is the solver's job.
    None,
    /// All customer subsets of size 2 and 3.
    PairsAndTriples,
    /// All customer subsets up to this size (at most [`SEC_SIZE_CAP`]).
    AllUpTo(usize),
}

/// Explicit SEC subsets stay small; beyond this the family explodes.
pub const SEC_SIZE_CAP: usize = 5;

/// Binary values from external solvers are accepted within this
/// tolerance.
pub const IMPORT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub struct EmitterConfig {
    /// Also write the fleet-work valid inequality as row "va".
    pub include_va: bool,
    pub sec_mode: SecMode,
    /// Big-M for the timing rows; `None` derives the safe horizon (the
    /// sum over flexible customers of their largest mission duration).
    /// Explicit values below that horizon are rejected.
    pub big_m: Option<Minutes>,
    /// Truck count for the model; `None` uses the instance's.
    pub s: Option<usize>,
}

impl Default for EmitterConfig {
    fn default() -> EmitterConfig {
        EmitterConfig {
            include_va: true,
            sec_mode: SecMode::None,
            big_m: None,
            s: None,
        }
    }
}

#[derive(Error, Debug, PartialEq)]
pub enum EmitError {
    #[error("big-M {given} is below the safe horizon {needed}; timing rows would cut feasible schedules")]
    SmallBigM { given: Minutes, needed: Minutes },
    #[error("explicit subtour rows capped at subsets of {cap}, got {given}")]
    SecTooBig { given: usize, cap: usize },
    #[error("need at least one truck")]
    ZeroTrucks,
}

fn fmt_m(v: Minutes) -> String {
    format!("{v}")
}

/// Linear expression accumulator: "alpha - 3 w_1_0_1 + T_2".
struct Lin {
    buf: String,
}

impl Lin {
    fn new() -> Lin {
        Lin { buf: String::new() }
    }

    fn add_str(&mut self, coef: &str, neg: bool, var: &str) {
        if self.buf.is_empty() {
            if neg {
                self.buf.push_str("- ");
            }
        } else if neg {
            self.buf.push_str(" - ");
        } else {
            self.buf.push_str(" + ");
        }
        if coef != "1" {
            self.buf.push_str(coef);
            self.buf.push(' ');
        }
        self.buf.push_str(var);
    }

    fn add(&mut self, coef: Minutes, var: &str) {
        let neg = coef.is_negative();
        self.add_str(&fmt_m(coef.abs()), neg, var);
    }

    fn add_int(&mut self, coef: i64, var: &str) {
        self.add_str(&coef.unsigned_abs().to_string(), coef < 0, var);
    }
}

fn row(out: &mut String, name: &str, lin: Lin, sense: &str, rhs: &str) {
    let _ = writeln!(out, " {name}: {} {sense} {rhs}", lin.buf);
}

fn vw(k: usize, i: NodeId, j: NodeId) -> String {
    format!("w_{k}_{i}_{j}")
}
fn vu(k: usize, j: NodeId) -> String {
    format!("u_{k}_{j}")
}
fn vz(k: usize, j: NodeId) -> String {
    format!("z_{k}_{j}")
}
fn vy(i: NodeId, j: NodeId) -> String {
    format!("y_{i}_{j}")
}
fn vf(i: NodeId, j: NodeId) -> String {
    format!("f_{i}_{j}")
}
fn vt(j: NodeId) -> String {
    format!("T_{j}")
}

/// Row name for the SEC on subset `h` and truck `k`; hashed when the
/// member list would blow the 255-character row-name budget.
fn sec_row_name(h: &[NodeId], k: usize) -> String {
    let mut name = String::from("sec");
    for &j in h {
        let _ = write!(name, "_{j}");
    }
    let _ = write!(name, "_{k}");
    if name.len() <= 255 {
        return name;
    }
    let mut hash: u64 = 0xcbf29ce484222325;
    for &j in h {
        hash ^= j as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("sec_h{hash:016x}_{k}")
}

/// All size-`r` subsets of `items`, lexicographic, via the classic
/// index-rolling loop.
fn for_each_subset(items: &[NodeId], r: usize, mut f: impl FnMut(&[NodeId])) {
    if r > items.len() {
        return;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        let subset: Vec<NodeId> = idx.iter().map(|&i| items[i]).collect();
        f(&subset);
        let mut i = r;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + items.len() - r {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Write the whole model as LP text. Byte-identical for identical
/// inputs: every iteration below runs in a fixed order.
pub fn emit_milp(inst: &Instance, cfg: &EmitterConfig) -> Result<String, EmitError> {
    let s = cfg.s.unwrap_or_else(|| inst.s());
    if s == 0 {
        return Err(EmitError::ZeroTrucks);
    }
    let m = inst.m() as i64;
    let n = inst.n();
    let flex: Vec<NodeId> = inst.flexible().collect();
    let forced: Vec<NodeId> = inst.forced_truck().collect();
    let customers: Vec<NodeId> = inst.customers().collect();
    let nodes: Vec<NodeId> = (0..=n).collect();
    // Flexible nodes plus depot: the drone-flow vertex set.
    let fnodes: Vec<NodeId> = std::iter::once(0).chain(flex.iter().copied()).collect();

    // Safe horizon: every mission run serially at its slowest option.
    let horizon: Minutes = flex
        .iter()
        .map(|&j| {
            let (q, p) = inst.drone_range(j).expect("flexible");
            (q..=p)
                .filter_map(|k| inst.drone_time(j, k))
                .fold(Minutes::ZERO, Minutes::max)
        })
        .fold(Minutes::ZERO, |a, b| a + b);
    let big_m = match cfg.big_m {
        Some(v) if v < horizon => {
            return Err(EmitError::SmallBigM { given: v, needed: horizon })
        }
        Some(v) => v,
        None => horizon,
    };
    let sec_cap = match cfg.sec_mode {
        SecMode::None => 0,
        SecMode::PairsAndTriples => 3,
        SecMode::AllUpTo(r) if r > SEC_SIZE_CAP => {
            return Err(EmitError::SecTooBig { given: r, cap: SEC_SIZE_CAP })
        }
        SecMode::AllUpTo(r) => r,
    };
    // Cycles through all n customers would strand every tour away from the
    // depot, which the degree and use rows already forbid, so covering subset
    // sizes up to n-1 is enough to make the formulation subtour-free.
    let secs_complete = sec_cap + 1 >= n;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ PDSVRP-c makespan model: {s} trucks, {m} coupled drones, {n} customers"
    );
    let _ = writeln!(out, "\\ instance: {}", inst.name());
    let _ = writeln!(out, "\\ big-M for timing rows: {}", fmt_m(big_m));
    out.push_str(
        "\\ fin/fbal/fcap rows conserve drone flow through missions; they keep\n\
         \\ the y witnesses honest so the timing rows cannot be bypassed.\n",
    );
    if !secs_complete {
        out.push_str(
            "\\ WARNING: subtour elimination is incomplete at this setting. Solve\n\
             \\ with lazy separation: cut every truck-arc cycle avoiding the depot\n\
             \\ (row family sec) or the tours in the answer may be disconnected.\n",
        );
    }
    out.push_str("Minimize\n obj: alpha\nSubject To\n");

    // Truck tour duration rows: alpha at least each truck's tour time.
    for k in 1..=s {
        let mut lin = Lin::new();
        lin.add_int(1, "alpha");
        for &i in &nodes {
            for &j in &nodes {
                if i != j {
                    lin.add(-inst.truck_time(i, j), &vw(k, i, j));
                }
            }
        }
        row(&mut out, &format!("tour_{k}"), lin, ">=", "0");
    }

    // alpha covers every mission completion.
    for &j in &flex {
        let mut lin = Lin::new();
        lin.add_int(1, "alpha");
        lin.add_int(-1, &vt(j));
        row(&mut out, &format!("tmax_{j}"), lin, ">=", "0");
    }

    // Flexible customers: exactly one truck visit or one group size.
    for &j in &flex {
        let mut lin = Lin::new();
        for k in 1..=s {
            lin.add_int(1, &vu(k, j));
        }
        let (q, p) = inst.drone_range(j).expect("flexible");
        for k in q..=p {
            lin.add_int(1, &vz(k, j));
        }
        row(&mut out, &format!("assignf_{j}"), lin, "=", "1");
    }

    // Truck-only customers: exactly one truck visit.
    for &j in &forced {
        let mut lin = Lin::new();
        for k in 1..=s {
            lin.add_int(1, &vu(k, j));
        }
        row(&mut out, &format!("assignt_{j}"), lin, "=", "1");
    }

    // A truck serves customers only if it leaves the depot.
    for &j in &customers {
        for k in 1..=s {
            let mut lin = Lin::new();
            lin.add_int(1, &vu(k, 0));
            lin.add_int(-1, &vu(k, j));
            row(&mut out, &format!("use_{j}_{k}"), lin, ">=", "0");
        }
    }

    // Arc degree at each node matches the visit marker, split by
    // direction so every solution is an honest directed circulation.
    // The combined in-plus-out form admits vertices with two departures
    // and no arrival, which prices the same on a symmetric matrix but
    // cannot be read back as tours.
    for &j in &nodes {
        for k in 1..=s {
            let mut lin = Lin::new();
            for &i in &nodes {
                if i != j {
                    lin.add_int(1, &vw(k, i, j));
                }
            }
            lin.add_int(-1, &vu(k, j));
            row(&mut out, &format!("degin_{j}_{k}"), lin, "=", "0");
            let mut lin = Lin::new();
            for &l in &nodes {
                if l != j {
                    lin.add_int(1, &vw(k, j, l));
                }
            }
            lin.add_int(-1, &vu(k, j));
            row(&mut out, &format!("degout_{j}_{k}"), lin, "=", "0");
        }
    }

    // Explicit subtour elimination up to the configured subset size.
    for r in 2..=sec_cap.min(n) {
        for_each_subset(&customers, r, |h| {
            for k in 1..=s {
                let mut lin = Lin::new();
                for &i in h {
                    for &j in h {
                        if i != j {
                            lin.add_int(1, &vw(k, i, j));
                        }
                    }
                }
                row(
                    &mut out,
                    &sec_row_name(h, k),
                    lin,
                    "<=",
                    &(h.len() - 1).to_string(),
                );
            }
        });
    }

    // Flow witnesses: y_i_j = 1 exactly when f_i_j > 0.
    for &i in &fnodes {
        for &j in &fnodes {
            if i == j {
                continue;
            }
            let mut lin = Lin::new();
            lin.add_int(m, &vy(i, j));
            lin.add_int(-1, &vf(i, j));
            row(&mut out, &format!("flo_{i}_{j}"), lin, ">=", "0");
            let mut lin = Lin::new();
            lin.add_int(1, &vf(i, j));
            lin.add_int(-1, &vy(i, j));
            row(&mut out, &format!("fhi_{i}_{j}"), lin, ">=", "0");
        }
    }

    // Timing: a mission finishes after its drones' previous missions.
    for &i in &fnodes {
        for &j in &flex {
            if i == j {
                continue;
            }
            let mut lin = Lin::new();
            lin.add_int(1, &vt(j));
            lin.add_int(-1, &vt(i));
            let (q, p) = inst.drone_range(j).expect("flexible");
            for k in q..=p {
                lin.add(-inst.drone_time(j, k).expect("offered"), &vz(k, j));
            }
            lin.add(-big_m, &vy(i, j));
            row(
                &mut out,
                &format!("sync_{i}_{j}"),
                lin,
                ">=",
                &fmt_m(-big_m),
            );
        }
    }

    // Flow conservation: inflow equals the drones the mission needs,
    // inflow equals outflow everywhere, depot issues at most m.
    for &j in &flex {
        let mut lin = Lin::new();
        for &i in &fnodes {
            if i != j {
                lin.add_int(1, &vf(i, j));
            }
        }
        let (q, p) = inst.drone_range(j).expect("flexible");
        for k in q..=p {
            lin.add_int(-(k as i64), &vz(k, j));
        }
        row(&mut out, &format!("fin_{j}"), lin, "=", "0");
    }
    if !flex.is_empty() {
        for &j in &fnodes {
            let mut lin = Lin::new();
            for &i in &fnodes {
                if i != j {
                    lin.add_int(1, &vf(i, j));
                }
            }
            for &l in &fnodes {
                if l != j {
                    lin.add_int(-1, &vf(j, l));
                }
            }
            row(&mut out, &format!("fbal_{j}"), lin, "=", "0");
        }
        let mut lin = Lin::new();
        for &j in &flex {
            lin.add_int(1, &vf(0, j));
        }
        row(&mut out, "fcap", lin, "<=", &m.to_string());
    }

    // Fleet-work valid inequality: m drones cannot beat total work / m.
    if cfg.include_va {
        let mut lin = Lin::new();
        lin.add_int(m, "alpha");
        for &j in &flex {
            let (q, p) = inst.drone_range(j).expect("flexible");
            for k in q..=p {
                let tau = inst.drone_time(j, k).expect("offered");
                lin.add(-(tau * k as i64), &vz(k, j));
            }
        }
        row(&mut out, "va", lin, ">=", "0");
    }

    out.push_str("Bounds\n");
    let _ = writeln!(out, " alpha >= 0");
    if !flex.is_empty() {
        for &j in &fnodes {
            let _ = writeln!(out, " {} >= 0", vt(j));
        }
    }
    for &i in &fnodes {
        for &j in &fnodes {
            if i != j {
                let _ = writeln!(out, " 0 <= {} <= {m}", vf(i, j));
            }
        }
    }

    out.push_str("Binaries\n");
    for k in 1..=s {
        for &i in &nodes {
            for &j in &nodes {
                if i != j {
                    let _ = writeln!(out, " {}", vw(k, i, j));
                }
            }
        }
    }
    for k in 1..=s {
        for &j in &nodes {
            let _ = writeln!(out, " {}", vu(k, j));
        }
    }
    for &j in &flex {
        let (q, p) = inst.drone_range(j).expect("flexible");
        for k in q..=p {
            let _ = writeln!(out, " {}", vz(k, j));
        }
    }
    for &i in &fnodes {
        for &j in &fnodes {
            if i != j {
                let _ = writeln!(out, " {}", vy(i, j));
            }
        }
    }
    out.push_str("End\n");
    Ok(out)
}

#[derive(Error, Debug)]
pub enum ImportError {
    #[error("line {line}: expected \"name value\", got {text:?}")]
    Parse { line: usize, text: String },
    #[error("unrecognized variable {0:?}")]
    UnknownVariable(String),
    #[error("variable {name} out of range: {reason}")]
    BadVariable { name: String, reason: String },
    #[error("binary variable {name} has fractional value {value}")]
    Fractional { name: String, value: f64 },
    #[error(transparent)]
    Arcs(#[from] ArcSetError),
    #[error("truck {truck} arcs contain subtours {cuts:?}; add the matching sec rows and re-solve")]
    Subtour { truck: usize, cuts: Vec<BTreeSet<NodeId>> },
    #[error("customer {0} assigned more than one group size")]
    DoubleAssignment(NodeId),
    #[error("imported assignment is not a feasible solution: {}",
            crate::solution::summarize(.0))]
    Violations(Vec<Violation>),
    #[error("imported alpha {alpha} cannot cover the replayed makespan {makespan}")]
    TimingMismatch { alpha: f64, makespan: f64 },
}

fn near(v: f64, target: f64) -> bool {
    (v - target).abs() <= IMPORT_TOL
}

fn as_binary(name: &str, v: f64) -> Result<bool, ImportError> {
    if near(v, 0.0) {
        Ok(false)
    } else if near(v, 1.0) {
        Ok(true)
    } else {
        Err(ImportError::Fractional { name: name.to_string(), value: v })
    }
}

/// Rebuild a [`Solution`] from an external solver's "name value" lines.
///
/// Truck tours come from the w arcs (each truck's arcs must form one
/// depot circuit; cycles avoiding the depot are rejected with their
/// vertex sets, ready to become sec rows). Missions come from the z
/// variables. Drone sequences are rebuilt by the internal scheduler:
/// any feasible assignment proves a schedule finishing by alpha exists,
/// so the optimal schedule of the imported missions must too; if it
/// does not, the assignment was infeasible and is rejected. The u, y,
/// f, and T values are validated for shape but the structure above is
/// authoritative.
pub fn import_milp_solution(text: &str, inst: &Instance) -> Result<Solution, ImportError> {
    let n = inst.n();
    let s = inst.s();
    let mut alpha: Option<f64> = None;
    let mut arcs: BTreeMap<usize, Vec<(NodeId, NodeId)>> = BTreeMap::new();
    let mut missions: BTreeMap<NodeId, usize> = BTreeMap::new();

    for (lno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('\\') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(name), Some(val), None) = (it.next(), it.next(), it.next()) else {
            return Err(ImportError::Parse { line: lno + 1, text: raw.to_string() });
        };
        let value: f64 = val.parse().map_err(|_| ImportError::Parse {
            line: lno + 1,
            text: raw.to_string(),
        })?;

        let parts: Vec<&str> = name.split('_').collect();
        let num = |p: &str| p.parse::<usize>().ok();
        match parts.as_slice() {
            ["alpha"] => alpha = Some(value),
            ["T", j] if num(j).is_some_and(|j| j <= n) => {}
            ["w", k, i, j] => {
                let (Some(k), Some(i), Some(j)) = (num(k), num(i), num(j)) else {
                    return Err(ImportError::UnknownVariable(name.to_string()));
                };
                if k == 0 || k > s || i > n || j > n || i == j {
                    return Err(ImportError::BadVariable {
                        name: name.to_string(),
                        reason: format!("no truck arc ({i}, {j}) for truck {k}"),
                    });
                }
                if as_binary(name, value)? {
                    arcs.entry(k).or_default().push((i, j));
                }
            }
            ["z", k, j] => {
                let (Some(k), Some(j)) = (num(k), num(j)) else {
                    return Err(ImportError::UnknownVariable(name.to_string()));
                };
                if j == 0 || j > n || inst.drone_time(j, k).is_none() {
                    return Err(ImportError::BadVariable {
                        name: name.to_string(),
                        reason: format!("customer {j} has no group size {k}"),
                    });
                }
                if as_binary(name, value)? && missions.insert(j, k).is_some() {
                    return Err(ImportError::DoubleAssignment(j));
                }
            }
            ["u", k, j] => {
                let (Some(k), Some(j)) = (num(k), num(j)) else {
                    return Err(ImportError::UnknownVariable(name.to_string()));
                };
                if k == 0 || k > s || j > n {
                    return Err(ImportError::BadVariable {
                        name: name.to_string(),
                        reason: format!("no visit marker for truck {k}, node {j}"),
                    });
                }
                as_binary(name, value)?;
            }
            ["y", i, j] if num(i).is_some() && num(j).is_some() => {
                as_binary(name, value)?;
            }
            ["f", i, j] if num(i).is_some() && num(j).is_some() => {
                if value < -IMPORT_TOL || value > inst.m() as f64 + IMPORT_TOL {
                    return Err(ImportError::BadVariable {
                        name: name.to_string(),
                        reason: format!("flow {value} outside 0..={}", inst.m()),
                    });
                }
            }
            _ => return Err(ImportError::UnknownVariable(name.to_string())),
        }
    }

    let mut tours: Vec<Vec<NodeId>> = Vec::new();
    for (truck, mut list) in arcs {
        list.sort();
        let set = ArcSet { truck, arcs: list };
        let cuts = separate_subtours(&set)?;
        if !cuts.is_empty() {
            return Err(ImportError::Subtour { truck, cuts });
        }
        let next: BTreeMap<NodeId, NodeId> = set.arcs.iter().copied().collect();
        if let Some(&first) = next.get(&0) {
            let mut tour = Vec::new();
            let mut at = first;
            while at != 0 {
                tour.push(at);
                at = next[&at];
            }
            if !tour.is_empty() {
                tours.push(tour);
            }
        }
    }

    let drones = if missions.is_empty() {
        Vec::new()
    } else {
        let ms = MissionSet::from_choices(inst, &missions).expect("ids and groups checked");
        let sched = schedule_exact_with(&ms, ExactOpts { cap: 32, max_nodes: 400_000 });
        match sched {
            Ok(es) => es.plan.sequences,
            // Too many missions to prove; a greedy replay still gives a
            // valid (if conservative) schedule to compare with alpha.
            Err(_) => schedule_greedy(&ms).expect("validated").sequences,
        }
    };

    let sol = Solution { drones, missions, tours };
    let violations = sol.check(inst);
    if !violations.is_empty() {
        return Err(ImportError::Violations(violations));
    }
    let makespan = sol.evaluate(inst).expect("checker-clean").makespan;
    if let Some(a) = alpha {
        if makespan.as_f64() > a + IMPORT_TOL {
            return Err(ImportError::TimingMismatch { alpha: a, makespan: makespan.as_f64() });
        }
    }
    Ok(sol)
}
