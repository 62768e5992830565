//! Exact solvers: optimal tours, min-max tour partitions, subtour
//! separation, lower bounds, and a branch-and-bound solver for the whole
//! problem.
//!
//! Everything here runs on exact rational minutes, so "optimal" means
//! optimal, not optimal-up-to-epsilon. The price is hard size caps:
//! Held-Karp tolerates 18 customers, the partition DP 14, and the full
//! solver proves optimality up to [`SOLVE_CAP`]. Beyond the caps the
//! solver degrades to bound-plus-heuristic instead of failing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::heuristic;
use crate::instance::{Instance, NodeId};
use crate::scheduler::{
    drone_lb, schedule_exact_with, schedule_greedy, ExactOpts, MissionSet,
};
use crate::solution::Solution;
use crate::time::Minutes;

/// Largest subset Held-Karp accepts (2^18 * 18 table entries).
pub const TOUR_CAP: usize = 18;
/// Largest subset the min-max partition DP accepts for s >= 2 (3^14
/// submask pairs per layer).
pub const PARTITION_CAP: usize = 14;
/// Largest instance the branch-and-bound solver will try to prove.
pub const SOLVE_CAP: usize = 16;

#[derive(Error, Debug, PartialEq)]
pub enum ExactError {
    #[error("{size} customers exceeds the cap of {cap} for this solver")]
    SizeCap { size: usize, cap: usize },
    #[error("customer id {0} is not in the instance")]
    BadSubset(NodeId),
    #[error("customer id {0} listed twice")]
    DuplicateInSubset(NodeId),
    #[error("need at least one tour")]
    NoTours,
}

/// Held-Karp dynamic program over one customer subset. `dp[mask][i]` is
/// the cheapest depot-to-`verts[i]` path visiting exactly `mask`; closed
/// tour costs fall out by adding the leg home. Built once, then both the
/// optimum for every submask and an optimal visiting order can be read
/// off. Reconstruction retraces the DP instead of storing parents, which
/// keeps the table at one `Minutes` per state.
struct TourDp<'a> {
    inst: &'a Instance,
    verts: Vec<NodeId>,
    dp: Vec<Option<Minutes>>,
    closed: Vec<Minutes>,
}

impl<'a> TourDp<'a> {
    fn new(inst: &'a Instance, subset: &[NodeId]) -> TourDp<'a> {
        let verts = subset.to_vec();
        let u = verts.len();
        let mut dp = vec![None; (1usize << u) * u.max(1)];
        let idx = |mask: usize, i: usize| mask * u + i;
        for i in 0..u {
            dp[idx(1 << i, i)] = Some(inst.truck_time(0, verts[i]));
        }
        for mask in 1..1usize << u {
            for last in 0..u {
                if mask & (1 << last) == 0 {
                    continue;
                }
                let Some(base) = dp[idx(mask, last)] else { continue };
                for next in 0..u {
                    if mask & (1 << next) != 0 {
                        continue;
                    }
                    let cand = base + inst.truck_time(verts[last], verts[next]);
                    let slot = &mut dp[idx(mask | (1 << next), next)];
                    if slot.map_or(true, |v| cand < v) {
                        *slot = Some(cand);
                    }
                }
            }
        }
        let mut closed = vec![Minutes::ZERO; 1usize << u];
        for mask in 1..1usize << u {
            closed[mask] = (0..u)
                .filter(|i| mask & (1 << i) != 0)
                .filter_map(|i| dp[idx(mask, i)].map(|v| v + inst.truck_time(verts[i], 0)))
                .min()
                .expect("every nonempty mask is reachable");
        }
        TourDp { inst, verts, dp, closed }
    }

    /// Optimal closed-tour cost for a submask of the build subset.
    fn cost(&self, mask: usize) -> Minutes {
        self.closed[mask]
    }

    /// One optimal visiting order for `mask`, retraced from the DP.
    /// Deterministic: the lowest-index witness wins at every step.
    fn order(&self, mask: usize) -> Vec<NodeId> {
        let u = self.verts.len();
        let idx = |mask: usize, i: usize| mask * u + i;
        let mut rest = mask;
        let mut out = Vec::new();
        if rest == 0 {
            return out;
        }
        let mut last = (0..u)
            .filter(|&i| {
                rest & (1 << i) != 0
                    && self.dp[idx(rest, i)]
                        .map(|v| v + self.inst.truck_time(self.verts[i], 0))
                        == Some(self.closed[rest])
            })
            .next()
            .expect("closed cost has a witness");
        loop {
            out.push(self.verts[last]);
            let prev_mask = rest & !(1 << last);
            if prev_mask == 0 {
                break;
            }
            let want = self.dp[idx(rest, last)].expect("on an optimal path");
            last = (0..u)
                .find(|&i| {
                    prev_mask & (1 << i) != 0
                        && self.dp[idx(prev_mask, i)].map(|v| {
                            v + self.inst.truck_time(self.verts[i], self.verts[last])
                        }) == Some(want)
                })
                .expect("DP transition has a witness");
            rest = prev_mask;
        }
        out.reverse();
        out
    }
}

fn validate_subset(inst: &Instance, subset: &[NodeId], cap: usize) -> Result<(), ExactError> {
    if subset.len() > cap {
        return Err(ExactError::SizeCap { size: subset.len(), cap });
    }
    let mut seen = BTreeSet::new();
    for &j in subset {
        if j == 0 || j > inst.n() {
            return Err(ExactError::BadSubset(j));
        }
        if !seen.insert(j) {
            return Err(ExactError::DuplicateInSubset(j));
        }
    }
    Ok(())
}

/// Optimal single tour over `subset`: visiting order and depot-to-depot
/// duration. Empty subset gives an empty order of duration zero.
pub fn held_karp(inst: &Instance, subset: &[NodeId]) -> Result<(Vec<NodeId>, Minutes), ExactError> {
    validate_subset(inst, subset, TOUR_CAP)?;
    if subset.is_empty() {
        return Ok((Vec::new(), Minutes::ZERO));
    }
    let dp = TourDp::new(inst, subset);
    let full = (1usize << subset.len()) - 1;
    Ok((dp.order(full), dp.cost(full)))
}

/// Min-max partition table on top of a [`TourDp`]: `best[k][mask]` is
/// the smallest possible longest tour when `mask` is split into at most
/// `k` tours. Layer k is built from layer k-1 by peeling one tour off as
/// a submask; `pick[k][mask]` remembers the peeled submask for
/// reconstruction.
struct PartitionDp {
    best: Vec<Vec<Minutes>>,
    pick: Vec<Vec<usize>>,
}

impl PartitionDp {
    fn new(dp: &TourDp, s: usize) -> PartitionDp {
        let size = dp.closed.len();
        let u = dp.verts.len();
        let layers = s.min(u.max(1));
        let mut best = vec![dp.closed.clone()];
        // pick[k][mask]: submask peeled off as one tour at layer k, or 0
        // when the layer defers to the one below unchanged.
        let mut pick = vec![vec![0usize; size]];
        for k in 1..layers {
            let prev = &best[k - 1];
            let mut cur = prev.clone();
            let mut cur_pick = vec![0usize; size];
            for mask in 1..size {
                // Iterate proper nonempty submasks of mask.
                let mut sub = (mask - 1) & mask;
                while sub != 0 {
                    let cand = dp.closed[sub].max(prev[mask & !sub]);
                    if cand < cur[mask] {
                        cur[mask] = cand;
                        cur_pick[mask] = sub;
                    }
                    sub = (sub - 1) & mask;
                }
            }
            best.push(cur);
            pick.push(cur_pick);
        }
        PartitionDp { best, pick }
    }

    fn cost(&self, mask: usize) -> Minutes {
        self.best[self.best.len() - 1][mask]
    }

    /// Split `mask` into the tours behind `cost(mask)`.
    fn parts(&self, mask: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut layer = self.best.len() - 1;
        let mut rest = mask;
        while rest != 0 {
            if layer == 0 {
                out.push(rest);
                break;
            }
            let sub = self.pick[layer][rest];
            if sub != 0 {
                out.push(sub);
                rest &= !sub;
            }
            layer -= 1;
        }
        out
    }
}

/// Partition `subset` into at most `s` tours minimizing the longest one.
/// Returns the tours (each optimally ordered, sorted by smallest member)
/// and that longest duration. With `s = 1` this is plain [`held_karp`].
pub fn minmax_tours(
    inst: &Instance,
    subset: &[NodeId],
    s: usize,
) -> Result<(Vec<Vec<NodeId>>, Minutes), ExactError> {
    if s == 0 {
        return Err(ExactError::NoTours);
    }
    if s == 1 {
        let (order, cost) = held_karp(inst, subset)?;
        let tours = if order.is_empty() { Vec::new() } else { vec![order] };
        return Ok((tours, cost));
    }
    validate_subset(inst, subset, PARTITION_CAP)?;
    if subset.is_empty() {
        return Ok((Vec::new(), Minutes::ZERO));
    }
    let dp = TourDp::new(inst, subset);
    let part = PartitionDp::new(&dp, s);
    let full = (1usize << subset.len()) - 1;
    let mut tours: Vec<Vec<NodeId>> = part
        .parts(full)
        .into_iter()
        .map(|m| dp.order(m))
        .collect();
    tours.sort_by_key(|t| t.iter().copied().min());
    Ok((tours, part.cost(full)))
}

/// A set of truck arcs, as a fractional-solution rounding would hand
/// over: `truck` names which truck's arc variables these were (only
/// echoed in diagnostics), `arcs` the selected (from, to) pairs.
#[derive(Clone, Debug)]
pub struct ArcSet {
    pub truck: usize,
    pub arcs: Vec<(NodeId, NodeId)>,
}

#[derive(Error, Debug, PartialEq)]
pub enum ArcSetError {
    #[error("truck {truck}: arc ({from}, {to}) listed twice")]
    DuplicateArc { truck: usize, from: NodeId, to: NodeId },
    #[error("truck {truck}: vertex {vertex} has in-degree {ind} and out-degree {outd}; integer degrees must match and stay <= 1")]
    Degree { truck: usize, vertex: NodeId, ind: usize, outd: usize },
}

/// Find every cycle in `arcs` that avoids the depot; each is the vertex
/// set of a violated subtour-elimination cut. Arcs must describe
/// disjoint paths/cycles (in-degree = out-degree <= 1 everywhere), i.e.
/// an integral degree-feasible selection. Cycles come back sorted by
/// their smallest vertex. Linear in the number of arcs.
pub fn separate_subtours(set: &ArcSet) -> Result<Vec<BTreeSet<NodeId>>, ArcSetError> {
    let mut next = BTreeMap::<NodeId, NodeId>::new();
    let mut ind = BTreeMap::<NodeId, usize>::new();
    for &(a, b) in &set.arcs {
        if next.insert(a, b).is_some() {
            // Either a duplicate or a second out-arc; tell them apart.
            let dup = set.arcs.iter().filter(|&&(x, y)| (x, y) == (a, b)).count() > 1;
            if dup {
                return Err(ArcSetError::DuplicateArc { truck: set.truck, from: a, to: b });
            }
            return Err(ArcSetError::Degree {
                truck: set.truck,
                vertex: a,
                ind: *ind.get(&a).unwrap_or(&0),
                outd: 2,
            });
        }
        *ind.entry(b).or_default() += 1;
    }
    for (&v, &d) in &ind {
        let outd = usize::from(next.contains_key(&v));
        if d > 1 || d != outd {
            // The depot may legitimately start/end open paths only when
            // degrees still match; anything lopsided is malformed.
            return Err(ArcSetError::Degree { truck: set.truck, vertex: v, ind: d, outd });
        }
    }
    for (&v, _) in &next {
        if ind.get(&v).copied().unwrap_or(0) == 0 {
            return Err(ArcSetError::Degree { truck: set.truck, vertex: v, ind: 0, outd: 1 });
        }
    }

    // Every component is now a cycle. Walk off the depot circuit first,
    // then every remaining cycle is a subtour.
    let mut visited = BTreeSet::new();
    if next.contains_key(&0) {
        let mut at = 0;
        loop {
            visited.insert(at);
            at = next[&at];
            if at == 0 {
                break;
            }
        }
    }
    let mut cycles = Vec::new();
    for (&start, _) in &next {
        if visited.contains(&start) {
            continue;
        }
        let mut cycle = BTreeSet::new();
        let mut at = start;
        while cycle.insert(at) {
            visited.insert(at);
            at = next[&at];
        }
        cycles.push(cycle);
    }
    cycles.sort_by_key(|c| c.iter().next().copied());
    Ok(cycles)
}

/// Where a root bound came from.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    /// Total committed drone work spread over the fleet.
    DroneWork,
    /// One mission alone already takes this long.
    LongestMission,
    /// The truck-only customers force tours at least this long.
    TruckTours,
}

/// Makespan lower bound before any branching, split by argument.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct BoundReport {
    /// Work-conservation bound over the committed missions: m drones
    /// cannot finish W drone-minutes of work before W/m (rounded up when
    /// every duration is integral).
    pub va: Minutes,
    pub longest_mission: Minutes,
    /// Min-max optimum over the truck-only customers where the
    /// partition DP fits, otherwise the longest single round trip.
    pub truck: Minutes,
    pub bound: Minutes,
    pub dominant: BoundSource,
}

#[derive(Error, Debug, PartialEq)]
pub enum BoundError {
    #[error("no customer {0} in the instance")]
    UnknownCustomer(NodeId),
    #[error("customer {customer}: group size {k} not offered")]
    BadForcedGroup { customer: NodeId, k: usize },
    #[error("forced customer {0} is truck-only")]
    ForcedTruckOnly(NodeId),
}

/// Root lower bound for `inst` given externally committed missions
/// (customer to group size). Customers absent from `forced` contribute
/// only through the truck term if they are truck-only, and not at all
/// if flexible; the bound is therefore valid for every completion of
/// the commitment.
pub fn root_bound(
    inst: &Instance,
    forced: &BTreeMap<NodeId, usize>,
) -> Result<BoundReport, BoundError> {
    for (&j, &k) in forced {
        if j == 0 || j > inst.n() {
            return Err(BoundError::UnknownCustomer(j));
        }
        if inst.is_truck_only(j) {
            return Err(BoundError::ForcedTruckOnly(j));
        }
        if inst.drone_time(j, k).is_none() {
            return Err(BoundError::BadForcedGroup { customer: j, k });
        }
    }
    let ms = MissionSet::from_choices(inst, forced).expect("validated above");
    let db = drone_lb(&ms);

    let truck_set: Vec<NodeId> = inst.forced_truck().collect();
    let truck = if truck_set.len() <= PARTITION_CAP || inst.s() == 1 && truck_set.len() <= TOUR_CAP
    {
        minmax_tours(inst, &truck_set, inst.s()).expect("within cap").1
    } else {
        truck_set
            .iter()
            .map(|&j| inst.round_trip(j))
            .fold(Minutes::ZERO, Minutes::max)
    };

    let bound = db.work_share.max(db.longest).max(truck);
    let dominant = if bound == truck {
        BoundSource::TruckTours
    } else if bound == db.work_share {
        BoundSource::DroneWork
    } else {
        BoundSource::LongestMission
    };
    Ok(BoundReport {
        va: db.work_share,
        longest_mission: db.longest,
        truck,
        bound,
        dominant,
    })
}

/// Node and time limits for [`solve_exact`]. `None` means unlimited.
#[derive(Clone, Copy, Debug, Default)]
pub struct Budget {
    pub max_nodes: Option<u64>,
    pub max_millis: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// lb = ub, proven.
    Optimal,
    /// A solution and a valid bound, but no proof was attempted (the
    /// instance exceeds [`SOLVE_CAP`]).
    Feasible,
    /// No feasible solution exists. Unreachable for valid instances
    /// (trucks can always serve everyone) but kept for the API.
    Infeasible,
    /// The search started but a node/time limit (or an inner scheduling
    /// budget) cut it short; lb and ub are still valid.
    BudgetExhausted,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub time_ms: u64,
    /// When the final incumbent was first found.
    pub time_best_ms: u64,
    /// Nodes cut because the drone-side bound alone reached the
    /// incumbent.
    pub prunes_by_va: u64,
    /// Nodes cut by the combined bound.
    pub prunes_by_incumbent: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub lb: Minutes,
    pub ub: Minutes,
    pub incumbent: Solution,
    pub stats: SolveStats,
}

impl SolveOutcome {
    /// One CSV row in the reporting style used for result tables:
    /// `name,"[lb, ub]",sec_tot,sec_bst` with seconds to one decimal.
    pub fn table_row(&self, name: &str) -> String {
        format!(
            "{},\"[{}, {}]\",{:.1},{:.1}",
            name,
            self.lb,
            self.ub,
            self.stats.time_ms as f64 / 1000.0,
            self.stats.time_best_ms as f64 / 1000.0,
        )
    }
}

struct Search<'a> {
    inst: &'a Instance,
    dp: TourDp<'a>,
    part: PartitionDp,
    /// Flexible customers in branching order.
    flex: Vec<NodeId>,
    budget: Budget,
    started: Instant,
    best: Minutes,
    best_choices: BTreeMap<NodeId, usize>,
    best_truck_mask: usize,
    stats: SolveStats,
    /// Cache: sorted (group, duration) multiset to proven-optimal span.
    spans: HashMap<Vec<(usize, Minutes)>, (Minutes, bool)>,
    aborted: bool,
    /// Min lower bound over subtrees left unexplored after an abort.
    open_lb: Option<Minutes>,
    /// Min conservative bound over leaves whose inner scheduling run was
    /// cut by its own budget; caps the provable lb.
    shaky_lb: Option<Minutes>,
}

impl<'a> Search<'a> {
    fn over_budget(&self) -> bool {
        if let Some(mn) = self.budget.max_nodes {
            if self.stats.nodes >= mn {
                return true;
            }
        }
        if let Some(mt) = self.budget.max_millis {
            if self.stats.nodes % 512 == 0 && self.started.elapsed().as_millis() as u64 >= mt {
                return true;
            }
        }
        false
    }

    fn note_open(&mut self, lb: Minutes) {
        self.open_lb = Some(self.open_lb.map_or(lb, |v| v.min(lb)));
    }

    /// Exact drone span for a committed mission choice set, cached by
    /// the (group, duration) multiset since only durations matter to
    /// the value.
    fn drone_span(&mut self, choices: &BTreeMap<NodeId, usize>) -> (Minutes, bool) {
        let ms = MissionSet::from_choices(self.inst, choices).expect("feasible branch");
        let mut key: Vec<(usize, Minutes)> = ms
            .missions
            .iter()
            .map(|mi| (mi.group, mi.duration))
            .collect();
        key.sort();
        if let Some(&hit) = self.spans.get(&key) {
            return hit;
        }
        // A greedy plan matching the work bound needs no search.
        let floor = drone_lb(&ms).bound;
        let greedy = schedule_greedy(&ms).expect("feasible branch").makespan;
        let out = if greedy == floor {
            (greedy, true)
        } else {
            let opts = ExactOpts { cap: 32, max_nodes: 400_000 };
            let sched = schedule_exact_with(&ms, opts).expect("feasible branch");
            (sched.plan.makespan, sched.proven)
        };
        self.spans.insert(key, out);
        out
    }

    /// DFS over the flexible customers from index `at` with the
    /// committed state; mask bits index `dp.verts`.
    fn dfs(
        &mut self,
        at: usize,
        truck_mask: usize,
        choices: &mut BTreeMap<NodeId, usize>,
        committed_work: Minutes,
        longest: Minutes,
        all_integral: bool,
    ) {
        let share = if committed_work.is_zero() {
            Minutes::ZERO
        } else {
            let q = committed_work / self.inst.m() as i64;
            if all_integral { q.ceil() } else { q }
        };
        let drone_part = share.max(longest);
        let lb = drone_part.max(self.part.cost(truck_mask));
        if self.aborted {
            self.note_open(lb);
            return;
        }
        self.stats.nodes += 1;
        if self.over_budget() {
            self.aborted = true;
            self.note_open(lb);
            return;
        }
        if lb >= self.best {
            if drone_part >= self.best {
                self.stats.prunes_by_va += 1;
            } else {
                self.stats.prunes_by_incumbent += 1;
            }
            return;
        }

        if at == self.flex.len() {
            let (span, proven) = self.drone_span(choices);
            let value = span.max(self.part.cost(truck_mask));
            if !proven {
                // The span is a valid ub for this leaf but maybe not its
                // optimum; remember the leaf's conservative bound.
                let ms = MissionSet::from_choices(self.inst, choices).expect("feasible");
                let leaf_lb = drone_lb(&ms).bound.max(self.part.cost(truck_mask));
                self.shaky_lb = Some(self.shaky_lb.map_or(leaf_lb, |v| v.min(leaf_lb)));
            }
            if value < self.best {
                self.best = value;
                self.best_choices = choices.clone();
                self.best_truck_mask = truck_mask;
                self.stats.time_best_ms = self.started.elapsed().as_millis() as u64;
            }
            return;
        }

        let j = self.flex[at];
        let bit = 1usize
            << self
                .dp
                .verts
                .iter()
                .position(|&v| v == j)
                .expect("flex customers are in verts");

        // Truck child first: coverage by truck is always feasible and
        // tends to give balanced early incumbents.
        self.dfs(at + 1, truck_mask | bit, choices, committed_work, longest, all_integral);
        if self.aborted {
            self.note_open(lb);
            return;
        }

        let (q, p) = self.inst.drone_range(j).expect("flexible");
        for k in q..=p {
            let tau = self.inst.drone_time(j, k).expect("offered");
            choices.insert(j, k);
            self.dfs(
                at + 1,
                truck_mask,
                choices,
                committed_work + tau * k as i64,
                longest.max(tau),
                all_integral && tau.is_integer(),
            );
            choices.remove(&j);
            if self.aborted {
                self.note_open(lb);
                return;
            }
        }
    }
}

/// Branch over each flexible customer's coverage (truck, or a mission at
/// each offered group size), bounding with the work-conservation bound
/// on committed missions and the min-max tour optimum on committed truck
/// customers. Leaves price their drone side exactly. The heuristic
/// seeds the incumbent.
///
/// Instances over [`SOLVE_CAP`] customers skip the search and return the
/// heuristic solution with a root bound, as status `feasible`.
pub fn solve_exact(inst: &Instance, budget: Budget) -> SolveOutcome {
    let started = Instant::now();

    let seed_cfg = heuristic::SearchConfig {
        seed: 1,
        iterations: 40 * inst.n() as u64,
        ..heuristic::SearchConfig::default()
    };
    let init = heuristic::construct(inst);
    let incumbent = heuristic::ruin_recreate(inst, &init, &seed_cfg).expect("clean construct");
    let ub = incumbent.evaluate(inst).expect("clean incumbent").makespan;

    if inst.n() > SOLVE_CAP {
        let lb = root_bound(inst, &BTreeMap::new()).expect("no forcing").bound;
        return SolveOutcome {
            status: SolveStatus::Feasible,
            lb: lb.min(ub),
            ub,
            incumbent,
            stats: SolveStats {
                nodes: 0,
                time_ms: started.elapsed().as_millis() as u64,
                time_best_ms: started.elapsed().as_millis() as u64,
                ..SolveStats::default()
            },
        };
    }

    let verts: Vec<NodeId> = inst.customers().collect();
    let dp = TourDp::new(inst, &verts);
    let part = PartitionDp::new(&dp, inst.s());

    let mut forced_mask = 0usize;
    for (i, &j) in verts.iter().enumerate() {
        if inst.is_truck_only(j) {
            forced_mask |= 1 << i;
        }
    }
    let mut flex: Vec<NodeId> = inst.flexible().collect();
    flex.sort_by_key(|&j| (std::cmp::Reverse(inst.max_drone_work(j)), j));

    let mut search = Search {
        inst,
        dp,
        part,
        flex,
        budget,
        started,
        best: ub,
        best_choices: BTreeMap::new(),
        best_truck_mask: 0,
        stats: SolveStats::default(),
        spans: HashMap::new(),
        aborted: false,
        open_lb: None,
        shaky_lb: None,
    };
    let mut choices = BTreeMap::new();
    search.dfs(0, forced_mask, &mut choices, Minutes::ZERO, Minutes::ZERO, true);

    let improved = search.best < ub;
    let best = search.best;
    let incumbent = if improved {
        let tours: Vec<Vec<NodeId>> = search
            .part
            .parts(search.best_truck_mask)
            .into_iter()
            .map(|m| search.dp.order(m))
            .collect();
        let ms = MissionSet::from_choices(inst, &search.best_choices).expect("feasible best");
        let sched = schedule_exact_with(&ms, ExactOpts { cap: 32, max_nodes: 400_000 })
            .expect("feasible best");
        let sol = Solution {
            drones: sched.plan.sequences,
            missions: sched.plan.missions,
            tours: tours.into_iter().filter(|t| !t.is_empty()).collect(),
        };
        debug_assert!(sol.check(inst).is_empty());
        debug_assert_eq!(sol.evaluate(inst).expect("clean").makespan, best);
        sol
    } else {
        incumbent
    };

    let mut stats = search.stats;
    stats.time_ms = started.elapsed().as_millis() as u64;
    if !improved {
        stats.time_best_ms = 0;
    }

    let (status, lb) = if search.aborted {
        let lb = search.open_lb.map_or(best, |v| v.min(best));
        let lb = search.shaky_lb.map_or(lb, |v| v.min(lb));
        (SolveStatus::BudgetExhausted, lb)
    } else if let Some(shaky) = search.shaky_lb {
        if shaky < best {
            (SolveStatus::BudgetExhausted, shaky)
        } else {
            (SolveStatus::Optimal, best)
        }
    } else {
        (SolveStatus::Optimal, best)
    };

    SolveOutcome { status, lb, ub: best, incumbent, stats }
}
