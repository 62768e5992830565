//! Solutions and their feasibility checker and evaluator.
//!
//! A solution has three parts: `tours` (per truck, the customer sequence
//! of its single trip), `missions` (drone-served customer to group size),
//! and `drones` (per drone, the ordered mission ids it takes part in).
//! Customers are served exactly once, by truck or by drones.
//!
//! Timing is where coupled drones bite: a mission starts only when all of
//! its `k` drones are free, so one late partner delays the whole group.
//! [`Solution::evaluate`] replays that synchronization exactly.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, NodeId};
use crate::time::Minutes;

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solution {
    /// Per drone, the ordered list of mission customers it flies.
    #[serde(default)]
    pub drones: Vec<Vec<NodeId>>,
    /// Drone-served customer to the group size serving it.
    #[serde(default)]
    pub missions: BTreeMap<NodeId, usize>,
    /// Per truck, its customer sequence (depot implicit at both ends).
    #[serde(default)]
    pub tours: Vec<Vec<NodeId>>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Coverage,
    TruckOnly,
    KRange,
    FlowMismatch,
    Duplicate,
    FleetExceeded,
}

/// One distinct breach of solution structure. `subject` is the customer
/// id involved, or a vehicle index for fleet-level breaches.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: usize,
    pub detail: String,
}

impl Violation {
    fn new(kind: ViolationKind, subject: usize, detail: impl Into<String>) -> Violation {
        Violation {
            kind,
            subject,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({}): {}", self.kind, self.subject, self.detail)
    }
}

/// Completion times of everything that moves.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct Timeline {
    pub makespan: Minutes,
    /// Completion time of each drone mission, by customer id.
    pub mission_completion: BTreeMap<NodeId, Minutes>,
    /// Return time of each tour, same order as `Solution::tours`.
    pub truck_return: Vec<Minutes>,
}

#[derive(Error, Debug)]
pub enum TourError {
    #[error("unknown customer id {0} in tour")]
    UnknownId(NodeId),
}

#[derive(Error, Debug)]
pub enum EvaluateError {
    #[error("solution violates structure: {}", summarize(.0))]
    Infeasible(Vec<Violation>),
}

pub(crate) fn summarize(vs: &[Violation]) -> String {
    vs.iter()
        .map(Violation::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Depot-to-depot duration of one truck trip visiting `tour` in order.
pub fn tour_duration(inst: &Instance, tour: &[NodeId]) -> Result<Minutes, TourError> {
    for &c in tour {
        if c == 0 || c > inst.n() {
            return Err(TourError::UnknownId(c));
        }
    }
    let mut total = Minutes::ZERO;
    let mut at = 0;
    for &c in tour {
        total += inst.truck_time(at, c);
        at = c;
    }
    total += inst.truck_time(at, 0);
    Ok(total)
}

impl Solution {
    /// All structural violations, one entry per distinct breach. Empty
    /// means feasible (checker-clean).
    pub fn check(&self, inst: &Instance) -> Vec<Violation> {
        use ViolationKind::*;
        let n = inst.n();
        let mut out = Vec::new();

        if self.tours.len() > inst.s() {
            out.push(Violation::new(
                FleetExceeded,
                self.tours.len(),
                format!("{} tours but s = {}", self.tours.len(), inst.s()),
            ));
        }
        if self.drones.len() > inst.m() {
            out.push(Violation::new(
                FleetExceeded,
                self.drones.len(),
                format!("{} drone sequences but m = {}", self.drones.len(), inst.m()),
            ));
        }

        // Service counts across tours and missions.
        let mut served = vec![0usize; n + 1];
        for (t, tour) in self.tours.iter().enumerate() {
            if tour.is_empty() {
                out.push(Violation::new(Coverage, t, "empty tour"));
            }
            for &c in tour {
                if c == 0 || c > n {
                    out.push(Violation::new(Coverage, c, "unknown customer id in tour"));
                } else {
                    served[c] += 1;
                }
            }
        }
        for (&j, &k) in &self.missions {
            if j == 0 || j > n {
                out.push(Violation::new(Coverage, j, "unknown customer id in missions"));
                continue;
            }
            served[j] += 1;
            if inst.is_truck_only(j) {
                out.push(Violation::new(TruckOnly, j, "truck-only customer flown"));
            } else {
                let (q, p) = inst.drone_range(j).unwrap();
                if !(q..=p).contains(&k) {
                    out.push(Violation::new(
                        KRange,
                        j,
                        format!("group size {k} outside {q}..={p}"),
                    ));
                }
            }
        }
        for j in 1..=n {
            match served[j] {
                0 => out.push(Violation::new(Coverage, j, "customer not served")),
                1 => {}
                c => out.push(Violation::new(
                    Duplicate,
                    j,
                    format!("customer served {c} times"),
                )),
            }
        }

        // Drone sequences carry exactly the missions, k_j drones each.
        let mut flown = BTreeMap::<NodeId, usize>::new();
        for (d, seq) in self.drones.iter().enumerate() {
            let mut here = BTreeMap::<NodeId, usize>::new();
            for &j in seq {
                *here.entry(j).or_default() += 1;
                if !self.missions.contains_key(&j) {
                    out.push(Violation::new(
                        FlowMismatch,
                        j,
                        format!("drone {d} flies {j}, not a mission"),
                    ));
                }
            }
            for (j, c) in here {
                if c > 1 {
                    out.push(Violation::new(
                        Duplicate,
                        j,
                        format!("mission repeats in drone {d}"),
                    ));
                }
                *flown.entry(j).or_default() += 1;
            }
        }
        for (&j, &k) in &self.missions {
            let c = flown.get(&j).copied().unwrap_or(0);
            if c != k {
                out.push(Violation::new(
                    FlowMismatch,
                    j,
                    format!("mission needs {k} drones, {c} sequences carry it"),
                ));
            }
        }

        // Cross-drone orderings must admit a schedule: the precedence
        // relation (consecutive missions per drone) may not cycle.
        for j in cyclic_missions(&self.drones) {
            out.push(Violation::new(
                FlowMismatch,
                j,
                "cyclic synchronization, no feasible start times",
            ));
        }

        out
    }

    /// Replay the schedule of a checker-clean solution.
    ///
    /// Tours return after their travel time. A mission starts once every
    /// participating drone has finished its previous mission, and
    /// completes after its `tau`; the makespan is the last completion.
    /// The result only depends on which sequence each drone flies, not
    /// on drone identities.
    pub fn evaluate(&self, inst: &Instance) -> Result<Timeline, EvaluateError> {
        let violations = self.check(inst);
        if !violations.is_empty() {
            return Err(EvaluateError::Infeasible(violations));
        }

        let truck_return: Vec<Minutes> = self
            .tours
            .iter()
            .map(|t| tour_duration(inst, t).expect("checked ids"))
            .collect();

        // Longest path over the per-drone precedence DAG.
        let mut indeg = BTreeMap::<NodeId, usize>::new();
        let mut succs = BTreeMap::<NodeId, Vec<NodeId>>::new();
        let mut ready_at = BTreeMap::<NodeId, Minutes>::new();
        for &j in self.missions.keys() {
            indeg.insert(j, 0);
            ready_at.insert(j, Minutes::ZERO);
        }
        for seq in &self.drones {
            for w in seq.windows(2) {
                succs.entry(w[0]).or_default().push(w[1]);
                *indeg.entry(w[1]).or_default() += 1;
            }
        }
        let mut queue: Vec<NodeId> = indeg
            .iter()
            .filter(|&(_, &d)| d == 0)
            .map(|(&j, _)| j)
            .collect();
        let mut completion = BTreeMap::<NodeId, Minutes>::new();
        while let Some(j) = queue.pop() {
            let k = self.missions[&j];
            let tau = inst.drone_time(j, k).expect("checked range");
            let done = ready_at[&j] + tau;
            completion.insert(j, done);
            for &next in succs.get(&j).map(Vec::as_slice).unwrap_or_default() {
                let r = ready_at.get_mut(&next).unwrap();
                *r = (*r).max(done);
                let d = indeg.get_mut(&next).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push(next);
                }
            }
        }
        debug_assert_eq!(completion.len(), self.missions.len(), "checked acyclic");

        let makespan = truck_return
            .iter()
            .copied()
            .chain(completion.values().copied())
            .fold(Minutes::ZERO, Minutes::max);
        Ok(Timeline {
            makespan,
            mission_completion: completion,
            truck_return,
        })
    }

    pub fn from_json(text: &str) -> Result<Solution, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Canonical JSON, byte-stable: fields and map keys in sorted order.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("solution serializes");
        out.push('\n');
        out
    }
}

/// Mission ids on some precedence cycle (smallest id per cycle).
fn cyclic_missions(drones: &[Vec<NodeId>]) -> Vec<NodeId> {
    let mut indeg = BTreeMap::<NodeId, usize>::new();
    let mut succs = BTreeMap::<NodeId, Vec<NodeId>>::new();
    for seq in drones {
        for &j in seq {
            indeg.entry(j).or_default();
        }
        for w in seq.windows(2) {
            succs.entry(w[0]).or_default().push(w[1]);
            *indeg.entry(w[1]).or_default() += 1;
        }
    }
    let mut queue: Vec<NodeId> = indeg
        .iter()
        .filter(|&(_, &d)| d == 0)
        .map(|(&j, _)| j)
        .collect();
    let mut seen = 0;
    while let Some(j) = queue.pop() {
        seen += 1;
        for &next in succs.get(&j).map(Vec::as_slice).unwrap_or_default() {
            let d = indeg.get_mut(&next).unwrap();
            *d -= 1;
            if *d == 0 {
                queue.push(next);
            }
        }
    }
    if seen == indeg.len() {
        return Vec::new();
    }
    // Whatever kept positive indegree sits on or behind a cycle; report
    // the smallest id among the stuck missions, one entry per component.
    let stuck: Vec<NodeId> = indeg
        .iter()
        .filter(|&(_, &d)| d > 0)
        .map(|(&j, _)| j)
        .collect();
    let mut comp = BTreeMap::<NodeId, NodeId>::new();
    for &j in &stuck {
        comp.insert(j, j);
    }
    // Union by repeated relabeling; tiny inputs, clarity over speed.
    let mut changed = true;
    while changed {
        changed = false;
        for &j in &stuck {
            for &next in succs.get(&j).map(Vec::as_slice).unwrap_or_default() {
                if comp.contains_key(&next) {
                    let a = comp[&j].min(comp[&next]);
                    if comp[&j] != a || comp[&next] != a {
                        comp.insert(j, a);
                        comp.insert(next, a);
                        changed = true;
                    }
                }
            }
        }
    }
    let mut roots: Vec<NodeId> = comp.values().copied().collect();
    roots.sort_unstable();
    roots.dedup();
    roots
}
