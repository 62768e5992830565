//! Drone fleet scheduling: pack synchronized missions onto `m` drones.
//!
//! Input is a bag of missions, each needing `k` coupled drones for
//! `tau` minutes, all starting and ending at the depot. A mission
//! occupies all of its drones for its whole duration and starts only
//! when every one of them is free, so group missions can leave drones
//! idling. Makespan is the last completion.
//!
//! Three levels of effort:
//! [`drone_lb`] is an O(n) bound, [`schedule_greedy`] a priority
//! dispatcher, [`schedule_exact`] a branch-and-bound over dispatch
//! orders that proves optimality on small sets.

use std::collections::BTreeMap;
use std::collections::HashMap;

use thiserror::Error;

use crate::instance::{Instance, NodeId};
use crate::time::Minutes;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Mission {
    pub customer: NodeId,
    /// Number of drones flying this mission together.
    pub group: usize,
    pub duration: Minutes,
}

/// Missions to schedule on a fleet of `m` identical drones.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MissionSet {
    pub m: usize,
    pub missions: Vec<Mission>,
}

#[derive(Error, Debug, PartialEq)]
pub enum ScheduleError {
    #[error("mission for {customer} needs {k} drones, fleet has {m}")]
    NeedsMoreDrones {
        customer: NodeId,
        k: usize,
        m: usize,
    },
    #[error("mission for {customer} has group size 0")]
    ZeroGroup { customer: NodeId },
    #[error("mission for {customer} must have positive duration")]
    BadDuration { customer: NodeId },
    #[error("customer {0} appears in two missions")]
    DuplicateCustomer(NodeId),
    #[error("customer {customer} cannot be flown by a group of {k}")]
    InfeasibleGroup { customer: NodeId, k: usize },
}

impl MissionSet {
    pub fn new(m: usize, missions: Vec<Mission>) -> MissionSet {
        MissionSet { m, missions }
    }

    /// Build from per-customer group choices, durations looked up in the
    /// instance. Fails on a choice outside the customer's feasible range.
    pub fn from_choices(
        inst: &Instance,
        choices: &BTreeMap<NodeId, usize>,
    ) -> Result<MissionSet, ScheduleError> {
        let missions = choices
            .iter()
            .map(|(&j, &k)| {
                inst.drone_time(j, k)
                    .map(|tau| Mission {
                        customer: j,
                        group: k,
                        duration: tau,
                    })
                    .ok_or(ScheduleError::InfeasibleGroup { customer: j, k })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MissionSet {
            m: inst.m(),
            missions,
        })
    }

    fn validate(&self) -> Result<(), ScheduleError> {
        let mut seen = BTreeMap::new();
        for mi in &self.missions {
            if mi.group == 0 {
                return Err(ScheduleError::ZeroGroup {
                    customer: mi.customer,
                });
            }
            if mi.group > self.m {
                return Err(ScheduleError::NeedsMoreDrones {
                    customer: mi.customer,
                    k: mi.group,
                    m: self.m,
                });
            }
            if mi.duration.is_zero() || mi.duration.is_negative() {
                return Err(ScheduleError::BadDuration {
                    customer: mi.customer,
                });
            }
            if seen.insert(mi.customer, ()).is_some() {
                return Err(ScheduleError::DuplicateCustomer(mi.customer));
            }
        }
        Ok(())
    }

    /// Total drone-minutes: every coupled drone is busy for the whole
    /// mission, so a group of k costs k * tau.
    pub fn total_work(&self) -> Minutes {
        self.missions
            .iter()
            .map(|mi| mi.duration * mi.group as i64)
            .sum()
    }

    /// Canonical dispatch priority: most drone-minutes first, ties by
    /// customer id. Returns indices into `missions`.
    fn priority_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.missions.len()).collect();
        idx.sort_by_key(|&i| {
            let mi = &self.missions[i];
            (std::cmp::Reverse(mi.duration * mi.group as i64), mi.customer)
        });
        idx
    }
}

/// Workload lower bound on the drone makespan.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DroneBound {
    /// Sum of k * tau over the missions.
    pub total_work: Minutes,
    /// Work spread over m drones; rounded up to a whole minute when all
    /// durations are integral (any schedule then completes on a whole
    /// minute, so the ceiling is still a valid bound).
    pub work_share: Minutes,
    /// Longest single mission; some drone is busy at least this long.
    pub longest: Minutes,
    /// The bound itself: max of the two components.
    pub bound: Minutes,
}

/// Lower bound on the makespan of any feasible schedule of `ms`.
pub fn drone_lb(ms: &MissionSet) -> DroneBound {
    let total_work = ms.total_work();
    let share = total_work / ms.m as i64;
    let work_share = if ms.missions.iter().all(|mi| mi.duration.is_integer()) {
        share.ceil()
    } else {
        share
    };
    let longest = ms
        .missions
        .iter()
        .map(|mi| mi.duration)
        .fold(Minutes::ZERO, Minutes::max);
    DroneBound {
        total_work,
        work_share,
        longest,
        bound: work_share.max(longest),
    }
}

/// A concrete drone schedule: the drone part of a solution.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DronePlan {
    /// Customer to group size, ready to drop into a solution.
    pub missions: BTreeMap<NodeId, usize>,
    /// Per drone, its ordered mission list; length m.
    pub sequences: Vec<Vec<NodeId>>,
    pub makespan: Minutes,
}

impl DronePlan {
    fn empty(m: usize) -> DronePlan {
        DronePlan {
            missions: BTreeMap::new(),
            sequences: vec![Vec::new(); m],
            makespan: Minutes::ZERO,
        }
    }
}

/// Dispatch missions in priority order (most drone-minutes first, ties
/// by id), each onto its k earliest-available drones, lowest drone index
/// on ties. Deterministic.
pub fn schedule_greedy(ms: &MissionSet) -> Result<DronePlan, ScheduleError> {
    ms.validate()?;
    let order = ms.priority_order();
    Ok(dispatch(ms, &order))
}

/// Replay a dispatch order with the earliest-k rule.
fn dispatch(ms: &MissionSet, order: &[usize]) -> DronePlan {
    let mut plan = DronePlan::empty(ms.m);
    let mut avail = vec![Minutes::ZERO; ms.m];
    for &i in order {
        let mi = &ms.missions[i];
        let mut drones: Vec<usize> = (0..ms.m).collect();
        drones.sort_by_key(|&d| (avail[d], d));
        drones.truncate(mi.group);
        let start = drones
            .iter()
            .map(|&d| avail[d])
            .fold(Minutes::ZERO, Minutes::max);
        let done = start + mi.duration;
        for &d in &drones {
            avail[d] = done;
            plan.sequences[d].push(mi.customer);
        }
        plan.missions.insert(mi.customer, mi.group);
        plan.makespan = plan.makespan.max(done);
    }
    plan
}

#[derive(Clone, Copy, Debug)]
pub struct ExactOpts {
    /// Refuse sets larger than this; the order search is factorial.
    pub cap: usize,
    /// Node budget; when exhausted the best plan so far is returned
    /// with `proven = false`.
    pub max_nodes: u64,
}

impl Default for ExactOpts {
    fn default() -> ExactOpts {
        ExactOpts {
            cap: 14,
            max_nodes: 4_000_000,
        }
    }
}

#[derive(Error, Debug, PartialEq)]
pub enum ExactScheduleError {
    #[error("{n} missions exceed the exact scheduling cap {cap}")]
    SizeCap { n: usize, cap: usize },
    #[error(transparent)]
    Invalid(#[from] ScheduleError),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExactSchedule {
    pub plan: DronePlan,
    /// True when the search closed; false when the node budget ran out
    /// and the plan is only the best one seen.
    pub proven: bool,
}

/// Minimum-makespan schedule by branch-and-bound over dispatch orders.
///
/// Any schedule can be normalized, order by start time, to a dispatch
/// order replayed with the earliest-k rule without growing any start, so
/// searching orders is exhaustive. States are pruned by workload bounds
/// and dominance: reaching the same remaining set with every drone free
/// no later than before cannot help.
pub fn schedule_exact(ms: &MissionSet) -> Result<ExactSchedule, ExactScheduleError> {
    schedule_exact_with(ms, ExactOpts::default())
}

pub fn schedule_exact_with(
    ms: &MissionSet,
    opts: ExactOpts,
) -> Result<ExactSchedule, ExactScheduleError> {
    ms.validate()?;
    let n = ms.missions.len();
    let cap = opts.cap.min(32);
    if n > cap {
        return Err(ExactScheduleError::SizeCap { n, cap });
    }
    if n == 0 {
        return Ok(ExactSchedule {
            plan: DronePlan::empty(ms.m),
            proven: true,
        });
    }

    let order = ms.priority_order();
    let greedy = dispatch(ms, &order);
    let floor = drone_lb(ms).bound;

    let mut search = Search {
        ms,
        order: Vec::with_capacity(n),
        best_order: order.clone(),
        best: greedy.makespan,
        floor,
        nodes: 0,
        max_nodes: opts.max_nodes,
        seen: HashMap::new(),
        exhausted: false,
    };
    let avail = vec![Minutes::ZERO; ms.m];
    search.run(0, &avail);

    let plan = dispatch(ms, &search.best_order);
    debug_assert_eq!(plan.makespan, search.best);
    Ok(ExactSchedule {
        plan,
        proven: !search.exhausted,
    })
}

struct Search<'a> {
    ms: &'a MissionSet,
    order: Vec<usize>,
    best_order: Vec<usize>,
    best: Minutes,
    floor: Minutes,
    nodes: u64,
    max_nodes: u64,
    seen: HashMap<u32, Vec<Vec<Minutes>>>,
    exhausted: bool,
}

impl Search<'_> {
    fn run(&mut self, mask: u32, avail: &[Minutes]) {
        if self.exhausted || self.best == self.floor {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            self.exhausted = true;
            return;
        }
        let n = self.ms.missions.len();
        if self.order.len() == n {
            let span = avail.iter().copied().fold(Minutes::ZERO, Minutes::max);
            if span < self.best {
                self.best = span;
                self.best_order = self.order.clone();
            }
            return;
        }

        let mut sorted = avail.to_vec();
        sorted.sort();
        if self.dominated(mask, &sorted) {
            return;
        }

        // Workload bounds for the remaining missions.
        let done_span = avail.iter().copied().fold(Minutes::ZERO, Minutes::max);
        let mut remaining_work = Minutes::ZERO;
        let mut tail_floor = Minutes::ZERO;
        for (i, mi) in self.ms.missions.iter().enumerate() {
            if mask & (1 << i) == 0 {
                remaining_work += mi.duration * mi.group as i64;
                tail_floor = tail_floor.max(mi.duration + sorted[mi.group - 1]);
            }
        }
        let busy: Minutes = avail.iter().copied().sum();
        let share = (busy + remaining_work) / self.ms.m as i64;
        let lb = done_span.max(tail_floor).max(share);
        if lb >= self.best {
            return;
        }

        for i in 0..n {
            if mask & (1 << i) != 0 {
                continue;
            }
            let mi = &self.ms.missions[i];
            let mut drones: Vec<usize> = (0..self.ms.m).collect();
            drones.sort_by_key(|&d| (avail[d], d));
            drones.truncate(mi.group);
            let start = drones
                .iter()
                .map(|&d| avail[d])
                .fold(Minutes::ZERO, Minutes::max);
            let done = start + mi.duration;
            if done >= self.best {
                continue;
            }
            let mut next = avail.to_vec();
            for &d in &drones {
                next[d] = done;
            }
            self.order.push(i);
            self.run(mask | (1 << i), &next);
            self.order.pop();
            if self.exhausted {
                return;
            }
        }
    }

    /// True when an already-seen state for this mask has every drone
    /// free at least as early. Keeps a bounded frontier per mask.
    fn dominated(&mut self, mask: u32, sorted: &[Minutes]) -> bool {
        let entry = self.seen.entry(mask).or_default();
        for old in entry.iter() {
            if old.iter().zip(sorted).all(|(o, s)| o <= s) {
                return true;
            }
        }
        if entry.len() < 64 {
            entry.push(sorted.to_vec());
        }
        false
    }
}
