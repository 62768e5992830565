//! Construction and ruin-and-recreate improvement.
//!
//! [`construct`] builds a reasonable first solution: truck-only customers
//! by cheapest insertion, then each drone-eligible customer goes to
//! whichever option (a tour slot, or a mission at some feasible group
//! size) leaves the fleet makespan smallest.
//!
//! [`ruin_recreate`] repeatedly knocks a fraction of the customers out,
//! half picked as worst contributors and half at random, greedily
//! reinserts them, tidies tours with 2-opt, and accepts any state not
//! worse than the current one (sideways moves allowed, tolerance zero).
//! The best solution ever seen is returned. Runs are deterministic for a
//! fixed seed as long as the wall-clock limit does not cut them short.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{Instance, NodeId};
use crate::scheduler::{schedule_greedy, DronePlan, MissionSet};
use crate::solution::{Solution, Violation};
use crate::time::Minutes;

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub seed: u64,
    pub iterations: u64,
    /// Fraction of customers removed per iteration, in (0, 1].
    pub ruin_fraction: f64,
    /// Safety valve; a run that hits it stops early (and stops being
    /// reproducible, since the cut point depends on the clock).
    pub time_limit_ms: Option<u64>,
}

impl Default for SearchConfig {
    fn default() -> SearchConfig {
        SearchConfig {
            seed: 0,
            iterations: 2000,
            ruin_fraction: 0.3,
            time_limit_ms: None,
        }
    }
}

#[derive(Error, Debug)]
pub enum HeuristicError {
    #[error("initial solution is not checker-clean: {0:?}")]
    InfeasibleInit(Vec<Violation>),
    #[error("ruin_fraction {0} outside (0, 1]")]
    BadRuinFraction(f64),
}

/// Fleet state under construction: fixed-size tour list (empty tours
/// allowed while building) plus drone group choices.
#[derive(Clone)]
struct Working {
    tours: Vec<Vec<NodeId>>,
    tour_dur: Vec<Minutes>,
    choices: BTreeMap<NodeId, usize>,
    drone_span: Minutes,
}

impl Working {
    fn empty(inst: &Instance) -> Working {
        Working {
            tours: vec![Vec::new(); inst.s()],
            tour_dur: vec![Minutes::ZERO; inst.s()],
            choices: BTreeMap::new(),
            drone_span: Minutes::ZERO,
        }
    }

    fn from_solution(inst: &Instance, sol: &Solution) -> Working {
        let mut tours = sol.tours.clone();
        tours.resize(inst.s(), Vec::new());
        let tour_dur = tours
            .iter()
            .map(|t| crate::solution::tour_duration(inst, t).expect("clean solution"))
            .collect();
        let mut w = Working {
            tours,
            tour_dur,
            choices: sol.missions.clone(),
            drone_span: Minutes::ZERO,
        };
        w.reschedule(inst);
        w
    }

    fn reschedule(&mut self, inst: &Instance) {
        self.drone_span = self.plan(inst).makespan;
    }

    fn plan(&self, inst: &Instance) -> DronePlan {
        let ms = MissionSet::from_choices(inst, &self.choices).expect("feasible choices");
        schedule_greedy(&ms).expect("groups fit the fleet")
    }

    fn makespan(&self) -> Minutes {
        self.tour_dur
            .iter()
            .copied()
            .fold(self.drone_span, Minutes::max)
    }

    fn longest_tour(&self) -> usize {
        let mut best = 0;
        for t in 1..self.tours.len() {
            if self.tour_dur[t] > self.tour_dur[best] {
                best = t;
            }
        }
        best
    }

    fn into_solution(self, inst: &Instance) -> Solution {
        let plan = self.plan(inst);
        Solution {
            drones: plan.sequences,
            missions: plan.missions,
            tours: self.tours.into_iter().filter(|t| !t.is_empty()).collect(),
        }
    }
}

/// Cost of splicing customer `c` between positions `pos-1` and `pos`.
fn insertion_delta(inst: &Instance, tour: &[NodeId], pos: usize, c: NodeId) -> Minutes {
    let prev = if pos == 0 { 0 } else { tour[pos - 1] };
    let next = if pos == tour.len() { 0 } else { tour[pos] };
    inst.truck_time(prev, c) + inst.truck_time(c, next) - inst.truck_time(prev, next)
}

/// Best tour slot for `c`: smallest resulting fleet makespan, then
/// smallest delta, then lowest tour and position.
fn best_truck_slot(inst: &Instance, w: &Working, c: NodeId) -> (usize, usize, Minutes) {
    let mut best: Option<(Minutes, Minutes, usize, usize)> = None;
    for (t, tour) in w.tours.iter().enumerate() {
        for pos in 0..=tour.len() {
            let delta = insertion_delta(inst, tour, pos, c);
            let new_dur = w.tour_dur[t] + delta;
            let key = (new_dur, delta, t, pos);
            if best.map_or(true, |b| key < b) {
                best = Some(key);
            }
        }
    }
    let (_, _, t, pos) = best.expect("s >= 1 tours");
    (t, pos, insertion_delta(inst, &w.tours[t], pos, c))
}

/// Insert `c` wherever the fleet makespan grows least: best truck slot
/// against every feasible group size. Drones win ties.
fn insert_best(inst: &Instance, w: &mut Working, c: NodeId) {
    let (t, pos, delta) = best_truck_slot(inst, w, c);
    let truck_span = w
        .tour_dur
        .iter()
        .enumerate()
        .map(|(i, &d)| if i == t { d + delta } else { d })
        .fold(Minutes::ZERO, Minutes::max);
    let truck_make = truck_span.max(w.drone_span);

    let mut fly: Option<(Minutes, usize)> = None;
    if let Some((q, p)) = inst.drone_range(c) {
        let tour_span = w
            .tour_dur
            .iter()
            .copied()
            .fold(Minutes::ZERO, Minutes::max);
        // Ascending k, strict improvement: ties go to the smaller group.
        for k in q..=p {
            w.choices.insert(c, k);
            let span = w.plan(inst).makespan;
            w.choices.remove(&c);
            let make = tour_span.max(span);
            if fly.map_or(true, |(m, _)| make < m) {
                fly = Some((make, k));
            }
        }
    }

    match fly {
        Some((make, k)) if make <= truck_make => {
            w.choices.insert(c, k);
            w.reschedule(inst);
        }
        _ => {
            w.tours[t].insert(pos, c);
            w.tour_dur[t] += delta;
        }
    }
}

/// First feasible solution: truck-only customers by cheapest insertion
/// (longest round trips first), then drone-eligible customers by their
/// cheapest option (most drone work first). Deterministic.
pub fn construct(inst: &Instance) -> Solution {
    let mut w = Working::empty(inst);

    let mut forced: Vec<NodeId> = inst.forced_truck().collect();
    forced.sort_by_key(|&j| (std::cmp::Reverse(inst.round_trip(j)), j));
    for c in forced {
        let (t, pos, delta) = best_truck_slot(inst, &w, c);
        w.tours[t].insert(pos, c);
        w.tour_dur[t] += delta;
    }

    let mut flex: Vec<NodeId> = inst.flexible().collect();
    flex.sort_by_key(|&j| (std::cmp::Reverse(inst.max_drone_work(j)), j));
    for c in flex {
        insert_best(inst, &mut w, c);
    }

    w.into_solution(inst)
}

/// One 2-opt sweep per tour, repeated while it improves (bounded).
fn two_opt(inst: &Instance, w: &mut Working) {
    for t in 0..w.tours.len() {
        for _ in 0..3 {
            let mut improved = false;
            let len = w.tours[t].len();
            for a in 0..len.saturating_sub(1) {
                for b in a + 1..len {
                    let tour = &mut w.tours[t];
                    tour[a..=b].reverse();
                    let dur = crate::solution::tour_duration(inst, tour).expect("known ids");
                    if dur < w.tour_dur[t] {
                        w.tour_dur[t] = dur;
                        improved = true;
                    } else {
                        w.tours[t][a..=b].reverse();
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
}

/// How much the makespan presumably leans on this customer; used to pick
/// "worst contributor" victims. Truck customers score their detour
/// (doubled on the longest tour), missions their drone-minutes.
fn blame(inst: &Instance, w: &Working, c: NodeId) -> Minutes {
    if let Some(&k) = w.choices.get(&c) {
        let tau = inst.drone_time(c, k).expect("feasible choice");
        return tau * k as i64;
    }
    for (t, tour) in w.tours.iter().enumerate() {
        if let Some(pos) = tour.iter().position(|&x| x == c) {
            let prev = if pos == 0 { 0 } else { tour[pos - 1] };
            let next = if pos + 1 == tour.len() { 0 } else { tour[pos + 1] };
            let saving = inst.truck_time(prev, c) + inst.truck_time(c, next)
                - inst.truck_time(prev, next);
            let weight = if t == w.longest_tour() { 2 } else { 1 };
            return saving * weight;
        }
    }
    Minutes::ZERO
}

/// Improve `init` by ruin-and-recreate. Never returns anything worse
/// than `init`; the makespan of the accepted state never increases.
pub fn ruin_recreate(
    inst: &Instance,
    init: &Solution,
    cfg: &SearchConfig,
) -> Result<Solution, HeuristicError> {
    let violations = init.check(inst);
    if !violations.is_empty() {
        return Err(HeuristicError::InfeasibleInit(violations));
    }
    if !(cfg.ruin_fraction > 0.0 && cfg.ruin_fraction <= 1.0) {
        return Err(HeuristicError::BadRuinFraction(cfg.ruin_fraction));
    }

    let started = Instant::now();
    let n = inst.n();
    if n == 0 {
        return Ok(init.clone());
    }
    let r = ((cfg.ruin_fraction * n as f64).ceil() as usize).clamp(1, n);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cur = Working::from_solution(inst, init);
    let mut cur_make = cur.makespan();
    let mut best = init.clone();
    let mut best_make = cur_make;

    for _ in 0..cfg.iterations {
        if let Some(limit) = cfg.time_limit_ms {
            if started.elapsed().as_millis() as u64 >= limit {
                break;
            }
        }

        let backup = cur.clone();

        // Victims: worst contributors first, then random fill.
        let mut customers: Vec<NodeId> = inst.customers().collect();
        customers.sort_by_key(|&c| (std::cmp::Reverse(blame(inst, &cur, c)), c));
        let mut victims: Vec<NodeId> = customers[..r.div_ceil(2)].to_vec();
        let mut rest: Vec<NodeId> = customers[r.div_ceil(2)..].to_vec();
        rest.shuffle(&mut rng);
        victims.extend(rest.into_iter().take(r - victims.len()));

        for &c in &victims {
            if cur.choices.remove(&c).is_none() {
                for t in 0..cur.tours.len() {
                    if let Some(pos) = cur.tours[t].iter().position(|&x| x == c) {
                        cur.tours[t].remove(pos);
                        cur.tour_dur[t] =
                            crate::solution::tour_duration(inst, &cur.tours[t])
                                .expect("known ids");
                        break;
                    }
                }
            }
        }
        cur.reschedule(inst);

        victims.shuffle(&mut rng);
        for &c in &victims {
            insert_best(inst, &mut cur, c);
        }
        two_opt(inst, &mut cur);

        let make = cur.makespan();
        if make <= cur_make {
            cur_make = make;
            if make < best_make {
                best_make = make;
                best = cur.clone().into_solution(inst);
            }
        } else {
            cur = backup;
        }
    }

    debug_assert!(best.check(inst).is_empty());
    Ok(best)
}
