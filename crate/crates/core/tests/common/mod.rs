//! Brute-force reference implementations shared by the integration suites.
//!
//! Everything here trades speed for obviousness: tours are scored by walking
//! raw permutations, fleet splits by enumerating submasks, drone schedules by
//! trying dispatch orders, and the full problem by crossing all of the above.
//! None of it shares code with the library's solvers beyond instance
//! accessors, so agreement between the two is meaningful evidence.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use pdsvrp::instance::{generate, GenConfig, Instance, NodeId};
use pdsvrp::scheduler::{Mission, MissionSet};
use pdsvrp::time::Minutes;

// ---------------------------------------------------------------- trucks --

fn permute(items: &[NodeId], f: &mut impl FnMut(&[NodeId])) {
    fn rec(k: usize, buf: &mut Vec<NodeId>, f: &mut impl FnMut(&[NodeId])) {
        if k == buf.len() {
            f(buf);
            return;
        }
        for i in k..buf.len() {
            buf.swap(k, i);
            rec(k + 1, buf, f);
            buf.swap(k, i);
        }
    }
    let mut buf = items.to_vec();
    rec(0, &mut buf, f);
}

fn tour_cost(inst: &Instance, order: &[NodeId]) -> Minutes {
    let mut t = Minutes::ZERO;
    let mut prev = 0;
    for &v in order {
        t = t + inst.truck_time(prev, v);
        prev = v;
    }
    t + inst.truck_time(prev, 0)
}

/// Cheapest closed tour through `subset`, by trying every permutation.
pub fn best_tour(inst: &Instance, subset: &[NodeId]) -> Minutes {
    let mut best: Option<Minutes> = None;
    permute(subset, &mut |perm| {
        let c = tour_cost(inst, perm);
        if best.map_or(true, |b| c < b) {
            best = Some(c);
        }
    });
    best.unwrap_or(Minutes::ZERO)
}

/// Cheapest single tour for every sub-multiset of `verts`, indexed by the
/// bitmask over positions in `verts`.
pub fn tour_table(inst: &Instance, verts: &[NodeId]) -> Vec<Minutes> {
    let u = verts.len();
    let mut table = vec![Minutes::ZERO; 1 << u];
    for mask in 1usize..1 << u {
        let members: Vec<NodeId> = (0..u)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| verts[i])
            .collect();
        table[mask] = best_tour(inst, &members);
    }
    table
}

fn split_rec(
    table: &[Minutes],
    memo: &mut HashMap<(usize, usize), Minutes>,
    mask: usize,
    s: usize,
) -> Minutes {
    if s <= 1 || mask == 0 {
        return table[mask];
    }
    if let Some(&v) = memo.get(&(s, mask)) {
        return v;
    }
    let mut best: Option<Minutes> = None;
    let mut sub = mask;
    loop {
        let v = table[sub].max(split_rec(table, memo, mask ^ sub, s - 1));
        if best.map_or(true, |b| v < b) {
            best = Some(v);
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & mask;
    }
    let v = best.unwrap();
    memo.insert((s, mask), v);
    v
}

/// Min-max duration over every way to deal `subset` out to `s` tours
/// (empty tours allowed), each tour scored by permutation enumeration.
pub fn fleet_minmax(inst: &Instance, subset: &[NodeId], s: usize) -> Minutes {
    let table = tour_table(inst, subset);
    let mut memo = HashMap::new();
    split_rec(&table, &mut memo, (1 << subset.len()) - 1, s)
}

/// Precomputed truck-side answers for one instance: the best `s`-way
/// min-max split for every subset of customers, mask bit `j - 1` standing
/// for customer `j`.
pub struct TruckOracle {
    pub split: Vec<Minutes>,
}

impl TruckOracle {
    pub fn build(inst: &Instance) -> TruckOracle {
        let verts: Vec<NodeId> = inst.customers().collect();
        let table = tour_table(inst, &verts);
        let mut memo = HashMap::new();
        let split = (0..table.len())
            .map(|mask| split_rec(&table, &mut memo, mask, inst.s()))
            .collect();
        TruckOracle { split }
    }
}

// ---------------------------------------------------------------- drones --

/// Serial schedule: one mission at a time, nothing overlaps. Always
/// feasible, so it makes a safe starting incumbent.
fn serial_makespan(ms: &MissionSet) -> Minutes {
    ms.missions
        .iter()
        .fold(Minutes::ZERO, |acc, mi| acc + mi.duration)
}

fn dispatch_rec(
    mis: &[Mission],
    used: &mut [bool],
    avail: &mut [Minutes],
    cur: Minutes,
    best: &mut Minutes,
) {
    if cur >= *best {
        return;
    }
    if used.iter().all(|&u| u) {
        *best = cur;
        return;
    }
    for i in 0..mis.len() {
        if used[i] {
            continue;
        }
        // Missions with the same shape are interchangeable; always take
        // the lowest-index one of a kind first.
        let twin = (0..i).any(|j| {
            !used[j] && mis[j].group == mis[i].group && mis[j].duration == mis[i].duration
        });
        if twin {
            continue;
        }
        let k = mis[i].group;
        let mut order: Vec<usize> = (0..avail.len()).collect();
        order.sort_by_key(|&d| (avail[d], d));
        let chosen: Vec<usize> = order[..k].to_vec();
        let start = avail[chosen[k - 1]];
        let fin = start + mis[i].duration;
        let saved: Vec<Minutes> = chosen.iter().map(|&d| avail[d]).collect();
        for &d in &chosen {
            avail[d] = fin;
        }
        used[i] = true;
        dispatch_rec(mis, used, avail, cur.max(fin), best);
        used[i] = false;
        for (slot, &d) in chosen.iter().enumerate() {
            avail[d] = saved[slot];
        }
    }
}

/// Exact minimum drone makespan by trying every dispatch order. Each
/// mission grabs the drones that free up earliest; identical drones make
/// that exchange-optimal for a fixed order, and `drone_makespan_tiny`
/// re-verifies the rule independently on small sets.
pub fn drone_makespan(ms: &MissionSet) -> Minutes {
    assert!(
        ms.missions.iter().all(|mi| mi.group >= 1 && mi.group <= ms.m),
        "oracle needs group sizes within the fleet"
    );
    let mut best = serial_makespan(ms);
    if ms.missions.is_empty() {
        return Minutes::ZERO;
    }
    let mut used = vec![false; ms.missions.len()];
    let mut avail = vec![Minutes::ZERO; ms.m];
    dispatch_rec(&ms.missions, &mut used, &mut avail, Minutes::ZERO, &mut best);
    best
}

fn tiny_rec(
    mis: &[Mission],
    m: usize,
    used: &mut [bool],
    avail: &mut [Minutes],
    cur: Minutes,
    best: &mut Minutes,
) {
    if cur >= *best {
        return;
    }
    if used.iter().all(|&u| u) {
        *best = cur;
        return;
    }
    for i in 0..mis.len() {
        if used[i] {
            continue;
        }
        let k = mis[i].group;
        for dmask in 0usize..1 << m {
            if dmask.count_ones() as usize != k {
                continue;
            }
            let members: Vec<usize> = (0..m).filter(|d| dmask >> d & 1 == 1).collect();
            let start = members
                .iter()
                .map(|&d| avail[d])
                .fold(Minutes::ZERO, Minutes::max);
            let fin = start + mis[i].duration;
            let saved: Vec<Minutes> = members.iter().map(|&d| avail[d]).collect();
            for &d in &members {
                avail[d] = fin;
            }
            used[i] = true;
            tiny_rec(mis, m, used, avail, cur.max(fin), best);
            used[i] = false;
            for (slot, &d) in members.iter().enumerate() {
                avail[d] = saved[slot];
            }
        }
    }
}

/// Exact minimum drone makespan with no dispatch rule assumed: every
/// order crossed with every explicit drone subset. Only viable for a
/// handful of missions; exists to validate the earliest-drones rule the
/// other oracles and the library lean on.
pub fn drone_makespan_tiny(ms: &MissionSet) -> Minutes {
    assert!(ms.missions.len() <= 5, "tiny oracle is factorial twice over");
    let mut best = serial_makespan(ms);
    if ms.missions.is_empty() {
        return Minutes::ZERO;
    }
    let mut used = vec![false; ms.missions.len()];
    let mut avail = vec![Minutes::ZERO; ms.m];
    tiny_rec(&ms.missions, ms.m, &mut used, &mut avail, Minutes::ZERO, &mut best);
    best
}

// ------------------------------------------------------------ full solve --

/// Complete-enumeration optimum for whole instances: every truck-or-fly
/// split of the flexible customers, every group size, trucks and drones
/// scored by the oracles above.
pub struct SolveOracle<'a> {
    inst: &'a Instance,
    trucks: TruckOracle,
    drone_memo: HashMap<Vec<(usize, Minutes)>, Minutes>,
}

impl<'a> SolveOracle<'a> {
    pub fn build(inst: &'a Instance) -> SolveOracle<'a> {
        SolveOracle {
            inst,
            trucks: TruckOracle::build(inst),
            drone_memo: HashMap::new(),
        }
    }

    fn drone_value(&mut self, missions: &[(usize, Minutes)]) -> Minutes {
        let mut key: Vec<(usize, Minutes)> = missions.to_vec();
        key.sort();
        if let Some(&v) = self.drone_memo.get(&key) {
            return v;
        }
        let ms = MissionSet::new(
            self.inst.m(),
            key.iter()
                .enumerate()
                .map(|(i, &(group, duration))| Mission {
                    customer: i + 1,
                    group,
                    duration,
                })
                .collect(),
        );
        let v = drone_makespan(&ms);
        self.drone_memo.insert(key, v);
        v
    }

    fn assign_rec(
        &mut self,
        flex: &[NodeId],
        at: usize,
        truck_mask: usize,
        missions: &mut Vec<(usize, Minutes)>,
        longest: Minutes,
        best: &mut Option<Minutes>,
    ) {
        // Some drone is busy for every committed mission's full length,
        // whatever else happens below this point.
        if let Some(b) = *best {
            if longest >= b {
                return;
            }
        }
        if at == flex.len() {
            let value = self
                .trucks
                .split[truck_mask]
                .max(self.drone_value(missions));
            if best.map_or(true, |b| value < b) {
                *best = Some(value);
            }
            return;
        }
        let j = flex[at];
        self.assign_rec(flex, at + 1, truck_mask | 1 << (j - 1), missions, longest, best);
        let (q, p) = self.inst.drone_range(j).unwrap();
        for k in q..=p.min(self.inst.m()) {
            let tau = self.inst.drone_time(j, k).unwrap();
            missions.push((k, tau));
            self.assign_rec(flex, at + 1, truck_mask, missions, longest.max(tau), best);
            missions.pop();
        }
    }

    /// Optimal makespan over all solutions.
    pub fn optimum(&mut self) -> Minutes {
        self.optimum_forced(&BTreeMap::new())
    }

    /// Optimal makespan over solutions where each listed customer flies
    /// with exactly the listed group size.
    pub fn optimum_forced(&mut self, forced: &BTreeMap<NodeId, usize>) -> Minutes {
        let mut missions: Vec<(usize, Minutes)> = Vec::new();
        let mut longest = Minutes::ZERO;
        for (&j, &k) in forced {
            let tau = self
                .inst
                .drone_time(j, k)
                .expect("forced mission must be flyable");
            missions.push((k, tau));
            longest = longest.max(tau);
        }
        let mut truck_mask = 0usize;
        for j in self.inst.forced_truck() {
            truck_mask |= 1 << (j - 1);
        }
        let flex: Vec<NodeId> = self
            .inst
            .flexible()
            .filter(|j| !forced.contains_key(j))
            .collect();
        let mut best = None;
        self.assign_rec(&flex, 0, truck_mask, &mut missions, longest, &mut best);
        best.expect("enumeration always finds the all-truck solution")
    }
}

// ------------------------------------------------------------ separation --

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(size: usize) -> UnionFind {
        UnionFind {
            parent: (0..size).collect(),
        }
    }
    fn find(&mut self, v: usize) -> usize {
        if self.parent[v] != v {
            let root = self.find(self.parent[v]);
            self.parent[v] = root;
        }
        self.parent[v]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.parent[ra] = rb;
    }
}

/// Independent subtour finder. Returns `None` when the arc set is
/// malformed (duplicate arcs or any vertex without in-degree equal to
/// out-degree, both at most one); otherwise the connected components that
/// miss the depot, ordered by smallest member.
pub fn subtours_unionfind(arcs: &[(NodeId, NodeId)]) -> Option<Vec<BTreeSet<NodeId>>> {
    let mut seen = BTreeSet::new();
    let mut ind: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut outd: BTreeMap<NodeId, usize> = BTreeMap::new();
    for &(a, b) in arcs {
        if !seen.insert((a, b)) {
            return None;
        }
        *outd.entry(a).or_insert(0) += 1;
        *ind.entry(b).or_insert(0) += 1;
    }
    let verts: BTreeSet<NodeId> = arcs.iter().flat_map(|&(a, b)| [a, b]).collect();
    for &v in &verts {
        let i = ind.get(&v).copied().unwrap_or(0);
        let o = outd.get(&v).copied().unwrap_or(0);
        if i != o || i > 1 {
            return None;
        }
    }
    let top = verts.iter().copied().max().unwrap_or(0);
    let mut uf = UnionFind::new(top + 1);
    for &(a, b) in arcs {
        uf.union(a, b);
    }
    let mut comps: BTreeMap<usize, BTreeSet<NodeId>> = BTreeMap::new();
    for &v in &verts {
        let root = uf.find(v);
        comps.entry(root).or_default().insert(v);
    }
    let depot_root = if verts.contains(&0) { Some(uf.find(0)) } else { None };
    let mut cuts: Vec<BTreeSet<NodeId>> = comps
        .into_iter()
        .filter(|&(root, _)| Some(root) != depot_root)
        .map(|(_, set)| set)
        .collect();
    cuts.sort_by_key(|set| set.iter().next().copied());
    Some(cuts)
}

// ---------------------------------------------------------------- replay --

/// Discrete-event replay of a solution's drone part: per-drone cursors,
/// and a mission starts once it heads the queue of every drone flying
/// it. Independent of the longest-path evaluation in the library.
/// Panics if the cross-drone orders deadlock.
pub fn replay_drone_part(
    inst: &Instance,
    sol: &pdsvrp::solution::Solution,
) -> (BTreeMap<NodeId, Minutes>, Minutes) {
    let mut cursor = vec![0usize; sol.drones.len()];
    let mut avail = vec![Minutes::ZERO; sol.drones.len()];
    let mut done: BTreeMap<NodeId, Minutes> = BTreeMap::new();
    while done.len() < sol.missions.len() {
        let mut progressed = false;
        for (&j, &k) in &sol.missions {
            if done.contains_key(&j) {
                continue;
            }
            let participants: Vec<usize> = sol
                .drones
                .iter()
                .enumerate()
                .filter(|(_, seq)| seq.contains(&j))
                .map(|(d, _)| d)
                .collect();
            assert_eq!(participants.len(), k, "mission {j} must ride {k} drones");
            let at_head = participants
                .iter()
                .all(|&d| sol.drones[d].get(cursor[d]) == Some(&j));
            if !at_head {
                continue;
            }
            let tau = inst.drone_time(j, k).unwrap();
            let start = participants
                .iter()
                .map(|&d| avail[d])
                .fold(Minutes::ZERO, Minutes::max);
            let fin = start + tau;
            for &d in &participants {
                avail[d] = fin;
                cursor[d] += 1;
            }
            done.insert(j, fin);
            progressed = true;
        }
        assert!(progressed, "replay deadlocked; sequences are cyclic");
    }
    let span = done.values().copied().fold(Minutes::ZERO, Minutes::max);
    (done, span)
}

// ---------------------------------------------------------------- corpus --

/// Seeded random mission sets: group sizes within the fleet, durations
/// mostly whole minutes with some halves and quarters mixed in.
pub fn mission_corpus(
    count: usize,
    max_missions: usize,
    max_m: usize,
    seed0: u64,
) -> Vec<MissionSet> {
    use rand::{RngExt, SeedableRng};
    let mut out = Vec::with_capacity(count);
    for c in 0..count {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed0 + c as u64);
        let m = rng.random_range(1..=max_m);
        let count = rng.random_range(0..=max_missions);
        let missions = (0..count)
            .map(|i| {
                let den = [1, 1, 1, 2, 4][rng.random_range(0..5usize)];
                Mission {
                    customer: i + 1,
                    group: rng.random_range(1..=m),
                    duration: Minutes::ratio(rng.random_range(1..=30 * den), den),
                }
            })
            .collect();
        out.push(MissionSet::new(m, missions));
    }
    out
}

/// Deterministic varied corpus of generated instances. Seeds start at
/// `seed0` so different suites can draw non-overlapping streams.
pub fn corpus(count: usize, max_n: usize, max_m: usize, seed0: u64) -> Vec<Instance> {
    let fracs = [0.0, 0.2, 0.4, 0.7, 1.0];
    let mut out = Vec::with_capacity(count);
    let mut i = 0u64;
    while out.len() < count {
        let seed = seed0 + i;
        let n = 3 + (i as usize * 5 + out.len()) % (max_n - 2);
        let m = 1 + (i as usize / 2) % max_m;
        let s = 1 + (i as usize) % 2;
        let mut cfg = GenConfig::new(n, m, s);
        cfg.truck_only_frac = fracs[i as usize % fracs.len()];
        cfg.q_hi = (1 + (i as usize / 3) % 2).min(m);
        cfg.p_cap = (2 + (i as usize) % 2).min(m).max(cfg.q_hi);
        i += 1;
        out.push(generate(&cfg, seed).expect("corpus configs are valid"));
    }
    out
}
