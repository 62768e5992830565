//! The eight acceptance gates for the suite, one test per gate. Each test
//! prints exactly one status line (PASS, FAIL, or SKIP with the reason);
//! a FAIL line is followed by the panic that sinks the run.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use common::{corpus, drone_makespan, mission_corpus, subtours_unionfind, SolveOracle};
use pdsvrp::exact::{root_bound, separate_subtours, solve_exact, ArcSet, Budget, SolveStatus};
use pdsvrp::heuristic::construct;
use pdsvrp::instance::{from_benchmark_text, generate, GenConfig, Instance, NodeId};
use pdsvrp::scheduler::{drone_lb, schedule_exact, schedule_greedy, MissionSet};
use pdsvrp::time::Minutes;
use rand::{seq::SliceRandom, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Gate {
    Pass(String),
    Skip(String),
}

fn gate(number: usize, label: &str, run: impl FnOnce() -> Result<Gate, String>) {
    match run() {
        Ok(Gate::Pass(note)) => println!("ACCEPTANCE {number} ({label}): PASS - {note}"),
        Ok(Gate::Skip(why)) => println!("ACCEPTANCE {number} ({label}): SKIP - {why}"),
        Err(msg) => {
            println!("ACCEPTANCE {number} ({label}): FAIL - {msg}");
            panic!("acceptance {number} ({label}): {msg}");
        }
    }
}

// --------------------------------------------------------------- gate 1 --

#[test]
fn acceptance_1_exact_solver_matches_brute_force() {
    gate(1, "exact vs enumeration", || {
        let started = Instant::now();
        let instances = corpus(200, 8, 3, 10_000);
        let mut with_missions = 0usize;
        for inst in &instances {
            if inst.n() > 8 || inst.m() > 3 || inst.s() > 2 {
                return Err(format!("corpus drew an out-of-contract instance {}", inst.name()));
            }
            let out = solve_exact(inst, Budget::default());
            if out.status != SolveStatus::Optimal {
                return Err(format!("{}: status {:?}", inst.name(), out.status));
            }
            if !out.incumbent.missions.is_empty() {
                with_missions += 1;
            }
            let want = SolveOracle::build(inst).optimum();
            if out.ub != want {
                return Err(format!("{}: solver {} vs oracle {}", inst.name(), out.ub, want));
            }
            if out.lb != out.ub {
                return Err(format!("{}: optimal but lb {} != ub {}", inst.name(), out.lb, out.ub));
            }
            let breaches = out.incumbent.check(inst);
            if !breaches.is_empty() {
                return Err(format!("{}: incumbent has {} violations", inst.name(), breaches.len()));
            }
            let timeline = out.incumbent.evaluate(inst).map_err(|e| e.to_string())?;
            if timeline.makespan != out.ub {
                return Err(format!(
                    "{}: incumbent evaluates to {} but ub is {}",
                    inst.name(),
                    timeline.makespan,
                    out.ub
                ));
            }
        }
        let secs = started.elapsed().as_secs_f64();
        if secs > 300.0 {
            return Err(format!("took {secs:.0}s, budget is 300s"));
        }
        if with_missions < 40 {
            return Err(format!(
                "only {with_missions} optima used drones; corpus is not exercising them"
            ));
        }
        Ok(Gate::Pass(format!(
            "{} instances agreed in {secs:.1}s, {with_missions} optima fly drones",
            instances.len()
        )))
    });
}

// --------------------------------------------------------------- gate 2 --

#[test]
fn acceptance_2_root_bound_is_valid_and_forced_missions_price_in() {
    gate(2, "root bound validity", || {
        // Same corpus as gate 1: same sizes, same seed stream.
        let instances = corpus(200, 8, 3, 10_000);
        let mut forced_checks = 0usize;
        for inst in &instances {
            let mut oracle = SolveOracle::build(inst);
            let free = root_bound(inst, &BTreeMap::new()).map_err(|e| e.to_string())?;
            let optimum = oracle.optimum();
            if free.bound > optimum {
                return Err(format!(
                    "{}: unforced bound {} exceeds optimum {}",
                    inst.name(),
                    free.bound,
                    optimum
                ));
            }
            for j in inst.flexible().take(2) {
                let (q, p) = inst.drone_range(j).unwrap();
                for k in q..=p {
                    let forced: BTreeMap<NodeId, usize> = [(j, k)].into_iter().collect();
                    let rb = root_bound(inst, &forced).map_err(|e| e.to_string())?;
                    if rb.va <= Minutes::ZERO {
                        return Err(format!(
                            "{}: forcing {j} at {k} left the work bound at {}",
                            inst.name(),
                            rb.va
                        ));
                    }
                    let ms = MissionSet::from_choices(inst, &forced).map_err(|e| e.to_string())?;
                    if rb.bound < drone_lb(&ms).bound {
                        return Err(format!(
                            "{}: bound {} under the forced drone bound",
                            inst.name(),
                            rb.bound
                        ));
                    }
                    let best = oracle.optimum_forced(&forced);
                    if rb.bound > best {
                        return Err(format!(
                            "{}: forced bound {} exceeds restricted optimum {}",
                            inst.name(),
                            rb.bound,
                            best
                        ));
                    }
                    forced_checks += 1;
                }
            }
        }
        if forced_checks < 50 {
            return Err(format!("only {forced_checks} forced commitments exercised"));
        }
        Ok(Gate::Pass(format!(
            "{} instances, {forced_checks} forced commitments",
            instances.len()
        )))
    });
}

// --------------------------------------------------------------- gate 3 --

#[test]
fn acceptance_3_schedulers_match_enumeration_and_greedy_stays_close() {
    gate(3, "drone scheduling", || {
        let started = Instant::now();
        let sets = mission_corpus(100, 8, 4, 5_000);
        for (i, ms) in sets.iter().enumerate() {
            let exact = schedule_exact(ms).map_err(|e| format!("set {i}: {e}"))?;
            if !exact.proven {
                return Err(format!("set {i}: exact schedule not proven at this size"));
            }
            let want = drone_makespan(ms);
            if exact.plan.makespan != want {
                return Err(format!(
                    "set {i}: exact {} vs oracle {}",
                    exact.plan.makespan, want
                ));
            }
            let greedy = schedule_greedy(ms).map_err(|e| format!("set {i}: {e}"))?;
            if greedy.makespan < want {
                return Err(format!(
                    "set {i}: greedy {} beat the proven optimum {}",
                    greedy.makespan, want
                ));
            }
            if greedy.makespan > want * 2 {
                return Err(format!(
                    "set {i}: greedy {} is more than twice {}",
                    greedy.makespan, want
                ));
            }
        }
        let secs = started.elapsed().as_secs_f64();
        if secs > 60.0 {
            return Err(format!("took {secs:.0}s, budget is 60s"));
        }
        Ok(Gate::Pass(format!("{} mission sets in {secs:.1}s", sets.len())))
    });
}

// --------------------------------------------------------------- gate 4 --

fn bench_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("PDSVRP_BENCH_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/benchmarks")
        });
    dir.is_dir().then_some(dir)
}

fn find_case(dir: &PathBuf, stem: &str) -> Option<PathBuf> {
    std::fs::read_dir(dir)
        .ok()?
        .flatten()
        .map(|e| e.path())
        .find(|p| p.file_stem().map_or(false, |s| s == stem))
}

#[test]
fn acceptance_4_published_reference_optima() {
    gate(4, "reference optima", || {
        let Some(dir) = bench_dir() else {
            return Ok(Gate::Skip(
                "benchmark archive not present; point PDSVRP_BENCH_DIR at it to enable".into(),
            ));
        };
        let cases = [
            ("15-r-e", 1usize, 92i64),
            ("16-c-c", 1, 60),
            ("15-rc-c", 2, 33),
            ("16-c-c", 3, 36),
        ];
        let mut solved = 0usize;
        for (stem, s, want) in cases {
            let Some(path) = find_case(&dir, stem) else {
                return Ok(Gate::Skip(format!("{stem} not found under {}", dir.display())));
            };
            let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
            let inst = from_benchmark_text(stem, &text).map_err(|e| format!("{stem}: {e}"))?;
            let inst = inst.with_fleet(s, inst.m()).map_err(|e| format!("{stem}: {e}"))?;
            let out = solve_exact(
                &inst,
                Budget {
                    max_nodes: None,
                    max_millis: Some(240_000),
                },
            );
            if out.status != SolveStatus::Optimal {
                return Err(format!("{stem} s={s}: status {:?}", out.status));
            }
            if out.ub != Minutes::from_int(want) {
                return Err(format!("{stem} s={s}: got {}, published {want}", out.ub));
            }
            solved += 1;
        }
        Ok(Gate::Pass(format!("{solved} published optima reproduced")))
    });
}

// --------------------------------------------------------------- gate 5 --

#[test]
fn acceptance_5_bigger_fleets_never_hurt() {
    gate(5, "fleet monotonicity", || {
        let instances = corpus(50, 7, 2, 30_000);
        for inst in &instances {
            let base = solve_exact(inst, Budget::default());
            let more_drones = inst
                .with_fleet(inst.s(), inst.m() + 1)
                .map_err(|e| e.to_string())?;
            let more_trucks = inst
                .with_fleet(inst.s() + 1, inst.m())
                .map_err(|e| e.to_string())?;
            let md = solve_exact(&more_drones, Budget::default());
            let mt = solve_exact(&more_trucks, Budget::default());
            for out in [&base, &md, &mt] {
                if out.status != SolveStatus::Optimal {
                    return Err(format!("{}: status {:?}", inst.name(), out.status));
                }
            }
            if md.ub > base.ub {
                return Err(format!(
                    "{}: m {} -> {} worsened {} -> {}",
                    inst.name(),
                    inst.m(),
                    inst.m() + 1,
                    base.ub,
                    md.ub
                ));
            }
            if mt.ub > base.ub {
                return Err(format!(
                    "{}: s {} -> {} worsened {} -> {}",
                    inst.name(),
                    inst.s(),
                    inst.s() + 1,
                    base.ub,
                    mt.ub
                ));
            }
        }
        Ok(Gate::Pass(format!("{} instances stayed monotone", instances.len())))
    });
}

// --------------------------------------------------------------- gate 6 --

#[test]
fn acceptance_6_subtour_separation_matches_union_find() {
    gate(6, "subtour separation", || {
        let mut rng = ChaCha8Rng::seed_from_u64(606);
        let mut clean = 0usize;
        for case in 0..500 {
            let arcs = random_arc_set(&mut rng, case);
            let ours = separate_subtours(&ArcSet { truck: 1, arcs: arcs.clone() });
            let reference = subtours_unionfind(&arcs);
            match (&ours, &reference) {
                (Ok(cuts), Some(want)) => {
                    if cuts != want {
                        return Err(format!("case {case}: {cuts:?} vs union-find {want:?}"));
                    }
                }
                (Err(_), None) => {}
                (Ok(cuts), None) => {
                    return Err(format!("case {case}: accepted a malformed set with {cuts:?}"));
                }
                (Err(e), Some(_)) => {
                    return Err(format!("case {case}: rejected a well-formed set with {e}"));
                }
            }
        }
        // Serialized tours of feasible solutions must come back clean.
        for inst in corpus(30, 9, 3, 60_000) {
            let sol = construct(&inst);
            let breaches = sol.check(&inst);
            if !breaches.is_empty() {
                return Err(format!("{}: constructive start infeasible", inst.name()));
            }
            for tour in &sol.tours {
                let mut arcs = Vec::new();
                let mut prev = 0;
                for &j in tour {
                    arcs.push((prev, j));
                    prev = j;
                }
                arcs.push((prev, 0));
                let cuts = separate_subtours(&ArcSet { truck: 1, arcs })
                    .map_err(|e| format!("{}: {e}", inst.name()))?;
                if !cuts.is_empty() {
                    return Err(format!("{}: clean tour produced cuts {cuts:?}", inst.name()));
                }
                clean += 1;
            }
        }
        Ok(Gate::Pass(format!("500 random arc sets, {clean} serialized tours")))
    });
}

/// Random arc sets: mostly unions of disjoint cycles, with every fourth
/// case corrupted into a malformed set.
fn random_arc_set(rng: &mut ChaCha8Rng, case: usize) -> Vec<(NodeId, NodeId)> {
    let top = rng.random_range(2..=12usize);
    let mut verts: Vec<NodeId> = (0..=top).collect();
    verts.shuffle(rng);
    let keep = rng.random_range(0..=verts.len());
    verts.truncate(keep);
    let mut arcs = Vec::new();
    let mut rest = &verts[..];
    while !rest.is_empty() {
        let len = rng.random_range(1..=rest.len());
        let (cycle, tail) = rest.split_at(len);
        for w in cycle.windows(2) {
            arcs.push((w[0], w[1]));
        }
        arcs.push((*cycle.last().unwrap(), cycle[0]));
        rest = tail;
    }
    match case % 4 {
        0 | 1 => {}
        2 => {
            // Break conservation by dropping one arc.
            if !arcs.is_empty() {
                let at = rng.random_range(0..arcs.len());
                arcs.remove(at);
            }
        }
        _ => {
            // Fork or duplicate an existing arc.
            if let Some(&(a, b)) = arcs.first() {
                let fork = rng.random_range(0..=top);
                if rng.random_bool(0.5) {
                    arcs.push((a, b));
                } else if fork != b {
                    arcs.push((a, fork));
                } else {
                    arcs.push((a, b));
                }
            }
        }
    }
    arcs
}

// --------------------------------------------------------------- gate 7 --

#[test]
fn acceptance_7_external_milp_solver_agrees() {
    gate(7, "external MILP cross-check", || {
        let probe = Command::new("python3")
            .args(["-c", "import scipy.optimize"])
            .output();
        match probe {
            Ok(out) if out.status.success() => {}
            _ => {
                return Ok(Gate::Skip(
                    "python3 with scipy not available; install scipy to enable".into(),
                ));
            }
        }
        let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/milp_check.py");
        let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
        for seed in 0..10u64 {
            let mut cfg = GenConfig::new(6, 2, 1);
            cfg.truck_only_frac = 0.3;
            let inst = generate(&cfg, 7_000 + seed).map_err(|e| e.to_string())?;
            let exact = solve_exact(&inst, Budget::default());
            if exact.status != SolveStatus::Optimal {
                return Err(format!("{}: exact status {:?}", inst.name(), exact.status));
            }
            let mut alphas = Vec::new();
            for include_va in [true, false] {
                let cfg = pdsvrp::emit::EmitterConfig {
                    include_va,
                    sec_mode: pdsvrp::emit::SecMode::AllUpTo(5),
                    ..Default::default()
                };
                let lp = pdsvrp::emit::emit_milp(&inst, &cfg).map_err(|e| e.to_string())?;
                let path = dir.path().join(format!("{}-va{}.lp", inst.name(), include_va));
                std::fs::write(&path, &lp).map_err(|e| e.to_string())?;
                let run = Command::new("python3")
                    .arg(&script)
                    .arg(&path)
                    .output()
                    .map_err(|e| e.to_string())?;
                if !run.status.success() {
                    return Err(format!(
                        "{}: solver script failed: {}",
                        inst.name(),
                        String::from_utf8_lossy(&run.stderr)
                    ));
                }
                let text = String::from_utf8_lossy(&run.stdout);
                let sol = pdsvrp::emit::import_milp_solution(&text, &inst)
                    .map_err(|e| format!("{}: import: {e}", inst.name()))?;
                let makespan = sol.evaluate(&inst).map_err(|e| e.to_string())?.makespan;
                if makespan != exact.ub {
                    return Err(format!(
                        "{}: external optimum {} vs exact {}",
                        inst.name(),
                        makespan,
                        exact.ub
                    ));
                }
                let alpha: f64 = text
                    .lines()
                    .find_map(|l| l.strip_prefix("alpha "))
                    .ok_or_else(|| format!("{}: no alpha in output", inst.name()))?
                    .trim()
                    .parse()
                    .map_err(|e| format!("{}: {e}", inst.name()))?;
                if (alpha - exact.ub.as_f64()).abs() > 1e-5 {
                    return Err(format!(
                        "{}: external alpha {alpha} vs exact {}",
                        inst.name(),
                        exact.ub
                    ));
                }
                alphas.push(alpha);
            }
            if (alphas[0] - alphas[1]).abs() > 1e-5 {
                return Err(format!(
                    "{}: work-bound row changed the optimum: {} vs {}",
                    inst.name(),
                    alphas[0],
                    alphas[1]
                ));
            }
        }
        Ok(Gate::Pass("10 instances matched through an external solver, with and without the work-bound row".into()))
    });
}

// --------------------------------------------------------------- gate 8 --

#[test]
fn acceptance_8_serialization_identity_and_reproducible_benchmarks() {
    gate(8, "serialization and reproducibility", || {
        for inst in corpus(1_000, 12, 4, 40_000) {
            let json = inst.to_json();
            let back = Instance::from_json(&json).map_err(|e| format!("{}: {e}", inst.name()))?;
            if back != inst {
                return Err(format!("{}: instance changed across a round trip", inst.name()));
            }
            if back.to_json() != json {
                return Err(format!("{}: serialization is not stable", inst.name()));
            }
        }

        let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
        let cases = dir.path().join("cases");
        std::fs::create_dir(&cases).map_err(|e| e.to_string())?;
        for (i, inst) in corpus(4, 7, 2, 50_000).iter().enumerate() {
            std::fs::write(cases.join(format!("case{i}.json")), inst.to_json())
                .map_err(|e| e.to_string())?;
        }
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("bench{run}.csv"));
            let code = pdsvrp::cli::run([
                "pdsvrp",
                "bench",
                cases.to_str().unwrap(),
                "--solver",
                "exact",
                "--redact-timing",
                "--out",
                out.to_str().unwrap(),
            ]);
            if code != 0 {
                return Err(format!("bench run {run} exited {code}"));
            }
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        if outputs[0] != outputs[1] {
            return Err("bench csv differed between identical runs".into());
        }
        let text = String::from_utf8(outputs[0].clone()).map_err(|e| e.to_string())?;
        if text.lines().next() != Some(pdsvrp::cli::CSV_HEADER) {
            return Err("bench csv header drifted".into());
        }
        if text.lines().count() != 5 {
            return Err(format!("expected 4 rows, got {}", text.lines().count() - 1));
        }
        Ok(Gate::Pass("1000 instances round-tripped; bench csv reproducible".into()))
    });
}
