//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness; exits non-zero if any criterion fails.

use std::collections::VecDeque;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use carpool_core::eval::{eval_gap, score_gaps, GapRecord};
use carpool_core::geometry::Point;
use carpool_core::instance::worked_example;
use carpool_core::model::{build_model, matrix_shape, random_instance};
use carpool_core::prompt::{exemplar_block, parse_solution, render_prompt, Exemplar};
use carpool_core::schedule::make_schedule;
use carpool_core::sim::{
    dijkstra_path, event_counts, generate_synthetic_orders, initial_fleet, read_snapshots_jsonl, run_simulation,
    write_snapshots_jsonl, Cell, Region, RoadNetwork, SimConfig,
};
use carpool_core::solver::{brute_force, solve_exact, SolveLimits};
use carpool_core::{evaluate_objective, validate, Assignment, DispatchInstance};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXACT_TOL: f64 = 1e-9;
const EXEMPLAR_OBJECTIVE: f64 = 24.36;
const EXEMPLAR_BUDGET: Duration = Duration::from_millis(1);
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const ORACLE_INSTANCES: usize = 500;
const ROUND_TRIPS: usize = 1000;
const MAZES: u64 = 100;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exemplar_solution() -> Assignment {
    Assignment { x: [(0, 1), (1, 0)].into(), z: [(1, 2)].into(), ..Assignment::new() }
}

fn c1_exemplar_objective() -> Outcome {
    let inst = worked_example();
    let sol = exemplar_solution();
    let t = Instant::now();
    let obj = evaluate_objective(&inst, &sol).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure((obj - EXEMPLAR_OBJECTIVE).abs() <= EXACT_TOL, || format!("objective {obj}"))?;
    ensure(elapsed < EXEMPLAR_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("objective {obj:.12} in {elapsed:?}"))
}

fn c2_prompt_golden() -> Outcome {
    let golden = include_str!("../../core/tests/golden/exemplar_prompt.txt");
    let inst = worked_example();
    let ex = Exemplar { assignment: exemplar_solution(), gap: 1.0, objective: EXEMPLAR_OBJECTIVE };
    let text = render_prompt(&inst, &[ex]).map_err(|e| e.to_string())?.full_text;
    ensure(text == golden, || "rendered prompt differs from golden".into())?;
    // An empty y set still occupies its line.
    ensure(text.contains("x: (0, 1) (1, 0)\n\nz: (1, 2)\n"), || "blank y line missing".into())?;
    Ok(format!("{} bytes identical", text.len()))
}

fn c3_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = Instant::now();
    let mut infeasible = 0;
    for i in 0..ORACLE_INSTANCES {
        let (m, n, p) = (rng.random_range(0..=2), rng.random_range(0..=2), rng.random_range(1..=4));
        let inst = random_instance(format!("o{i}"), m, n, p, Point::new(0.0, 0.0), Point::new(50.0, 50.0), &mut rng);
        let exact = solve_exact(&build_model(&inst).0, &SolveLimits::default());
        let brute = brute_force(&inst).map_err(|e| e.to_string())?;
        match (exact.objective, brute.objective) {
            (Some(a), Some(b)) => ensure((a - b).abs() <= EXACT_TOL, || format!("{}: {a} vs {b}", inst.id))?,
            (None, None) => infeasible += 1,
            (a, b) => return Err(format!("{}: {a:?} vs {b:?}", inst.id)),
        }
    }
    let elapsed = t.elapsed();
    ensure(elapsed < ORACLE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{ORACLE_INSTANCES} instances ({infeasible} infeasible) in {elapsed:?}"))
}

fn c4_matrix_shape() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for m in 0..=6 {
        for n in 0..=6 {
            for p in 0..=6 {
                let inst = random_instance("s", m, n, p, Point::new(0.0, 0.0), Point::new(1.0, 1.0), &mut rng);
                let got = build_model(&inst).0.shape();
                let want = (m + n + p, m * p + m * p * p.saturating_sub(1) + n * p);
                ensure(got == want, || format!("({m},{n},{p}): {got:?} vs {want:?}"))?;
                let shape = matrix_shape(m, n, p);
                ensure((shape.rows, shape.cols) == want, || format!("({m},{n},{p}): matrix_shape {shape:?}"))?;
                ensure(shape.nominal_cols == m * p + m * p * p + n * p, || format!("({m},{n},{p}): nominal"))?;
            }
        }
    }
    let s = matrix_shape(6, 6, 6);
    Ok(format!("343 sizes; at 6/6/6 cols {} vs nominal {}", s.cols, s.nominal_cols))
}

fn c5_schedules() -> Outcome {
    let table: [(&str, &[f64]); 5] = [
        ("fall", &[1.0, 0.1, 0.01]),
        ("rise", &[0.01, 0.1, 1.0]),
        ("rise_then_fall", &[0.01, 1.0, 0.01]),
        ("constant", &[0.01, 0.01, 0.01]),
        ("single", &[0.01]),
    ];
    for (name, want) in table {
        let got = make_schedule(name).map_err(|e| e.to_string())?.temperatures;
        ensure(got == want, || format!("{name}: {got:?}"))?;
    }
    ensure(make_schedule("warm").is_err(), || "unknown name accepted".into())?;
    Ok("5 schedules".into())
}

fn c6_gap_metric() -> Outcome {
    let table: [(f64, f64, f64); 20] = [
        (24.36, 0.0, 1.0),
        (17.5, 17.5, 0.0),
        (20.0, 15.0, 0.25),
        (0.0, 0.0, 0.0),
        (10.0, 5.0, 0.5),
        (100.0, 99.0, 0.01),
        (8.0, 6.0, 0.25),
        (4.0, 1.0, 0.75),
        (50.0, 40.0, 0.2),
        (12.5, 10.0, 0.2),
        (3.0, 2.0, 1.0 / 3.0),
        (9.0, 3.0, 2.0 / 3.0),
        (1.0, 0.0, 1.0),
        (16.0, 12.0, 0.25),
        (7.0, 7.0, 0.0),
        (40.0, 30.0, 0.25),
        (5.0, 4.5, 0.1),
        (2.5, 2.0, 0.2),
        (1000.0, 1.0, 0.999),
        (6.4, 4.8, 0.25),
    ];
    for (obj, opt, want) in table {
        let got = eval_gap(obj, opt).map_err(|e| e.to_string())?;
        ensure((got - want).abs() < 1e-12, || format!("gap({obj}, {opt}) = {got}"))?;
    }
    let rec = |id: &str, p: Option<f64>, r: f64| GapRecord {
        instance_ref: id.into(),
        proposer_best_gap: p,
        reference_gap: r,
        scale: 9,
        optimal: 1.0,
    };
    // a wins; b ties and loses; c is worse; d has no feasible proposal.
    let records = [rec("a", Some(0.0), 0.2), rec("b", Some(0.1), 0.1), rec("c", Some(0.3), 0.2), rec("d", None, 0.0)];
    let report = score_gaps("fall", &records).map_err(|e| e.to_string())?;
    ensure(report.wins == [true, false, false, false], || format!("wins {:?}", report.wins))?;
    ensure(report.average_score == 0.25, || format!("score {}", report.average_score))?;
    Ok("20 gaps; fixture score 0.25".into())
}

fn bfs(net: &RoadNetwork, from: Cell, to: Cell) -> Option<usize> {
    let mut seen = std::collections::HashSet::from([from]);
    let mut queue = VecDeque::from([(from, 0)]);
    while let Some((c, d)) = queue.pop_front() {
        if c == to {
            return Some(d);
        }
        let (col, row) = (c.col as i64, c.row as i64);
        for (dc, dr) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (nc, nr) = (col + dc, row + dr);
            if nc < 0 || nr < 0 {
                continue;
            }
            let next = Cell::new(nc as usize, nr as usize);
            if net.is_open(next) && seen.insert(next) {
                queue.push_back((next, d + 1));
            }
        }
    }
    None
}

fn c7_dijkstra() -> Outcome {
    let open = RoadNetwork::grid(10, 10);
    let cells: Vec<Cell> = open.open_cells().collect();
    for &a in &cells {
        for &b in &cells {
            let (_, len) = dijkstra_path(&open, a, b).map_err(|e| e.to_string())?;
            ensure(len == a.manhattan(b), || format!("{a:?}->{b:?}: {len}"))?;
        }
    }
    let mut pairs = 0;
    for seed in 0..MAZES {
        let net = RoadNetwork::random_maze(12, 9, 0.3, seed);
        let cells: Vec<Cell> = net.open_cells().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..40 {
            let (a, b) = (*cells.choose(&mut rng).unwrap(), *cells.choose(&mut rng).unwrap());
            let got = dijkstra_path(&net, a, b).ok().map(|(_, len)| len);
            ensure(got == bfs(&net, a, b), || format!("maze {seed} {a:?}->{b:?}: {got:?}"))?;
            pairs += 1;
        }
    }
    Ok(format!("{} open-grid pairs; {pairs} maze pairs", cells.len() * cells.len()))
}

fn carpool() -> Command {
    Command::new(env!("CARGO_BIN_EXE_carpool"))
}

fn ablate(out: &Path) -> Result<(), String> {
    let status = carpool()
        .args(["ablate", "--proposer", "stochastic", "--seed", "7", "--count", "50", "--size", "6", "--out"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())
}

fn c8_end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ablate(&a)?;
    ablate(&b)?;
    for f in ["ablation.csv", "scale.csv", "summary.json", "table.txt"] {
        let (x, y) = (std::fs::read(a.join(f)).map_err(|e| e.to_string())?, std::fs::read(b.join(f)).unwrap_or_default());
        ensure(x == y, || format!("{f} differs between runs"))?;
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("summary.json")).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let score = |name: &str| {
        summary["schedules"]
            .as_array()
            .and_then(|s| s.iter().find(|r| r["schedule"] == name))
            .and_then(|r| r["average_score"].as_f64())
            .ok_or_else(|| format!("no score for {name}"))
    };
    let (fall, single) = (score("fall")?, score("single")?);
    ensure(fall >= single, || format!("fall {fall} < single {single}"))?;
    Ok(format!("byte-identical; fall {fall:.3} >= single {single:.3}"))
}

/// Random assignment that covers every user within capacity.
fn random_feasible(rng: &mut ChaCha8Rng, id: usize) -> (DispatchInstance, Assignment) {
    loop {
        let (m, n) = (rng.random_range(0..=4), rng.random_range(0..=4));
        let cap = 2 * m + n;
        let p = rng.random_range(0..=cap.min(8));
        let inst = random_instance(format!("r{id}"), m, n, p, Point::new(0.0, 0.0), Point::new(99.0, 99.0), rng);
        let mut users: Vec<usize> = (0..p).collect();
        users.shuffle(rng);
        let mut empties: Vec<usize> = (0..m).collect();
        let mut ones: Vec<usize> = (0..n).collect();
        empties.shuffle(rng);
        ones.shuffle(rng);
        let mut sol = Assignment::new();
        let mut stuck = false;
        while let Some(j) = users.pop() {
            let options = [!empties.is_empty(), !empties.is_empty() && !users.is_empty(), !ones.is_empty()];
            let open: Vec<usize> = (0..3).filter(|&o| options[o]).collect();
            let Some(&choice) = open.choose(rng) else {
                stuck = true;
                break;
            };
            match choice {
                0 => {
                    sol.x.insert((empties.pop().unwrap(), j));
                }
                1 => {
                    let k = users.pop().unwrap();
                    sol.y.insert((empties.pop().unwrap(), j, k));
                }
                _ => {
                    sol.z.insert((ones.pop().unwrap(), j));
                }
            }
        }
        if !stuck {
            return (inst, sol);
        }
    }
}

fn c9_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..ROUND_TRIPS {
        let (inst, sol) = random_feasible(&mut rng, i);
        ensure(validate(&inst, &sol).feasible, || format!("generator produced an infeasible case {i}"))?;
        let objective = evaluate_objective(&inst, &sol).map_err(|e| e.to_string())?;
        let text = exemplar_block(&Exemplar { assignment: sol.clone(), gap: 0.5, objective });
        if sol.is_empty() {
            continue;
        }
        let back = parse_solution(&text, &inst).map_err(|e| format!("case {i}: {e}"))?.assignment;
        ensure(back == sol, || format!("case {i}: {sol:?} came back as {back:?}"))?;
    }
    Ok(format!("{ROUND_TRIPS} assignments"))
}

fn c10_simulator() -> Outcome {
    let net = RoadNetwork::grid(30, 30);
    let orders = generate_synthetic_orders(11, 100, Region::of_network(&net), 1800.0);
    let out = run_simulation(&net, &orders, initial_fleet(&net, 20, 12), &SimConfig::default()).map_err(|e| e.to_string())?;
    let counts = event_counts(&out.events);
    ensure(counts.len() == out.summary.matched, || format!("{} orders with events, {} matched", counts.len(), out.summary.matched))?;
    ensure(counts.values().all(|&c| c == (1, 1)), || "an order lacks exactly one pickup and one dropoff".into())?;
    ensure(out.summary.completed == out.summary.matched, || "matched orders left unfinished".into())?;
    ensure(out.summary.max_onboard <= 2, || format!("occupancy reached {}", out.summary.max_onboard))?;

    let mut jsonl = Vec::new();
    write_snapshots_jsonl(&out.snapshots, &mut jsonl).map_err(|e| e.to_string())?;
    let stored = read_snapshots_jsonl(std::str::from_utf8(&jsonl).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    for rec in &stored {
        let again = solve_exact(&build_model(&rec.instance).0, &SolveLimits::default());
        let (a, b) = (rec.solve.objective, again.objective);
        let same = match (a, b) {
            (Some(a), Some(b)) => (a - b).abs() <= EXACT_TOL,
            _ => false,
        };
        ensure(same, || format!("round {}: stored {a:?}, re-solved {b:?}", rec.round))?;
    }
    Ok(format!("{} matched, {} snapshots re-solved, max onboard {}", out.summary.matched, stored.len(), out.summary.max_onboard))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 exemplar objective", c1_exemplar_objective),
        ("2 prompt golden", c2_prompt_golden),
        ("3 oracle equivalence", c3_oracle),
        ("4 matrix shape", c4_matrix_shape),
        ("5 schedule definitions", c5_schedules),
        ("6 gap metric", c6_gap_metric),
        ("7 grid dijkstra", c7_dijkstra),
        ("8 end-to-end determinism", c8_end_to_end),
        ("9 render/parse round-trip", c9_round_trip),
        ("10 simulator conservation", c10_simulator),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
