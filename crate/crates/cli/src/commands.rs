use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use carpool_core::eval::{ablation_report, AblationConfig};
use carpool_core::geometry::Point;
use carpool_core::instance::DispatchInstance;
use carpool_core::model::{build_model, random_instance};
use carpool_core::prompt::{render_prompt, Exemplar};
use carpool_core::proposer::{MockProposer, Proposer, Provider, RemoteConfig, RemoteProposer, StochasticProposer};
use carpool_core::schedule::{make_schedule, run_schedule_with, ScheduleConfig, TemperatureSchedule};
use carpool_core::seeds;
use carpool_core::sim::{
    generate_synthetic_orders, ingest_orders, initial_fleet, run_simulation, write_snapshots_jsonl, BadRowPolicy,
    OrderEvent, Region, RoadNetwork, SimConfig, SimOutcome,
};
use carpool_core::solver::{first_k_incumbents, solve_exact, SolveLimits, SolveResult, SolveStatus};
use carpool_core::ProjectionConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{pick, FileConfig};
use crate::manifest::RunManifest;
use crate::{AblateArgs, Common, GenerateArgs, PromptArgs, ProposerArgs, ProposerKind, RunArgs, SimArgs, SimulateArgs, SolveArgs, SolverArgs, Source};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_SOLVER_ABORT: u8 = 3;
pub const EXIT_REMOTE: u8 = 4;

/// Side of the box random instances are drawn from.
const RANDOM_BOX: f64 = 100.0;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn io_fail(what: &Path, e: std::io::Error) -> Failure {
    fail(EXIT_FAILURE, format!("writing {}: {e}", what.display()))
}

struct Session {
    file: FileConfig,
    seed: u64,
    jobs: usize,
}

fn session(common: &Common) -> Result<Session, Failure> {
    let file = FileConfig::load(common.config.as_deref()).map_err(|m| fail(EXIT_USAGE, m))?;
    let seed = pick(common.seed, file.seed, 0);
    let jobs = pick(common.jobs, file.jobs, 1).max(1);
    Ok(Session { file, seed, jobs })
}

/// Runs `body` between manifest start and finish.
fn with_manifest(
    common: &Common,
    command: &str,
    seed: u64,
    config: Value,
    body: impl FnOnce(&mut RunManifest) -> Result<(), Failure>,
) -> Result<(), Failure> {
    let mut manifest =
        RunManifest::start(&common.out, command, seed, config).map_err(|e| io_fail(&common.out, e))?;
    let result = body(&mut manifest);
    match &result {
        Ok(()) => manifest.finish(0, None),
        Err(f) => manifest.finish(f.code as i32, Some(f.message.clone())),
    }
    result
}

fn write(m: &mut RunManifest, rel: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    let rel = rel.as_ref();
    m.write(rel, contents).map(|_| ()).map_err(|e| io_fail(&m.root().join(rel), e))
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn limits(args: &SolverArgs, file: &FileConfig) -> SolveLimits {
    let d = SolveLimits::default();
    SolveLimits {
        max_nodes: pick(args.max_nodes, file.solver.max_nodes, d.max_nodes),
        max_time: Duration::from_secs_f64(pick(args.time_limit, file.solver.time_limit_secs, d.max_time.as_secs_f64())),
    }
}

fn limits_json(l: &SolveLimits) -> Value {
    json!({ "max_nodes": l.max_nodes, "time_limit_secs": l.max_time.as_secs_f64() })
}

struct Loaded {
    instance: DispatchInstance,
    exemplars: Option<Vec<Exemplar>>,
}

fn load_value(v: Value, path: &Path) -> Result<Loaded, Failure> {
    let exemplars = match v.get("exemplars") {
        Some(e) => Some(
            serde_json::from_value(e.clone())
                .map_err(|e| fail(EXIT_USAGE, format!("{}: bad exemplars: {e}", path.display())))?,
        ),
        None => None,
    };
    let instance: DispatchInstance =
        serde_json::from_value(v).map_err(|e| fail(EXIT_USAGE, format!("{}: not an instance: {e}", path.display())))?;
    if !instance.is_finite() {
        return Err(fail(EXIT_USAGE, format!("{}: instance {} has non-finite coordinates", path.display(), instance.id)));
    }
    Ok(Loaded { instance, exemplars })
}

/// Accepts one JSON object, a JSON array of objects, or JSONL.
fn read_instances(path: &Path) -> Result<Vec<Loaded>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| fail(EXIT_USAGE, format!("reading {}: {e}", path.display())))?;
    let values: Vec<Value> = match serde_json::from_str::<Value>(&text) {
        Ok(Value::Array(items)) => items,
        Ok(v) => vec![v],
        Err(_) => text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| fail(EXIT_USAGE, format!("{}:{}: {e}", path.display(), i + 1)))
            })
            .collect::<Result<_, _>>()?,
    };
    values.into_iter().map(|v| load_value(v, path)).collect()
}

fn read_one(path: &Path) -> Result<Loaded, Failure> {
    let mut all = read_instances(path)?;
    match all.len() {
        1 => Ok(all.remove(0)),
        0 => Err(fail(EXIT_USAGE, format!("{} holds no instance", path.display()))),
        k => Err(fail(EXIT_USAGE, format!("{} holds {k} instances; expected one", path.display()))),
    }
}

/// Maps in parallel, keeping input order.
fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                *slots[i].lock().expect("slot") = Some(f(item));
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot").expect("filled")).collect()
}

fn solve_one(inst: &DispatchInstance, limits: &SolveLimits) -> SolveResult {
    solve_exact(&build_model(inst).0, limits)
}

fn random_instances(seed: u64, count: usize, m: usize, n: usize, p: usize) -> Vec<DispatchInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, seeds::INSTANCE_GEN));
    let (lo, hi) = (Point::new(0.0, 0.0), Point::new(RANDOM_BOX, RANDOM_BOX));
    (0..count).map(|i| random_instance(format!("inst-{i:05}"), m, n, p, lo, hi, &mut rng)).collect()
}

#[derive(Debug, Clone, Serialize)]
struct SimSettings {
    grid: usize,
    vehicles: usize,
    num_orders: usize,
    time_span: f64,
    blocked_density: f64,
    sim: SimConfig,
}

fn sim_settings(a: &SimArgs, file: &FileConfig) -> SimSettings {
    let s = &file.sim;
    let d = SimConfig::default();
    SimSettings {
        grid: pick(a.grid, s.grid, 30),
        vehicles: pick(a.vehicles, s.vehicles, 20),
        num_orders: pick(a.num_orders, s.orders, 100),
        time_span: pick(a.time_span, s.time_span, 1800.0),
        blocked_density: pick(a.blocked_density, s.blocked_density, 0.0),
        sim: SimConfig {
            batch_window: pick(a.batch_window, s.batch_window, d.batch_window),
            vehicle_speed: pick(a.speed, s.vehicle_speed, d.vehicle_speed),
            tick: s.tick.unwrap_or(d.tick),
            drain_time: s.drain_time.unwrap_or(d.drain_time),
            ..d
        },
    }
}

fn square_network(settings: &SimSettings, seed: u64) -> Result<RoadNetwork, Failure> {
    if settings.grid == 0 {
        return Err(fail(EXIT_USAGE, "--grid must be at least 1"));
    }
    if !(0.0..1.0).contains(&settings.blocked_density) {
        return Err(fail(EXIT_USAGE, "--blocked-density must lie in [0, 1)"));
    }
    let net = if settings.blocked_density > 0.0 {
        RoadNetwork::random_maze(settings.grid, settings.grid, settings.blocked_density, seeds::derive(seed, "network"))
    } else {
        RoadNetwork::grid(settings.grid, settings.grid)
    };
    if !net.is_connected() {
        return Err(fail(EXIT_USAGE, "the blocked cells disconnect the grid; lower --blocked-density or change --seed"));
    }
    Ok(net)
}

fn simulate_on(net: &RoadNetwork, orders: &[OrderEvent], settings: &SimSettings, seed: u64, limits: SolveLimits) -> Result<SimOutcome, Failure> {
    let fleet = initial_fleet(net, settings.vehicles, seeds::derive(seed, seeds::FLEET));
    let cfg = SimConfig { max_nodes: limits.max_nodes, max_solve_secs: limits.max_time.as_secs_f64(), ..settings.sim };
    run_simulation(net, orders, fleet, &cfg).map_err(|e| fail(EXIT_USAGE, e.to_string()))
}

pub fn generate(a: GenerateArgs) -> Result<(), Failure> {
    let s = session(&a.common)?;
    let count = pick(a.count, s.file.generate.count, 100);
    let size = pick(a.size, s.file.generate.size, 5);
    let (m, n, p) = (a.m.unwrap_or(size), a.n.unwrap_or(size), a.p.unwrap_or(size));
    let sim = sim_settings(&a.sim, &s.file);
    let config = json!({
        "count": count, "m": m, "n": n, "p": p,
        "source": format!("{:?}", a.source).to_lowercase(),
        "sim": if a.source == Source::Sim { json!(sim) } else { Value::Null },
    });
    with_manifest(&a.common, "generate", s.seed, config, |man| {
        let instances = match a.source {
            Source::Random => random_instances(s.seed, count, m, n, p),
            Source::Sim => {
                let net = square_network(&sim, s.seed)?;
                let orders = generate_synthetic_orders(
                    seeds::derive(s.seed, seeds::ORDERS),
                    sim.num_orders,
                    Region::of_network(&net),
                    sim.time_span,
                );
                let out = simulate_on(&net, &orders, &sim, s.seed, SolveLimits::default())?;
                let got: Vec<_> = out.snapshots.into_iter().take(count).map(|r| r.instance).collect();
                if got.len() < count {
                    eprintln!("warning: simulation produced {} rounds, fewer than --count {count}", got.len());
                }
                got
            }
        };
        let body: String = instances.iter().map(|i| i.to_json() + "\n").collect();
        write(man, "instances.jsonl", body)?;
        println!("{} instances -> {}", instances.len(), man.root().join("instances.jsonl").display());
        Ok(())
    })
}

pub fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let s = session(&a.common)?;
    let settings = sim_settings(&a.sim, &s.file);
    let cell_size = pick(a.cell_size, s.file.sim.cell_size, 0.25);
    let limits = SolveLimits::default();
    let config = json!({
        "orders": a.orders.as_ref().map(|p| p.display().to_string()),
        "skip_bad_rows": a.skip_bad_rows,
        "cell_size": cell_size,
        "settings": settings,
    });
    with_manifest(&a.common, "simulate", s.seed, config, |man| {
        let (net, orders, skipped) = match &a.orders {
            Some(path) => {
                if !path.exists() {
                    return Err(fail(EXIT_USAGE, format!("{} does not exist", path.display())));
                }
                let policy = if a.skip_bad_rows { BadRowPolicy::Skip } else { BadRowPolicy::FailFast };
                let proj = ProjectionConfig::default();
                let ingested = ingest_orders(path, &proj, None, policy).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
                let net = network_covering(&ingested.events, cell_size)?;
                (net, ingested.events, ingested.skipped.len())
            }
            None => {
                let net = square_network(&settings, s.seed)?;
                let orders = generate_synthetic_orders(
                    seeds::derive(s.seed, seeds::ORDERS),
                    settings.num_orders,
                    Region::of_network(&net),
                    settings.time_span,
                );
                (net, orders, 0)
            }
        };
        let out = simulate_on(&net, &orders, &settings, s.seed, limits)?;

        let orders_body: String = orders.iter().map(|o| serde_json::to_string(o).expect("order") + "\n").collect();
        write(man, "orders.jsonl", orders_body)?;
        let mut snaps = Vec::new();
        write_snapshots_jsonl(&out.snapshots, &mut snaps).expect("in-memory write");
        write(man, "snapshots.jsonl", snaps)?;
        let events: String = out.events.iter().map(|e| serde_json::to_string(e).expect("event") + "\n").collect();
        write(man, "events.jsonl", events)?;
        write(man, "network.json", pretty(&net))?;
        let summary = json!({ "summary": out.summary, "skipped_rows": skipped });
        write(man, "summary.json", pretty(&summary))?;
        println!("{}", pretty(&out.summary).trim_end());
        if out.summary.aborted_rounds > 0 {
            return Err(fail(EXIT_SOLVER_ABORT, format!("{} rounds hit the solver limits", out.summary.aborted_rounds)));
        }
        Ok(())
    })
}

/// Grid over the bounding box of all order points.
fn network_covering(orders: &[OrderEvent], cell_size: f64) -> Result<RoadNetwork, Failure> {
    const MAX_SIDE: usize = 2000;
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(fail(EXIT_USAGE, "--cell-size must be positive"));
    }
    let pts = orders.iter().flat_map(|o| [o.pickup, o.dropoff]);
    let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in pts {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    if orders.is_empty() {
        return Ok(RoadNetwork::grid(1, 1));
    }
    let side = |span: f64| (span / cell_size).ceil() as usize + 1;
    let (w, h) = (side(hi.x - lo.x), side(hi.y - lo.y));
    if w > MAX_SIDE || h > MAX_SIDE {
        return Err(fail(EXIT_USAGE, format!("orders span a {w}x{h} grid; raise --cell-size")));
    }
    Ok(RoadNetwork::grid(w, h).with_frame(lo, cell_size))
}

pub fn solve(a: SolveArgs) -> Result<(), Failure> {
    let s = session(&a.common)?;
    let lim = limits(&a.solver, &s.file);
    let config = json!({ "input": a.input.display().to_string(), "lp": a.lp, "limits": limits_json(&lim), "jobs": s.jobs });
    with_manifest(&a.common, "solve", s.seed, config, |man| {
        let loaded = read_instances(&a.input)?;
        let instances: Vec<DispatchInstance> = loaded.into_iter().map(|l| l.instance).collect();
        let results = par_map(&instances, s.jobs, |inst| solve_one(inst, &lim));
        let mut aborted = 0;
        for (inst, res) in instances.iter().zip(&results) {
            let stem = file_stem(&inst.id);
            write(man, format!("solve/{stem}.json"), pretty(res))?;
            if a.lp {
                write(man, format!("lp/{stem}.lp"), build_model(inst).0.to_lp())?;
            }
            let obj = res.objective.map_or("-".to_string(), |o| format!("{o:.4}"));
            println!("{}\t{:?}\tobjective={obj}\tincumbents={}\tnodes={}", inst.id, res.status, res.incumbents.len(), res.nodes_explored);
            aborted += usize::from(res.status == SolveStatus::Aborted);
        }
        if aborted > 0 {
            return Err(fail(EXIT_SOLVER_ABORT, format!("{aborted} solves hit the limits; best incumbents were written")));
        }
        Ok(())
    })
}

pub fn prompt(a: PromptArgs) -> Result<(), Failure> {
    let s = session(&a.common)?;
    let lim = limits(&a.solver, &s.file);
    let config = json!({ "input": a.input.display().to_string(), "exemplars": a.exemplars, "limits": limits_json(&lim) });
    with_manifest(&a.common, "prompt", s.seed, config, |man| {
        let loaded = read_one(&a.input)?;
        let inst = &loaded.instance;
        let exemplars: Vec<Exemplar> = match (&loaded.exemplars, a.exemplars) {
            (_, 0) => Vec::new(),
            (Some(given), k) => given.iter().take(k).cloned().collect(),
            (None, k) => {
                let res = solve_one(inst, &lim);
                first_k_incumbents(&res, k)
                    .iter()
                    .map(|i| Exemplar { assignment: i.solution.clone(), gap: i.solver_gap, objective: i.objective })
                    .collect()
            }
        };
        let bundle = render_prompt(inst, &exemplars).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
        let stem = file_stem(&inst.id);
        write(man, format!("prompts/{stem}.txt"), &bundle.full_text)?;
        write(man, format!("prompts/{stem}.json"), bundle.sidecar_json() + "\n")?;
        if a.print {
            print!("{}", bundle.full_text);
        } else {
            println!("{}", man.root().join(format!("prompts/{stem}.txt")).display());
        }
        Ok(())
    })
}

fn build_proposer(args: &ProposerArgs, file: &FileConfig) -> Result<Box<dyn Proposer>, Failure> {
    match args.proposer {
        ProposerKind::Stochastic => Ok(Box::new(StochasticProposer)),
        ProposerKind::Mock => {
            let dir = args.fixtures.as_ref().ok_or_else(|| fail(EXIT_USAGE, "--proposer mock needs --fixtures DIR"))?;
            if !dir.is_dir() {
                return Err(fail(EXIT_USAGE, format!("{} is not a directory", dir.display())));
            }
            Ok(Box::new(MockProposer::from_dir(dir).map_err(|e| fail(EXIT_USAGE, e.to_string()))?))
        }
        ProposerKind::Remote => {
            let mut cfg = RemoteConfig::from_env().map_err(|e| fail(EXIT_REMOTE, e.to_string()))?;
            let r = &file.remote;
            if let Some(m) = &r.model {
                cfg.model = m.clone();
            }
            cfg.max_retries = r.max_retries.unwrap_or(cfg.max_retries);
            cfg.max_in_flight = r.max_in_flight.unwrap_or(cfg.max_in_flight);
            if let Some(t) = r.timeout_secs {
                cfg.timeout = Duration::from_secs_f64(t);
            }
            Ok(Box::new(RemoteProposer::new(cfg).map_err(|e| fail(EXIT_REMOTE, e.to_string()))?))
        }
    }
}

fn schedule_config(args: &ProposerArgs, file: &FileConfig) -> ScheduleConfig {
    let d = ScheduleConfig::default();
    ScheduleConfig {
        max_exemplars: pick(args.max_exemplars, file.schedule.max_exemplars, d.max_exemplars),
        early_stop: args.early_stop || file.schedule.early_stop.unwrap_or(d.early_stop),
    }
}

fn abort_code(proposer: &dyn Proposer) -> u8 {
    if proposer.provider() == Provider::Remote {
        EXIT_REMOTE
    } else {
        EXIT_FAILURE
    }
}

pub fn run(a: RunArgs) -> Result<(), Failure> {
    let s = session(&a.common)?;
    let lim = limits(&a.solver, &s.file);
    let sched = match &a.temperatures {
        Some(t) => TemperatureSchedule::custom("custom", t.clone()),
        None => make_schedule(&a.schedule),
    }
    .map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    let cfg = schedule_config(&a.proposer, &s.file);
    let config = json!({
        "input": a.input.display().to_string(),
        "schedule": sched,
        "proposer": format!("{:?}", a.proposer.proposer).to_lowercase(),
        "schedule_config": cfg,
        "reference": !a.no_reference,
        "limits": limits_json(&lim),
    });
    with_manifest(&a.common, "run", s.seed, config, |man| {
        let inst = read_one(&a.input)?.instance;
        let proposer = build_proposer(&a.proposer, &s.file)?;
        let reference = (!a.no_reference).then(|| solve_one(&inst, &lim));
        if let Some(res) = &reference {
            write(man, "solve.json", pretty(res))?;
        }
        let optimal = reference.as_ref().filter(|r| r.is_optimal()).and_then(|r| r.objective);

        let mut prompts = Vec::new();
        let trace = run_schedule_with(&inst, &sched, proposer.as_ref(), optimal, s.seed, &cfg, |round, bundle| {
            prompts.push((round, bundle.full_text.clone(), bundle.sidecar_json()));
        });
        for (round, text, sidecar) in prompts {
            write(man, format!("prompts/round-{round}.txt"), text)?;
            write(man, format!("prompts/round-{round}.json"), sidecar + "\n")?;
        }
        write(man, "run.json", pretty(&trace))?;

        for r in &trace.rounds {
            let obj = r.objective.map_or("infeasible".to_string(), |o| format!("{o:.4}"));
            let gap = r.eval_gap.map_or(String::new(), |g| format!(" gap={g:.4}"));
            println!("round {} T={} objective={obj}{gap}", r.round, r.temperature);
        }
        match &trace.best {
            Some(b) => println!("best objective {:.4} (round {})", b.objective, b.round),
            None => println!("no feasible solution"),
        }
        if let Some(msg) = &trace.aborted {
            return Err(fail(abort_code(proposer.as_ref()), msg.clone()));
        }
        if reference.as_ref().is_some_and(|r| r.status == SolveStatus::Aborted) {
            return Err(fail(EXIT_SOLVER_ABORT, "reference solve hit the limits; gaps are not reported"));
        }
        Ok(())
    })
}

pub fn ablate(a: AblateArgs) -> Result<(), Failure> {
    let s = session(&a.common)?;
    let lim = limits(&a.solver, &s.file);
    let count = pick(a.count, s.file.generate.count, 100);
    let size = pick(a.size, s.file.generate.size, 5);
    let schedules = match &a.schedules {
        Some(names) => names.iter().map(|n| make_schedule(n)).collect::<Result<Vec<_>, _>>(),
        None => Ok(TemperatureSchedule::all()),
    }
    .map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    let cfg = AblationConfig { schedules, seed: s.seed, schedule: schedule_config(&a.proposer, &s.file), jobs: s.jobs };
    let config = json!({
        "input": a.input.as_ref().map(|p| p.display().to_string()),
        "count": if a.input.is_none() { json!(count) } else { Value::Null },
        "size": if a.input.is_none() { json!(size) } else { Value::Null },
        "proposer": format!("{:?}", a.proposer.proposer).to_lowercase(),
        "schedules": cfg.schedules,
        "schedule_config": cfg.schedule,
        "limits": limits_json(&lim),
        "jobs": s.jobs,
    });
    with_manifest(&a.common, "ablate", s.seed, config, |man| {
        let instances: Vec<DispatchInstance> = match &a.input {
            Some(path) => read_instances(path)?.into_iter().map(|l| l.instance).collect(),
            None => random_instances(s.seed, count, size, size, size),
        };
        if instances.is_empty() {
            return Err(fail(EXIT_USAGE, "no instances to evaluate"));
        }
        let proposer = build_proposer(&a.proposer, &s.file)?;
        let solves = par_map(&instances, s.jobs, |inst| solve_one(inst, &lim));
        let aborted = solves.iter().filter(|r| r.status == SolveStatus::Aborted).count();
        let solved: Vec<(DispatchInstance, SolveResult)> = instances.into_iter().zip(solves).collect();
        let report = ablation_report(&solved, proposer.as_ref(), &cfg).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;

        write(man, "ablation.csv", report.rows_csv())?;
        write(man, "scale.csv", report.scale_csv())?;
        write(man, "summary.json", report.summary_json())?;
        write(man, "table.txt", report.table())?;
        print!("{}", report.table());

        if aborted > 0 {
            return Err(fail(EXIT_SOLVER_ABORT, format!("{aborted} reference solves hit the limits")));
        }
        if report.errors > 0 {
            return Err(fail(abort_code(proposer.as_ref()), format!("{} instances had errors; see ablation.csv", report.errors)));
        }
        Ok(())
    })
}
