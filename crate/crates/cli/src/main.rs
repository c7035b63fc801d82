//! `voxrelax`: relax a model file, run the benchmark suite, generate
//! instances, or check the reference values.
//!
//! Results go to stdout as JSON, logs to stderr. Exit codes: 0 success,
//! 1 usage error, 2 model error, 3 solve or verification failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use voxrelax::bench::{
    gen_poly_instance_with, local_search, run_experiment, CostSign, ExperimentConfig, Method,
};
use voxrelax::expr::{factored_form, parse_model, Model, ObjSense};
use voxrelax::golden::{run_golden, GoldenValues};
use voxrelax::lp::{export_lp, LpStatus};
use voxrelax::relax::{
    product_hull, product_sites, relax_dag, Mode, RelaxConfig, RelaxOutcome, Voxelizer,
};
use voxrelax::voxel::VoxelConfig;

const EXIT_USAGE: u8 = 1;
const EXIT_MODEL: u8 = 2;
const EXIT_SOLVE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "voxrelax",
    version,
    about = "Polyhedral relaxations of factorable nonlinear programs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relax and bound a model file.
    Relax(RelaxArgs),
    /// Compare relaxation methods on random polynomial instances.
    Bench(BenchArgs),
    /// Write a random polynomial instance as a model file.
    Gen(GenArgs),
    /// Check the built-in reference values.
    Verify(VerifyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Fp,
    Base,
    Vr,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum VoxelizerArg {
    Projection,
    Quadtree,
    Split,
    Box,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    #[arg(long, value_enum, default_value = "vr")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "projection")]
    voxelizer: VoxelizerArg,
    /// Breakpoints of the piecewise linear estimators.
    #[arg(long, default_value_t = 9)]
    nb: usize,
    /// Refinement LPs per projection.
    #[arg(long, default_value_t = 5)]
    nmax: usize,
    /// Rectangles per polygon edge.
    #[arg(long, default_value_t = 5)]
    nv: usize,
    /// Relaxation rounds.
    #[arg(long, default_value_t = 1)]
    iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Skip optimization-based bound tightening.
    #[arg(long)]
    no_obbt: bool,
}

impl ConfigArgs {
    fn config(&self) -> RelaxConfig {
        RelaxConfig {
            mode: match self.mode {
                ModeArg::Fp => Mode::Fp,
                ModeArg::Base => Mode::Base,
                ModeArg::Vr => Mode::Vr,
            },
            voxelizer: match self.voxelizer {
                VoxelizerArg::Projection => Voxelizer::Projection,
                VoxelizerArg::Quadtree => Voxelizer::Quadtree,
                VoxelizerArg::Split => Voxelizer::Split,
                VoxelizerArg::Box => Voxelizer::BoundingBox,
            },
            n_b: self.nb,
            voxel: VoxelConfig {
                epsilon: self.eps,
                n_max: self.nmax,
                n_v: self.nv,
                ..Default::default()
            },
            iterations: self.iters,
            obbt: !self.no_obbt,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
struct RelaxArgs {
    model: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Seed of the primal local search.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for product hulls (0: all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Also write the JSON result to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the final linear relaxation in LP format.
    #[arg(long)]
    export_lp: Option<PathBuf>,
    /// Write product-node regions, lifted points and facets as JSON.
    #[arg(long)]
    dump_geometry: Option<PathBuf>,
    /// Include the final variable bounds in the result.
    #[arg(long)]
    print_bounds: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Instance size as `n,m,r`; repeatable.
    #[arg(long = "size", value_parser = parse_size, default_values = ["15,30,20"])]
    sizes: Vec<(usize, usize, usize)>,
    /// Number of seeds, starting at `--seed`.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Use the negated cost vector.
    #[arg(long)]
    negated: bool,
    /// Breakpoints for the VR method.
    #[arg(long, default_value_t = 5)]
    nb: usize,
    /// Worker threads (0: all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Directory for `records.csv` and `report.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 15)]
    n: usize,
    #[arg(long, default_value_t = 30)]
    m: usize,
    #[arg(long, default_value_t = 20)]
    r: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    negated: bool,
    /// Output file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Shift one reference constant before checking (`name=delta`).
    #[arg(long, value_parser = parse_perturb)]
    perturb: Option<(String, f64)>,
}

fn parse_size(s: &str) -> Result<(usize, usize, usize), String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t}: {e}")))
        .collect::<Result<_, _>>()?;
    match *v.as_slice() {
        [n, m, r] if n >= 3 => Ok((n, m, r)),
        [_, _, _] => Err("n must be at least 3".into()),
        _ => Err(format!("expected n,m,r, got `{s}`")),
    }
}

fn parse_perturb(s: &str) -> Result<(String, f64), String> {
    let (name, delta) = s.split_once('=').unwrap_or((s, "1e-3"));
    if !GoldenValues::FIELDS.contains(&name) {
        return Err(format!(
            "unknown constant `{name}`; one of {:?}",
            GoldenValues::FIELDS
        ));
    }
    let d = delta.parse::<f64>().map_err(|e| e.to_string())?;
    Ok((name.to_string(), d))
}

struct Failure {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl Into<String>) -> Failure {
    Failure {
        code,
        msg: msg.into(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| fail(EXIT_USAGE, format!("cannot write {}: {e}", path.display())))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

/// Best local-search value from the box midpoint and corners and from
/// `extra` starts.
fn primal_value(model: &Model, seed: u64, extra: &[Vec<f64>]) -> Option<f64> {
    let pick =
        |f: fn(&voxrelax::expr::VarDecl) -> f64| model.vars.iter().map(f).collect::<Vec<f64>>();
    let mut starts = vec![
        pick(|v| 0.5 * (v.lo + v.hi)),
        pick(|v| v.lo),
        pick(|v| v.hi),
    ];
    starts.extend(extra.iter().cloned());
    let max = model
        .objective
        .as_ref()
        .is_some_and(|o| o.sense == ObjSense::Max);
    starts
        .iter()
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .filter_map(|s| local_search(model, s, seed).map(|p| p.value))
        .reduce(|a, b| if max == (b > a) { b } else { a })
}

fn geometry_json(dag: &voxrelax::expr::ExprDag, out: &RelaxOutcome, cfg: &RelaxConfig) -> Value {
    let names = dag.node_names();
    let sites: Vec<Value> = product_sites(dag)
        .iter()
        .map(
            |s| match product_hull(&out.relaxation, dag, &out.store, s, cfg) {
                Ok(h) => json!({
                    "node": names[s.node],
                    "operands": [names[h.factors[0].target()], names[h.factors[1].target()]],
                    "fell_back": h.fell_back,
                    "region": h.region,
                    "points": h.points,
                    "facets": h.facets,
                }),
                Err(e) => json!({ "node": names[s.node], "error": e.to_string() }),
            },
        )
        .collect();
    json!({ "sites": sites })
}

fn cmd_relax(a: &RelaxArgs) -> Result<(), Failure> {
    let cfg = a.config.config();
    cfg.validate()
        .map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    let src = std::fs::read_to_string(&a.model).map_err(|e| {
        fail(
            EXIT_MODEL,
            format!("cannot read {}: {e}", a.model.display()),
        )
    })?;
    let model = parse_model(&src).map_err(|e| fail(EXIT_MODEL, e.to_string()))?;
    let dag = factored_form(&model).map_err(|e| fail(EXIT_MODEL, e.to_string()))?;
    let primal = primal_value(&model, a.seed, &[]);
    let out = relax_dag(&dag, &cfg, primal).map_err(|e| fail(EXIT_MODEL, e.to_string()))?;
    let sys = &out.relaxation.sys;
    // the relaxation's solution is often a good start
    let x_lp: Vec<f64> = (0..dag.n_vars())
        .map(|i| {
            out.relaxation
                .column(dag.var_node(i))
                .map_or(f64::NAN, |c| {
                    out.solution.x.get(c).copied().unwrap_or(f64::NAN)
                })
        })
        .collect();
    let primal = primal_value(&model, a.seed, &[x_lp]).or(primal);
    let gap = primal.map(|p| (p - out.bound).abs());
    let mut result = json!({
        "mode": cfg.mode,
        "voxelizer": cfg.voxelizer,
        "status": format!("{:?}", out.status),
        "bound": out.bound,
        "primal": primal,
        "gap": gap,
        "n_constraints": sys.n_rows(),
        "n_aux_vars": sys.n_vars().saturating_sub(dag.n_vars()),
        "times": { "construct_s": out.t_construct, "solve_s": out.t_solve },
    });
    if a.print_bounds {
        let b: serde_json::Map<String, Value> = model
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let iv = out.store.get(dag.var_node(i));
                (v.name.clone(), json!([iv.lo, iv.hi]))
            })
            .collect();
        result["bounds"] = Value::Object(b);
    }
    if let Some(p) = &a.export_lp {
        write_file(p, &export_lp(sys))?;
    }
    if let Some(p) = &a.dump_geometry {
        let g = geometry_json(&dag, &out, &cfg);
        write_file(p, &serde_json::to_string_pretty(&g).expect("serializable"))?;
    }
    if let Some(p) = &a.out {
        write_file(
            p,
            &serde_json::to_string_pretty(&result).expect("serializable"),
        )?;
    }
    print_json(&result);
    if out.status != LpStatus::Optimal {
        return Err(fail(
            EXIT_SOLVE,
            format!("relaxation status {:?}", out.status),
        ));
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<(), Failure> {
    if let Some(&(n, m, r)) = a.sizes.iter().find(|&&(n, m, r)| n < 3 || m == 0 || r == 0) {
        return Err(fail(EXIT_USAGE, format!("size {n},{m},{r} too small")));
    }
    let mut vr = Method::vr_box();
    vr.config.n_b = a.nb;
    vr.config
        .validate()
        .map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    let cfg = ExperimentConfig {
        sizes: a.sizes.clone(),
        seeds: (a.seed..a.seed + a.seeds).collect(),
        methods: vec![Method::fp(), vr],
        cost: if a.negated {
            CostSign::Negated
        } else {
            CostSign::Gradient
        },
        jobs: a.jobs,
    };
    let report = run_experiment(&cfg).map_err(|e| fail(EXIT_SOLVE, e.to_string()))?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)
            .map_err(|e| fail(EXIT_USAGE, format!("cannot create {}: {e}", dir.display())))?;
        report
            .write_csv(&dir.join("records.csv"))
            .map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
        report
            .write_json(&dir.join("report.json"))
            .map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    }
    let failed = report.records.iter().filter(|r| r.error.is_some()).count();
    print_json(&json!({
        "instances": report.records.len() / cfg.methods.len(),
        "failed_runs": failed,
        "mean_gap": report.mean_gap,
        "rcg": report.rcg,
        "timing": report.timing,
    }));
    if failed > 0 {
        return Err(fail(EXIT_SOLVE, format!("{failed} runs failed")));
    }
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Result<(), Failure> {
    if a.n < 3 {
        return Err(fail(EXIT_USAGE, "n must be at least 3"));
    }
    let cost = if a.negated {
        CostSign::Negated
    } else {
        CostSign::Gradient
    };
    let inst = gen_poly_instance_with(a.n, a.m, a.r, a.seed, cost);
    let text = inst.to_model().to_text();
    match &a.out {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), Failure> {
    let mut g = GoldenValues::default();
    if let Some((name, d)) = &a.perturb {
        if !g.perturb(name, *d) {
            return Err(fail(
                EXIT_USAGE,
                format!(
                    "unknown value {name}; expected one of {}",
                    GoldenValues::FIELDS.join(", ")
                ),
            ));
        }
    }
    let checks = run_golden(&g);
    for c in &checks {
        eprintln!(
            "{:<16} {}  {}",
            c.name,
            if c.passed { "ok" } else { "FAILED" },
            c.detail
        );
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    print_json(&json!({ "checks": checks, "failed": failed }));
    if failed.is_empty() {
        Ok(())
    } else {
        Err(fail(
            EXIT_SOLVE,
            format!("failed checks: {}", failed.join(", ")),
        ))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let jobs = match &cli.cmd {
        Command::Relax(a) => a.jobs,
        _ => 0,
    };
    if jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let r = match &cli.cmd {
        Command::Relax(a) => cmd_relax(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
