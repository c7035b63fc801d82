use super::instance::{gen_poly_instance_with, CostSign};
use super::metrics::{alpha_grid, instance_gaps, mu_curve, rcg, RcgPair};
use super::primal::local_search;
use super::BenchError;
use crate::relax::{relax_model, Mode, RelaxConfig, Voxelizer};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

/// A named relaxation configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Method {
    pub name: String,
    pub config: RelaxConfig,
}

impl Method {
    /// McCormick and univariate hulls over forward-propagated bounds.
    pub fn fp() -> Method {
        Method {
            name: "FP".into(),
            config: RelaxConfig {
                mode: Mode::Fp,
                voxelizer: Voxelizer::BoundingBox,
                obbt: false,
                duality_reduction: false,
                ..Default::default()
            },
        }
    }

    /// Product hulls with 5 breakpoints over the operands' bounding boxes.
    pub fn vr_box() -> Method {
        Method {
            name: "VR".into(),
            config: RelaxConfig {
                mode: Mode::Vr,
                voxelizer: Voxelizer::BoundingBox,
                n_b: 5,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    /// `(n, m, r)` tuples.
    pub sizes: Vec<(usize, usize, usize)>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub cost: CostSign,
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sizes: vec![(15, 30, 20)],
            seeds: (1..=20).collect(),
            methods: vec![Method::fp(), Method::vr_box()],
            cost: CostSign::Gradient,
            jobs: 0,
        }
    }
}

/// One CSV row: one method on one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub instance_id: String,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub seed: u64,
    pub method: String,
    pub bound: f64,
    pub primal: f64,
    pub r_rrg: f64,
    pub t_construct_s: f64,
    pub t_solve_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Mean times per size and method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub method: String,
    /// Construction plus solution.
    pub mean_total_s: f64,
    pub mean_solve_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub config: ExperimentConfig,
    pub records: Vec<Record>,
    pub alphas: Vec<f64>,
    /// `mu[method][k]`: fraction of instances with remaining gap at most
    /// `alphas[k]`.
    pub mu: BTreeMap<String, Vec<f64>>,
    pub mean_gap: BTreeMap<String, f64>,
    pub rcg: Vec<RcgPair>,
    pub timing: Vec<TimingRow>,
}

fn run_instance(n: usize, m: usize, r: usize, seed: u64, cfg: &ExperimentConfig) -> Vec<Record> {
    let inst = gen_poly_instance_with(n, m, r, seed, cfg.cost);
    let model = inst.to_model();
    let primal = local_search(&model, &inst.x_tilde, seed).map_or(f64::INFINITY, |p| p.value);
    let mut recs: Vec<Record> = cfg
        .methods
        .iter()
        .map(|meth| {
            let t = Instant::now();
            let res = relax_model(&model, &meth.config, Some(primal).filter(|p| p.is_finite()));
            let total = t.elapsed().as_secs_f64();
            let (bound, tc, ts, error) = match res {
                Ok((_, o)) => (o.bound, (total - o.t_solve).max(0.0), o.t_solve, None),
                Err(e) => {
                    log::warn!("{}: {} failed: {e}", inst.id(), meth.name);
                    (f64::NAN, total, 0.0, Some(e.to_string()))
                }
            };
            Record {
                instance_id: inst.id(),
                n,
                m,
                r,
                seed,
                method: meth.name.clone(),
                bound,
                primal,
                r_rrg: f64::NAN,
                t_construct_s: tc,
                t_solve_s: ts,
                error,
            }
        })
        .collect();
    let ok: Vec<usize> = (0..recs.len())
        .filter(|&i| recs[i].bound.is_finite())
        .collect();
    let gaps = instance_gaps(
        primal,
        &ok.iter().map(|&i| recs[i].bound).collect::<Vec<_>>(),
    );
    for (&i, g) in ok.iter().zip(gaps) {
        recs[i].r_rrg = g;
    }
    recs
}

/// Generates every `(size, seed)` instance, relaxes it with every method,
/// and collects bounds, remaining gaps, gap-closed pairs and timings.
/// Failures of single methods are recorded and the run continues.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<GapReport, BenchError> {
    let jobs: Vec<(usize, usize, usize, u64)> = cfg
        .sizes
        .iter()
        .flat_map(|&(n, m, r)| cfg.seeds.iter().map(move |&s| (n, m, r, s)))
        .collect();
    let run = || -> Vec<Vec<Record>> {
        jobs.par_iter()
            .map(|&(n, m, r, s)| run_instance(n, m, r, s, cfg))
            .collect()
    };
    let per_instance = if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| BenchError::ThreadPool(e.to_string()))?
            .install(run)
    } else {
        run()
    };
    let mut records: Vec<Record> = per_instance.into_iter().flatten().collect();
    records.sort_by(|a, b| (&a.instance_id, &a.method).cmp(&(&b.instance_id, &b.method)));
    Ok(summarize(cfg.clone(), records))
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, k) = v.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    if k == 0 {
        f64::NAN
    } else {
        s / k as f64
    }
}

fn summarize(config: ExperimentConfig, records: Vec<Record>) -> GapReport {
    let alphas = alpha_grid(100);
    let mut mu = BTreeMap::new();
    let mut mean_gap = BTreeMap::new();
    let mut timing = Vec::new();
    for meth in &config.methods {
        let mine = || records.iter().filter(|r| r.method == meth.name);
        let gaps: Vec<f64> = mine()
            .filter(|r| r.r_rrg.is_finite())
            .map(|r| r.r_rrg)
            .collect();
        mu.insert(meth.name.clone(), mu_curve(&gaps, &alphas));
        mean_gap.insert(meth.name.clone(), mean(gaps.iter().cloned()));
        for &(n, m, r) in &config.sizes {
            let rows: Vec<&Record> = mine().filter(|x| (x.n, x.m, x.r) == (n, m, r)).collect();
            if rows.is_empty() {
                continue;
            }
            timing.push(TimingRow {
                n,
                m,
                r,
                method: meth.name.clone(),
                mean_total_s: mean(rows.iter().map(|x| x.t_construct_s + x.t_solve_s)),
                mean_solve_s: mean(rows.iter().map(|x| x.t_solve_s)),
            });
        }
    }
    let mut by_instance: BTreeMap<&str, Vec<&Record>> = BTreeMap::new();
    for r in &records {
        by_instance.entry(&r.instance_id).or_default().push(r);
    }
    let mut pairs = Vec::new();
    for (id, recs) in &by_instance {
        for a in recs {
            for b in recs {
                if a.method == b.method || !a.bound.is_finite() || !b.bound.is_finite() {
                    continue;
                }
                if let Some(v) = rcg(a.bound, b.bound, a.primal) {
                    pairs.push(RcgPair {
                        instance_id: id.to_string(),
                        better: a.method.clone(),
                        worse: b.method.clone(),
                        rcg: v,
                    });
                }
            }
        }
    }
    GapReport {
        config,
        records,
        alphas,
        mu,
        mean_gap,
        rcg: pairs,
        timing,
    }
}

impl GapReport {
    pub fn write_csv(&self, path: &Path) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| BenchError::Io(e.to_string()))?;
        self.write_csv_to(&mut w)
    }

    pub fn csv_string(&self) -> Result<String, BenchError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_csv_to(&mut w)?;
        let bytes = w.into_inner().map_err(|e| BenchError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| BenchError::Io(e.to_string()))
    }

    fn write_csv_to<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<(), BenchError> {
        w.write_record([
            "instance_id",
            "n",
            "m",
            "r",
            "seed",
            "method",
            "bound",
            "primal",
            "r_rrg",
            "t_construct_s",
            "t_solve_s",
        ])
        .map_err(|e| BenchError::Io(e.to_string()))?;
        for r in &self.records {
            w.write_record([
                r.instance_id.clone(),
                r.n.to_string(),
                r.m.to_string(),
                r.r.to_string(),
                r.seed.to_string(),
                r.method.clone(),
                r.bound.to_string(),
                r.primal.to_string(),
                r.r_rrg.to_string(),
                format!("{:.6}", r.t_construct_s),
                format!("{:.6}", r.t_solve_s),
            ])
            .map_err(|e| BenchError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| BenchError::Io(e.to_string()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<(), BenchError> {
        let s = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(path, s).map_err(|e| BenchError::Io(e.to_string()))
    }
}
