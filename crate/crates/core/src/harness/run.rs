use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{InitialBlock, LoadedConfig, RunConfig};
use super::report::{write_json, Manifest, RunStatus, SeriesRow, SeriesWriter, CONSTANTS_FILE, MANIFEST_FILE, RECORDS_FILE, SERIES_FILE};
use crate::collision::splitmix64;
use crate::error::{Error, Result};
use crate::estimates::{
    compute_constants, exponent_plan, g_infinity, log_growth_bound, sandwiched_field, verify_decay_bound, verify_difference_rate,
    verify_difference_stability, verify_gronwall, verify_n1_bound, verify_n2_bound, verify_ray_bound, BoundCheckRecord, BoundId, CheckStatus,
    ExponentPlan, GInfinity, Inputs, LemmaConstants, McConfig, RayQuadrature,
};
use crate::par::{self, Execution};
use crate::phase::{DistributionField, Frame, KernelSpec, MaxwellianParams, PhaseGrid};
use crate::transport::{EvolveRecord, MildIntegrator, SandwichMode};
use crate::Vec3;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

/// Result of one subcommand; the manifest has already been written.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Tally {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub unavailable: usize,
}

impl Tally {
    pub fn of(records: &[BoundCheckRecord]) -> Self {
        records.iter().fold(Self::default(), |mut t, r| {
            match r.status {
                CheckStatus::Pass => t.pass += 1,
                CheckStatus::Fail => t.fail += 1,
                CheckStatus::Inconclusive => t.inconclusive += 1,
                CheckStatus::Unavailable => t.unavailable += 1,
            }
            t
        })
    }

    pub fn exit_code(&self) -> i32 {
        if self.fail > 0 {
            EXIT_FAIL
        } else if self.inconclusive > 0 {
            EXIT_INCONCLUSIVE
        } else {
            EXIT_OK
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} records: {} pass, {} fail, {} inconclusive, {} unavailable",
            self.pass + self.fail + self.inconclusive + self.unavailable,
            self.pass,
            self.fail,
            self.inconclusive,
            self.unavailable
        )
    }
}

type Derived = BTreeMap<String, Value>;

/// Runs `body`, then writes the manifest whether or not it succeeded.
fn with_manifest<F>(command: &str, loaded: &LoadedConfig, out: &Path, outputs: &[&str], body: F) -> Result<RunOutcome>
where
    F: FnOnce(&mut Derived) -> Result<RunOutcome>,
{
    std::fs::create_dir_all(out)?;
    let mut derived = Derived::new();
    let result = body(&mut derived);
    let (status, error, outcome) = match result {
        Ok(o) => (RunStatus::Ok, None, o),
        Err(e) => {
            let msg = e.to_string();
            (RunStatus::Failed, Some(msg.clone()), RunOutcome { exit_code: EXIT_ERROR, summary: format!("{command} failed: {msg}") })
        }
    };
    let manifest = Manifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        status,
        error,
        summary: Some(outcome.summary.clone()),
        exit_code: outcome.exit_code,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        config: loaded.config.clone(),
        defaults_applied: loaded.defaults_applied.clone(),
        derived,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(outcome)
}

/// Seed for one family of draws, so adding a bound never shifts another's stream.
fn family_seed(seed: u64, bound: BoundId) -> u64 {
    let salt = bound.as_str().bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    splitmix64(seed ^ salt)
}

fn initial_field(cfg: &RunConfig, grid: &PhaseGrid, params: &MaxwellianParams) -> Result<DistributionField> {
    match cfg.initial {
        InitialBlock::Maxwellian { amplitude } => Ok(params.sample(grid, amplitude, Frame::Sharp, 0.0)),
        InitialBlock::Sandwiched => sandwiched_field(grid, params, cfg.seed, 0.0),
    }
}

fn integrator(cfg: &RunConfig, grid: &PhaseGrid, params: &MaxwellianParams, exec: Execution) -> Result<MildIntegrator> {
    MildIntegrator::new(&cfg.integrator, &cfg.stepping_spec()?, params, &cfg.quadrature, grid, exec)
}

fn grid_derived(grid: &PhaseGrid, derived: &mut Derived) {
    derived.insert("x_extent".into(), json!(grid.x.extent));
    derived.insert("v_extent".into(), json!(grid.v.extent));
    derived.insert("cells".into(), json!(grid.len()));
}

/// `simulate`: evolves the configured initial data and writes the norm series.
pub fn run_simulate(loaded: &LoadedConfig, out: &Path) -> Result<RunOutcome> {
    with_manifest("simulate", loaded, out, &[SERIES_FILE, MANIFEST_FILE], |derived| {
        let cfg = &loaded.config;
        let params = cfg.params()?;
        let spec = cfg.kernel_spec()?;
        let grid = cfg.phase_grid()?;
        grid_derived(&grid, derived);
        let stepper = integrator(cfg, &grid, &params, Execution::from_env())?;
        derived.insert("dt".into(), json!(stepper.dt()));
        derived.insert("steps".into(), json!(stepper.steps()));
        derived.insert("lipschitz".into(), json!(stepper.lipschitz()));

        let p_list = &cfg.diagnostics.p_list;
        let mut bounds = Vec::with_capacity(p_list.len());
        for p in p_list {
            let g = log_growth_bound(*p, &spec, &params, &cfg.plan)?.map_or(f64::NAN, |(d, _, _)| d.exp());
            bounds.push(g);
        }
        derived.insert("G_p".into(), json!(p_list.iter().zip(&bounds).map(|(p, g)| (p.to_string(), crate::floatfmt::format_f64(*g))).collect::<BTreeMap<_, _>>()));

        let initial = initial_field(cfg, &grid, &params)?;
        let mut series = SeriesWriter::create(&out.join(SERIES_FILE))?;
        let mut first: Option<Vec<f64>> = None;
        let mut worst_ratio = vec![0.0f64; p_list.len()];
        let result = stepper.evolve(&initial, p_list, cfg.diagnostics.output_interval, |_, rec: &EvolveRecord| {
            let base = first.get_or_insert_with(|| rec.norms.iter().map(|n| n.value).collect());
            for (i, n) in rec.norms.iter().enumerate() {
                let ratio = n.value / base[i];
                worst_ratio[i] = worst_ratio[i].max(ratio);
                series.write(&SeriesRow {
                    t: rec.t,
                    p: n.p,
                    lp_norm: n.value,
                    ratio_to_initial: ratio,
                    g_p_bound: bounds[i],
                    sandwich_min_margin: rec.sandwich.min_margin,
                    clamped_mass: rec.clamped_mass,
                })?;
            }
            series.flush()
        });
        series.flush()?;
        let result = result?;
        derived.insert("clamped_mass".into(), json!(result.clamped_mass));
        derived.insert("projected_mass".into(), json!(result.projected_mass));
        let exceed = p_list.iter().enumerate().filter(|(i, _)| worst_ratio[*i] > bounds[*i]).map(|(_, p)| p.to_string()).collect::<Vec<_>>();
        let summary = if exceed.is_empty() {
            format!("simulate: {} steps to t = {}, ratio within G_p for every p with a bound", result.steps, cfg.integrator.t_max)
        } else {
            format!("simulate: {} steps to t = {}, ratio exceeds G_p for p in [{}]", result.steps, cfg.integrator.t_max, exceed.join(", "))
        };
        Ok(RunOutcome { exit_code: EXIT_OK, summary })
    })
}

/// Converts hypothesis violations into an `unavailable` record; other errors propagate.
fn or_unavailable(bound: BoundId, index: usize, inputs: Inputs, r: Result<BoundCheckRecord>) -> Result<BoundCheckRecord> {
    match r {
        Err(Error::Hypothesis(why)) => Ok(BoundCheckRecord::unavailable(bound, index, inputs, why)),
        other => other,
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn normal3(rng: &mut ChaCha8Rng, sd: f64) -> Vec3 {
    Vec3::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * sd
}

/// `samples` ray checks with `|V|, a` log-uniform on `[1e-2, 1e2]` and `x` uniform in `[-10, 10]^3`.
pub fn ray_records(seed: u64, samples: usize, exec: Execution) -> Result<Vec<BoundCheckRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(family_seed(seed, BoundId::Ray));
    let cases: Vec<(Vec3, Vec3, f64)> = (0..samples)
        .map(|_| {
            let x = Vec3::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let dir = loop {
                let d = normal3(&mut rng, 1.0);
                if d.norm() > 1e-6 {
                    break d.normalize();
                }
            };
            let v = dir * log_uniform(&mut rng, 1e-2, 1e2);
            (x, v, log_uniform(&mut rng, 1e-2, 1e2))
        })
        .collect();
    let quad = RayQuadrature::default();
    par::map_indexed(exec, samples, |i| {
        let (x, v, a) = cases[i];
        verify_ray_bound(i, &x, &v, a, &quad)
    })
    .into_iter()
    .collect()
}

/// Decay checks at `points` positions drawn from the Maxwellian density, each at every time in `times`.
pub fn decay_records(seed: u64, points: usize, times: &[f64], spec: &KernelSpec, params: &MaxwellianParams, mc: &McConfig) -> Result<Vec<BoundCheckRecord>> {
    let base = family_seed(seed, BoundId::Decay);
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    let mc = McConfig { seed: base, ..*mc };
    let mut out = Vec::with_capacity(points * times.len());
    for i in 0..points {
        let x = normal3(&mut rng, (0.5 / params.alpha).sqrt());
        let v = normal3(&mut rng, (0.5 / params.beta).sqrt());
        for (j, &t) in times.iter().enumerate() {
            let index = i * times.len() + j;
            let inputs = Inputs::new().vec3("x", &x).vec3("v", &v).num("t", t).num("gamma", spec.gamma);
            out.push(or_unavailable(BoundId::Decay, index, inputs, verify_decay_bound(index, &x, &v, t, spec, params, &mc))?);
        }
    }
    Ok(out)
}

pub fn n1_records(cfg: &RunConfig, grid: &PhaseGrid, spec: &KernelSpec, params: &MaxwellianParams) -> Result<Vec<BoundCheckRecord>> {
    let v = &cfg.verify;
    let plan = exponent_plan(v.target_exponent, &cfg.plan)?;
    let base = family_seed(cfg.seed, BoundId::N1);
    let mc = McConfig { samples: v.mc_samples, seed: base, rel_error_cap: v.rel_error_cap };
    (0..v.n1_fields)
        .map(|k| {
            let field = sandwiched_field(grid, params, base.wrapping_add(k as u64), v.n1_time)?;
            let inputs = Inputs::new().num("gamma", spec.gamma).num("mu", plan.mu).num("p", plan.p);
            or_unavailable(BoundId::N1, k, inputs, verify_n1_bound(k, &field, grid, &plan, spec, params, &mc))
        })
        .collect()
}

pub fn n2_records(cfg: &RunConfig, grid: &PhaseGrid, spec: &KernelSpec, params: &MaxwellianParams) -> Result<Vec<BoundCheckRecord>> {
    let v = &cfg.verify;
    let plan = exponent_plan(v.target_exponent, &cfg.plan)?;
    let base = family_seed(cfg.seed, BoundId::N2);
    let n2 = crate::estimates::N2Config { outer: McConfig { seed: base, ..v.n2.outer }, ..v.n2 };
    let last = (v.n2_snapshots - 1) as f64;
    (0..v.n2_fields)
        .map(|k| {
            let traj = (0..v.n2_snapshots)
                .map(|j| sandwiched_field(grid, params, base.wrapping_add((k * v.n2_snapshots + j) as u64), v.n2_horizon * j as f64 / last))
                .collect::<Result<Vec<_>>>()?;
            let inputs = Inputs::new().num("gamma", spec.gamma).num("mu", plan.mu).num("p", plan.p);
            or_unavailable(BoundId::N2, k, inputs, verify_n2_bound(k, &traj, grid, &plan, spec, params, &n2))
        })
        .collect()
}

/// Snapshots and norm records of one evolved trajectory.
struct Trajectory {
    fields: Vec<DistributionField>,
    records: Vec<EvolveRecord>,
}

fn evolve(cfg: &RunConfig, stepper: &MildIntegrator, initial: &DistributionField) -> Result<Trajectory> {
    let mut fields = Vec::new();
    let res = stepper.evolve(initial, &cfg.diagnostics.p_list, cfg.diagnostics.output_interval, |f, _| {
        fields.push(f.clone());
        Ok(())
    })?;
    Ok(Trajectory { fields, records: res.records })
}

/// `verify`: runs every selected bound and writes the sorted records.
pub fn run_verify(loaded: &LoadedConfig, out: &Path) -> Result<RunOutcome> {
    with_manifest("verify", loaded, out, &[RECORDS_FILE, MANIFEST_FILE], |derived| {
        let cfg = &loaded.config;
        let v = &cfg.verify;
        let exec = Execution::from_env();
        let params = cfg.params()?;
        let spec = cfg.kernel_spec()?;
        let grid = cfg.phase_grid()?;
        grid_derived(&grid, derived);
        let wants = |b: BoundId| v.bounds.contains(&b);
        let mc = McConfig { samples: v.mc_samples, seed: cfg.seed, rel_error_cap: v.rel_error_cap };
        let mut records = Vec::new();

        if wants(BoundId::Ray) {
            records.extend(ray_records(cfg.seed, v.ray_samples, exec)?);
        }
        if wants(BoundId::Decay) {
            records.extend(decay_records(cfg.seed, v.decay_points, &v.decay_times, &spec, &params, &mc)?);
        }
        if wants(BoundId::N1) {
            records.extend(n1_records(cfg, &grid, &spec, &params)?);
        }
        if wants(BoundId::N2) {
            records.extend(n2_records(cfg, &grid, &spec, &params)?);
        }
        let needs_f = [BoundId::Gronwall, BoundId::FixedPoint, BoundId::Difference, BoundId::DifferenceRate].into_iter().any(wants);
        if needs_f {
            // the sandwich is a hypothesis of these bounds, so the scheme's
            // O(dt^2) excursions above a_M M are projected away
            let mut clamped = cfg.clone();
            clamped.integrator.sandwich_mode = SandwichMode::Clamp;
            derived.insert("sandwich_mode".into(), json!(SandwichMode::Clamp));
            let stepper = integrator(&clamped, &grid, &params, exec)?;
            derived.insert("dt".into(), json!(stepper.dt()));
            derived.insert("steps".into(), json!(stepper.steps()));
            let f = evolve(cfg, &stepper, &initial_field(cfg, &grid, &params)?)?;
            if wants(BoundId::Gronwall) || wants(BoundId::FixedPoint) {
                for (i, p) in cfg.diagnostics.p_list.iter().enumerate() {
                    let history: Vec<(f64, f64)> = f.records.iter().map(|r| (r.t, r.norms[i].value)).collect();
                    for rec in verify_gronwall(i, &history, *p, &spec, &params, &cfg.plan)? {
                        if wants(rec.bound) {
                            records.push(rec);
                        }
                    }
                }
            }
            if wants(BoundId::Difference) || wants(BoundId::DifferenceRate) {
                let mid = 0.5 * (params.a_min + params.a_max);
                derived.insert("fbar_amplitude".into(), json!(mid));
                let fbar = evolve(cfg, &stepper, &params.sample(&grid, mid, Frame::Sharp, 0.0))?;
                if wants(BoundId::Difference) {
                    records.extend(verify_difference_stability(&f.fields, &fbar.fields, &cfg.diagnostics.p_list, &spec, &params, &grid, &cfg.plan, v.difference_tol)?);
                }
                if wants(BoundId::DifferenceRate) {
                    let (a, b) = (f.fields.last().expect("evolve records t = 0"), fbar.fields.last().expect("evolve records t = 0"));
                    let mc = McConfig { seed: family_seed(cfg.seed, BoundId::DifferenceRate), ..mc };
                    records.extend(verify_difference_rate(a, b, &spec, &params, &grid, v.rate_points, &mc)?);
                }
            }
        }

        records.sort_by_key(|r| (BoundId::ALL.iter().position(|b| *b == r.bound), r.index));
        write_json(&out.join(RECORDS_FILE), &records)?;
        let tally = Tally::of(&records);
        derived.insert("tally".into(), serde_json::to_value(tally)?);
        Ok(RunOutcome { exit_code: tally.exit_code(), summary: format!("verify: {}", tally.line()) })
    })
}

/// A sweep point that could not be evaluated at all.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedRow {
    pub gamma: f64,
    pub mu: f64,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GInfinityRow {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<GInfinity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unavailable: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsTable {
    pub rows: Vec<LemmaConstants>,
    pub rejected: Vec<RejectedRow>,
    pub g_infinity: Vec<GInfinityRow>,
}

/// Every constant over the `(gamma, mu, p, alpha, beta)` sweep, nested in that order.
pub fn constants_table(cfg: &RunConfig) -> Result<ConstantsTable> {
    let c = &cfg.constants;
    let m = cfg.maxwellian;
    let mut table = ConstantsTable { rows: Vec::new(), rejected: Vec::new(), g_infinity: Vec::new() };
    for &gamma in &c.gamma {
        for &mu in &c.mu {
            for &p in &c.p {
                for &alpha in &c.alpha {
                    for &beta in &c.beta {
                        let row = (|| {
                            let spec = cfg.kernel.with_gamma(gamma).spec()?;
                            let params = MaxwellianParams::new(alpha, beta, m.a_m, m.a_max)?;
                            compute_constants(&ExponentPlan::from_pair(mu, p)?, &spec, &params)
                        })();
                        match row {
                            Ok(r) => table.rows.push(r),
                            Err(e) => table.rejected.push(RejectedRow { gamma, mu, p, alpha, beta, reason: e.to_string() }),
                        }
                    }
                }
            }
        }
    }
    if c.g_infinity {
        for &gamma in &c.gamma {
            for &alpha in &c.alpha {
                for &beta in &c.beta {
                    let row = if gamma > -2.0 && gamma <= 0.0 {
                        let r = cfg.kernel.with_gamma(gamma).spec().and_then(|spec| {
                            let params = MaxwellianParams::new(alpha, beta, m.a_m, m.a_max)?;
                            g_infinity(cfg.plan.mu0, &spec, &params)
                        });
                        match r {
                            Ok(g) => GInfinityRow { gamma, alpha, beta, value: Some(g), unavailable: None },
                            Err(e) => GInfinityRow { gamma, alpha, beta, value: None, unavailable: Some(e.to_string()) },
                        }
                    } else {
                        GInfinityRow { gamma, alpha, beta, value: None, unavailable: Some(format!("G_inf needs gamma in (-2, 0], got {gamma}")) }
                    };
                    table.g_infinity.push(row);
                }
            }
        }
    }
    Ok(table)
}

/// `constants`: writes the constant table.
pub fn run_constants(loaded: &LoadedConfig, out: &Path) -> Result<RunOutcome> {
    with_manifest("constants", loaded, out, &[CONSTANTS_FILE, MANIFEST_FILE], |derived| {
        let table = constants_table(&loaded.config)?;
        write_json(&out.join(CONSTANTS_FILE), &table)?;
        derived.insert("rows".into(), json!(table.rows.len()));
        derived.insert("rejected".into(), json!(table.rejected.len()));
        Ok(RunOutcome {
            exit_code: EXIT_OK,
            summary: format!("constants: {} rows, {} rejected, {} G_inf rows", table.rows.len(), table.rejected.len(), table.g_infinity.len()),
        })
    })
}
