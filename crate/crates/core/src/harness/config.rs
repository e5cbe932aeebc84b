use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::collision::QuadratureScheme;
use crate::error::{Error, Result};
use crate::estimates::{BoundId, N2Config, PlanDefaults};
use crate::phase::{AngularFactor, KernelSpec, LebesgueExponent, MaxwellianParams, PhaseGrid};
use crate::transport::MildIntegratorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BForm {
    Constant,
    CosPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelBlock {
    pub gamma: f64,
    pub b_form: BForm,
    /// Exponent of `cos(theta)` for `cos_power`.
    pub k: u32,
    #[serde(rename = "B_gamma")]
    pub b_total: f64,
    pub kappa: f64,
}

impl Default for KernelBlock {
    fn default() -> Self {
        Self { gamma: 0.0, b_form: BForm::Constant, k: 1, b_total: 1.0, kappa: 1.0 }
    }
}

impl KernelBlock {
    pub fn spec(&self) -> Result<KernelSpec> {
        match self.b_form {
            BForm::Constant => KernelSpec::constant(self.gamma, self.b_total, self.kappa),
            BForm::CosPower => KernelSpec::cos_power(self.gamma, self.k, self.b_total, self.kappa),
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaxwellianBlock {
    pub alpha: f64,
    pub beta: f64,
    pub a_m: f64,
    #[serde(rename = "a_M")]
    pub a_max: f64,
}

impl Default for MaxwellianBlock {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0, a_m: 0.5, a_max: 1.0 }
    }
}

impl MaxwellianBlock {
    pub fn params(&self) -> Result<MaxwellianParams> {
        MaxwellianParams::new(self.alpha, self.beta, self.a_m, self.a_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    /// Half-widths of the box; `null` derives them from `truncation_tol`.
    pub x_extent: Option<f64>,
    pub v_extent: Option<f64>,
    pub nx: usize,
    pub nv: usize,
    pub truncation_tol: f64,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self { x_extent: None, v_extent: None, nx: 8, nv: 8, truncation_tol: 1e-8 }
    }
}

impl GridBlock {
    pub fn grid(&self, params: &MaxwellianParams) -> Result<PhaseGrid> {
        let (x, v) = PhaseGrid::truncation_extents(params, self.truncation_tol)?;
        let grid = PhaseGrid::new(self.x_extent.unwrap_or(x), self.v_extent.unwrap_or(v), self.nx, self.nv)?;
        grid.check_truncation(params, self.truncation_tol)?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsBlock {
    pub p_list: Vec<LebesgueExponent>,
    pub output_interval: f64,
}

impl Default for DiagnosticsBlock {
    fn default() -> Self {
        Self {
            p_list: vec![LebesgueExponent::Finite(0.5), LebesgueExponent::Finite(1.0), LebesgueExponent::Finite(2.0), LebesgueExponent::Infinity],
            output_interval: 0.1,
        }
    }
}

/// Initial data in the sharp frame at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialBlock {
    /// `amplitude * M`.
    Maxwellian { amplitude: f64 },
    /// Smooth random amplitude inside the sandwich, seeded from the run seed.
    Sandwiched,
}

impl Default for InitialBlock {
    fn default() -> Self {
        InitialBlock::Sandwiched
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyBlock {
    pub bounds: Vec<BoundId>,
    pub ray_samples: usize,
    pub decay_points: usize,
    pub decay_times: Vec<f64>,
    /// Monte Carlo draws per decay, `N1` and rate record.
    pub mc_samples: usize,
    pub rel_error_cap: f64,
    /// Target exponent `P` whose plan drives the `N1` and `N2` checks.
    pub target_exponent: f64,
    pub n1_fields: usize,
    pub n1_time: f64,
    pub n2_fields: usize,
    pub n2_snapshots: usize,
    pub n2_horizon: f64,
    pub n2: N2Config,
    pub rate_points: usize,
    /// Absolute tolerance when the two initial data coincide.
    pub difference_tol: f64,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self {
            bounds: BoundId::ALL.to_vec(),
            ray_samples: 10_000,
            decay_points: 10,
            decay_times: vec![0.0, 1.0, 2.0, 5.0, 10.0, 20.0],
            mc_samples: 20_000,
            rel_error_cap: 0.1,
            target_exponent: 1.0,
            n1_fields: 5,
            n1_time: 0.5,
            n2_fields: 5,
            n2_snapshots: 5,
            n2_horizon: 1.0,
            n2: N2Config::default(),
            rate_points: 5,
            difference_tol: 1e-12,
        }
    }
}

impl VerifyBlock {
    /// Bounds whose proofs need `gamma > -2`.
    fn needs_moderate_softness(&self) -> Vec<BoundId> {
        self.bounds.iter().copied().filter(|b| !matches!(b, BoundId::Ray | BoundId::Decay)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsBlock {
    pub gamma: Vec<f64>,
    pub mu: Vec<f64>,
    pub p: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Also tabulate `G_inf` per `(gamma, alpha, beta)` at `mu0`.
    pub g_infinity: bool,
}

impl Default for ConstantsBlock {
    fn default() -> Self {
        Self {
            gamma: vec![-1.5, -0.5, 0.0],
            mu: vec![0.25, 0.5, 0.75],
            p: vec![1.5, 2.0, 4.0],
            alpha: vec![1.0],
            beta: vec![1.0],
            g_infinity: true,
        }
    }
}

/// Fully defaulted run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub kernel: KernelBlock,
    pub maxwellian: MaxwellianBlock,
    pub grid: GridBlock,
    pub integrator: MildIntegratorConfig,
    pub diagnostics: DiagnosticsBlock,
    pub initial: InitialBlock,
    /// `false` runs free transport.
    pub collisions: bool,
    pub quadrature: QuadratureScheme,
    pub plan: PlanDefaults,
    pub verify: VerifyBlock,
    pub constants: ConstantsBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            kernel: KernelBlock::default(),
            maxwellian: MaxwellianBlock::default(),
            grid: GridBlock::default(),
            integrator: MildIntegratorConfig::default(),
            diagnostics: DiagnosticsBlock::default(),
            initial: InitialBlock::default(),
            collisions: true,
            quadrature: QuadratureScheme::default(),
            plan: PlanDefaults::default(),
            verify: VerifyBlock::default(),
            constants: ConstantsBlock::default(),
        }
    }
}

impl RunConfig {
    /// Re-checks every invariant the run relies on.
    pub fn validate(&self) -> Result<()> {
        let params = self.maxwellian.params()?;
        let spec = self.kernel.spec()?;
        self.grid.grid(&params)?;
        self.quadrature.validate()?;
        self.plan.validate()?;
        if !(self.integrator.t_max > 0.0 && self.integrator.t_max.is_finite()) {
            return Err(Error::param("integrator.t_max", format!("must be positive, got {}", self.integrator.t_max)));
        }
        if let Some(dt) = self.integrator.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::param("integrator.dt", format!("must be positive, got {dt}")));
            }
        }
        if self.diagnostics.p_list.is_empty() {
            return Err(Error::param("diagnostics.p_list", "needs at least one exponent"));
        }
        for p in &self.diagnostics.p_list {
            LebesgueExponent::new(p.value())?;
        }
        if !(self.diagnostics.output_interval >= 0.0) {
            return Err(Error::param("diagnostics.output_interval", "must be nonnegative"));
        }
        if let InitialBlock::Maxwellian { amplitude } = self.initial {
            if !(amplitude >= params.a_min && amplitude <= params.a_max) {
                return Err(Error::param("initial.amplitude", format!("must lie in [a_m, a_M] = [{}, {}], got {amplitude}", params.a_min, params.a_max)));
            }
        }
        let v = &self.verify;
        let soft = v.needs_moderate_softness();
        if spec.gamma <= -2.0 && !soft.is_empty() {
            let names: Vec<&str> = soft.iter().map(|b| b.as_str()).collect();
            return Err(Error::Config(format!(
                "kernel.gamma = {} is outside the supported range (-2, 1] for verify.bounds [{}]",
                spec.gamma,
                names.join(", ")
            )));
        }
        if !(v.rel_error_cap > 0.0) {
            return Err(Error::param("verify.rel_error_cap", "must be positive"));
        }
        if !(v.target_exponent > 0.0 && v.target_exponent.is_finite()) {
            return Err(Error::param("verify.target_exponent", "must be positive and finite"));
        }
        if v.decay_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::param("verify.decay_times", "times must be nonnegative"));
        }
        if !(v.n2_horizon > 0.0) || v.n2_snapshots < 2 {
            return Err(Error::param("verify.n2_horizon", "need a positive horizon and at least two snapshots"));
        }
        v.n2.sphere.validate()?;
        v.n2.directions.validate()?;
        let c = &self.constants;
        if [&c.gamma, &c.mu, &c.p, &c.alpha, &c.beta].iter().any(|l| l.is_empty()) {
            return Err(Error::param("constants", "every sweep list needs at least one value"));
        }
        Ok(())
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        self.kernel.spec()
    }

    pub fn params(&self) -> Result<MaxwellianParams> {
        self.maxwellian.params()
    }

    pub fn phase_grid(&self) -> Result<PhaseGrid> {
        self.grid.grid(&self.params()?)
    }

    /// Kernel used for time stepping; zero angular factor when collisions are off.
    pub fn stepping_spec(&self) -> Result<KernelSpec> {
        let spec = self.kernel_spec()?;
        Ok(if self.collisions { spec } else { KernelSpec { b: AngularFactor::Constant { c: 0.0 }, b_total: 0.0, ..spec } })
    }
}

/// Validated configuration plus the dotted paths of every defaulted leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub defaults_applied: Vec<String>,
}

impl LoadedConfig {
    /// Command-line seed; the manifest then records it as set explicitly.
    pub fn override_seed(&mut self, seed: u64) {
        self.config.seed = seed;
        self.defaults_applied.retain(|k| k != "seed");
    }

    /// Command-line bound selection, re-validated against the kernel range.
    pub fn override_bounds(&mut self, bounds: Vec<BoundId>) -> Result<()> {
        self.config.verify.bounds = bounds;
        self.defaults_applied.retain(|k| k != "verify.bounds");
        self.config.validate()
    }
}

pub fn parse_config(text: &str, origin: &str) -> Result<LoadedConfig> {
    let raw: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?;
    let config: RunConfig = serde_json::from_value(raw.clone()).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
    config.validate()?;
    let effective = serde_json::to_value(&config)?;
    let mut defaults_applied = Vec::new();
    missing_leaves(&effective, Some(&raw), String::new(), &mut defaults_applied);
    Ok(LoadedConfig { config, defaults_applied })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, &path.display().to_string())
}

fn missing_leaves(effective: &Value, raw: Option<&Value>, prefix: String, out: &mut Vec<String>) {
    match effective {
        Value::Object(map) => {
            for (k, v) in map {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                let sub = raw.and_then(|r| r.get(k));
                missing_leaves(v, sub, path, out);
            }
        }
        _ => {
            if raw.is_none() {
                out.push(prefix);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_lists_defaults() {
        let c = parse_config(r#"{"seed": 7, "kernel": {"gamma": -1.0}}"#, "inline").unwrap();
        assert_eq!(c.config.seed, 7);
        assert_eq!(c.config.kernel.gamma, -1.0);
        assert!(!c.defaults_applied.contains(&"seed".to_string()));
        assert!(!c.defaults_applied.contains(&"kernel.gamma".to_string()));
        for k in ["kernel.kappa", "maxwellian.a_M", "grid.nx", "integrator.t_max", "diagnostics.p_list", "verify.n2.outer.samples", "quadrature.sphere.n_phi"] {
            assert!(c.defaults_applied.contains(&k.to_string()), "{k} missing from {:?}", c.defaults_applied);
        }
    }

    #[test]
    fn strongly_soft_kernel_gated() {
        let e = parse_config(r#"{"kernel": {"gamma": -2.5}}"#, "inline").unwrap_err().to_string();
        assert!(e.contains("(-2, 1]"), "{e}");
        // ray and decay checks alone are fine
        parse_config(r#"{"kernel": {"gamma": -2.5}, "verify": {"bounds": ["ray", "decay"]}}"#, "inline").unwrap();
    }

    #[test]
    fn inverted_sandwich_rejected() {
        let e = parse_config(r#"{"maxwellian": {"a_m": 2.0, "a_M": 1.0}}"#, "inline").unwrap_err().to_string();
        assert!(e.contains("sandwich amplitudes inverted"), "{e}");
    }

    #[test]
    fn unknown_keys_and_syntax_errors() {
        let e = parse_config(r#"{"kernel": {"gamma": 0.0, "gama": 1}}"#, "inline").unwrap_err().to_string();
        assert!(e.contains("gama"), "{e}");
        let e = parse_config("{\n  \"seed\": 1,\n  oops\n}", "cfg.json").unwrap_err().to_string();
        assert!(e.starts_with("cfg.json:3:"), "{e}");
    }

    #[test]
    fn infinity_exponent_parses() {
        let c = parse_config(r#"{"diagnostics": {"p_list": [1, "inf"]}}"#, "inline").unwrap();
        assert_eq!(c.config.diagnostics.p_list, vec![LebesgueExponent::Finite(1.0), LebesgueExponent::Infinity]);
    }

    #[test]
    fn undersized_box_rejected() {
        assert!(parse_config(r#"{"grid": {"x_extent": 1.0}}"#, "inline").is_err());
    }
}
