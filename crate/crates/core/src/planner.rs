//! Solvers for the two design scenarios (a weight budget, or an accuracy
//! floor) in uniform and layer-wise form, and assembly of compression plans.
//!
//! Throughout, `rate_i = lambda * C_i + delta` is the relative-accuracy drop
//! per decade of weights for layers bound to scale `i`. Budget semantics use
//! `theta_i* = alpha_i^p * theta_i` with `p = 2` for disk budgets and `p = 1`
//! for main-memory budgets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::archmodel::{apply_multipliers, disk_budget_to_weights, ArchitectureSpec, MultiplierAssignment};
use crate::complexity::DatasetProfile;
use crate::degradation::{predict_accuracy, ComplexityKind, DegradationModel};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Bisection stops once the bracket on K is narrower than this.
pub const K_TOLERANCE: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;
const MAX_BRACKET_EXPANSIONS: usize = 64;
/// Rounded plans may overshoot a budget by this fraction with a warning.
pub const BUDGET_SLACK: f64 = 0.01;
const FLOOR_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Uniform,
    LayerWise,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ConstraintKind {
    DiskBudget { budget_bytes: u64 },
    MemoryBudget { budget_bytes: u64 },
    AccuracyFloor { min_accuracy_fraction: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    #[serde(flatten)]
    pub kind: ConstraintKind,
    pub mode: Mode,
}

impl Constraint {
    pub fn disk(budget_bytes: u64, mode: Mode) -> Self {
        Self {
            kind: ConstraintKind::DiskBudget { budget_bytes },
            mode,
        }
    }

    pub fn memory(budget_bytes: u64, mode: Mode) -> Self {
        Self {
            kind: ConstraintKind::MemoryBudget { budget_bytes },
            mode,
        }
    }

    pub fn accuracy_floor(min_accuracy_fraction: f64, mode: Mode) -> Self {
        Self {
            kind: ConstraintKind::AccuracyFloor { min_accuracy_fraction },
            mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ConstraintKind::DiskBudget { budget_bytes } | ConstraintKind::MemoryBudget { budget_bytes } => {
                if budget_bytes == 0 {
                    return Err(Error::arg("budget must be positive"));
                }
            }
            ConstraintKind::AccuracyFloor {
                min_accuracy_fraction: f,
            } => {
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::arg(format!(
                        "minimum accuracy fraction must lie in (0, 1), got {f}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformSolution {
    pub alpha: f64,
    /// The target already exceeds the base size.
    pub no_compression_needed: bool,
}

fn check_targets(theta: f64, theta_star: f64) -> Result<Option<UniformSolution>> {
    if !(theta > 0.0) {
        return Err(Error::arg("base weight count must be positive"));
    }
    if !(theta_star > 0.0) {
        return Err(Error::arg("target weight count must be positive"));
    }
    Ok((theta_star >= theta).then_some(UniformSolution {
        alpha: 1.0,
        no_compression_needed: theta_star > theta,
    }))
}

/// Disk budget: `alpha = sqrt(theta* / theta)`.
pub fn solve_uniform_disk(theta: f64, theta_star: f64) -> Result<UniformSolution> {
    if let Some(s) = check_targets(theta, theta_star)? {
        return Ok(s);
    }
    Ok(UniformSolution {
        alpha: (theta_star / theta).sqrt(),
        no_compression_needed: false,
    })
}

/// Main-memory budget: `alpha = theta* / theta`.
pub fn solve_uniform_memory(theta: f64, theta_star: f64) -> Result<UniformSolution> {
    if let Some(s) = check_targets(theta, theta_star)? {
        return Ok(s);
    }
    Ok(UniformSolution {
        alpha: theta_star / theta,
        no_compression_needed: false,
    })
}

fn rates_for(
    spec: &ArchitectureSpec,
    complexities: &BTreeMap<usize, f64>,
    model: &DegradationModel,
) -> Result<BTreeMap<usize, f64>> {
    let mut rates = BTreeMap::new();
    let mut degenerate = Vec::new();
    for k in spec.scales_used() {
        let c = *complexities
            .get(&k)
            .ok_or_else(|| Error::arg(format!("no complexity for scale {k}")))?;
        match model.checked_rate(c) {
            Ok(r) => {
                rates.insert(k, r);
            }
            Err(_) => degenerate.push(k),
        }
    }
    if !degenerate.is_empty() {
        return Err(Error::DegenerateModel(format!(
            "lambda*C + delta is not positive at scale(s) {degenerate:?}"
        )));
    }
    Ok(rates)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerwiseSolution {
    pub assignment: MultiplierAssignment,
    pub alphas: BTreeMap<usize, f64>,
    /// Common value of `rate_i * log10(alpha_i)` across scales.
    pub k: f64,
    pub iterations: usize,
    /// `|sum alpha_i^p theta_i - theta*| / theta*` at termination.
    pub residual: f64,
    pub clamped_scales: Vec<usize>,
    pub exponent: i32,
}

/// Budget equation in K: `sum_i alpha_i(K)^p theta_i + theta_frozen - theta*`.
struct BudgetResidual {
    rates: BTreeMap<usize, f64>,
    weights: BTreeMap<usize, f64>,
    frozen: f64,
    target: f64,
    exponent: i32,
}

impl BudgetResidual {
    fn alphas(&self, k: f64) -> BTreeMap<usize, f64> {
        self.rates
            .iter()
            .map(|(&s, &r)| (s, 10f64.powf(k / r).min(1.0)))
            .collect()
    }

    fn eval(&self, k: f64) -> f64 {
        let alphas = self.alphas(k);
        let used: f64 = self
            .weights
            .iter()
            .map(|(s, &w)| alphas[s].powi(self.exponent) * w)
            .sum();
        used + self.frozen - self.target
    }
}

/// Layer-wise multipliers under a weight budget. Solves for `K <= 0` with
/// `alpha_i = 10^(K / rate_i)` so that `rate_i * log10(alpha_i)` is equal on
/// every scale and the thinned network meets `theta*`. `g(K)` is strictly
/// increasing, so plain bisection on a bracket `[K_lo, 0]` converges.
pub fn solve_layerwise_budget(
    spec: &ArchitectureSpec,
    complexities: &BTreeMap<usize, f64>,
    model: &DegradationModel,
    theta_star: f64,
    memory_mode: bool,
) -> Result<LayerwiseSolution> {
    let rates = rates_for(spec, complexities, model)?;
    let theta = spec.total_weights() as f64;
    if !(theta_star > 0.0) {
        return Err(Error::arg("target weight count must be positive"));
    }
    let exponent = if memory_mode { 1 } else { 2 };
    if theta_star >= theta {
        let alphas: BTreeMap<usize, f64> = rates.keys().map(|&s| (s, 1.0)).collect();
        return Ok(LayerwiseSolution {
            assignment: MultiplierAssignment::PerScale(alphas.clone()),
            alphas,
            k: 0.0,
            iterations: 0,
            residual: ((theta - theta_star) / theta_star).abs(),
            clamped_scales: Vec::new(),
            exponent,
        });
    }
    let frozen = spec.frozen_weights() as f64;
    let minimum = (spec.minimum_weights() as f64).max(frozen);
    if theta_star < minimum {
        return Err(Error::Infeasible {
            target: theta_star,
            minimum,
        });
    }
    let g = BudgetResidual {
        weights: spec
            .weights_by_scale()
            .into_iter()
            .map(|(s, w)| (s, w as f64))
            .collect(),
        rates,
        frozen,
        target: theta_star,
        exponent,
    };

    let max_rate = g.rates.values().copied().fold(0.0, f64::max);
    let max_channels = spec.layers.iter().map(|l| l.out_channels).max().unwrap_or(1) as f64;
    let mut lo = -max_rate * max_channels.log10().max(1.0);
    let mut expansions = 0;
    while g.eval(lo) >= 0.0 {
        lo *= 2.0;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS {
            return Err(Error::Infeasible {
                target: theta_star,
                minimum,
            });
        }
    }
    let mut hi = 0.0;
    let mut iterations = 0;
    while hi - lo > K_TOLERANCE && iterations < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if g.eval(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let k = 0.5 * (lo + hi);
    let alphas = g.alphas(k);
    let clamped_scales = g
        .rates
        .iter()
        .filter(|(_, &r)| 10f64.powf(k / r) > 1.0)
        .map(|(&s, _)| s)
        .collect();
    Ok(LayerwiseSolution {
        assignment: MultiplierAssignment::PerScale(alphas.clone()),
        alphas,
        k,
        iterations,
        residual: g.eval(k).abs() / theta_star,
        clamped_scales,
        exponent,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformFloorSolution {
    pub alpha: f64,
    pub theta_star: f64,
    pub delta_log_theta: f64,
}

fn check_drop(delta_a: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta_a) {
        return Err(Error::arg(format!(
            "accuracy drop budget must lie in [0, 1), got {delta_a}"
        )));
    }
    Ok(())
}

/// Accuracy floor, uniform: `log theta - log theta* = dA / rate(C)`, then
/// `alpha = sqrt(theta* / theta)`.
pub fn solve_uniform_floor(theta: f64, c: f64, model: &DegradationModel, delta_a: f64) -> Result<UniformFloorSolution> {
    check_drop(delta_a)?;
    if !(theta > 0.0) {
        return Err(Error::arg("base weight count must be positive"));
    }
    let rate = model.checked_rate(c)?;
    let delta_log_theta = delta_a / rate;
    let theta_star = theta * 10f64.powf(-delta_log_theta);
    Ok(UniformFloorSolution {
        alpha: solve_uniform_disk(theta, theta_star)?.alpha,
        theta_star,
        delta_log_theta,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerwiseFloorSolution {
    pub assignment: MultiplierAssignment,
    pub alphas: BTreeMap<usize, f64>,
    pub delta_log_theta: BTreeMap<usize, f64>,
}

/// Accuracy floor, layer-wise: each scale gets its own
/// `dlog theta_i = dA / rate_i` and `alpha_i = 10^(-dlog theta_i / 2)`.
pub fn solve_layerwise_floor(
    spec: &ArchitectureSpec,
    complexities: &BTreeMap<usize, f64>,
    model: &DegradationModel,
    delta_a: f64,
) -> Result<LayerwiseFloorSolution> {
    check_drop(delta_a)?;
    let rates = rates_for(spec, complexities, model)?;
    let delta_log_theta: BTreeMap<usize, f64> = rates.iter().map(|(&s, &r)| (s, delta_a / r)).collect();
    let alphas: BTreeMap<usize, f64> = delta_log_theta
        .iter()
        .map(|(&s, &d)| (s, 10f64.powf(-d / 2.0)))
        .collect();
    Ok(LayerwiseFloorSolution {
        assignment: MultiplierAssignment::PerScale(alphas.clone()),
        alphas,
        delta_log_theta,
    })
}

/// Per-scale complexity the model expects (J, or JB at the model's ω).
pub fn scale_complexities(profile: &DatasetProfile, model: &DegradationModel) -> Result<BTreeMap<usize, f64>> {
    let values = match model.complexity_kind {
        ComplexityKind::J => profile.j(),
        ComplexityKind::Jb => {
            let omega = model.omega.ok_or_else(|| Error::arg("JB model carries no omega"))?;
            profile.jb(omega)?
        }
    };
    Ok(values.into_iter().enumerate().collect())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub solver: String,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Multipliers were lowered after rounding pushed the plan over budget.
    pub tightened: bool,
    pub tighten_iterations: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionPlan {
    pub source: String,
    pub constraint: Constraint,
    pub assignment: MultiplierAssignment,
    /// Multiplier applied at each scale.
    pub alphas: BTreeMap<usize, f64>,
    #[serde(skip)]
    pub compressed: ArchitectureSpec,
    /// Output channels per layer of the compressed network.
    pub channels: Vec<usize>,
    pub theta_base: u64,
    pub theta_star_target: f64,
    pub theta_star_achieved: u64,
    pub log10_theta_base: f64,
    pub log10_theta_target: f64,
    pub log10_theta_achieved: f64,
    /// Predicted accuracy relative to the uncompressed network.
    pub predicted_accuracy: f64,
    /// Layer-wise predictions average per-scale drops weighted by each
    /// scale's share of the weights; the law itself only describes whole
    /// networks, so these are estimates.
    pub prediction_is_estimate: bool,
    pub prediction_clamped: bool,
    pub diagnostics: SolverDiagnostics,
}

impl CompressionPlan {
    /// Compressed architecture in the text format, followed by a comment
    /// block with the plan's numbers.
    pub fn to_arch_text(&self) -> String {
        let mut s = self.compressed.to_text();
        s.push_str("# plan\n");
        s.push_str(&format!("# theta_star_target = {:.6e}\n", self.theta_star_target));
        s.push_str(&format!("# theta_star_achieved = {}\n", self.theta_star_achieved));
        s.push_str(&format!("# log10_theta_achieved = {:.6}\n", self.log10_theta_achieved));
        for (k, a) in &self.alphas {
            s.push_str(&format!("# alpha[{k}] = {a:.6}\n"));
        }
        s.push_str(&format!(
            "# predicted_relative_accuracy = {:.6}{}\n",
            self.predicted_accuracy,
            if self.prediction_is_estimate { " (estimate)" } else { "" }
        ));
        s
    }
}

fn uniform_map(alpha: f64, spec: &ArchitectureSpec) -> BTreeMap<usize, f64> {
    spec.scales_used().into_iter().map(|s| (s, alpha)).collect()
}

/// Relative accuracy predicted for a set of per-scale multipliers.
fn predicted_relative(
    spec: &ArchitectureSpec,
    rates: &BTreeMap<usize, f64>,
    alphas: &BTreeMap<usize, f64>,
    exponent: i32,
) -> (f64, bool) {
    let weights = spec.weights_by_scale();
    let total: f64 = weights.values().map(|&w| w as f64).sum();
    let drop: f64 = weights
        .iter()
        .map(|(s, &w)| (w as f64 / total) * rates[s] * (-(exponent as f64) * alphas[s].log10()))
        .sum();
    let raw = 1.0 - drop;
    (raw.max(0.0), raw < 0.0)
}

/// Whole-network law evaluated at the input-scale complexity.
fn uniform_prediction(model: &DegradationModel, input_c: f64, alpha: f64, exponent: i32) -> (f64, bool) {
    let raw = 1.0 - model.rate(input_c) * (-(exponent as f64) * alpha.log10());
    (raw.max(0.0), raw < 0.0)
}

/// Largest parameter in `[lo, hi]` whose rounded network fits `target`,
/// assuming the weight count is non-decreasing in the parameter.
fn tighten<F>(spec: &ArchitectureSpec, target: f64, mut lo: f64, mut hi: f64, assign: F) -> Result<(f64, usize)>
where
    F: Fn(f64) -> MultiplierAssignment,
{
    let fits = |t: f64| -> Result<bool> { Ok(apply_multipliers(spec, &assign(t))?.total_weights() as f64 <= target) };
    if !fits(lo)? {
        return Ok((lo, 0));
    }
    let mut iterations = 0;
    while hi - lo > K_TOLERANCE * hi.abs().max(1.0) && iterations < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if fits(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok((lo, iterations))
}

/// Solve the constraint, thin the network and attach the accuracy
/// prediction and diagnostics.
pub fn build_plan(
    spec: &ArchitectureSpec,
    profile: &DatasetProfile,
    model: &DegradationModel,
    constraint: &Constraint,
) -> Result<CompressionPlan> {
    constraint.validate()?;
    profile.validate()?;
    let complexities = scale_complexities(profile, model)?;
    let rates = rates_for(spec, &complexities, model)?;
    let theta = spec.total_weights() as f64;
    let log_theta = theta.log10();
    let input_c = *complexities
        .get(&0)
        .ok_or_else(|| Error::arg("profile has no input-scale complexity"))?;

    let mut diagnostics = SolverDiagnostics::default();
    let (budget, exponent) = match constraint.kind {
        ConstraintKind::DiskBudget { budget_bytes } => (
            Some(disk_budget_to_weights(budget_bytes, spec.bytes_per_weight)? as f64),
            2,
        ),
        ConstraintKind::MemoryBudget { budget_bytes } => (
            Some(disk_budget_to_weights(budget_bytes, spec.bytes_per_weight)? as f64),
            1,
        ),
        ConstraintKind::AccuracyFloor { .. } => (None, 2),
    };
    if let Some(target) = budget {
        let minimum = spec.minimum_weights() as f64;
        if target < minimum {
            return Err(Error::Infeasible { target, minimum });
        }
    }

    let (mut alphas, theta_target, prediction) = match (constraint.kind, constraint.mode) {
        (ConstraintKind::AccuracyFloor { min_accuracy_fraction }, Mode::Uniform) => {
            let sol = solve_uniform_floor(theta, input_c, model, 1.0 - min_accuracy_fraction)?;
            diagnostics.solver = "uniform-floor".into();
            let p = predict_accuracy(model, input_c, log_theta, log_theta - sol.delta_log_theta, 1.0)?;
            (uniform_map(sol.alpha, spec), sol.theta_star, (p.value, p.clamped))
        }
        (ConstraintKind::AccuracyFloor { min_accuracy_fraction }, Mode::LayerWise) => {
            let sol = solve_layerwise_floor(spec, &complexities, model, 1.0 - min_accuracy_fraction)?;
            diagnostics.solver = "layer-wise-floor".into();
            let target: f64 = spec
                .weights_by_scale()
                .iter()
                .map(|(s, &w)| sol.alphas[s].powi(2) * w as f64)
                .sum::<f64>()
                + spec.frozen_weights() as f64;
            let p = predicted_relative(spec, &rates, &sol.alphas, 2);
            (sol.alphas, target, p)
        }
        (_, Mode::Uniform) => {
            let target = budget.expect("budget kinds carry a target");
            let sol = if exponent == 1 {
                diagnostics.solver = "uniform-memory".into();
                solve_uniform_memory(theta, target)?
            } else {
                diagnostics.solver = "uniform-disk".into();
                solve_uniform_disk(theta, target)?
            };
            let p = uniform_prediction(model, input_c, sol.alpha, exponent);
            (uniform_map(sol.alpha, spec), target, p)
        }
        (_, Mode::LayerWise) => {
            let target = budget.expect("budget kinds carry a target");
            let sol = solve_layerwise_budget(spec, &complexities, model, target, exponent == 1)?;
            diagnostics.solver = if exponent == 1 {
                "layer-wise-memory"
            } else {
                "layer-wise-disk"
            }
            .into();
            diagnostics.iterations = sol.iterations;
            diagnostics.residual = Some(sol.residual);
            diagnostics.k = Some(sol.k);
            if !sol.clamped_scales.is_empty() {
                diagnostics
                    .warnings
                    .push(format!("multipliers clamped to 1 at scales {:?}", sol.clamped_scales));
            }
            let p = predicted_relative(spec, &rates, &sol.alphas, exponent);
            (sol.alphas, target, p)
        }
    };

    let mut assignment = MultiplierAssignment::PerScale(alphas.clone());
    let mut compressed = apply_multipliers(spec, &assignment)?;
    let mut prediction = prediction;

    if let Some(target) = budget {
        if compressed.total_weights() as f64 > target {
            // rounding overshot the budget: lower the multipliers until the
            // rounded network fits
            let iters = match constraint.mode {
                Mode::Uniform => {
                    let a0 = alphas.values().copied().next().unwrap_or(1.0);
                    let (a, it) = tighten(spec, target, 0.0, a0, |a| {
                        MultiplierAssignment::Uniform(a.max(f64::MIN_POSITIVE))
                    })?;
                    alphas = uniform_map(a.max(f64::MIN_POSITIVE), spec);
                    it
                }
                Mode::LayerWise => {
                    let k0 = diagnostics.k.unwrap_or(0.0);
                    let max_rate = rates.values().copied().fold(0.0, f64::max);
                    let lo = k0 - max_rate * 64.0;
                    let to_alphas = |k: f64| -> BTreeMap<usize, f64> {
                        rates
                            .iter()
                            .map(|(&s, &r)| (s, 10f64.powf(k / r).clamp(f64::MIN_POSITIVE, 1.0)))
                            .collect()
                    };
                    let (k, it) = tighten(spec, target, lo, k0, |k| MultiplierAssignment::PerScale(to_alphas(k)))?;
                    alphas = to_alphas(k);
                    diagnostics.k = Some(k);
                    it
                }
            };
            diagnostics.tightened = true;
            diagnostics.tighten_iterations = iters;
            assignment = MultiplierAssignment::PerScale(alphas.clone());
            compressed = apply_multipliers(spec, &assignment)?;
            prediction = match constraint.mode {
                Mode::Uniform => {
                    let a = alphas.values().copied().next().unwrap_or(1.0);
                    uniform_prediction(model, input_c, a, exponent)
                }
                Mode::LayerWise => predicted_relative(spec, &rates, &alphas, exponent),
            };
        }
    }

    let achieved = compressed.total_weights();
    let mut plan = CompressionPlan {
        source: spec.name.clone(),
        constraint: *constraint,
        assignment: if constraint.mode == Mode::Uniform {
            MultiplierAssignment::Uniform(alphas.values().copied().next().unwrap_or(1.0))
        } else {
            assignment
        },
        alphas,
        channels: compressed.layers.iter().map(|l| l.out_channels).collect(),
        compressed,
        theta_base: spec.total_weights(),
        theta_star_target: theta_target,
        theta_star_achieved: achieved,
        log10_theta_base: log_theta,
        log10_theta_target: theta_target.log10(),
        log10_theta_achieved: (achieved as f64).log10(),
        predicted_accuracy: prediction.0,
        prediction_is_estimate: constraint.mode == Mode::LayerWise,
        prediction_clamped: prediction.1,
        diagnostics,
    };
    check_plan(&mut plan)?;
    Ok(plan)
}

fn check_plan(plan: &mut CompressionPlan) -> Result<()> {
    match plan.constraint.kind {
        ConstraintKind::DiskBudget { .. } | ConstraintKind::MemoryBudget { .. } => {
            let over = plan.theta_star_achieved as f64 - plan.theta_star_target;
            if over > 0.0 {
                let frac = over / plan.theta_star_target;
                if frac > BUDGET_SLACK {
                    return Err(Error::PlanRejected(format!(
                        "achieved {} weights exceeds the budget of {:.0} by {:.2}%",
                        plan.theta_star_achieved,
                        plan.theta_star_target,
                        100.0 * frac
                    )));
                }
                plan.diagnostics
                    .warnings
                    .push(format!("rounded network exceeds the budget by {:.3}%", 100.0 * frac));
            }
        }
        ConstraintKind::AccuracyFloor { min_accuracy_fraction } => {
            if plan.predicted_accuracy < min_accuracy_fraction - FLOOR_TOLERANCE {
                return Err(Error::PlanRejected(format!(
                    "predicted relative accuracy {} is below the floor {min_accuracy_fraction}",
                    plan.predicted_accuracy
                )));
            }
        }
    }
    Ok(())
}

/// Evaluate many constraints over shared inputs.
pub fn build_plans(
    spec: &ArchitectureSpec,
    profile: &DatasetProfile,
    model: &DegradationModel,
    constraints: &[Constraint],
    exec: Execution,
) -> Vec<Result<CompressionPlan>> {
    exec.map(constraints, |c| build_plan(spec, profile, model, c))
}

/// Overall reduction factor `theta_base / theta_compressed`.
pub fn reduction_report(base: &ArchitectureSpec, plan: &CompressionPlan) -> f64 {
    base.total_weights() as f64 / plan.theta_star_achieved as f64
}
