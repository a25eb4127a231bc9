//! Degradation law fitting.
//!
//! For every training dataset the relative accuracy (value over the α = 1
//! baseline) is regressed on log10 of the weight count; the slope is the
//! accuracy lost per decade of weights. Those slopes are then regressed on
//! dataset complexity, giving `rate(C) = lambda * C + delta`. Slopes are
//! stored as positive drop magnitudes so a usable model has `rate(C) > 0`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::complexity::jb_complexity;
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Multipliers used by the reduced fitting protocol.
pub const FAST_ALPHAS: [f64; 3] = [1.0, 0.25, 0.0625];

/// R² values closer than this are treated as tied in the ω sweep.
const R2_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    F1,
    Iu,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::F1 => "f1",
            Metric::Iu => "iu",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(Metric::F1),
            "iu" | "iou" => Ok(Metric::Iu),
            other => Err(Error::arg(format!("unknown metric `{other}` (expected f1 or iu)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexityKind {
    /// JPEG complexity.
    J,
    /// Weighted JPEG complexity and foreground density.
    Jb,
}

impl fmt::Display for ComplexityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComplexityKind::J => "j",
            ComplexityKind::Jb => "jb",
        })
    }
}

impl FromStr for ComplexityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "j" => Ok(ComplexityKind::J),
            "jb" => Ok(ComplexityKind::Jb),
            other => Err(Error::arg(format!(
                "unknown complexity kind `{other}` (expected j or jb)"
            ))),
        }
    }
}

/// One trained-network accuracy measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyObservation {
    pub dataset: String,
    pub alpha: f64,
    /// Weight count of the trained network; `None` until completed from the
    /// architecture as `alpha^2 * theta_base`.
    pub theta: Option<f64>,
    pub metric: Metric,
    pub value: f64,
}

impl AccuracyObservation {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::arg(format!(
                "{}: alpha {} outside (0, 1]",
                self.dataset, self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.value) {
            return Err(Error::arg(format!(
                "{}: accuracy {} outside [0, 1]",
                self.dataset, self.value
            )));
        }
        if let Some(t) = self.theta {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::arg(format!("{}: theta must be positive", self.dataset)));
            }
        }
        Ok(())
    }

    fn is_baseline(&self) -> bool {
        (self.alpha - 1.0).abs() < 1e-12
    }
}

/// Fill missing weight counts with `alpha^2 * base_theta`.
pub fn complete_theta(observations: &mut [AccuracyObservation], base_theta: f64) {
    for o in observations.iter_mut().filter(|o| o.theta.is_none()) {
        o.theta = Some(o.alpha * o.alpha * base_theta);
    }
}

/// Ordinary least-squares line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

/// Least-squares fit of `y = slope * x + intercept` with centred sums.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::arg("abscissa and ordinate lengths differ"));
    }
    let n = xs.len();
    let distinct = xs.iter().any(|&x| x != xs[0]);
    if n < 2 || !distinct {
        return Err(Error::InsufficientData(
            "a line fit needs at least two distinct abscissae".into(),
        ));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
        n,
    })
}

/// Per-dataset relative-accuracy trend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub dataset: String,
    /// Relative accuracy gained per decade of weights (drop magnitude when
    /// read in the compression direction).
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points_used: usize,
    /// Whether the line was forced through the baseline point. Always false:
    /// the intercept is fitted freely.
    pub anchored: bool,
}

/// Map one dataset/metric group to `(log10 theta, value / baseline)`.
pub fn relative_accuracy(group: &[AccuracyObservation]) -> Result<Vec<(f64, f64)>> {
    let name = group.first().map(|o| o.dataset.as_str()).unwrap_or("<empty>");
    let baseline = group
        .iter()
        .find(|o| o.is_baseline())
        .ok_or_else(|| Error::InsufficientData(format!("dataset `{name}` has no alpha=1 baseline")))?;
    if baseline.value <= 0.0 {
        return Err(Error::InsufficientData(format!(
            "dataset `{name}` has a zero baseline accuracy"
        )));
    }
    group
        .iter()
        .map(|o| {
            let theta = o
                .theta
                .ok_or_else(|| Error::arg(format!("dataset `{name}`: alpha {} has no weight count", o.alpha)))?;
            Ok((theta.log10(), o.value / baseline.value))
        })
        .collect()
}

/// Least-squares trend through `(log10 theta, relative accuracy)` points.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    ols(&xs, &ys)
}

/// `lambda`/`delta` line through `(complexity, drop-per-decade)` points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradationFit {
    pub lambda: f64,
    pub delta: f64,
    pub r2: f64,
    pub warnings: Vec<String>,
}

/// Fit `|slope| = lambda * C + delta`. A fitted rate that is not positive at
/// one of the input complexities is reported as a warning.
pub fn fit_degree_of_degradation(slopes: &[(f64, f64)]) -> Result<DegradationFit> {
    let xs: Vec<f64> = slopes.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = slopes.iter().map(|p| p.1.abs()).collect();
    let fit = ols(&xs, &ys)?;
    let warnings = xs
        .iter()
        .filter(|&&c| fit.slope * c + fit.intercept <= 0.0)
        .map(|c| format!("fitted degradation rate is not positive at C = {c}"))
        .collect();
    Ok(DegradationFit {
        lambda: fit.slope,
        delta: fit.intercept,
        r2: fit.r2,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaCandidate {
    pub omega: f64,
    /// `None` when the JB values are all equal and no line can be fitted.
    pub r2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaSelection {
    pub omega: f64,
    pub r2: f64,
    pub grid: Vec<OmegaCandidate>,
}

/// Sweep `omega` over `{0, step, ..., 1}` and keep the weight whose JB
/// values best explain the per-dataset slopes (highest R²; ties go to the
/// smaller omega). Grid points where JB is constant across datasets cannot
/// be fitted and are skipped.
pub fn select_omega(datasets: &[(f64, f64, f64)], grid_step: f64, exec: Execution) -> Result<OmegaSelection> {
    if datasets.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "omega selection needs at least three datasets, got {}",
            datasets.len()
        )));
    }
    let steps = (1.0 / grid_step).round();
    if !(grid_step > 0.0 && grid_step <= 1.0) || ((1.0 / grid_step) - steps).abs() > 1e-9 {
        return Err(Error::arg(format!("grid step {grid_step} does not divide 1 evenly")));
    }
    let steps = steps as usize;
    let slopes: Vec<f64> = datasets.iter().map(|d| d.2.abs()).collect();
    let grid = exec.map_range(steps + 1, |m| {
        let omega = m as f64 / steps as f64;
        let xs: Vec<f64> = datasets
            .iter()
            .map(|&(j, b, _)| omega * j + (1.0 - omega) * b)
            .collect();
        OmegaCandidate {
            omega,
            r2: ols(&xs, &slopes).ok().map(|f| f.r2),
        }
    });
    // deterministic reduction after the full gather
    let mut best: Option<(f64, f64)> = None;
    for c in &grid {
        if let Some(r2) = c.r2 {
            match best {
                Some((_, b)) if r2 <= b + R2_TIE_TOLERANCE => {}
                _ => best = Some((c.omega, r2)),
            }
        }
    }
    let (omega, r2) =
        best.ok_or_else(|| Error::InsufficientData("JB is constant across datasets for every omega".into()))?;
    Ok(OmegaSelection { omega, r2, grid })
}

/// Per-dataset record kept on a fitted model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSlope {
    pub dataset: String,
    pub complexity: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points_used: usize,
}

/// Fitted degradation law for one architecture and accuracy metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradationModel {
    pub architecture: String,
    pub metric: Metric,
    pub complexity_kind: ComplexityKind,
    pub lambda: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub r2: f64,
    /// log10 weight count of the unthinned architecture the law was fitted on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_log_theta: Option<f64>,
    /// Fitted with the reduced two-dataset, three-multiplier protocol.
    #[serde(default)]
    pub fast: bool,
    #[serde(default)]
    pub datasets: Vec<DatasetSlope>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl DegradationModel {
    /// Model from known constants (e.g. published values).
    pub fn from_constants(architecture: &str, metric: Metric, lambda: f64, delta: f64) -> Self {
        Self {
            architecture: architecture.to_string(),
            metric,
            complexity_kind: ComplexityKind::J,
            lambda,
            delta,
            omega: None,
            r2: 1.0,
            base_log_theta: None,
            fast: false,
            datasets: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Drop in relative accuracy per decade of weights at complexity `c`.
    pub fn rate(&self, c: f64) -> f64 {
        self.lambda * c + self.delta
    }

    /// [`rate`](Self::rate), rejecting non-positive values.
    pub fn checked_rate(&self, c: f64) -> Result<f64> {
        let r = self.rate(c);
        if r > 0.0 && r.is_finite() {
            Ok(r)
        } else {
            Err(Error::DegenerateModel(format!(
                "lambda*C + delta = {r} is not positive at C = {c}"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    /// The linear law predicted a negative accuracy.
    pub clamped: bool,
}

/// Accuracy after shrinking from `log_theta_base` to `log_theta_target`:
/// `a_base * (1 - rate(C) * (log_theta_base - log_theta_target))`.
pub fn predict_accuracy(
    model: &DegradationModel,
    c: f64,
    log_theta_base: f64,
    log_theta_target: f64,
    a_base: f64,
) -> Result<Prediction> {
    let rate = model.checked_rate(c)?;
    if log_theta_target > log_theta_base + 1e-12 {
        return Err(Error::arg(format!(
            "target log10 weights {log_theta_target} exceeds the base {log_theta_base}"
        )));
    }
    let raw = a_base * (1.0 - rate * (log_theta_base - log_theta_target).max(0.0));
    Ok(Prediction {
        value: raw.max(0.0),
        clamped: raw < 0.0,
    })
}

/// Dataset complexity at the input scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetComplexity {
    pub j: f64,
    pub b: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    pub architecture: String,
    pub metric: Metric,
    pub complexity_kind: ComplexityKind,
    pub omega_step: f64,
    pub base_log_theta: Option<f64>,
}

impl FitOptions {
    pub fn new(architecture: &str, metric: Metric, complexity_kind: ComplexityKind) -> Self {
        Self {
            architecture: architecture.to_string(),
            metric,
            complexity_kind,
            omega_step: crate::complexity::DEFAULT_OMEGA_STEP,
            base_log_theta: None,
        }
    }
}

fn group_by_dataset<'a>(
    observations: &'a [AccuracyObservation],
    metric: Metric,
) -> BTreeMap<&'a str, Vec<AccuracyObservation>> {
    let mut groups: BTreeMap<&str, Vec<AccuracyObservation>> = BTreeMap::new();
    for o in observations.iter().filter(|o| o.metric == metric) {
        groups.entry(o.dataset.as_str()).or_default().push(o.clone());
    }
    groups
}

/// Per-dataset slope fits for one metric, in dataset-name order.
pub fn fit_dataset_slopes(observations: &[AccuracyObservation], metric: Metric) -> Result<Vec<SlopeFit>> {
    for o in observations {
        o.validate()?;
    }
    let groups = group_by_dataset(observations, metric);
    if groups.is_empty() {
        return Err(Error::InsufficientData(format!("no {metric} observations")));
    }
    groups
        .into_iter()
        .map(|(name, group)| {
            let points = relative_accuracy(&group)?;
            let fit = fit_slope(&points).map_err(|e| match e {
                Error::InsufficientData(m) => Error::InsufficientData(format!("dataset `{name}`: {m}")),
                other => other,
            })?;
            Ok(SlopeFit {
                dataset: name.to_string(),
                slope: fit.slope,
                intercept: fit.intercept,
                r2: fit.r2,
                points_used: fit.n,
                anchored: false,
            })
        })
        .collect()
}

/// Full two-stage fit: per-dataset slopes, optional ω selection, then the
/// slope-versus-complexity line.
pub fn fit_model(
    observations: &[AccuracyObservation],
    complexities: &BTreeMap<String, DatasetComplexity>,
    options: &FitOptions,
    exec: Execution,
) -> Result<DegradationModel> {
    let slopes = fit_dataset_slopes(observations, options.metric)?;
    let lookup = |name: &str| {
        complexities
            .get(name)
            .copied()
            .ok_or_else(|| Error::arg(format!("no complexity profile for dataset `{name}`")))
    };
    let (omega, cs): (Option<f64>, Vec<f64>) = match options.complexity_kind {
        ComplexityKind::J => (
            None,
            slopes
                .iter()
                .map(|s| lookup(&s.dataset).map(|c| c.j))
                .collect::<Result<_>>()?,
        ),
        ComplexityKind::Jb => {
            let triples = slopes
                .iter()
                .map(|s| {
                    let c = lookup(&s.dataset)?;
                    let b = c.b.ok_or_else(|| {
                        Error::arg(format!("dataset `{}` has no foreground density for JB", s.dataset))
                    })?;
                    Ok((c.j, b, s.slope))
                })
                .collect::<Result<Vec<_>>>()?;
            let sel = select_omega(&triples, options.omega_step, exec)?;
            let cs = triples
                .iter()
                .map(|&(j, b, _)| jb_complexity(j, b, sel.omega))
                .collect::<Result<_>>()?;
            (Some(sel.omega), cs)
        }
    };
    let points: Vec<(f64, f64)> = cs.iter().copied().zip(slopes.iter().map(|s| s.slope)).collect();
    let fit = fit_degree_of_degradation(&points)?;
    Ok(DegradationModel {
        architecture: options.architecture.clone(),
        metric: options.metric,
        complexity_kind: options.complexity_kind,
        lambda: fit.lambda,
        delta: fit.delta,
        omega,
        r2: fit.r2,
        base_log_theta: options.base_log_theta,
        fast: false,
        datasets: slopes
            .iter()
            .zip(&cs)
            .map(|(s, &c)| DatasetSlope {
                dataset: s.dataset.clone(),
                complexity: c,
                slope: s.slope,
                intercept: s.intercept,
                r2: s.r2,
                points_used: s.points_used,
            })
            .collect(),
        warnings: fit.warnings,
    })
}

/// Reduced protocol: exactly two datasets, each observed at α ∈ {1, 0.25,
/// 0.0625}. Observations at other multipliers are ignored.
pub fn fit_fast(
    observations: &[AccuracyObservation],
    complexities: &BTreeMap<String, DatasetComplexity>,
    options: &FitOptions,
    exec: Execution,
) -> Result<DegradationModel> {
    let subset: Vec<AccuracyObservation> = observations
        .iter()
        .filter(|o| o.metric == options.metric && FAST_ALPHAS.iter().any(|a| (a - o.alpha).abs() < 1e-9))
        .cloned()
        .collect();
    let groups = group_by_dataset(&subset, options.metric);
    if groups.len() != 2 {
        return Err(Error::InsufficientData(format!(
            "fast fitting needs exactly two datasets, got {}",
            groups.len()
        )));
    }
    for (name, g) in &groups {
        for a in FAST_ALPHAS {
            let hits = g.iter().filter(|o| (o.alpha - a).abs() < 1e-9).count();
            if hits != 1 {
                return Err(Error::InsufficientData(format!(
                    "fast fitting needs one observation at alpha={a} for `{name}`, got {hits}"
                )));
            }
        }
    }
    let mut model = fit_model(&subset, complexities, options, exec)?;
    model.fast = true;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(dataset: &str, alpha: f64, theta: f64, value: f64) -> AccuracyObservation {
        AccuracyObservation {
            dataset: dataset.into(),
            alpha,
            theta: Some(theta),
            metric: Metric::F1,
            value,
        }
    }

    #[test]
    fn relative_accuracy_cases() {
        let base = obs("chase", 1.0, 1e7, 0.7748);
        assert_eq!(relative_accuracy(&[base.clone()]).unwrap(), vec![(7.0, 1.0)]);
        let pts = relative_accuracy(&[base, obs("chase", 0.0625, 1e7 / 256.0, 0.4739)]).unwrap();
        assert!((pts[1].1 - 0.6116).abs() < 5e-5);
        let d = relative_accuracy(&[obs("drive", 1.0, 1e7, 0.7940), obs("drive", 0.5, 2.5e6, 0.7857)]).unwrap();
        assert!((d[1].1 - 0.9895).abs() < 5e-5);
    }

    #[test]
    fn relative_accuracy_errors() {
        assert!(relative_accuracy(&[obs("x", 0.5, 1e6, 0.5)]).is_err());
        assert!(relative_accuracy(&[obs("x", 1.0, 1e6, 0.0)]).is_err());
        let mut missing = obs("x", 1.0, 1e6, 0.5);
        missing.theta = None;
        assert!(relative_accuracy(&[missing]).is_err());
    }

    #[test]
    fn exact_line_and_two_points() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 0.3 * i as f64 + 0.1)).collect();
        let f = fit_slope(&pts).unwrap();
        assert!((f.slope - 0.3).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let two = fit_slope(&[(1.0, 1.0), (3.0, 0.8)]).unwrap();
        assert!((two.slope + 0.1).abs() < 1e-12);
        assert!(fit_slope(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(fit_slope(&[(1.0, 1.0)]).is_err());
    }

    #[test]
    fn degradation_line_recovery() {
        let pts: Vec<(f64, f64)> = [0.03, 0.06, 0.15, 0.28]
            .iter()
            .map(|&c| (c, 0.437 * c + 0.0103))
            .collect();
        let f = fit_degree_of_degradation(&pts).unwrap();
        assert!((f.lambda - 0.437).abs() < 1e-12);
        assert!((f.delta - 0.0103).abs() < 1e-12);
        assert!(f.warnings.is_empty());
        assert!(fit_degree_of_degradation(&[(0.1, 0.1), (0.1, 0.2)]).is_err());
    }

    #[test]
    fn negative_rate_warns() {
        let f = fit_degree_of_degradation(&[(0.1, 0.05), (0.2, 0.01), (0.3, 0.0)]).unwrap();
        assert!(!f.warnings.is_empty());
    }

    #[test]
    fn omega_recovers_planted_weight() {
        let data: Vec<(f64, f64, f64)> = [(0.15, 0.08), (0.05, 0.30), (0.28, 0.12), (0.03, 0.01)]
            .iter()
            .map(|&(j, b)| (j, b, 2.0 * (0.5 * j + 0.5 * b)))
            .collect();
        let sel = select_omega(&data, 0.025, Execution::Parallel).unwrap();
        assert_eq!(sel.omega, 0.5);
        assert!((sel.r2 - 1.0).abs() < 1e-12);
        assert_eq!(sel.grid.len(), 41);
    }

    #[test]
    fn omega_tie_rules() {
        // J constant: every omega < 1 is an affine image of B -> all tie -> 0
        let j_flat = [(0.1, 0.2, 0.5), (0.1, 0.4, 0.7), (0.1, 0.5, 0.71)];
        assert_eq!(select_omega(&j_flat, 0.025, Execution::Sequential).unwrap().omega, 0.0);
        // B constant: omega = 0 cannot be fitted; the rest tie -> first step
        let b_flat = [(0.1, 0.2, 0.5), (0.2, 0.2, 0.7), (0.3, 0.2, 0.71)];
        assert_eq!(
            select_omega(&b_flat, 0.025, Execution::Sequential).unwrap().omega,
            0.025
        );
    }

    #[test]
    fn omega_errors() {
        assert!(select_omega(&[(0.1, 0.1, 0.1), (0.2, 0.2, 0.2)], 0.025, Execution::Sequential).is_err());
        assert!(select_omega(&[(0.1, 0.1, 0.1); 3], 0.3, Execution::Sequential).is_err());
    }

    #[test]
    fn prediction_examples() {
        let m = DegradationModel::from_constants("unet", Metric::F1, 0.437, 0.0103);
        assert_eq!(
            predict_accuracy(&m, 0.1518, 7.492, 7.492, 0.8644).unwrap().value,
            0.8644
        );
        let p = predict_accuracy(&m, 0.1518, 7.492, 6.834, 0.8644).unwrap();
        assert!((p.value - 0.8208).abs() < 5e-5, "{}", p.value);
        assert!(p.value < 0.8278);
        let drop = 0.8644 - predict_accuracy(&m, 0.1518, 7.492, 6.492, 0.8644).unwrap().value;
        assert!((drop - 0.0766366 * 0.8644).abs() < 1e-9);
        let deep = predict_accuracy(&m, 0.1518, 7.492, -10.0, 1.0).unwrap();
        assert!(deep.clamped && deep.value == 0.0);
        assert!(predict_accuracy(&m, 0.1518, 7.0, 7.5, 1.0).is_err());
        let bad = DegradationModel::from_constants("x", Metric::F1, -1.0, 0.0);
        assert!(matches!(
            predict_accuracy(&bad, 0.2, 7.0, 6.0, 1.0),
            Err(Error::DegenerateModel(_))
        ));
    }

    fn planted(
        datasets: &[(&str, f64)],
        alphas: &[f64],
    ) -> (Vec<AccuracyObservation>, BTreeMap<String, DatasetComplexity>) {
        let base = 10f64.powf(7.492);
        let mut out = Vec::new();
        let mut cx = BTreeMap::new();
        for &(name, c) in datasets {
            cx.insert(name.to_string(), DatasetComplexity { j: c, b: None });
            let rate = 0.437 * c + 0.0103;
            for &a in alphas {
                let dlog = -2.0 * f64::log10(a);
                out.push(obs(name, a, a * a * base, 0.8 * (1.0 - rate * dlog)));
            }
        }
        (out, cx)
    }

    #[test]
    fn fast_fit_matches_full_on_noiseless_data() {
        let (o, cx) = planted(
            &[("a", 0.0362), ("b", 0.2826), ("c", 0.1518)],
            &[1.0, 0.75, 0.5, 0.25, 0.1875, 0.125, 0.0625],
        );
        let opts = FitOptions::new("unet", Metric::F1, ComplexityKind::J);
        let full = fit_model(&o, &cx, &opts, Execution::Sequential).unwrap();
        assert!((full.lambda - 0.437).abs() < 1e-12);
        let two: Vec<_> = o.iter().filter(|x| x.dataset != "c").cloned().collect();
        let fast = fit_fast(&two, &cx, &opts, Execution::Sequential).unwrap();
        assert!(fast.fast);
        assert!((fast.lambda - full.lambda).abs() < 1e-12);
        assert!((fast.delta - full.delta).abs() < 1e-12);
        // three datasets or one dataset are rejected
        assert!(fit_fast(&o, &cx, &opts, Execution::Sequential).is_err());
        let one: Vec<_> = o.iter().filter(|x| x.dataset == "a").cloned().collect();
        assert!(fit_fast(&one, &cx, &opts, Execution::Sequential).is_err());
    }

    #[test]
    fn fit_requires_profiles() {
        let (o, mut cx) = planted(&[("a", 0.05), ("b", 0.2)], &[1.0, 0.5]);
        cx.remove("b");
        let opts = FitOptions::new("unet", Metric::F1, ComplexityKind::J);
        assert!(fit_model(&o, &cx, &opts, Execution::Sequential).is_err());
    }

    #[test]
    fn complete_theta_uses_alpha_squared() {
        let mut o = vec![obs("a", 0.5, 1.0, 0.5)];
        o[0].theta = None;
        complete_theta(&mut o, 1000.0);
        assert_eq!(o[0].theta, Some(250.0));
    }

    #[test]
    fn parse_metric_and_kind() {
        assert_eq!("F1".parse::<Metric>().unwrap(), Metric::F1);
        assert_eq!("iu".parse::<Metric>().unwrap(), Metric::Iu);
        assert!("auc".parse::<Metric>().is_err());
        assert_eq!("jb".parse::<ComplexityKind>().unwrap(), ComplexityKind::Jb);
    }
}
