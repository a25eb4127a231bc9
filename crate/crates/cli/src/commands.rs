use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ccplan_core::complexity::{profile_dataset, DatasetProfile, Sample, DEFAULT_OMEGA_STEP};
use ccplan_core::degradation::{
    complete_theta, fit_fast, fit_model, predict_accuracy, AccuracyObservation, ComplexityKind, DatasetComplexity,
    DegradationModel, FitOptions, Metric,
};
use ccplan_core::imaging::{decode_image, resize_square, MaskImage};
use ccplan_core::planner::{build_plan, reduction_report, scale_complexities, Constraint, Mode};
use ccplan_core::Execution;
use serde::Deserialize;

use crate::files::*;
use crate::{ComplexityArg, ComplexityArgs, FitArgs, MetricArg, ModeArg, PlanArgs, PredictArgs};

/// Input rejected before any computation.
#[derive(Debug)]
pub struct ValidationError(pub String);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(msg.into()).into()
}

/// Targets this close above the base log10 weight count are read as the base.
const BASE_SNAP: f64 = 5e-4;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// Working resolution used for well-known datasets, else 512.
pub fn default_resolution(name: &str) -> usize {
    let n = name.to_ascii_lowercase();
    if n.contains("chase") {
        976
    } else if n.contains("drive") {
        512
    } else if n.contains("melanoma") || n.contains("isic") || n.contains("wing") {
        320
    } else if n.contains("lymph") {
        224
    } else {
        512
    }
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list `{}`", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    out.sort();
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn relative(p: &Path, root: &Path) -> String {
    p.strip_prefix(root).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

pub fn complexity(args: &ComplexityArgs) -> Result<()> {
    if args.scales == 0 {
        return Err(invalid("--scales must be at least 1"));
    }
    let root = &args.dir;
    let name = match &args.name {
        Some(n) => n.clone(),
        None => root
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "dataset".into()),
    };
    let image_dir = if root.join("images").is_dir() {
        root.join("images")
    } else {
        root.clone()
    };
    let images = list_images(&image_dir)?;
    if images.is_empty() {
        return Err(invalid(format!("no images found in `{}`", image_dir.display())));
    }
    let mask_dir = args
        .masks
        .clone()
        .or_else(|| Some(root.join("masks")).filter(|d| d.is_dir()));
    let masks: Option<BTreeMap<String, PathBuf>> = match &mask_dir {
        Some(d) => Some(list_images(d)?.into_iter().map(|p| (stem(&p), p)).collect()),
        None => None,
    };
    if let Some(m) = &masks {
        let missing: Vec<String> = images.iter().map(|p| stem(p)).filter(|s| !m.contains_key(s)).collect();
        if !missing.is_empty() {
            return Err(invalid(format!("no mask for image(s) {}", missing.join(", "))));
        }
        let wanted: BTreeSet<String> = images.iter().map(|p| stem(p)).collect();
        let extra: Vec<&String> = m.keys().filter(|k| !wanted.contains(*k)).collect();
        if !extra.is_empty() {
            return Err(invalid(format!(
                "mask(s) without an image: {}",
                extra.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            )));
        }
    }
    let resolution = match args.resize {
        Some(0) => None,
        Some(w) => Some(w),
        None => Some(default_resolution(&name)),
    };

    let mut inputs = Vec::new();
    let mut samples = Vec::new();
    for path in &images {
        let (bytes, mut hash) = read_hashed(path)?;
        hash.path = relative(path, root);
        inputs.push(hash);
        let mut image = decode_image(&bytes).with_context(|| format!("in `{}`", path.display()))?;
        if let Some(w) = resolution {
            image = resize_square(&image, w)?;
        }
        let mask = match &masks {
            Some(m) => {
                let mpath = &m[&stem(path)];
                let (mbytes, mut mhash) = read_hashed(mpath)?;
                mhash.path = relative(mpath, root);
                inputs.push(mhash);
                let raster = decode_image(&mbytes).with_context(|| format!("in `{}`", mpath.display()))?;
                let mask = MaskImage::from_raster(&raster);
                Some(mask.resize_nearest(image.width(), image.height())?)
            }
            None => None,
        };
        samples.push(Sample {
            id: stem(path),
            image,
            mask,
        });
    }
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let profile = profile_dataset(&name, &samples, args.scales, exec)?;

    let config = RunConfig {
        working_resolution: resolution,
        num_scales: args.scales,
        omega_grid_step: DEFAULT_OMEGA_STEP,
        bytes_per_weight: ccplan_core::archmodel::DEFAULT_BYTES_PER_WEIGHT,
        output_dir: args.out_dir.clone(),
    };
    let out = args.out_dir.join(format!("{name}.profile.json"));
    write_json(
        &out,
        &ProfileDocument {
            profile: profile.clone(),
            provenance: Some(Provenance::new(Some(config), inputs)),
        },
    )?;

    println!(
        "dataset {name}: {} image(s), working resolution {}",
        profile.num_images,
        resolution
            .map(|w| format!("{w}x{w}"))
            .unwrap_or_else(|| "native".into())
    );
    let with_b = profile.b().is_some();
    println!(
        "{:<12} {:>10}{}",
        "scale",
        "J",
        if with_b { format!(" {:>10}", "B") } else { String::new() }
    );
    for s in &profile.scales {
        let label = if s.scale_index == 0 {
            "Input".to_string()
        } else {
            format!("Input/2^{}", s.scale_index)
        };
        let b = s.b.map(|b| format!(" {:>10}", sig6(b))).unwrap_or_default();
        println!("{label:<12} {:>10}{b}", sig6(s.j));
    }
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Debug, Deserialize)]
struct ObservationRow {
    dataset: String,
    alpha: f64,
    theta: Option<f64>,
    metric: String,
    value: f64,
}

fn metric_of(m: MetricArg) -> Metric {
    match m {
        MetricArg::F1 => Metric::F1,
        MetricArg::Iu => Metric::Iu,
    }
}

fn read_observations(path: &Path) -> Result<(Vec<AccuracyObservation>, InputHash)> {
    let (bytes, hash) = read_hashed(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let headers = reader.headers()?.clone();
    for col in ["dataset", "alpha", "theta", "metric", "value"] {
        if !headers.iter().any(|h| h == col) {
            return Err(invalid(format!("`{}`: missing column `{col}`", path.display())));
        }
    }
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<ObservationRow>().enumerate() {
        // header is line 1
        let line = i + 2;
        let row = row.map_err(|e| invalid(format!("`{}` line {line}: {e}", path.display())))?;
        let metric: Metric = row
            .metric
            .parse()
            .map_err(|e| invalid(format!("`{}` line {line}: {e}", path.display())))?;
        let obs = AccuracyObservation {
            dataset: row.dataset,
            alpha: row.alpha,
            theta: row.theta,
            metric,
            value: row.value,
        };
        obs.validate()
            .map_err(|e| invalid(format!("`{}` line {line}: {e}", path.display())))?;
        out.push(obs);
    }
    if out.is_empty() {
        return Err(invalid(format!("`{}` has no observations", path.display())));
    }
    Ok((out, hash))
}

fn load_profile(path: &Path) -> Result<(DatasetProfile, InputHash)> {
    let (doc, hash): (ProfileDocument, _) = read_json(path)?;
    doc.profile
        .validate()
        .with_context(|| format!("in `{}`", path.display()))?;
    Ok((doc.profile, hash))
}

fn load_model(path: &Path) -> Result<(DegradationModel, InputHash)> {
    let (doc, hash): (ModelDocument, _) = read_json(path)?;
    Ok((doc.model, hash))
}

pub fn fit(args: &FitArgs) -> Result<()> {
    if !(args.omega_step > 0.0 && args.omega_step <= 1.0) {
        return Err(invalid("--omega-step must lie in (0, 1]"));
    }
    let (spec, arch_hash) = load_architecture(&args.arch)?;
    let (mut observations, csv_hash) = read_observations(&args.observations)?;
    let base_theta = spec.total_weights() as f64;
    complete_theta(&mut observations, base_theta);

    let metric = metric_of(args.metric);
    let kind = match args.complexity {
        ComplexityArg::J => ComplexityKind::J,
        ComplexityArg::Jb => ComplexityKind::Jb,
    };
    let mut inputs = vec![csv_hash, arch_hash];
    let mut complexities = BTreeMap::new();
    for p in &args.profiles {
        let (profile, hash) = load_profile(p)?;
        inputs.push(hash);
        let input = &profile.scales[0];
        complexities.insert(profile.name.clone(), DatasetComplexity { j: input.j, b: input.b });
    }
    let used: BTreeSet<&str> = observations
        .iter()
        .filter(|o| o.metric == metric)
        .map(|o| o.dataset.as_str())
        .collect();
    if used.is_empty() {
        return Err(invalid(format!(
            "no {metric} observations in `{}`",
            args.observations.display()
        )));
    }
    let uncovered: Vec<&str> = used
        .iter()
        .copied()
        .filter(|d| !complexities.contains_key(*d))
        .collect();
    if !uncovered.is_empty() {
        return Err(invalid(format!("no profile for dataset(s) {}", uncovered.join(", "))));
    }

    let mut options = FitOptions::new(&spec.name, metric, kind);
    options.omega_step = args.omega_step;
    options.base_log_theta = Some(base_theta.log10());
    let model = if args.fast {
        fit_fast(&observations, &complexities, &options, Execution::Parallel)?
    } else {
        fit_model(&observations, &complexities, &options, Execution::Parallel)?
    };

    let config = RunConfig {
        working_resolution: None,
        num_scales: 1,
        omega_grid_step: args.omega_step,
        bytes_per_weight: spec.bytes_per_weight,
        output_dir: args.out_dir.clone(),
    };
    let out = args.out.clone().unwrap_or_else(|| {
        args.out_dir
            .join(format!("{}-{}-{}.model.json", spec.name, metric, kind))
    });
    write_json(
        &out,
        &ModelDocument {
            model: model.clone(),
            provenance: Some(Provenance::new(Some(config), inputs)),
        },
    )?;

    println!(
        "{} {} degradation ({}{}): lambda = {}, delta = {}, R^2 = {}",
        model.architecture,
        model.metric,
        model.complexity_kind,
        if model.fast { ", fast" } else { "" },
        sig6(model.lambda),
        sig6(model.delta),
        sig6(model.r2)
    );
    if let Some(w) = model.omega {
        println!("omega = {}", sig6(w));
    }
    println!("{:<16} {:>10} {:>10} {:>10}", "dataset", "C", "slope", "R^2");
    for d in &model.datasets {
        println!(
            "{:<16} {:>10} {:>10} {:>10}",
            d.dataset,
            sig6(d.complexity),
            sig6(d.slope),
            sig6(d.r2)
        );
    }
    for w in &model.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn check_model_profile(model: &DegradationModel, profile: &DatasetProfile) -> Result<()> {
    if model.complexity_kind == ComplexityKind::Jb && profile.b().is_none() {
        return Err(invalid(format!(
            "model uses JB but profile `{}` has no foreground density",
            profile.name
        )));
    }
    Ok(())
}

pub fn plan(args: &PlanArgs) -> Result<()> {
    let (mut spec, arch_hash) = load_architecture(&args.arch)?;
    if let Some(b) = args.bytes_per_weight {
        if b == 0 {
            return Err(invalid("--bytes-per-weight must be positive"));
        }
        spec.bytes_per_weight = b;
    }
    let (profile, profile_hash) = load_profile(&args.profile)?;
    let (model, model_hash) = load_model(&args.model)?;
    check_model_profile(&model, &profile)?;
    let mode = match args.mode {
        ModeArg::Uniform => Mode::Uniform,
        ModeArg::LayerWise => Mode::LayerWise,
    };
    let constraint = match (args.disk_budget, args.memory_budget, args.min_accuracy) {
        (Some(b), None, None) => Constraint::disk(b, mode),
        (None, Some(b), None) => Constraint::memory(b, mode),
        (None, None, Some(f)) => Constraint::accuracy_floor(f, mode),
        _ => bail!(invalid(
            "give exactly one of --disk-budget, --memory-budget, --min-accuracy"
        )),
    };
    constraint.validate()?;
    let plan = build_plan(&spec, &profile, &model, &constraint)?;

    let mode_label = match mode {
        Mode::Uniform => "uniform",
        Mode::LayerWise => "layer-wise",
    };
    let stem = format!("{}.{}.{}", spec.name, profile.name, mode_label);
    let arch_out = args.out_dir.join(format!("{stem}.plan.arch"));
    let json_out = args.out_dir.join(format!("{stem}.plan.json"));
    write_text(&arch_out, &plan.to_arch_text())?;
    let config = RunConfig {
        working_resolution: None,
        num_scales: profile.num_scales(),
        omega_grid_step: DEFAULT_OMEGA_STEP,
        bytes_per_weight: spec.bytes_per_weight,
        output_dir: args.out_dir.clone(),
    };
    write_json(
        &json_out,
        &PlanDocument {
            plan: plan.clone(),
            provenance: Provenance::new(Some(config), vec![arch_hash, profile_hash, model_hash]),
        },
    )?;

    println!("{:<24} {:>12} {:>10}", "method", "accuracy", "log10 θ");
    let base_acc = args.base_accuracy.map(|a| sig6(a)).unwrap_or_else(|| "1".into());
    println!(
        "{:<24} {:>12} {:>10}",
        "base",
        base_acc,
        format!("{:.3}", plan.log10_theta_base)
    );
    let predicted = match args.base_accuracy {
        Some(a) => sig6(a * plan.predicted_accuracy),
        None => sig6(plan.predicted_accuracy),
    };
    println!(
        "{:<24} {:>12} {:>10}",
        format!("{mode_label} multiplier"),
        format!("{predicted}{}", if plan.prediction_is_estimate { "*" } else { "" }),
        format!("{:.3}", plan.log10_theta_achieved)
    );
    let alphas: Vec<String> = plan.alphas.iter().map(|(k, a)| format!("{k}:{}", sig6(*a))).collect();
    println!("alpha by scale: {}", alphas.join(" "));
    let channels: Vec<String> = plan.channels.iter().map(|c| c.to_string()).collect();
    println!("channels: {}", channels.join(" "));
    println!(
        "weights: {} of {} (reduction {}x), target {}",
        plan.theta_star_achieved,
        plan.theta_base,
        sig6(reduction_report(&spec, &plan)),
        sig6(plan.theta_star_target)
    );
    if plan.prediction_is_estimate {
        println!("* layer-wise prediction averages per-scale drops weighted by weight share");
    }
    for w in &plan.diagnostics.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {} and {}", arch_out.display(), json_out.display());
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let (model, _) = load_model(&args.model)?;
    let (profile, _) = load_profile(&args.profile)?;
    check_model_profile(&model, &profile)?;
    let base = match (args.base_log_theta, model.base_log_theta) {
        (Some(b), _) | (None, Some(b)) => b,
        (None, None) => ccplan_core::archmodel::ArchitectureSpec::unet().log10_weights(),
    };
    let c = scale_complexities(&profile, &model)?[&0];
    let a_base = args.base_accuracy.unwrap_or(1.0);
    if !(a_base > 0.0 && a_base <= 1.0) {
        return Err(invalid("--base-accuracy must lie in (0, 1]"));
    }
    println!(
        "dataset {} (C = {}), base log10 θ = {}",
        profile.name,
        sig6(c),
        sig6(base)
    );
    println!(
        "{:>10} {:>12}",
        "log10 θ",
        if args.base_accuracy.is_some() {
            "accuracy"
        } else {
            "relative"
        }
    );
    for &t in &args.log_theta {
        // sizes typed from a rounded report may sit just above the base
        let t = if t > base && t - base <= BASE_SNAP { base } else { t };
        let p = predict_accuracy(&model, c, base, t, a_base)?;
        println!(
            "{:>10} {:>12}{}",
            sig6(t),
            sig6(p.value),
            if p.clamped { " (clamped)" } else { "" }
        );
    }
    Ok(())
}
