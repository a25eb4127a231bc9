//! Convolutional architecture descriptions, weight counting and channel
//! multipliers.
//!
//! Weights are counted per layer as `in * kw * kh * out` with biases
//! ignored. Layers may concatenate several producers (skip connections); a
//! layer's input channel count must equal the sum of its producers' outputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNET_PRESET: &str = include_str!("../presets/unet.arch");

pub const DEFAULT_BYTES_PER_WEIGHT: u64 = 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub index: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_w: usize,
    pub kernel_h: usize,
    /// Binds the layer to the complexity measured at Input/2^k.
    pub scale_index: usize,
    /// Exempt from channel multiplication.
    pub frozen: bool,
    /// Producer layers whose outputs are concatenated; empty = network input.
    pub inputs: Vec<usize>,
}

impl ConvLayer {
    pub fn weights(&self) -> u64 {
        (self.in_channels * self.kernel_w * self.kernel_h * self.out_channels) as u64
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub name: String,
    pub layers: Vec<ConvLayer>,
    pub bytes_per_weight: u64,
}

/// Per-layer channel multipliers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "alphas")]
pub enum MultiplierAssignment {
    Uniform(f64),
    /// Keyed by scale index.
    PerScale(BTreeMap<usize, f64>),
    /// Keyed by layer index.
    PerLayer(BTreeMap<usize, f64>),
}

impl MultiplierAssignment {
    pub fn per_scale(alphas: &[f64]) -> Self {
        Self::PerScale(alphas.iter().copied().enumerate().collect())
    }

    pub fn alpha_for(&self, layer: &ConvLayer) -> Option<f64> {
        match self {
            Self::Uniform(a) => Some(*a),
            Self::PerScale(m) => m.get(&layer.scale_index).copied(),
            Self::PerLayer(m) => m.get(&layer.index).copied(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |a: f64| !(a > 0.0 && a <= 1.0);
        let offending = match self {
            Self::Uniform(a) => bad(*a).then_some(*a),
            Self::PerScale(m) | Self::PerLayer(m) => m.values().copied().find(|&a| bad(a)),
        };
        match offending {
            Some(a) => Err(Error::arg(format!("multiplier {a} outside (0, 1]"))),
            None => Ok(()),
        }
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

impl ArchitectureSpec {
    /// The bundled full U-Net (23 conv layers).
    pub fn unet() -> Self {
        parse_architecture(UNET_PRESET).expect("bundled preset parses")
    }

    pub fn total_weights(&self) -> u64 {
        total_weights(self)
    }

    pub fn log10_weights(&self) -> f64 {
        (total_weights(self) as f64).log10()
    }

    /// Indices of layers consumed by at least one other layer.
    fn consumed(&self) -> BTreeSet<usize> {
        self.layers.iter().flat_map(|l| l.inputs.iter().copied()).collect()
    }

    /// Scales referenced by multiplied (non-frozen) layers.
    pub fn scales_used(&self) -> BTreeSet<usize> {
        self.layers
            .iter()
            .filter(|l| !l.frozen)
            .map(|l| l.scale_index)
            .collect()
    }

    /// Base weight count of non-frozen layers grouped by scale.
    pub fn weights_by_scale(&self) -> BTreeMap<usize, u64> {
        let mut out = BTreeMap::new();
        for l in self.layers.iter().filter(|l| !l.frozen) {
            *out.entry(l.scale_index).or_insert(0) += l.weights();
        }
        out
    }

    pub fn frozen_weights(&self) -> u64 {
        self.layers.iter().filter(|l| l.frozen).map(ConvLayer::weights).sum()
    }

    /// Weight count with every multiplied layer thinned to one channel: the
    /// smallest network any assignment can produce.
    pub fn minimum_weights(&self) -> u64 {
        apply_multipliers(self, &MultiplierAssignment::Uniform(f64::MIN_POSITIVE))
            .map(|s| s.total_weights())
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.layers.iter().enumerate() {
            if l.index != i {
                return Err(Error::arg(format!("layer at position {i} has index {}", l.index)));
            }
            if l.in_channels == 0 || l.out_channels == 0 || l.kernel_w == 0 || l.kernel_h == 0 {
                return Err(Error::arg(format!("layer {i} has a zero count")));
            }
            if let Some(&p) = l.inputs.iter().find(|&&p| p >= i) {
                return Err(Error::arg(format!(
                    "layer {i} reads from layer {p}, which is not earlier in the list"
                )));
            }
            if !l.inputs.is_empty() {
                let expected: usize = l.inputs.iter().map(|&p| self.layers[p].out_channels).sum();
                if expected != l.in_channels {
                    return Err(Error::Chaining {
                        producer: l.inputs[0],
                        consumer: i,
                        expected,
                        found: l.in_channels,
                    });
                }
            }
        }
        Ok(())
    }

    /// Serialize to the line-oriented architecture format.
    pub fn to_text(&self) -> String {
        let mut s = format!("arch {} bytes_per_weight={}\n", self.name, self.bytes_per_weight);
        for l in &self.layers {
            let _ = write!(
                s,
                "conv {} {} {} {} scale={}",
                l.in_channels, l.out_channels, l.kernel_w, l.kernel_h, l.scale_index
            );
            let default_inputs: Vec<usize> = if l.index == 0 { vec![] } else { vec![l.index - 1] };
            if l.inputs != default_inputs {
                if l.inputs.is_empty() {
                    s.push_str(" from=input");
                } else {
                    let joined: Vec<String> = l.inputs.iter().map(|p| p.to_string()).collect();
                    let _ = write!(s, " from={}", joined.join("+"));
                }
            }
            if l.frozen {
                s.push_str(" frozen");
            }
            s.push('\n');
        }
        s
    }
}

/// Sum of `in * kw * kh * out` over all layers.
pub fn total_weights(spec: &ArchitectureSpec) -> u64 {
    spec.layers.iter().map(ConvLayer::weights).sum()
}

/// Thin every non-frozen layer's output channels to
/// `max(1, round_half_up(alpha * channels))`. Input channels follow the
/// (possibly thinned) producers; network inputs and final outputs keep their
/// counts.
pub fn apply_multipliers(spec: &ArchitectureSpec, assignment: &MultiplierAssignment) -> Result<ArchitectureSpec> {
    spec.validate()?;
    assignment.validate()?;
    let consumed = spec.consumed();
    let mut layers: Vec<ConvLayer> = Vec::with_capacity(spec.layers.len());
    for l in &spec.layers {
        let keep_out = l.frozen || !consumed.contains(&l.index);
        let out_channels = if keep_out {
            l.out_channels
        } else {
            let alpha = assignment
                .alpha_for(l)
                .ok_or_else(|| Error::arg(format!("no multiplier for layer {} (scale {})", l.index, l.scale_index)))?;
            round_half_up(alpha * l.out_channels as f64).max(1)
        };
        let in_channels = if l.inputs.is_empty() {
            l.in_channels
        } else {
            l.inputs.iter().map(|&p| layers[p].out_channels).sum()
        };
        layers.push(ConvLayer {
            in_channels,
            out_channels,
            ..l.clone()
        });
    }
    let out = ArchitectureSpec {
        name: spec.name.clone(),
        layers,
        bytes_per_weight: spec.bytes_per_weight,
    };
    out.validate()?;
    Ok(out)
}

/// Weight budget implied by a byte budget.
pub fn disk_budget_to_weights(budget_bytes: u64, bytes_per_weight: u64) -> Result<u64> {
    if budget_bytes == 0 {
        return Err(Error::arg("budget must be positive"));
    }
    if bytes_per_weight == 0 {
        return Err(Error::arg("bytes_per_weight must be positive"));
    }
    Ok(budget_bytes / bytes_per_weight)
}

fn parse_count(tok: &str, what: &str, line: usize) -> Result<usize> {
    match tok.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("{what} must be a positive integer, got `{tok}`"),
        }),
    }
}

/// Parse the architecture file format:
///
/// ```text
/// arch <name> bytes_per_weight=<n>
/// conv <in> <out> <kw> <kh> scale=<k> [from=<i>[+<j>...]|from=input] [frozen]
/// ```
///
/// `#` starts a comment. Without `from=` a layer reads the previous layer
/// (the first layer reads the network input).
pub fn parse_architecture(text: &str) -> Result<ArchitectureSpec> {
    let mut header: Option<(String, u64)> = None;
    let mut layers = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let perr = |message: String| Error::Parse { line: line_no, message };
        match toks[0] {
            "arch" => {
                if header.is_some() {
                    return Err(perr("duplicate `arch` header".into()));
                }
                let name = toks.get(1).ok_or_else(|| perr("missing architecture name".into()))?;
                let mut bpw = DEFAULT_BYTES_PER_WEIGHT;
                for t in &toks[2..] {
                    match t.strip_prefix("bytes_per_weight=") {
                        Some(v) => bpw = parse_count(v, "bytes_per_weight", line_no)? as u64,
                        None => return Err(perr(format!("unknown header field `{t}`"))),
                    }
                }
                header = Some((name.to_string(), bpw));
            }
            "conv" => {
                if header.is_none() {
                    return Err(perr("`conv` before the `arch` header".into()));
                }
                if toks.len() < 6 {
                    return Err(perr("expected `conv <in> <out> <kw> <kh> scale=<k>`".into()));
                }
                let index = layers.len();
                let in_channels = parse_count(toks[1], "in_channels", line_no)?;
                let out_channels = parse_count(toks[2], "out_channels", line_no)?;
                let kernel_w = parse_count(toks[3], "kernel width", line_no)?;
                let kernel_h = parse_count(toks[4], "kernel height", line_no)?;
                let mut scale_index = None;
                let mut frozen = false;
                let mut inputs = if index == 0 { vec![] } else { vec![index - 1] };
                for t in &toks[5..] {
                    if let Some(v) = t.strip_prefix("scale=") {
                        scale_index = Some(v.parse::<usize>().map_err(|_| perr(format!("bad scale `{v}`")))?);
                    } else if let Some(v) = t.strip_prefix("from=") {
                        inputs = if v == "input" {
                            vec![]
                        } else {
                            v.split('+')
                                .map(|p| p.parse::<usize>().map_err(|_| perr(format!("bad producer `{p}`"))))
                                .collect::<Result<_>>()?
                        };
                    } else if *t == "frozen" {
                        frozen = true;
                    } else {
                        return Err(perr(format!("unknown layer field `{t}`")));
                    }
                }
                let scale_index = scale_index.ok_or_else(|| perr("missing scale=<k>".into()))?;
                layers.push(ConvLayer {
                    index,
                    in_channels,
                    out_channels,
                    kernel_w,
                    kernel_h,
                    scale_index,
                    frozen,
                    inputs,
                });
            }
            other => return Err(perr(format!("unknown directive `{other}`"))),
        }
    }
    let (name, bytes_per_weight) = header.ok_or(Error::Parse {
        line: 0,
        message: "missing `arch` header".into(),
    })?;
    let spec = ArchitectureSpec {
        name,
        layers,
        bytes_per_weight,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(in_c: usize, out_c: usize) -> ArchitectureSpec {
        parse_architecture(&format!("arch t bytes_per_weight=4\nconv {in_c} {out_c} 3 3 scale=0\n")).unwrap()
    }

    #[test]
    fn single_layer_weights() {
        let s = single(64, 128);
        assert_eq!(s.layers.len(), 1);
        assert_eq!(total_weights(&s), 73_728);
    }

    #[test]
    fn empty_spec_has_no_weights() {
        let s = parse_architecture("arch empty\n").unwrap();
        assert_eq!(total_weights(&s), 0);
        assert_eq!(s.bytes_per_weight, 4);
    }

    #[test]
    fn unet_preset_shape_and_size() {
        let u = ArchitectureSpec::unet();
        assert_eq!(u.layers.len(), 23);
        assert_eq!(u.layers.iter().filter(|l| l.frozen).count(), 1);
        assert_eq!(u.layers.iter().filter(|l| l.kernel_w == 2).count(), 4);
        assert!((u.log10_weights() - 7.492).abs() < 0.02, "{}", u.log10_weights());
    }

    #[test]
    fn chaining_error_names_layers() {
        let err = parse_architecture("arch t\nconv 3 8 3 3 scale=0\nconv 9 8 3 3 scale=0\n").unwrap_err();
        match err {
            Error::Chaining {
                producer,
                consumer,
                expected,
                found,
            } => assert_eq!((producer, consumer, expected, found), (0, 1, 8, 9)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_architecture("arch t\n\nconv 3 x 3 3 scale=0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        assert!(parse_architecture("conv 3 8 3 3 scale=0\n").is_err());
        assert!(parse_architecture("arch t\nconv 3 8 3 3\n").is_err());
        assert!(parse_architecture("arch t\nconv 3 8 3 3 scale=0 from=4\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let u = ArchitectureSpec::unet();
        assert_eq!(parse_architecture(&u.to_text()).unwrap(), u);
    }

    #[test]
    fn identity_multiplier() {
        let u = ArchitectureSpec::unet();
        assert_eq!(apply_multipliers(&u, &MultiplierAssignment::Uniform(1.0)).unwrap(), u);
    }

    #[test]
    fn uniform_half_quarters_weights() {
        let u = ArchitectureSpec::unet();
        let h = apply_multipliers(&u, &MultiplierAssignment::Uniform(0.5)).unwrap();
        let r = h.total_weights() as f64 / u.total_weights() as f64;
        assert!((0.24..=0.26).contains(&r), "{r}");
        // network input and classifier output untouched
        assert_eq!(h.layers[0].in_channels, 1);
        assert_eq!(h.layers[22].out_channels, 2);
        assert_eq!(h.layers[22].in_channels, 32);
    }

    #[test]
    fn per_scale_encoder_channels() {
        let u = ArchitectureSpec::unet();
        let m = MultiplierAssignment::per_scale(&[0.472, 0.300, 0.228, 0.166, 0.116]);
        let s = apply_multipliers(&u, &m).unwrap();
        let enc: Vec<usize> = s.layers[..10].iter().map(|l| l.out_channels).collect();
        let table = [30, 30, 39, 39, 59, 59, 85, 85, 119, 119];
        for (got, want) in enc.iter().zip(table) {
            assert!(got.abs_diff(want) <= 1, "{enc:?}");
        }
        // skip concatenation follows both producers
        assert_eq!(
            s.layers[11].in_channels,
            s.layers[10].out_channels + s.layers[7].out_channels
        );
    }

    #[test]
    fn missing_and_invalid_multipliers() {
        let u = ArchitectureSpec::unet();
        assert!(apply_multipliers(&u, &MultiplierAssignment::per_scale(&[0.5, 0.5])).is_err());
        assert!(apply_multipliers(&u, &MultiplierAssignment::Uniform(0.0)).is_err());
        assert!(apply_multipliers(&u, &MultiplierAssignment::Uniform(1.2)).is_err());
    }

    #[test]
    fn channel_floor_is_one() {
        let u = ArchitectureSpec::unet();
        let s = apply_multipliers(&u, &MultiplierAssignment::Uniform(1e-9)).unwrap();
        assert!(s.layers[..22].iter().all(|l| l.out_channels == 1));
        assert_eq!(u.minimum_weights(), s.total_weights());
    }

    #[test]
    fn budget_conversion() {
        assert_eq!(disk_budget_to_weights(1 << 20, 4).unwrap(), 262_144);
        assert_eq!(disk_budget_to_weights(1 << 20, 8).unwrap(), 131_072);
        assert_eq!(disk_budget_to_weights(100, 4).unwrap(), 25);
        assert!(disk_budget_to_weights(0, 4).is_err());
    }
}
