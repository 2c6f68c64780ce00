//! Forward pass of a small convolutional feature extractor.
//!
//! A network is an ordered list of 3×3 convolutions (stride 1, zero padding 1),
//! ReLUs and 2×2 max-pools. The default topology is the front of VGG-16:
//! `conv(c→64), relu, conv(64→64), relu, maxpool2`. Inference runs in `f32`;
//! callers accumulate distortions in `f64`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frame::{zero_pad_block, Block};

/// Blocks narrower or shorter than this are zero-padded before the forward pass.
pub const MIN_FEATURE_SIDE: usize = 8;

/// Channel count of the default (VGG-16 front) topology.
pub const VGG_WIDTH: usize = 64;

/// A `width × height × channels` tensor, channel-major, row-major inside a channel.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub values: Vec<f32>,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, channels: usize, values: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::ShapeMismatch(format!(
                "empty feature map {width}x{height}x{channels}"
            )));
        }
        if values.len() != width * height * channels {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {width}x{height}x{channels} map",
                values.len()
            )));
        }
        Ok(FeatureMap {
            width,
            height,
            channels,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        FeatureMap {
            width,
            height,
            channels,
            values: vec![0.0; width * height * channels],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.values[(c * self.height + y) * self.width + x]
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.values[c * n..(c + 1) * n]
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    /// `out × in × 3 × 3` taps in `(out, in, ky, kx)` order.
    pub kernel: Vec<f32>,
    pub bias: Vec<f32>,
}

impl ConvLayer {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 {
            return Err(Error::ShapeMismatch("conv with zero channels".into()));
        }
        if kernel.len() != out_channels * in_channels * 9 {
            return Err(Error::ShapeMismatch(format!(
                "conv {in_channels}->{out_channels} needs {} taps, got {}",
                out_channels * in_channels * 9,
                kernel.len()
            )));
        }
        if bias.len() != out_channels {
            return Err(Error::ShapeMismatch(format!(
                "conv {in_channels}->{out_channels} needs {out_channels} biases, got {}",
                bias.len()
            )));
        }
        Ok(ConvLayer {
            in_channels,
            out_channels,
            kernel,
            bias,
        })
    }

    /// Center tap `scale` on the channel diagonal, zero elsewhere.
    pub fn scaled_identity(channels: usize, scale: f32) -> Self {
        let mut kernel = vec![0.0; channels * channels * 9];
        for c in 0..channels {
            kernel[(c * channels + c) * 9 + 4] = scale;
        }
        ConvLayer {
            in_channels: channels,
            out_channels: channels,
            kernel,
            bias: vec![0.0; channels],
        }
    }

    #[inline]
    fn taps(&self, out: usize, inp: usize) -> &[f32] {
        let start = (out * self.in_channels + inp) * 9;
        &self.kernel[start..start + 9]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Conv(ConvLayer),
    Relu,
    MaxPool2,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layer::Conv(c) => write!(f, "conv {} {}", c.in_channels, c.out_channels),
            Layer::Relu => f.write_str("relu"),
            Layer::MaxPool2 => f.write_str("maxpool2"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    input_channels: usize,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(input_channels: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_channels == 0 {
            return Err(Error::ShapeMismatch("network with zero input channels".into()));
        }
        let mut channels = input_channels;
        for layer in &layers {
            if let Layer::Conv(conv) = layer {
                if conv.in_channels != channels {
                    return Err(Error::ChannelMismatch {
                        expected: conv.in_channels,
                        found: channels,
                    });
                }
                channels = conv.out_channels;
            }
        }
        Ok(Network {
            input_channels,
            layers,
        })
    }

    /// A single 1→1 convolution with a unit center tap: ψ equals the block
    /// scaled by 1/255.
    pub fn identity() -> Self {
        Network {
            input_channels: 1,
            layers: vec![Layer::Conv(ConvLayer::scaled_identity(1, 1.0))],
        }
    }

    pub fn input_channels(&self) -> usize {
        self.input_channels
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn output_channels(&self) -> usize {
        self.layers
            .iter()
            .rev()
            .find_map(|l| match l {
                Layer::Conv(c) => Some(c.out_channels),
                _ => None,
            })
            .unwrap_or(self.input_channels)
    }

    /// Appends a conv that multiplies every output channel by `scale`.
    pub fn with_output_scale(mut self, scale: f32) -> Self {
        let c = self.output_channels();
        self.layers
            .push(Layer::Conv(ConvLayer::scaled_identity(c, scale)));
        self
    }

    /// Feature map shape for a `w × h` block, after the minimum-size padding.
    pub fn output_shape(&self, w: usize, h: usize) -> Result<(usize, usize, usize)> {
        let (mut w, mut h) = (w.max(MIN_FEATURE_SIDE), h.max(MIN_FEATURE_SIDE));
        for layer in &self.layers {
            if let Layer::MaxPool2 = layer {
                if w < 2 || h < 2 {
                    return Err(Error::PoolTooSmall { w, h });
                }
                w /= 2;
                h /= 2;
            }
        }
        Ok((w, h, self.output_channels()))
    }

    pub fn forward(&self, input: FeatureMap) -> Result<FeatureMap> {
        let mut x = input;
        for layer in &self.layers {
            x = match layer {
                Layer::Conv(conv) => conv2d(&x, conv)?,
                Layer::Relu => relu(x),
                Layer::MaxPool2 => maxpool2(&x)?,
            };
        }
        Ok(x)
    }
}

/// 3×3 convolution, stride 1, zero padding 1.
///
/// `out(x,y,o) = bias(o) + Σ_{i,dx,dy} k(o,i,dy,dx)·in(x+dx−1, y+dy−1, i)`.
/// Taps are accumulated in fixed (in, ky, kx) order, row by row.
pub fn conv2d(input: &FeatureMap, layer: &ConvLayer) -> Result<FeatureMap> {
    if input.channels != layer.in_channels {
        return Err(Error::ChannelMismatch {
            expected: layer.in_channels,
            found: input.channels,
        });
    }
    let (w, h) = (input.width, input.height);
    // Planes are zero-padded by one sample on every side, and outputs are
    // accumulated at the padded stride so each tap is one contiguous pass.
    let (pw, ph) = (w + 2, h + 2);
    let mut padded = vec![0.0f32; pw * ph * layer.in_channels];
    for i in 0..layer.in_channels {
        let plane = input.plane(i);
        let dst = &mut padded[i * pw * ph..(i + 1) * pw * ph];
        for y in 0..h {
            dst[(y + 1) * pw + 1..(y + 1) * pw + 1 + w].copy_from_slice(&plane[y * w..(y + 1) * w]);
        }
    }
    let span = (h - 1) * pw + w;
    let mut acc = vec![0.0f32; span];
    let mut values = Vec::with_capacity(w * h * layer.out_channels);
    for o in 0..layer.out_channels {
        acc.fill(layer.bias[o]);
        for i in 0..layer.in_channels {
            let plane = &padded[i * pw * ph..(i + 1) * pw * ph];
            for (t, &k) in layer.taps(o, i).iter().enumerate() {
                if k == 0.0 {
                    continue;
                }
                let off = (t / 3) * pw + t % 3;
                for (d, &s) in acc.iter_mut().zip(&plane[off..off + span]) {
                    *d += k * s;
                }
            }
        }
        for y in 0..h {
            values.extend_from_slice(&acc[y * pw..y * pw + w]);
        }
    }
    Ok(FeatureMap {
        width: w,
        height: h,
        channels: layer.out_channels,
        values,
    })
}

pub fn relu(mut input: FeatureMap) -> FeatureMap {
    for v in &mut input.values {
        *v = v.max(0.0);
    }
    input
}

/// 2×2 windows, stride 2; a trailing odd row or column is dropped.
pub fn maxpool2(input: &FeatureMap) -> Result<FeatureMap> {
    let (w, h) = (input.width, input.height);
    if w < 2 || h < 2 {
        return Err(Error::PoolTooSmall { w, h });
    }
    let (ow, oh) = (w / 2, h / 2);
    let mut values = Vec::with_capacity(ow * oh * input.channels);
    for c in 0..input.channels {
        let p = input.plane(c);
        for y in 0..oh {
            let r0 = &p[2 * y * w..];
            let r1 = &p[(2 * y + 1) * w..];
            for x in 0..ow {
                let m = r0[2 * x].max(r0[2 * x + 1]).max(r1[2 * x]).max(r1[2 * x + 1]);
                values.push(m);
            }
        }
    }
    Ok(FeatureMap {
        width: ow,
        height: oh,
        channels: input.channels,
        values,
    })
}

/// Runs `net` on a pixel block.
///
/// Samples are scaled to `[0, 1]`, replicated across the network's input
/// channels, and zero-padded to at least 8×8 before the forward pass.
pub fn extract_features(block: &Block, net: &Network) -> Result<FeatureMap> {
    let padded;
    let block = if block.width < MIN_FEATURE_SIDE || block.height < MIN_FEATURE_SIDE {
        padded = zero_pad_block(
            block,
            block.width.max(MIN_FEATURE_SIDE),
            block.height.max(MIN_FEATURE_SIDE),
        )?;
        &padded
    } else {
        block
    };
    let plane: Vec<f32> = block.samples.iter().map(|&s| s as f32 / 255.0).collect();
    let channels = net.input_channels();
    let mut values = Vec::with_capacity(plane.len() * channels);
    for _ in 0..channels {
        values.extend_from_slice(&plane);
    }
    let input = FeatureMap {
        width: block.width,
        height: block.height,
        channels,
        values,
    };
    net.forward(input)
}

/// Default topology with weights from a fixed generator.
///
/// Taps are drawn from ChaCha8 seeded with `seed` (`seed_from_u64`), uniform
/// in `±sqrt(6 / (9·in_channels))`; biases uniform in `±0.01`. Layers are
/// filled in order, taps before biases.
pub fn seeded_test_network(seed: u64, in_channels: usize) -> Network {
    seeded_network(seed, in_channels, VGG_WIDTH)
}

/// [`seeded_test_network`] with `width` channels instead of 64.
pub fn seeded_network(seed: u64, in_channels: usize, width: usize) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut conv = |cin: usize, cout: usize| {
        let bound = (6.0 / (9.0 * cin as f64)).sqrt() as f32;
        let kernel = (0..cin * cout * 9)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        let bias = (0..cout).map(|_| rng.gen_range(-0.01f32..0.01)).collect();
        Layer::Conv(ConvLayer {
            in_channels: cin,
            out_channels: cout,
            kernel,
            bias,
        })
    };
    let layers = vec![
        conv(in_channels, width),
        Layer::Relu,
        conv(width, width),
        Layer::Relu,
        Layer::MaxPool2,
    ];
    Network {
        input_channels: in_channels,
        layers,
    }
}

/// Reads a text manifest plus its binary blob.
///
/// Manifest lines: `blob <path>` (relative to the manifest's directory),
/// `conv <in> <out>`, `relu`, `maxpool2`. `#` starts a comment. The blob is
/// little-endian `f32`: for each conv in order, its taps in `(out, in, ky, kx)`
/// order followed by its biases.
pub fn load_weights(manifest_path: impl AsRef<Path>) -> Result<Network> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let mut blob_path: Option<PathBuf> = None;
    let mut specs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::Manifest(format!("line {}: cannot parse {raw:?}", lineno + 1));
        match fields.as_slice() {
            ["blob", p] => {
                let base = manifest_path.parent().unwrap_or(Path::new("."));
                blob_path = Some(base.join(p));
            }
            ["conv", i, o] => {
                let i: usize = i.parse().map_err(|_| bad())?;
                let o: usize = o.parse().map_err(|_| bad())?;
                specs.push(LayerSpec::Conv(i, o));
            }
            ["relu"] => specs.push(LayerSpec::Relu),
            ["maxpool2"] => specs.push(LayerSpec::MaxPool2),
            _ => return Err(bad()),
        }
    }
    let input_channels = specs
        .iter()
        .find_map(|s| match s {
            LayerSpec::Conv(i, _) => Some(*i),
            _ => None,
        })
        .ok_or_else(|| Error::Manifest("no conv layer declared".into()))?;
    let blob_path = blob_path.ok_or_else(|| Error::Manifest("no blob line".into()))?;
    let bytes = fs::read(&blob_path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => {
            Error::Manifest(format!("missing blob {}", blob_path.display()))
        }
        _ => Error::io(&blob_path, e),
    })?;
    if bytes.len() % 4 != 0 {
        return Err(Error::ShapeMismatch(format!(
            "blob length {} is not a multiple of 4",
            bytes.len()
        )));
    }
    let floats: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    if let Some(i) = floats.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteWeight(i));
    }
    let needed: usize = specs
        .iter()
        .map(|s| match s {
            LayerSpec::Conv(i, o) => o * i * 9 + o,
            _ => 0,
        })
        .sum();
    if floats.len() != needed {
        return Err(Error::ShapeMismatch(format!(
            "manifest declares {needed} floats, blob holds {}",
            floats.len()
        )));
    }
    let mut rest = floats.as_slice();
    let mut layers = Vec::with_capacity(specs.len());
    for spec in specs {
        layers.push(match spec {
            LayerSpec::Conv(i, o) => {
                let (taps, tail) = rest.split_at(o * i * 9);
                let (bias, tail) = tail.split_at(o);
                rest = tail;
                Layer::Conv(ConvLayer::new(i, o, taps.to_vec(), bias.to_vec())?)
            }
            LayerSpec::Relu => Layer::Relu,
            LayerSpec::MaxPool2 => Layer::MaxPool2,
        });
    }
    Network::new(input_channels, layers)
}

/// Writes `net` as a manifest at `manifest_path` and a blob next to it.
pub fn save_weights(net: &Network, manifest_path: impl AsRef<Path>) -> Result<()> {
    let manifest_path = manifest_path.as_ref();
    let blob_name = format!(
        "{}.bin",
        manifest_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("weights")
    );
    let mut manifest = format!("blob {blob_name}\n");
    let mut blob = Vec::new();
    for layer in net.layers() {
        manifest.push_str(&layer.to_string());
        manifest.push('\n');
        if let Layer::Conv(c) = layer {
            for v in c.kernel.iter().chain(&c.bias) {
                blob.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let blob_path = manifest_path.with_file_name(&blob_name);
    fs::write(&blob_path, blob).map_err(|e| Error::io(&blob_path, e))?;
    fs::write(manifest_path, manifest).map_err(|e| Error::io(manifest_path, e))
}

enum LayerSpec {
    Conv(usize, usize),
    Relu,
    MaxPool2,
}
