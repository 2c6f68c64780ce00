//! Command-line front end: `encode`, `decode`, `sweep`, `bdrate`, `selftest`.
//!
//! Every report goes to standard output (or `--out`) as CSV. A config file of
//! `key=value` lines, named by `--config`, preloads flags; flags given on the
//! command line win.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::codec::quant::check_qp;
use crate::distortion::{normalize_candidates, CandidateDistortion, DistortionKind, FeatureMetric};
use crate::error::{Error, Result};
use crate::frame::{load_pgm, save_pgm, Frame};
use crate::metrics::{
    bd_rate, curve_from_rows, feature_fidelity, format_sig9, psnr, read_rd_csv, write_rd_csv, QualityAxis, RdRow,
    AVG_LABEL,
};
use crate::net::{load_weights, seeded_network, Network, VGG_WIDTH};
use crate::rdo::{
    decode_frame, encode_frame, exhaustive_partition_oracle, lambda_from_qp, partition_region, EncoderConfig, Rect,
    DEFAULT_K,
};

/// QPs swept when `--qp-list` is absent.
pub const DEFAULT_QP_LIST: [u8; 4] = [12, 17, 22, 27];

/// Soft wall-clock budget for `selftest`.
pub const SELFTEST_BUDGET: Duration = Duration::from_secs(60);

/// Keys a config file may set, as long flag names.
const CONFIG_KEYS: [&str; 13] = [
    "kind",
    "qp",
    "qp-list",
    "delta-qp",
    "ctu",
    "min-cu",
    "mtt-depth",
    "k",
    "weights",
    "test-seed",
    "test-width",
    "jobs",
    "out",
];

/// Config keys each subcommand accepts; others in the file are ignored.
fn keys_for(command: &str) -> &'static [&'static str] {
    match command {
        "sweep" => &CONFIG_KEYS,
        "encode" => &[
            "kind", "qp", "delta-qp", "ctu", "min-cu", "mtt-depth", "k", "weights", "test-seed", "test-width", "out",
        ],
        "decode" | "bdrate" => &["out"],
        _ => &[],
    }
}

#[derive(Debug, Parser)]
#[command(name = "frdo", version, about = "Block-based intra image codec with feature-domain RDO")]
#[command(args_override_self = true)]
pub struct Cli {
    /// File of `key=value` lines preloading flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode a PGM image into a bitstream and print its stats row.
    Encode {
        input: PathBuf,
        /// Output bitstream; `--out` also works.
        output: Option<PathBuf>,
        #[command(flatten)]
        enc: EncodeArgs,
    },
    /// Decode a bitstream into a PGM image.
    Decode {
        input: PathBuf,
        output: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode every PGM in a directory at every QP and print RD rows.
    Sweep {
        corpus: PathBuf,
        #[command(flatten)]
        enc: EncodeArgs,
        /// Comma-separated QPs.
        #[arg(long, value_delimiter = ',')]
        qp_list: Option<Vec<i64>>,
        /// Images encoded concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// BD-rate of a test RD table against an anchor, on both quality axes.
    Bdrate {
        anchor: PathBuf,
        test: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in degeneration and partition oracles.
    Selftest {
        /// Test hook: rescale candidates with a broken normalization.
        #[arg(long, hide = true)]
        corrupt_normalization: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct EncodeArgs {
    #[arg(long, default_value = "sse")]
    pub kind: DistortionKind,
    /// Base QP. Accepted as any integer so range errors name the QP.
    #[arg(long, default_value_t = 22, allow_negative_numbers = true)]
    pub qp: i64,
    #[arg(long = "delta-qp", default_value_t = 0)]
    pub delta_qp: u8,
    #[arg(long, default_value_t = 64)]
    pub ctu: usize,
    #[arg(long = "min-cu", default_value_t = 4)]
    pub min_cu: usize,
    #[arg(long = "mtt-depth", default_value_t = 3)]
    pub mtt_depth: u8,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: f64,
    /// Weight manifest of the feature network.
    #[arg(long, value_name = "MANIFEST", conflicts_with = "test_seed")]
    pub weights: Option<PathBuf>,
    /// Seed of a generated feature network, used instead of `--weights`.
    #[arg(long = "test-seed")]
    pub test_seed: Option<u64>,
    /// Channel width of the generated network.
    #[arg(long = "test-width", default_value_t = VGG_WIDTH, requires = "test_seed")]
    pub test_width: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl EncodeArgs {
    pub fn network(&self) -> Result<Option<Arc<Network>>> {
        Ok(match (&self.weights, self.test_seed) {
            (Some(path), _) => Some(Arc::new(load_weights(path)?)),
            (None, Some(seed)) => Some(Arc::new(seeded_network(seed, 1, self.test_width))),
            (None, None) => None,
        })
    }

    /// Encoder settings at `qp`, with the network (if any) already loaded.
    pub fn encoder_config(&self, qp: i64, network: Option<Arc<Network>>) -> Result<EncoderConfig> {
        let qp = i32::try_from(qp).map_err(|_| Error::QpOutOfRange(i32::MAX))?;
        check_qp(qp)?;
        if self.kind.uses_features() && network.is_none() {
            return Err(Error::Config(format!("--kind {} needs --weights or --test-seed", self.kind)));
        }
        let cfg = EncoderConfig {
            ctu_size: self.ctu,
            min_cu: self.min_cu,
            max_mtt_depth: self.mtt_depth,
            kind: self.kind,
            base_qp: qp as u8,
            delta_qp_range: self.delta_qp,
            k: self.k,
            network,
            ..EncoderConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads `key=value` lines into `--key value` arguments. Blank lines and
/// lines starting with `#` are skipped.
pub fn config_file_args(path: &Path) -> Result<Vec<OsString>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        let key = key.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("{}:{}: unknown key {key:?}", path.display(), i + 1)));
        }
        out.push(format!("--{key}").into());
        out.push(value.trim().into());
    }
    Ok(out)
}

/// Splices config-file flags in right after the subcommand name, so that
/// anything on the command line comes later and overrides them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config = None;
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            config = args.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        }
    }
    let Some(path) = config else {
        return Ok(args);
    };
    let commands = ["encode", "decode", "sweep", "bdrate", "selftest"];
    let Some(pos) = args.iter().position(|a| commands.contains(&a.to_string_lossy().as_ref())) else {
        return Ok(args);
    };
    let keys = keys_for(&args[pos].to_string_lossy());
    let mut extra = Vec::new();
    for pair in config_file_args(&path)?.chunks(2) {
        if keys.contains(&&pair[0].to_string_lossy()[2..]) {
            extra.extend_from_slice(pair);
        }
    }
    let pos = pos + 1;
    let mut out = args[..pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[pos..]);
    Ok(out)
}

/// Entry point of the binary. Returns the process exit status.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::MissingNetwork => 2,
                _ => 1,
            }
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Encode { input, output, enc } => {
            let output = output.or_else(|| enc.out.clone()).ok_or_else(|| Error::Config("encode needs an output path".into()))?;
            run_encode(&input, &output, &enc, &mut std::io::stdout().lock())
        }
        Command::Decode { input, output, out } => {
            let output = output.or(out).ok_or_else(|| Error::Config("decode needs an output path".into()))?;
            run_decode(&input, &output)
        }
        Command::Sweep { corpus, enc, qp_list, jobs } => {
            let qps = qp_list.unwrap_or_else(|| DEFAULT_QP_LIST.iter().map(|&q| q as i64).collect());
            let rows = run_sweep(&corpus, &enc, &qps, jobs)?;
            emit(&enc.out, |w| write_rd_csv(&rows, w))
        }
        Command::Bdrate { anchor, test, out } => {
            let report = run_bdrate(&anchor, &test)?;
            eprint!("{}", bdrate_table(&report));
            emit(&out, |w| write_bdrate(&report, w))
        }
        Command::Selftest { corrupt_normalization } => {
            let hooks = SelftestHooks { corrupt_normalization };
            let report = run_selftest(&hooks)?;
            let mut out = std::io::stdout().lock();
            for line in &report.lines {
                writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))?;
            }
            if report.elapsed > SELFTEST_BUDGET {
                log::warn!("selftest took {:?}, over the {:?} budget", report.elapsed, SELFTEST_BUDGET);
                eprintln!("warning: selftest took {:.1} s", report.elapsed.as_secs_f64());
            }
            if report.failures > 0 {
                return Err(Error::SelfTest(format!("{} check(s) failed", report.failures)));
            }
            Ok(())
        }
    }
}

fn emit(out: &Option<PathBuf>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(p) => {
            let mut f = fs::File::create(p).map_err(|e| Error::io(p, e))?;
            write(&mut f)
        }
        None => write(&mut std::io::stdout().lock()),
    }
}

fn label_of(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Encodes `frame` and measures it. `feat_db` is NaN without a network.
pub fn encode_row(label: &str, frame: &Frame, cfg: &EncoderConfig) -> Result<(RdRow, Vec<u8>)> {
    let enc = encode_frame(frame, cfg)?;
    let feat_db = match &cfg.network {
        Some(net) => feature_fidelity(frame, &enc.recon, net, FeatureMetric::Fsse)?,
        None => f64::NAN,
    };
    let row = RdRow {
        label: label.to_string(),
        qp: cfg.base_qp,
        rate_bpp: enc.stats.bpp(),
        psnr_db: psnr(frame, &enc.recon)?,
        feat_db,
        bits: enc.stats.total_bits,
    };
    Ok((row, enc.bitstream))
}

pub fn run_encode(input: &Path, output: &Path, args: &EncodeArgs, report: &mut dyn Write) -> Result<()> {
    let cfg = args.encoder_config(args.qp, args.network()?)?;
    let frame = load_pgm(input)?;
    let (row, bitstream) = encode_row(&label_of(input), &frame, &cfg)?;
    fs::write(output, &bitstream).map_err(|e| Error::io(output, e))?;
    write_rd_csv(&[row], report)
}

pub fn run_decode(input: &Path, output: &Path) -> Result<()> {
    let bitstream = fs::read(input).map_err(|e| Error::io(input, e))?;
    save_pgm(&decode_frame(&bitstream)?, output)
}

/// Sorted `.pgm` files of `dir`.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for e in entries {
        let p = e.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")) {
            files.push(p);
        }
    }
    if files.is_empty() {
        return Err(Error::EmptyCorpus(dir.to_path_buf()));
    }
    files.sort();
    Ok(files)
}

/// Per-QP means of rate, PSNR and feature fidelity over `rows`, labelled `avg`.
pub fn average_rows(rows: &[RdRow], qps: &[u8]) -> Vec<RdRow> {
    qps.iter()
        .map(|&qp| {
            let at: Vec<&RdRow> = rows.iter().filter(|r| r.qp == qp && r.label != AVG_LABEL).collect();
            let n = at.len() as f64;
            let mean = |f: fn(&RdRow) -> f64| at.iter().map(|r| f(r)).sum::<f64>() / n;
            RdRow {
                label: AVG_LABEL.into(),
                qp,
                rate_bpp: mean(|r| r.rate_bpp),
                psnr_db: mean(|r| r.psnr_db),
                feat_db: mean(|r| r.feat_db),
                bits: (at.iter().map(|r| r.bits).sum::<u64>() as f64 / n).round() as u64,
            }
        })
        .collect()
}

/// Encodes every image of `corpus` at every QP. Rows come back image by
/// image in file-name order, QPs in the given order, then the `avg` rows.
pub fn run_sweep(corpus: &Path, args: &EncodeArgs, qps: &[i64], jobs: usize) -> Result<Vec<RdRow>> {
    if qps.is_empty() {
        return Err(Error::Config("empty QP list".into()));
    }
    let network = args.network()?;
    let cfgs: Vec<EncoderConfig> = qps
        .iter()
        .map(|&qp| args.encoder_config(qp, network.clone()))
        .collect::<Result<_>>()?;
    let files = corpus_files(corpus)?;
    let frames: Vec<(String, Frame)> = files
        .iter()
        .map(|p| Ok((label_of(p), load_pgm(p)?)))
        .collect::<Result<_>>()?;
    let jobs_list: Vec<(usize, usize)> = (0..frames.len()).flat_map(|i| (0..cfgs.len()).map(move |q| (i, q))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut rows: Vec<RdRow> = pool.install(|| {
        jobs_list
            .par_iter()
            .map(|&(i, q)| {
                let (label, frame) = &frames[i];
                log::info!("encoding {label} at QP {}", cfgs[q].base_qp);
                Ok(encode_row(label, frame, &cfgs[q])?.0)
            })
            .collect::<Result<_>>()
    })?;
    let qps: Vec<u8> = cfgs.iter().map(|c| c.base_qp).collect();
    let avg = average_rows(&rows, &qps);
    rows.extend(avg);
    Ok(rows)
}

/// BD-rates in percent; `None` when the axis has no finite data.
#[derive(Clone, Debug, PartialEq)]
pub struct BdRateReport {
    pub psnr: f64,
    pub feat: Option<f64>,
}

pub fn run_bdrate(anchor: &Path, test: &Path) -> Result<BdRateReport> {
    let a = read_rd_csv(anchor)?;
    let t = read_rd_csv(test)?;
    let psnr = bd_rate(&curve_from_rows(&a, QualityAxis::Psnr)?, &curve_from_rows(&t, QualityAxis::Psnr)?)?;
    let no_feat = |rows: &[RdRow]| rows.iter().all(|r| r.feat_db.is_nan());
    let feat = if no_feat(&a) || no_feat(&t) {
        log::warn!("feat_db missing; skipping the feature axis");
        None
    } else {
        Some(bd_rate(&curve_from_rows(&a, QualityAxis::Feature)?, &curve_from_rows(&t, QualityAxis::Feature)?)?)
    };
    Ok(BdRateReport { psnr, feat })
}

/// Two-column human-readable form of `report`.
pub fn bdrate_table(report: &BdRateReport) -> String {
    let feat = report.feat.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3} %"));
    format!(
        "{:<10}{:>12}\n{:<10}{:>12}\n{:<10}{:>12}\n",
        "metric",
        "BD-rate",
        QualityAxis::Psnr.name(),
        format!("{:.3} %", report.psnr),
        QualityAxis::Feature.name(),
        feat
    )
}

pub fn write_bdrate(report: &BdRateReport, out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["axis", "bd_rate_pct"])?;
    w.write_record([QualityAxis::Psnr.name().to_string(), format_sig9(report.psnr)])?;
    w.write_record([QualityAxis::Feature.name().to_string(), format_sig9(report.feat.unwrap_or(f64::NAN))])?;
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SelftestHooks {
    /// Anchor the normalization on the last candidate instead of the first.
    pub corrupt_normalization: bool,
}

#[derive(Clone, Debug)]
pub struct SelftestReport {
    pub lines: Vec<String>,
    pub failures: usize,
    pub elapsed: Duration,
}

fn normalize_with(hooks: &SelftestHooks, cands: &mut [CandidateDistortion]) -> Result<()> {
    if hooks.corrupt_normalization {
        cands.reverse();
        normalize_candidates(cands)?;
        cands.reverse();
        Ok(())
    } else {
        normalize_candidates(cands)
    }
}

fn random_frame(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Frame {
    Frame::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).expect("nonzero size")
}

/// Identity-network anchor and degeneration checks, then the exhaustive
/// partition oracle on small regions.
pub fn run_selftest(hooks: &SelftestHooks) -> Result<SelftestReport> {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut failures = 0;
    let mut check = |name: &str, ok: bool, detail: String| {
        lines.push(format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }));
        failures += usize::from(!ok);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);

    // anchor bit-identity and order preservation on random lists
    let mut bad = 0;
    for _ in 0..500 {
        let n = rng.gen_range(1..6);
        let mut c: Vec<CandidateDistortion> = (0..n)
            .map(|_| CandidateDistortion::new(rng.gen_range(1.0..1e6), rng.gen_range(1e-3..1e3)))
            .collect();
        normalize_with(hooks, &mut c)?;
        let anchor_ok = c[0].d_feat_norm.map(f64::to_bits) == Some(c[0].d_sse.to_bits());
        let order_ok = c[1..].windows(2).all(|w| {
            (w[0].d_feat < w[1].d_feat) == (w[0].d_feat_norm < w[1].d_feat_norm)
        });
        bad += usize::from(!(anchor_ok && order_ok));
    }
    check("normalization anchor", bad == 0, format!("{bad} of 500 lists wrong"));

    // identity features make FSSE pick what SSE picks
    let mut bad = 0;
    for _ in 0..300 {
        let n = rng.gen_range(2..6);
        let lambda = rng.gen_range(0.5..20.0);
        let mut c: Vec<CandidateDistortion> = (0..n)
            .map(|_| {
                let sse = rng.gen_range(1..5000) as f64;
                CandidateDistortion::new(sse, sse / (255.0 * 255.0))
            })
            .collect();
        let rates: Vec<u64> = (0..n).map(|_| rng.gen_range(3..500)).collect();
        normalize_with(hooks, &mut c)?;
        let argmin = |costs: Vec<f64>| {
            costs
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |b, (i, &j)| if j < b.1 { (i, j) } else { b })
                .0
        };
        let sse = argmin(c.iter().zip(&rates).map(|(d, &r)| d.d_sse + lambda * r as f64).collect());
        let fsse = argmin(
            c.iter()
                .zip(&rates)
                .map(|(d, &r)| d.d_feat_norm.unwrap_or(f64::NAN) + lambda * r as f64)
                .collect(),
        );
        let scaled_anchor = c[0].d_feat_norm == Some(c[0].d_sse);
        bad += usize::from(sse != fsse || !scaled_anchor);
    }
    check("identity degeneration (candidates)", bad == 0, format!("{bad} of 300 sets disagree"));

    let identity = Arc::new(Network::identity());
    let mut bad = 0;
    for qp in DEFAULT_QP_LIST {
        let frame = random_frame(&mut rng, 32, 32);
        let sse_cfg = EncoderConfig { ctu_size: 32, ..EncoderConfig::default() }.with_qp(qp);
        let fsse_cfg = sse_cfg.clone().with_kind(DistortionKind::Fsse).with_network(identity.clone());
        let a = encode_frame(&frame, &sse_cfg)?.bitstream;
        let b = encode_frame(&frame, &fsse_cfg)?.bitstream;
        bad += usize::from(a != b);
    }
    check("identity degeneration (bitstreams)", bad == 0, format!("{bad} of 4 QPs differ"));

    let net = Arc::new(seeded_network(7, 1, 8));
    let mut bad = 0;
    let mut total = 0;
    for kind in [DistortionKind::Sse, DistortionKind::Hfsad] {
        for (side, min_cu, count) in [(16, 8, 4), (8, 4, 2)] {
            for i in 0..count {
                let qp = DEFAULT_QP_LIST[i % 4];
                let frame = random_frame(&mut rng, side, side);
                let cfg = EncoderConfig { ctu_size: side, min_cu, ..EncoderConfig::default() }
                    .with_qp(qp)
                    .with_kind(kind)
                    .with_network(net.clone());
                let lambda = lambda_from_qp(qp as i32, cfg.k)?.value;
                let r = Rect::new(0, 0, side, side);
                let greedy = partition_region(&frame, r, &cfg, lambda)?.cost.j;
                let (_, oracle) = exhaustive_partition_oracle(&frame, r, &cfg, lambda)?;
                bad += usize::from(greedy != oracle.j);
                total += 1;
            }
        }
    }
    check("partition oracle", bad == 0, format!("{bad} of {total} regions differ"));

    let elapsed = start.elapsed();
    lines.push(format!("elapsed {:.2} s", elapsed.as_secs_f64()));
    Ok(SelftestReport { lines, failures, elapsed })
}
