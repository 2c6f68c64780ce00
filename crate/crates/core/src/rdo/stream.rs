//! Frame-level encoding into the `FRD1` bitstream and the matching decoder.

use rayon::prelude::*;

use crate::codec::bits::{BitReader, BitWriter};
use crate::codec::decode_block;
use crate::codec::quant::check_qp;
use crate::distortion::sse_samples;
use crate::error::{Error, Result};
use crate::frame::{Block, Frame};
use crate::rdo::config::{EncoderConfig, Rect, SplitType, MAX_DELTA_QP_RANGE};
use crate::rdo::cost::lambda_from_qp;
use crate::rdo::leaf::Canvas;
use crate::rdo::partition::{search_ctu, LeafRule, PartitionNode};

pub const MAGIC: &[u8; 4] = b"FRD1";
pub const VERSION: u8 = 1;
pub const HEADER_BYTES: usize = 17;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamHeader {
    pub width: u32,
    pub height: u32,
    pub ctu_size: u16,
    pub base_qp: u8,
    /// `Some(r)` when leaves carry delta-QP codes bounded by `±r`.
    pub delta_qp_range: Option<u8>,
}

impl StreamHeader {
    pub fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.ctu_size.to_le_bytes());
        out.push(self.base_qp);
        out.push(match self.delta_qp_range {
            Some(r) => 1 | (r << 1),
            None => 0,
        });
    }

    pub fn parse(data: &[u8]) -> Result<Self> {
        if data.len() < HEADER_BYTES {
            return Err(Error::Malformed(format!(
                "stream of {} bytes is shorter than the {HEADER_BYTES}-byte header",
                data.len()
            )));
        }
        if &data[..4] != MAGIC {
            return Err(Error::Malformed("bad magic".into()));
        }
        if data[4] != VERSION {
            return Err(Error::Malformed(format!("unsupported version {}", data[4])));
        }
        let u32_at = |o: usize| u32::from_le_bytes(data[o..o + 4].try_into().unwrap());
        let (width, height) = (u32_at(5), u32_at(9));
        let ctu_size = u16::from_le_bytes([data[13], data[14]]);
        let base_qp = data[15];
        let flags = data[16];
        if width == 0 || height == 0 {
            return Err(Error::Malformed(format!("empty frame {width}x{height}")));
        }
        if !ctu_size.is_power_of_two() || !(4..=128).contains(&ctu_size) {
            return Err(Error::Malformed(format!("CTU size {ctu_size}")));
        }
        check_qp(base_qp as i32).map_err(|_| Error::Malformed(format!("base QP {base_qp}")))?;
        if flags >> 4 != 0 {
            return Err(Error::Malformed(format!("reserved flag bits set in {flags:#04x}")));
        }
        let range = (flags >> 1) & 0x7;
        let delta_qp_range = if flags & 1 == 1 {
            Some(range)
        } else if range != 0 {
            return Err(Error::Malformed("delta range set without delta-QP flag".into()));
        } else {
            None
        };
        Ok(StreamHeader {
            width,
            height,
            ctu_size,
            base_qp,
            delta_qp_range,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodeStats {
    pub width: usize,
    pub height: usize,
    /// Whole stream, header and alignment included.
    pub total_bits: u64,
    /// Unaligned payload bits per CTU, raster order.
    pub ctu_bits: Vec<u64>,
    /// Pixel SSE of the cropped reconstruction.
    pub sse: f64,
    pub leaf_count: usize,
}

impl EncodeStats {
    pub fn bpp(&self) -> f64 {
        self.total_bits as f64 / (self.width * self.height) as f64
    }

    pub fn mse(&self) -> f64 {
        self.sse / (self.width * self.height) as f64
    }
}

#[derive(Clone, Debug)]
pub struct EncodedFrame {
    pub bitstream: Vec<u8>,
    pub recon: Frame,
    pub trees: Vec<PartitionNode>,
    pub stats: EncodeStats,
}

fn ctu_grid(width: usize, height: usize, ctu: usize) -> Vec<Rect> {
    let mut out = Vec::new();
    for y in (0..height).step_by(ctu) {
        for x in (0..width).step_by(ctu) {
            out.push(Rect::new(x, y, ctu, ctu));
        }
    }
    out
}

/// Encodes `frame` under `cfg`. CTUs are searched in parallel on the
/// current rayon pool.
pub fn encode_frame(frame: &Frame, cfg: &EncoderConfig) -> Result<EncodedFrame> {
    cfg.validate()?;
    if cfg.delta_qp_range > MAX_DELTA_QP_RANGE {
        return Err(Error::Config(format!("delta-QP range {} does not fit the header", cfg.delta_qp_range)));
    }
    let lambda = lambda_from_qp(cfg.base_qp as i32, cfg.k)?.value;
    let padded = frame.pad_to_multiple(cfg.ctu_size);
    let rule = LeafRule::for_config(cfg);
    let ctus = ctu_grid(padded.width(), padded.height(), cfg.ctu_size);
    let results: Vec<(PartitionNode, Block)> = ctus
        .par_iter()
        .map(|&r| search_ctu(&padded, r, cfg, rule.clone(), lambda))
        .collect::<Result<_>>()?;

    let header = StreamHeader {
        width: frame.width() as u32,
        height: frame.height() as u32,
        ctu_size: cfg.ctu_size as u16,
        base_qp: cfg.base_qp,
        delta_qp_range: cfg.delta_qp_enabled().then_some(cfg.delta_qp_range),
    };
    let mut bitstream = Vec::new();
    header.write(&mut bitstream);
    let mut payload = BitWriter::new();
    let mut recon = padded.clone();
    let mut ctu_bits = Vec::with_capacity(results.len());
    let mut trees = Vec::with_capacity(results.len());
    let mut leaf_count = 0;
    for (node, block) in results {
        let start = payload.len();
        node.write(&mut payload);
        ctu_bits.push((payload.len() - start) as u64);
        payload.align();
        recon.write_block(&block)?;
        leaf_count += node.leaves().len();
        trees.push(node);
    }
    bitstream.extend_from_slice(payload.as_bytes());
    let recon = recon.crop(frame.width(), frame.height())?;
    let stats = EncodeStats {
        width: frame.width(),
        height: frame.height(),
        total_bits: bitstream.len() as u64 * 8,
        ctu_bits,
        sse: sse_samples(frame.samples(), recon.samples()) as f64,
        leaf_count,
    };
    Ok(EncodedFrame {
        bitstream,
        recon,
        trees,
        stats,
    })
}

fn decode_tree(reader: &mut BitReader<'_>, canvas: &mut Canvas, r: Rect, header: &StreamHeader) -> Result<()> {
    let split = SplitType::from_code(reader.bits(SplitType::CODE_BITS)?)?;
    if split == SplitType::None {
        let ctx = canvas.neighbors(r);
        let (mut block, _) = decode_block(reader, &ctx, r.w, r.h, header.base_qp, header.delta_qp_range)?;
        block.x = r.x;
        block.y = r.y;
        canvas.write(&block);
        return Ok(());
    }
    // the decoder accepts any split whose children remain codable
    if !split.allowed(r, crate::codec::transform::MIN_TX, 0, u8::MAX) {
        return Err(Error::Malformed(format!("{split} split of {r}")));
    }
    for c in split.children(r) {
        decode_tree(reader, canvas, c, header)?;
    }
    Ok(())
}

/// Decodes a complete `FRD1` stream. Needs no encoder configuration.
pub fn decode_frame(bitstream: &[u8]) -> Result<Frame> {
    let header = StreamHeader::parse(bitstream)?;
    let ctu = header.ctu_size as usize;
    let (w, h) = (header.width as usize, header.height as usize);
    let (pw, ph) = (w.div_ceil(ctu) * ctu, h.div_ceil(ctu) * ctu);
    let mut frame = Frame::filled(pw, ph, 0)?;
    let mut reader = BitReader::new(&bitstream[HEADER_BYTES..]);
    for r in ctu_grid(pw, ph, ctu) {
        let mut canvas = Canvas::new(r);
        decode_tree(&mut reader, &mut canvas, r, &header)?;
        reader.align();
        frame.write_block(&canvas.read(r))?;
    }
    let used = reader.position() / 8;
    let total = bitstream.len() - HEADER_BYTES;
    if used != total {
        return Err(Error::Malformed(format!("{} trailing bytes", total - used)));
    }
    frame.crop(w, h)
}
