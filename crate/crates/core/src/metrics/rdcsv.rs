use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::bdrate::{RdCurve, RdPoint};

pub const RD_CSV_HEADER: [&str; 6] = ["label", "qp", "rate_bpp", "psnr_db", "feat_db", "bits"];

/// Label of corpus-average rows written by sweeps.
pub const AVG_LABEL: &str = "avg";

#[derive(Clone, Debug, PartialEq)]
pub struct RdRow {
    pub label: String,
    pub qp: u8,
    pub rate_bpp: f64,
    pub psnr_db: f64,
    /// `NaN` when no network was available.
    pub feat_db: f64,
    pub bits: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QualityAxis {
    Psnr,
    Feature,
}

impl QualityAxis {
    pub fn name(self) -> &'static str {
        match self {
            QualityAxis::Psnr => "psnr_db",
            QualityAxis::Feature => "feat_db",
        }
    }

    fn pick(self, row: &RdRow) -> f64 {
        match self {
            QualityAxis::Psnr => row.psnr_db,
            QualityAxis::Feature => row.feat_db,
        }
    }
}

/// Nine significant digits; `inf`, `-inf` and `nan` for non-finite values.
pub fn format_sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..=12).contains(&mag) {
        return format!("{v:.8e}");
    }
    let decimals = (8 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_rd_csv<W: Write>(rows: &[RdRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RD_CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            r.qp.to_string(),
            format_sig9(r.rate_bpp),
            format_sig9(r.psnr_db),
            format_sig9(r.feat_db),
            r.bits.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn emit_rd_csv(rows: &[RdRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_rd_csv(rows, f)
}

pub fn parse_rd_csv<R: Read>(input: R) -> Result<Vec<RdRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows = Vec::new();
    let mut seen_header = false;
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if !seen_header {
            let got: Vec<&str> = rec.iter().map(str::trim).collect();
            if got != RD_CSV_HEADER {
                return Err(Error::CsvRow {
                    line,
                    msg: format!("expected header {:?}, got {:?}", RD_CSV_HEADER.join(","), got.join(",")),
                });
            }
            seen_header = true;
            continue;
        }
        let bad = |msg: String| Error::CsvRow { line, msg };
        if rec.len() != RD_CSV_HEADER.len() {
            return Err(bad(format!("expected {} fields, got {}", RD_CSV_HEADER.len(), rec.len())));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("{} is not a number: {:?}", RD_CSV_HEADER[i], &rec[i])))
        };
        let qp = rec[1]
            .trim()
            .parse::<u8>()
            .map_err(|_| bad(format!("qp is not an integer: {:?}", &rec[1])))?;
        let bits = rec[5]
            .trim()
            .parse::<u64>()
            .map_err(|_| bad(format!("bits is not an integer: {:?}", &rec[5])))?;
        rows.push(RdRow {
            label: rec[0].trim().to_string(),
            qp,
            rate_bpp: num(2)?,
            psnr_db: num(3)?,
            feat_db: num(4)?,
            bits,
        });
    }
    Ok(rows)
}

pub fn read_rd_csv(path: impl AsRef<Path>) -> Result<Vec<RdRow>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let rows = parse_rd_csv(f)?;
    if rows.is_empty() {
        return Err(Error::NoDataRows(path.to_path_buf()));
    }
    Ok(rows)
}

/// The curve a table describes: its `avg` rows if there are any, otherwise
/// all rows, which must then share one label.
pub fn curve_from_rows(rows: &[RdRow], axis: QualityAxis) -> Result<RdCurve> {
    let avg: Vec<&RdRow> = rows.iter().filter(|r| r.label == AVG_LABEL).collect();
    let chosen: Vec<&RdRow> = if avg.is_empty() {
        let first = rows.first().map(|r| r.label.as_str()).unwrap_or("");
        if rows.iter().any(|r| r.label != first) {
            return Err(Error::InvalidCurve(
                "several labels and no avg rows; cannot tell which curve to use".into(),
            ));
        }
        rows.iter().collect()
    } else {
        avg
    };
    RdCurve::new(chosen.iter().map(|r| RdPoint::new(r.rate_bpp, axis.pick(r))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<RdRow> {
        [(12, 2.013_456_789_1, 44.1, 31.2), (17, 1.1, 40.0, 28.0), (22, 0.5, 36.7, 25.5), (27, 0.21, 33.0, f64::INFINITY)]
            .iter()
            .map(|&(qp, r, p, f)| RdRow {
                label: "lena".into(),
                qp,
                rate_bpp: r,
                psnr_db: p,
                feat_db: f,
                bits: (r * 1000.0) as u64,
            })
            .collect()
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(2.013_456_789_1), "2.01345679");
        assert_eq!(format_sig9(48.0), "48");
        assert_eq!(format_sig9(f64::INFINITY), "inf");
        assert_eq!(format_sig9(f64::NAN), "nan");
        assert_eq!(format_sig9(0.000_123_456_789_12), "0.000123456789");
        assert_eq!(format_sig9(1234.5), "1234.5");
    }

    #[test]
    fn round_trip_within_tolerance() {
        let mut buf = Vec::new();
        write_rd_csv(&rows(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("label,qp,rate_bpp,psnr_db,feat_db,bits\n"));
        let back = parse_rd_csv(&buf[..]).unwrap();
        for (a, b) in rows().iter().zip(&back) {
            assert_eq!((a.label.as_str(), a.qp, a.bits), (b.label.as_str(), b.qp, b.bits));
            assert!((a.rate_bpp - b.rate_bpp).abs() <= 1e-7 * a.rate_bpp.abs());
            assert!((a.psnr_db - b.psnr_db).abs() <= 1e-7 * a.psnr_db.abs());
            assert!(a.feat_db == b.feat_db || (a.feat_db - b.feat_db).abs() <= 1e-7 * a.feat_db.abs());
        }
    }

    #[test]
    fn bad_rows_name_their_line() {
        let text = "label,qp,rate_bpp,psnr_db,feat_db,bits\na,12,0.5,30,20,100\na,17,fast,30,20,100\n";
        match parse_rd_csv(text.as_bytes()) {
            Err(Error::CsvRow { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("rate_bpp"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_rd_csv("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn empty_file_has_no_data_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.csv");
        std::fs::write(&p, "").unwrap();
        assert!(matches!(read_rd_csv(&p), Err(Error::NoDataRows(_))));
        std::fs::write(&p, "label,qp,rate_bpp,psnr_db,feat_db,bits\n").unwrap();
        assert!(matches!(read_rd_csv(&p), Err(Error::NoDataRows(_))));
    }

    #[test]
    fn avg_rows_win() {
        let mut r = rows();
        r[3].feat_db = 24.0;
        let mut with_avg = r.clone();
        with_avg.push(RdRow { label: "other".into(), ..r[0].clone() });
        assert!(curve_from_rows(&with_avg, QualityAxis::Psnr).is_err());
        for row in &r {
            with_avg.push(RdRow { label: AVG_LABEL.into(), ..row.clone() });
        }
        assert_eq!(curve_from_rows(&with_avg, QualityAxis::Feature).unwrap(), curve_from_rows(&r, QualityAxis::Feature).unwrap());
    }
}
