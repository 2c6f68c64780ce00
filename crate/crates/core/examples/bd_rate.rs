//! BD-rate between two RD tables, or between two built-in curves.
//!
//! `cargo run --example bd_rate [anchor.csv test.csv]`

use frdo::metrics::{bd_rate, curve_from_rows, read_rd_csv, QualityAxis, RdCurve, RdPoint};

fn main() -> frdo::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [a, t] = args.as_slice() {
        let (a, t) = (read_rd_csv(a)?, read_rd_csv(t)?);
        for axis in [QualityAxis::Psnr, QualityAxis::Feature] {
            let bdr = bd_rate(&curve_from_rows(&a, axis)?, &curve_from_rows(&t, axis)?)?;
            println!("{}: {bdr:.3} %", axis.name());
        }
        return Ok(());
    }
    let anchor = RdCurve::new(vec![
        RdPoint::new(0.21, 33.0),
        RdPoint::new(0.5, 36.7),
        RdPoint::new(1.1, 40.0),
        RdPoint::new(2.0, 44.1),
    ])?;
    let test = RdCurve::new(anchor.points().iter().map(|p| RdPoint::new(p.rate * 0.9, p.quality - 0.1)).collect())?;
    println!("BD-rate {:.3} %", bd_rate(&anchor, &test)?);
    Ok(())
}
