use qshape_core::constellation::Constellation;
use qshape_core::infotheory::mi_monte_carlo;
use qshape_core::shaping::{shape_constellation, ShapingConfig};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let m: u32 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1500);
    let batch: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(2048);
    let lr: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let snrs: Vec<f64> = args.get(5).map(|s| s.split(',').map(|x| x.parse().unwrap()).collect())
        .unwrap_or_else(|| vec![12.0, 14.0, 16.0, 18.0]);
    let qam = Constellation::make_qam(m).unwrap();
    println!("m={m} epochs={epochs} batch={batch} lr={lr}");
    for &snr in &snrs {
        let t0 = Instant::now();
        let mut cfg = ShapingConfig::new(qam.clone(), snr);
        cfg.epochs = epochs;
        cfg.batch_symbols = batch;
        cfg.learning_rate = lr;
        cfg.seed = 1;
        let report = shape_constellation(&cfg).unwrap();
        let train_t = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let shaped = mi_monte_carlo(&report.constellation, &qam, snr, 200_000, 77).unwrap();
        let base = mi_monte_carlo(&qam, &qam, snr, 200_000, 77).unwrap();
        let mi_t = t1.elapsed().as_secs_f64();
        let gain = shaped.total / base.total - 1.0;
        let sigma = (shaped.std_err.powi(2) + base.std_err.powi(2)).sqrt();
        println!(
            "snr {snr:>5.1}: qam {:.4}  shaped {:.4}  gain {:+.3}%  (3sig {:.3}%)  loss {:.4}->{:.4}  [train {train_t:.1}s mi {mi_t:.1}s]",
            base.total, shaped.total, 100.0 * gain, 300.0 * 3.0 * sigma / base.total / 3.0,
            report.loss_trace[0], report.loss_trace.last().unwrap()
        );
    }
}
