use qshape_core::constellation::Constellation;
use qshape_core::fec::LdpcCode;
use qshape_core::linksim::{run_bler, SimConfig};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let m: u32 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let frames: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let grid: Vec<f64> = args.get(3).map(|s| s.split(',').map(|x| x.parse().unwrap()).collect())
        .unwrap_or_else(|| vec![10.0, 12.0, 14.0, 16.0, 18.0, 20.0]);
    let qam = Constellation::make_qam(m).unwrap();
    let code = LdpcCode::generate_gallager(96, 3, 6, 42).unwrap();
    println!("code: n={} k={} rate={:.4} 4cycles={}", code.n(), code.k(), code.coderate(), code.count_4cycles());
    let mut cfg = SimConfig::new(qam.clone(), qam, code, grid);
    cfg.frames_per_point = frames;
    cfg.min_error_events = 100;
    cfg.max_frames_per_point = frames;
    cfg.mi_samples = 20_000;
    cfg.seed = 9;
    let t0 = Instant::now();
    let result = run_bler(&cfg).unwrap();
    for p in &result.points {
        println!("snr {:>5.1}: bler {:.4} ({} / {})  se {:.4}  mi {:.4}  censored {}",
            p.snr_db, p.bler, p.error_events, p.frames, p.se, p.mi, p.censored);
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
}
