//! End-to-end coded link simulation.
//!
//! One frame runs the whole chain: random info bits, LDPC encode,
//! interleave, pad to a whole number of symbols, map with the (possibly
//! shaped) mapper constellation, channel, demap against the *fixed* QAM
//! demapper, strip filler, deinterleave, sum-product decode. A frame is in
//! error iff the decoded information bits differ from the transmitted ones.
//!
//! Every frame derives its own rng from `(seed, snr index, frame index)` and
//! frames are scheduled in fixed-size batches, so error counts are exact
//! integers that merge associatively: sequential and worker-parallel drivers
//! produce identical results by construction.
//!
//! Each SNR point also carries a Monte-Carlo mutual-information estimate of
//! the mapper/demapper pair, evaluated on the plain AWGN channel
//! independently of the BLER frames, plus the spectral efficiency
//! `(1 - BLER) * coderate * num_bits`.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{awgn, fade_and_equalize, rayleigh_gain, snr_db_to_n0, Fading};
use crate::constellation::Constellation;
use crate::fec::{Interleaver, LdpcCode};
use crate::infotheory::{mi_monte_carlo, MiEstimate, MIN_MC_SAMPLES};
use crate::modem::{demap_exact_into, LLR_MAX};
use crate::seeds::{self, stream};
use crate::{Error, Result};

/// Frames per scheduling batch. Stopping decisions are made only at batch
/// boundaries so that worker counts cannot change which frames run.
pub const FRAME_BATCH: usize = 64;

/// Configuration of one BLER/SE run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Transmit-side constellation.
    pub mapper: Constellation,
    /// Fixed receive-side constellation (standard QAM of the same order).
    pub demapper: Constellation,
    /// The LDPC code.
    pub code: LdpcCode,
    /// Strictly increasing Es/N0 grid in dB.
    pub snr_grid_db: Vec<f64>,
    /// Minimum frames per grid point (at least 100).
    pub frames_per_point: usize,
    /// Keep simulating past `frames_per_point` until this many frame errors
    /// have been seen (or the cap below is hit).
    pub min_error_events: usize,
    /// Hard cap on frames per grid point; hitting it marks the point
    /// censored.
    pub max_frames_per_point: usize,
    /// Master seed.
    pub seed: u64,
    /// Channel mode.
    pub fading: Fading,
    /// Samples for the per-point mutual-information column.
    pub mi_samples: usize,
    /// Iteration cap for the sum-product decoder.
    pub max_bp_iters: usize,
}

impl SimConfig {
    /// Builds a config with the desk-scale defaults: 1000 frames and 100
    /// error events per point, a 100k-frame cap, 1e5 MI samples, 50 decoder
    /// iterations, pure AWGN.
    pub fn new(
        mapper: Constellation,
        demapper: Constellation,
        code: LdpcCode,
        snr_grid_db: Vec<f64>,
    ) -> Self {
        Self {
            mapper,
            demapper,
            code,
            snr_grid_db,
            frames_per_point: 1000,
            min_error_events: 100,
            max_frames_per_point: 100_000,
            seed: 0,
            fading: Fading::None,
            mi_samples: 100_000,
            max_bp_iters: 50,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.snr_grid_db.is_empty()
            || self.snr_grid_db.windows(2).any(|w| !(w[1] > w[0]))
            || self.snr_grid_db.iter().any(|s| !s.is_finite())
        {
            return Err(Error::InvalidSnrGrid);
        }
        if self.frames_per_point < 100 {
            return Err(Error::InvalidSimConfig("frames per point must be at least 100"));
        }
        if self.min_error_events < 1 {
            return Err(Error::InvalidSimConfig("min error events must be at least 1"));
        }
        if self.max_frames_per_point < self.frames_per_point {
            return Err(Error::InvalidSimConfig("frame cap below frames per point"));
        }
        if self.mapper.bits_per_symbol() != self.demapper.bits_per_symbol() {
            return Err(Error::InvalidSimConfig("mapper and demapper orders differ"));
        }
        if self.mi_samples < MIN_MC_SAMPLES {
            return Err(Error::InvalidSimConfig("too few MI samples"));
        }
        if self.max_bp_iters < 1 {
            return Err(Error::InvalidSimConfig("decoder needs at least one iteration"));
        }
        Ok(())
    }

    /// Bits per symbol of the modulation.
    #[inline]
    pub fn num_bits(&self) -> u32 {
        self.mapper.bits_per_symbol()
    }

    /// Filler bits appended after interleaving so the codeword fills whole
    /// symbols.
    #[inline]
    pub fn pad_bits(&self) -> usize {
        let m = self.num_bits() as usize;
        (m - self.code.n() % m) % m
    }
}

/// Result of one SNR grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrPoint {
    /// Es/N0 in dB.
    pub snr_db: f64,
    /// Frames decoded with wrong information bits.
    pub error_events: usize,
    /// Frames simulated.
    pub frames: usize,
    /// `error_events / frames`.
    pub bler: f64,
    /// `(1 - bler) * coderate * num_bits`.
    pub se: f64,
    /// Monte-Carlo mutual information of the mapper/demapper pair (bits).
    pub mi: f64,
    /// Standard error of `mi`.
    pub mi_std_err: f64,
    /// True when the frame cap was hit before `min_error_events` errors.
    pub censored: bool,
    /// Wall-clock seconds, filled by drivers that can measure time;
    /// this crate has no clock and reports 0.
    pub wall_time_s: f64,
}

/// A full BLER/SE sweep result.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// One entry per grid point, in grid order.
    pub points: Vec<SnrPoint>,
    /// Code rate `k/n` of the configured code.
    pub coderate: f64,
    /// Bits per symbol of the configured modulation.
    pub num_bits: u32,
}

/// Spectral efficiency `(1 - bler) * coderate * num_bits`.
pub fn spectral_efficiency(bler: f64, coderate: f64, num_bits: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&bler) {
        return Err(Error::ProbabilityOutOfRange(bler));
    }
    Ok((1.0 - bler) * coderate * num_bits as f64)
}

/// Relative spectral-efficiency gain `se_after / se_before - 1`.
pub fn se_gain(se_after: f64, se_before: f64) -> Result<f64> {
    if !(se_before > 0.0) {
        return Err(Error::InvalidSimConfig("baseline spectral efficiency must be positive"));
    }
    Ok(se_after / se_before - 1.0)
}

/// Reusable per-run state: the interleaver and scratch shapes are fixed by
/// the config, so both the sequential loop and parallel drivers share one.
#[derive(Debug, Clone)]
pub struct SimContext<'a> {
    cfg: &'a SimConfig,
    interleaver: Interleaver,
}

impl<'a> SimContext<'a> {
    /// Validates the config and prepares the run.
    pub fn new(cfg: &'a SimConfig) -> Result<Self> {
        cfg.validate()?;
        let interleaver = Interleaver::new(cfg.code.n(), cfg.seed);
        Ok(Self { cfg, interleaver })
    }

    /// The underlying configuration.
    #[inline]
    pub fn config(&self) -> &SimConfig {
        self.cfg
    }

    /// Runs one frame of the chain; `true` means a frame error. The result
    /// depends only on `(cfg, snr_index, frame_index)`.
    pub fn run_frame(&self, snr_index: usize, frame_index: u64) -> Result<bool> {
        let cfg = self.cfg;
        let code = &cfg.code;
        let m = cfg.num_bits() as usize;
        let n0 = snr_db_to_n0(cfg.snr_grid_db[snr_index]);
        let mut rng = seeds::rng_for(
            cfg.seed,
            stream::SIM_FRAME,
            ((snr_index as u64) << 40) | frame_index,
        );

        use rand::Rng;
        let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
        let codeword = code.encode(&info)?;
        let mut tx_bits = self.interleaver.interleave(&codeword)?;
        tx_bits.resize(code.n() + cfg.pad_bits(), 0u8);

        let symbols = crate::modem::map_bits(&tx_bits, &cfg.mapper)?;
        let (received, eff_n0) = match cfg.fading {
            Fading::None => (awgn(&symbols, n0, &mut rng), n0),
            Fading::RayleighBlock => {
                let h = rayleigh_gain(&mut rng);
                fade_and_equalize(&symbols, h, n0, &mut rng)?
            }
        };

        let mut metrics = vec![0.0; cfg.demapper.size()];
        let mut word = vec![0.0; m];
        let mut llrs = Vec::with_capacity(tx_bits.len());
        for &s_hat in &received {
            demap_exact_into(s_hat, &cfg.demapper, eff_n0, &mut metrics, &mut word)?;
            llrs.extend(word.iter().map(|y| y.clamp(-LLR_MAX, LLR_MAX)));
        }
        llrs.truncate(code.n()); // strip filler positions
        let llrs = self.interleaver.deinterleave(&llrs)?;

        let decoded = code.decode_bp(&llrs, cfg.max_bp_iters)?;
        let error = code
            .info_positions()
            .iter()
            .zip(&info)
            .any(|(&col, &bit)| decoded.bits[col as usize] != bit);
        Ok(error)
    }

    /// How many frames the next batch at this point should run, given
    /// progress so far; zero means the point is finished.
    pub fn next_batch(&self, frames_done: usize, errors: usize) -> usize {
        let cfg = self.cfg;
        let satisfied = frames_done >= cfg.frames_per_point && errors >= cfg.min_error_events;
        if satisfied || frames_done >= cfg.max_frames_per_point {
            return 0;
        }
        FRAME_BATCH.min(cfg.max_frames_per_point - frames_done)
    }

    /// The per-point mutual-information column (plain AWGN, independent of
    /// the BLER frames).
    pub fn mi_point(&self, snr_index: usize) -> Result<MiEstimate> {
        let cfg = self.cfg;
        mi_monte_carlo(
            &cfg.mapper,
            &cfg.demapper,
            cfg.snr_grid_db[snr_index],
            cfg.mi_samples,
            seeds::derive_seed(cfg.seed, stream::SIM_MI, snr_index as u64),
        )
    }

    /// Assembles one grid point from its tallies and MI estimate.
    pub fn finish_point(
        &self,
        snr_index: usize,
        frames: usize,
        errors: usize,
        mi: &MiEstimate,
        wall_time_s: f64,
    ) -> Result<SnrPoint> {
        let cfg = self.cfg;
        let bler = errors as f64 / frames as f64;
        let se = spectral_efficiency(bler, cfg.code.coderate(), cfg.num_bits())?;
        Ok(SnrPoint {
            snr_db: cfg.snr_grid_db[snr_index],
            error_events: errors,
            frames,
            bler,
            se,
            mi: mi.total,
            mi_std_err: mi.std_err,
            censored: errors < cfg.min_error_events,
            wall_time_s,
        })
    }
}

/// Runs the full grid sequentially. Parallel drivers reproduce this result
/// exactly by scheduling the same `(snr_index, frame_index)` work items.
pub fn run_bler(cfg: &SimConfig) -> Result<SimResult> {
    let ctx = SimContext::new(cfg)?;
    let mut points = Vec::with_capacity(cfg.snr_grid_db.len());
    for snr_index in 0..cfg.snr_grid_db.len() {
        let mut frames = 0usize;
        let mut errors = 0usize;
        loop {
            let batch = ctx.next_batch(frames, errors);
            if batch == 0 {
                break;
            }
            for i in 0..batch {
                if ctx.run_frame(snr_index, (frames + i) as u64)? {
                    errors += 1;
                }
            }
            frames += batch;
        }
        let mi = ctx.mi_point(snr_index)?;
        points.push(ctx.finish_point(snr_index, frames, errors, &mi, 0.0)?);
    }
    Ok(SimResult { points, coderate: cfg.code.coderate(), num_bits: cfg.num_bits() })
}

/// One row of a baseline-vs-shaped sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub mi_qam: f64,
    pub mi_shaped: f64,
    /// Relative MI gain, `mi_shaped / mi_qam - 1`.
    pub mi_gain: f64,
    pub bler_qam: f64,
    pub bler_shaped: f64,
    pub se_qam: f64,
    pub se_shaped: f64,
    /// Relative SE gain, `se_shaped / se_qam - 1`; NaN where the baseline
    /// spectral efficiency is zero.
    pub se_gain: f64,
    pub censored_qam: bool,
    pub censored_shaped: bool,
}

/// Runs baseline and shaped configs that share grid, code, seed, channel,
/// and stopping policy, and joins them row by row.
pub fn sweep(baseline: &SimConfig, shaped: &SimConfig) -> Result<Vec<SweepRow>> {
    if baseline.snr_grid_db != shaped.snr_grid_db {
        return Err(Error::SweepMismatch("SNR grid"));
    }
    if baseline.code != shaped.code {
        return Err(Error::SweepMismatch("LDPC code"));
    }
    if baseline.seed != shaped.seed {
        return Err(Error::SweepMismatch("seed"));
    }
    if baseline.demapper != shaped.demapper {
        return Err(Error::SweepMismatch("demapper constellation"));
    }
    if baseline.fading != shaped.fading {
        return Err(Error::SweepMismatch("channel mode"));
    }
    if (
        baseline.frames_per_point,
        baseline.min_error_events,
        baseline.max_frames_per_point,
        baseline.mi_samples,
        baseline.max_bp_iters,
    ) != (
        shaped.frames_per_point,
        shaped.min_error_events,
        shaped.max_frames_per_point,
        shaped.mi_samples,
        shaped.max_bp_iters,
    ) {
        return Err(Error::SweepMismatch("stopping policy"));
    }
    let base = run_bler(baseline)?;
    let shp = run_bler(shaped)?;
    Ok(join_sweep(&base, &shp))
}

/// Joins two finished runs over the same grid into sweep rows.
pub fn join_sweep(base: &SimResult, shaped: &SimResult) -> Vec<SweepRow> {
    base.points
        .iter()
        .zip(&shaped.points)
        .map(|(b, s)| SweepRow {
            snr_db: b.snr_db,
            mi_qam: b.mi,
            mi_shaped: s.mi,
            mi_gain: if b.mi > 0.0 { s.mi / b.mi - 1.0 } else { f64::NAN },
            bler_qam: b.bler,
            bler_shaped: s.bler,
            se_qam: b.se,
            se_shaped: s.se,
            se_gain: if b.se > 0.0 { s.se / b.se - 1.0 } else { f64::NAN },
            censored_qam: b.censored,
            censored_shaped: s.censored,
        })
        .collect()
}
