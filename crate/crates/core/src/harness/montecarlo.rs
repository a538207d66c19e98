//! Monte-Carlo SINR sweep.
//!
//! Every frame draws a fresh channel and symbol frame, keyed by the frame
//! index alone, so all SNR points see the same channels and symbols and
//! differ only in noise. Noise is keyed by `(point, frame)`. Frames run in
//! parallel; results are reduced in frame order, so the report does not
//! depend on scheduling.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use log::warn;
use rayon::prelude::*;

use crate::channel::{draw_channel, to_bin_channels, ChannelConfig};
use crate::detect::{detect_frame, DetectorKind};
use crate::error::{Error, Result};
use crate::frame::{generate_symbols, to_frequency_domain, transmit, FrameConfig};
use crate::harness::metrics::{measure_sinr, theoretical_gains, to_db};
use crate::rng::{derive_seed, keyed_rng, TAG_FRAME, TAG_NOISE, TAG_SYMBOLS};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Channel dimensions and profile. `channel.seed` is the master seed.
    pub channel: ChannelConfig,
    /// Frame layout; `snr_in_db` is replaced by each sweep point.
    pub frame: FrameConfig,
    pub detectors: Vec<DetectorKind>,
    pub snr_sweep: Vec<f64>,
    pub frames_per_point: usize,
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    /// The 64-antenna, 14-user scenario swept from -30 to +10 dB in 2 dB
    /// steps with 20 frames per point.
    pub fn reference(seed: u64) -> Self {
        ScenarioConfig {
            channel: ChannelConfig::reference(seed),
            frame: FrameConfig::reference(0.0),
            detectors: vec![DetectorKind::MrcMmse, DetectorKind::TrMrc],
            snr_sweep: (0..=20).map(|i| -30.0 + 2.0 * i as f64).collect(),
            frames_per_point: 20,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.frame.n != self.channel.n {
            return Err(Error::invalid(format!(
                "frame length {} differs from channel frame length {}",
                self.frame.n, self.channel.n
            )));
        }
        if self.channel.l_h + 1 > self.frame.l_cp {
            return Err(Error::invalid(format!(
                "need L_h <= L_cp - 1, got L_h={} L_cp={}",
                self.channel.l_h, self.frame.l_cp
            )));
        }
        if self.frame.l_cp > self.frame.n {
            return Err(Error::invalid("cyclic prefix longer than the frame"));
        }
        if self.frames_per_point == 0 {
            return Err(Error::invalid("frames_per_point must be at least 1"));
        }
        if self.snr_sweep.is_empty() {
            return Err(Error::invalid("SNR sweep is empty"));
        }
        if let Some(x) = self.snr_sweep.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("sweep point {x} is not finite")));
        }
        if self.detectors.is_empty() {
            return Err(Error::invalid("no detectors selected"));
        }
        Ok(())
    }
}

/// Aggregated result for one detector at one input SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrPoint {
    pub input_snr_db: f64,
    pub detector: DetectorKind,
    /// Linear SINR averaged over users and frames, in dB.
    pub mean_output_sinr_db: f64,
    pub gain_db: f64,
    pub gain_low_db: f64,
    pub gain_high_db: f64,
    /// Frames that contributed.
    pub n_frames: usize,
    /// Frames whose detector returned an error.
    pub n_failed: usize,
    /// User SINRs that came out infinite and were left out of the average.
    pub n_infinite: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrReport {
    pub points: Vec<SinrPoint>,
}

impl SinrReport {
    pub const HEADER: &'static str =
        "input_snr_db,detector,mean_output_sinr_db,gain_db,gain_low_db,gain_high_db,n_frames";

    pub fn point(&self, detector: DetectorKind, input_snr_db: f64) -> Option<&SinrPoint> {
        self.points
            .iter()
            .find(|p| p.detector == detector && p.input_snr_db == input_snr_db)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        for p in &self.points {
            writeln!(
                w,
                "{:.3},{},{:.6},{:.6},{:.6},{:.6},{}",
                p.input_snr_db,
                p.detector,
                p.mean_output_sinr_db,
                p.gain_db,
                p.gain_low_db,
                p.gain_high_db,
                p.n_frames
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Run conventions written next to the CSV.
pub fn metadata(cfg: &ScenarioConfig, report: &SinrReport) -> String {
    let mut s = String::new();
    let c = &cfg.channel;
    let _ = writeln!(s, "seed={}", c.seed);
    let _ = writeln!(s, "m={}\nk={}\nn={}\nl_h={}\nl_cp={}", c.m, c.k, c.n, c.l_h, cfg.frame.l_cp);
    let _ = writeln!(s, "decay_samples={}", c.decay_samples);
    let _ = writeln!(s, "power_low={}\npower_high={}", c.power_spread.0, c.power_spread.1);
    let _ = writeln!(s, "constellation={}", cfg.frame.constellation);
    let _ = writeln!(s, "frames_per_point={}", cfg.frames_per_point);
    let _ = writeln!(s, "sinr_estimator=known-symbol error vector, 1/mean|s_hat-s|^2 per user");
    let _ = writeln!(s, "averaging=linear SINR over users and frames, then dB");
    let _ = writeln!(s, "tr_mrc_scaling=per bin, user k scaled by M/(A^H A)_kk");
    let failed: usize = report.points.iter().map(|p| p.n_failed).sum();
    let infinite: usize = report.points.iter().map(|p| p.n_infinite).sum();
    let _ = writeln!(s, "failed_frames={failed}\ninfinite_sinr_samples={infinite}");
    s
}

/// Per-frame outcome for every (point, detector): user SINRs or a failure.
type FrameOutcome = Vec<Vec<std::result::Result<Vec<f64>, String>>>;

fn run_frame(cfg: &ScenarioConfig, frame_idx: usize) -> Result<FrameOutcome> {
    let seed = cfg.channel.seed;
    let channel_cfg = ChannelConfig {
        seed: derive_seed(seed, &[TAG_FRAME, frame_idx as u64]),
        ..cfg.channel.clone()
    };
    let channel = draw_channel(&channel_cfg)?;
    let bins = to_bin_channels(&channel);
    let mut sym_rng = keyed_rng(seed, &[TAG_SYMBOLS, frame_idx as u64]);
    let symbols = generate_symbols(channel.k(), channel.n(), cfg.frame.constellation, &mut sym_rng)?;

    cfg.snr_sweep
        .iter()
        .enumerate()
        .map(|(point_idx, &snr)| {
            let fc = FrameConfig {
                snr_in_db: snr,
                ..cfg.frame.clone()
            };
            let mut noise_rng = keyed_rng(seed, &[TAG_NOISE, point_idx as u64, frame_idx as u64]);
            let received = transmit(&symbols, &channel, &fc, &mut noise_rng)?;
            let fd = to_frequency_domain(&received)?;
            Ok(cfg
                .detectors
                .iter()
                .map(|&kind| {
                    detect_frame(&fd, &bins, fc.sigma_w2(), kind)
                        .and_then(|res| measure_sinr(&res, &symbols))
                        .map_err(|e| e.to_string())
                })
                .collect())
        })
        .collect()
}

/// Runs the sweep and, when `cfg.output` is set, writes the CSV there plus a
/// `.meta` sidecar with the run conventions.
pub fn run_monte_carlo(cfg: &ScenarioConfig) -> Result<SinrReport> {
    cfg.validate()?;
    let (gain_low, gain_high) = theoretical_gains(cfg.channel.m, cfg.channel.k)?;

    let frames: Vec<FrameOutcome> = (0..cfg.frames_per_point)
        .into_par_iter()
        .map(|f| run_frame(cfg, f))
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    for (p, &snr) in cfg.snr_sweep.iter().enumerate() {
        for (d, &kind) in cfg.detectors.iter().enumerate() {
            let (mut sum, mut count, mut n_frames, mut n_failed, mut n_infinite) = (0.0, 0usize, 0, 0, 0);
            for (f, outcome) in frames.iter().enumerate() {
                match &outcome[p][d] {
                    Ok(sinrs) => {
                        n_frames += 1;
                        for &s in sinrs {
                            if s.is_finite() {
                                sum += s;
                                count += 1;
                            } else {
                                n_infinite += 1;
                            }
                        }
                    }
                    Err(e) => {
                        warn!("{kind} at {snr} dB, frame {f}: {e}");
                        n_failed += 1;
                    }
                }
            }
            if n_infinite > 0 {
                warn!("{kind} at {snr} dB: {n_infinite} error-free user frames left out of the average");
            }
            let mean_db = if count > 0 { to_db(sum / count as f64) } else { f64::NAN };
            points.push(SinrPoint {
                input_snr_db: snr,
                detector: kind,
                mean_output_sinr_db: mean_db,
                gain_db: mean_db - snr,
                gain_low_db: to_db(gain_low),
                gain_high_db: to_db(gain_high),
                n_frames,
                n_failed,
                n_infinite,
            });
        }
    }
    let report = SinrReport { points };

    if let Some(path) = &cfg.output {
        std::fs::write(path, report.to_csv_string())?;
        let mut meta = path.clone().into_os_string();
        meta.push(".meta");
        std::fs::write(PathBuf::from(meta), metadata(cfg, &report))?;
    }
    Ok(report)
}
