//! Monte Carlo link simulation: trials, Eb/N0 sweeps and CSV output.
//!
//! Every trial owns a ChaCha stream keyed by `(master_seed, point, trial)`,
//! so results do not depend on scheduling, batch size or thread count.
//! Early stopping scans trial outcomes in index order.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{hardening_transmit, ChannelError, ChannelRealization, NoiseParams};
use crate::code::{CodeError, RlcCode};
use crate::decoder::{grand_decode, DecoderError, GrandConfig};
use crate::detector::{DetectorError, ZfFilter};
use crate::gf2::{BitWord, Gf2Error};
use crate::modem::{required_antennas, Complex64, Constellation, Mapping, ModemError};

/// Channel draws attempted per trial before a singular channel is fatal.
const MAX_CHANNEL_DRAWS: usize = 64;
const BATCH: u64 = 256;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Modem(#[from] ModemError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("{0} consecutive singular channel draws")]
    SingularChannel(usize),
    #[error("no results to write")]
    NoResults,
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelModel {
    /// Rayleigh mMIMO channel with zero-forcing detection.
    RayleighZf,
    /// Perfect channel hardening: parallel AWGN branches with noise `σ²/N_R`.
    Hardening,
    /// Rayleigh/ZF link carrying the message bits without coding.
    UncodedRayleighZf,
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelModel::RayleighZf => "rayleigh_zf",
            ChannelModel::Hardening => "hardening",
            ChannelModel::UncodedRayleighZf => "uncoded_rayleigh_zf",
        })
    }
}

impl FromStr for ChannelModel {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "rayleigh_zf" | "zf" => Ok(ChannelModel::RayleighZf),
            "hardening" => Ok(ChannelModel::Hardening),
            "uncoded_rayleigh_zf" | "uncoded" => Ok(ChannelModel::UncodedRayleighZf),
            other => Err(SimError::Config(format!("unknown channel model {other:?}"))),
        }
    }
}

/// Parses `start:step:stop` (inclusive), a comma-separated list, or one value.
pub fn parse_ebno_grid(text: &str) -> Result<Vec<f64>, SimError> {
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| SimError::Config(format!("bad Eb/N0 value {t:?}: {e}")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts[..] {
        [start, step, stop] => {
            let (start, step, stop) = (parse(start)?, parse(step)?, parse(stop)?);
            if step.is_nan()
                || step <= 0.0
                || !start.is_finite()
                || !stop.is_finite()
                || stop < start
            {
                return Err(SimError::Config(format!("bad Eb/N0 range {text:?}")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| start + i as f64 * step).collect()
        }
        [_] => text.split(',').map(parse).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(SimError::Config(format!("bad Eb/N0 grid {text:?}"))),
    };
    Ok(grid)
}

/// `Es/N0 = Eb/N0 · R · log2(M)` for unit-energy symbols.
pub fn ebno_to_snr(ebno_db: f64, rate: f64, m: usize) -> f64 {
    10f64.powf(ebno_db / 10.0) * rate * (m.trailing_zeros() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n: usize,
    pub k: usize,
    /// QAM order.
    pub m: usize,
    pub mapping: Mapping,
    pub n_r: usize,
    pub channel_model: ChannelModel,
    /// GRAND weight threshold.
    pub n_b: usize,
    pub ebno_grid_db: Vec<f64>,
    /// Trial cap per grid point.
    pub trials_per_point: u64,
    /// Stop a point once this many block errors were seen; 0 disables.
    pub min_block_errors: u64,
    pub master_seed: u64,
    /// Receiver noise variance per complex dimension (1 unless debugging).
    pub sigma2: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: 128,
            k: 103,
            m: 16,
            mapping: Mapping::Gray,
            n_r: 200,
            channel_model: ChannelModel::RayleighZf,
            n_b: 2,
            ebno_grid_db: vec![0.0],
            trials_per_point: 10_000,
            min_block_errors: 100,
            master_seed: 0,
            sigma2: 1.0,
        }
    }
}

const CONFIG_KEYS: [&str; 12] = [
    "n",
    "k",
    "m",
    "mapping",
    "n_r",
    "channel_model",
    "n_b",
    "ebno_grid_db",
    "trials_per_point",
    "min_block_errors",
    "master_seed",
    "sigma2",
];

/// Reads flat `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, SimError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| SimError::Config(format!("line {}: expected key=value", lineno + 1)))?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(SimError::Config(format!(
                "line {}: unknown key {key:?}",
                lineno + 1
            )));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

impl SweepConfig {
    /// Builds a config from `key = value` entries; unspecified keys required
    /// by the link (`n k m n_r n_b ebno_grid_db`) are an error.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, SimError> {
        if let Some(bad) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(SimError::Config(format!("unknown key {bad:?}")));
        }
        fn req<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T, SimError>
        where
            T::Err: fmt::Display,
        {
            let raw = map
                .get(key)
                .ok_or_else(|| SimError::Config(format!("missing required setting `{key}`")))?;
            raw.parse::<T>()
                .map_err(|e| SimError::Config(format!("`{key}` = {raw:?}: {e}")))
        }
        let defaults = SweepConfig::default();
        let opt = |key: &str| map.contains_key(key);
        let cfg = SweepConfig {
            n: req(map, "n")?,
            k: req(map, "k")?,
            m: req(map, "m")?,
            mapping: if opt("mapping") {
                req(map, "mapping")?
            } else {
                defaults.mapping
            },
            n_r: req(map, "n_r")?,
            channel_model: if opt("channel_model") {
                map["channel_model"].parse()?
            } else {
                defaults.channel_model
            },
            n_b: req(map, "n_b")?,
            ebno_grid_db: parse_ebno_grid(map.get("ebno_grid_db").ok_or_else(|| {
                SimError::Config("missing required setting `ebno_grid_db`".into())
            })?)?,
            trials_per_point: if opt("trials_per_point") {
                req(map, "trials_per_point")?
            } else {
                defaults.trials_per_point
            },
            min_block_errors: if opt("min_block_errors") {
                req(map, "min_block_errors")?
            } else {
                defaults.min_block_errors
            },
            master_seed: if opt("master_seed") {
                req(map, "master_seed")?
            } else {
                defaults.master_seed
            },
            sigma2: if opt("sigma2") {
                req(map, "sigma2")?
            } else {
                defaults.sigma2
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_kv_str(text: &str) -> Result<Self, SimError> {
        Self::from_map(&parse_key_values(text)?)
    }

    pub fn to_kv_string(&self) -> String {
        let grid: Vec<String> = self.ebno_grid_db.iter().map(|v| v.to_string()).collect();
        format!(
            "n = {}\nk = {}\nm = {}\nmapping = {}\nn_r = {}\nchannel_model = {}\nn_b = {}\n\
             ebno_grid_db = {}\ntrials_per_point = {}\nmin_block_errors = {}\nmaster_seed = {}\nsigma2 = {}\n",
            self.n,
            self.k,
            self.m,
            self.mapping,
            self.n_r,
            self.channel_model,
            self.n_b,
            grid.join(","),
            self.trials_per_point,
            self.min_block_errors,
            self.master_seed,
            self.sigma2
        )
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Transmit antennas `N_T = n / log2(M)`.
    pub fn n_t(&self) -> Result<usize, SimError> {
        Ok(required_antennas(self.n, self.m)?)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.k == 0 || self.k >= self.n {
            return Err(SimError::Config(format!(
                "need 0 < k < n (n={}, k={})",
                self.n, self.k
            )));
        }
        let n_t = self.n_t()?;
        if self.n_r < n_t {
            return Err(SimError::Config(format!(
                "n_r={} is smaller than the {n_t} transmit antennas",
                self.n_r
            )));
        }
        if self.n_b > self.n {
            return Err(SimError::Config(format!(
                "n_b={} exceeds n={}",
                self.n_b, self.n
            )));
        }
        if self.ebno_grid_db.is_empty() {
            return Err(SimError::Config("empty Eb/N0 grid".into()));
        }
        if self.ebno_grid_db.iter().any(|v| !v.is_finite())
            || self.ebno_grid_db.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(SimError::Config(
                "Eb/N0 grid must be finite and strictly increasing".into(),
            ));
        }
        if self.trials_per_point == 0 || self.trials_per_point >= 1 << 40 {
            return Err(SimError::Config(
                "trials_per_point must be in [1, 2^40)".into(),
            ));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(SimError::Config(format!(
                "sigma2={} must be >= 0",
                self.sigma2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub block_error: bool,
    pub queries: u64,
    pub decode_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub ebno_db: f64,
    pub trials_run: u64,
    pub block_errors: u64,
    pub bler: f64,
    /// Normal-approximation 95% half-width.
    pub bler_ci95: f64,
    /// Mean membership queries per trial; 0 for the uncoded model.
    pub avg_queries: f64,
    pub avg_decode_seconds: f64,
}

/// Per-trial random stream.
pub fn trial_rng(master_seed: u64, point: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((point as u64) << 40) | trial);
    rng
}

/// A validated configuration with the fixed link objects prepared.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SweepConfig,
    constellation: Constellation,
    n_t: usize,
    grand: GrandConfig,
}

impl Simulation {
    pub fn new(cfg: SweepConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let constellation = Constellation::new(cfg.m, cfg.mapping)?;
        let n_t = cfg.n_t()?;
        let grand = GrandConfig::new(cfg.n_b);
        Ok(Simulation {
            cfg,
            constellation,
            n_t,
            grand,
        })
    }

    pub fn config(&self) -> &SweepConfig {
        &self.cfg
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    /// One end-to-end transmission of a fresh message over a fresh code and channel.
    pub fn run_trial(
        &self,
        point: usize,
        ebno_db: f64,
        trial: u64,
    ) -> Result<TrialOutcome, SimError> {
        let cfg = &self.cfg;
        let mut rng = trial_rng(cfg.master_seed, point, trial);
        let snr = ebno_to_snr(ebno_db, cfg.rate(), cfg.m);
        let message = BitWord::random(cfg.k, &mut rng)?;

        let (code, transmitted) = match cfg.channel_model {
            ChannelModel::UncodedRayleighZf => {
                let padding = BitWord::random(cfg.n - cfg.k, &mut rng)?;
                (None, padding.concat(&message))
            }
            _ => {
                let code = RlcCode::generate(cfg.n, cfg.k, &mut rng)?;
                let x = code.encode(&message)?;
                (Some(code), x)
            }
        };
        let symbols = self.constellation.map_bits(&transmitted)?;

        let estimate = match cfg.channel_model {
            ChannelModel::Hardening => {
                let y = hardening_transmit(&symbols, cfg.sigma2, cfg.n_r, snr, &mut rng)?;
                y / Complex64::from(snr.sqrt())
            }
            ChannelModel::RayleighZf | ChannelModel::UncodedRayleighZf => {
                let (channel, filter) = self.draw_channel(&mut rng)?;
                let noise = NoiseParams::new(cfg.sigma2, snr)?;
                let y = channel.transmit(&symbols, &noise, &mut rng)?;
                filter.detect(&y, snr)?
            }
        };
        let received = self.constellation.demap_symbols(estimate.as_slice())?;

        let Some(code) = code else {
            let sent = transmitted.slice(cfg.n - cfg.k, cfg.k)?;
            let got = received.slice(cfg.n - cfg.k, cfg.k)?;
            return Ok(TrialOutcome {
                block_error: sent != got,
                queries: 0,
                decode_seconds: 0.0,
            });
        };

        let start = Instant::now();
        let outcome = grand_decode(&code, &received, &self.grand)?;
        let decode_seconds = start.elapsed().as_secs_f64();
        let decoded = code.extract_message(&outcome.codeword)?;
        Ok(TrialOutcome {
            block_error: decoded != message,
            queries: outcome.queries,
            decode_seconds,
        })
    }

    fn draw_channel(
        &self,
        rng: &mut ChaCha8Rng,
    ) -> Result<(ChannelRealization, ZfFilter), SimError> {
        for _ in 0..MAX_CHANNEL_DRAWS {
            let channel = ChannelRealization::sample(self.cfg.n_r, self.n_t, rng)?;
            match ZfFilter::build(&channel) {
                Ok(filter) => return Ok((channel, filter)),
                Err(DetectorError::Singular { .. }) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Err(SimError::SingularChannel(MAX_CHANNEL_DRAWS))
    }

    /// Runs trials of one grid point until the error target or the trial cap.
    pub fn run_point(&self, point: usize) -> Result<PointResult, SimError> {
        let cfg = &self.cfg;
        let ebno_db = *cfg
            .ebno_grid_db
            .get(point)
            .ok_or_else(|| SimError::Config(format!("grid point {point} out of range")))?;
        let cap = cfg.trials_per_point;
        let (mut trials, mut errors, mut queries, mut seconds) = (0u64, 0u64, 0u64, 0.0f64);
        'outer: while trials < cap {
            let end = (trials + BATCH).min(cap);
            let batch: Vec<TrialOutcome> = (trials..end)
                .into_par_iter()
                .map(|t| self.run_trial(point, ebno_db, t))
                .collect::<Result<_, _>>()?;
            for o in batch {
                trials += 1;
                errors += u64::from(o.block_error);
                queries += o.queries;
                seconds += o.decode_seconds;
                if cfg.min_block_errors > 0 && errors >= cfg.min_block_errors {
                    break 'outer;
                }
            }
        }
        let t = trials as f64;
        let bler = errors as f64 / t;
        Ok(PointResult {
            ebno_db,
            trials_run: trials,
            block_errors: errors,
            bler,
            bler_ci95: 1.96 * (bler * (1.0 - bler) / t).sqrt(),
            avg_queries: queries as f64 / t,
            avg_decode_seconds: seconds / t,
        })
    }

    /// Runs every grid point, reporting each finished point to `progress`.
    pub fn run_sweep_with<F: FnMut(&PointResult)>(
        &self,
        mut progress: F,
    ) -> Result<Vec<PointResult>, SimError> {
        (0..self.cfg.ebno_grid_db.len())
            .map(|p| {
                let r = self.run_point(p)?;
                progress(&r);
                Ok(r)
            })
            .collect()
    }
}

pub fn run_trial(cfg: &SweepConfig, point: usize, trial: u64) -> Result<TrialOutcome, SimError> {
    let ebno = *cfg
        .ebno_grid_db
        .get(point)
        .ok_or_else(|| SimError::Config(format!("grid point {point} out of range")))?;
    Simulation::new(cfg.clone())?.run_trial(point, ebno, trial)
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<PointResult>, SimError> {
    Simulation::new(cfg.clone())?.run_sweep_with(|_| {})
}

pub const CSV_HEADER: &str = "ebno_db,trials,block_errors,bler,bler_ci95,avg_queries,avg_decode_ns";

/// Scientific notation with 6 fractional mantissa digits and a signed
/// two-digit exponent, e.g. `1.230000e-03`.
pub fn format_scientific(x: f64) -> String {
    let s = format!("{x:.6e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let e: i32 = exp.parse().expect("exponent from formatter");
            let sign = if e < 0 { '-' } else { '+' };
            format!("{mantissa}e{sign}{:02}", e.abs())
        }
        None => s,
    }
}

pub fn emit_csv<W: Write>(results: &[PointResult], mut out: W) -> Result<(), SimError> {
    if results.is_empty() {
        return Err(SimError::NoResults);
    }
    writeln!(out, "{CSV_HEADER}")?;
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.1}",
            r.ebno_db,
            r.trials_run,
            r.block_errors,
            format_scientific(r.bler),
            format_scientific(r.bler_ci95),
            format_scientific(r.avg_queries),
            r.avg_decode_seconds * 1e9
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Writes the CSV next to `path` and renames it into place on success.
pub fn write_csv_file(results: &[PointResult], path: &Path) -> Result<(), SimError> {
    if results.is_empty() {
        return Err(SimError::NoResults);
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    emit_csv(results, io::BufWriter::new(tmp.as_file_mut()))?;
    tmp.persist(path).map_err(|e| SimError::Io(e.error))?;
    Ok(())
}

/// A CSV row read back into numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub ebno_db: f64,
    pub trials: u64,
    pub block_errors: u64,
    pub bler: f64,
    pub bler_ci95: f64,
    pub avg_queries: f64,
    pub avg_decode_ns: f64,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, SimError> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(SimError::Config("missing CSV header".into()));
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(SimError::Config(format!("bad CSV row {line:?}")));
            }
            let num = |i: usize| {
                f[i].parse::<f64>()
                    .map_err(|e| SimError::Config(format!("bad CSV field {:?}: {e}", f[i])))
            };
            let int = |i: usize| {
                f[i].parse::<u64>()
                    .map_err(|e| SimError::Config(format!("bad CSV field {:?}: {e}", f[i])))
            };
            Ok(CsvRow {
                ebno_db: num(0)?,
                trials: int(1)?,
                block_errors: int(2)?,
                bler: num(3)?,
                bler_ci95: num(4)?,
                avg_queries: num(5)?,
                avg_decode_ns: num(6)?,
            })
        })
        .collect()
}
