//! `key = value` scenario files.
//!
//! One setting per line; `#` starts a comment. Recognised keys:
//!
//! ```text
//! m, k, n, l_h, l_cp, decay_samples, power_low, power_high, seed,
//! constellation, detectors, snr_sweep, frames_per_point, output
//! ```
//!
//! `detectors` is a comma list (`mrc-mmse,tr-mrc`). `snr_sweep` is either a
//! comma list of dB values or `start:stop:step`. Any key left out takes the
//! value from [`ScenarioConfig::reference`] with seed [`DEFAULT_SEED`].

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::montecarlo::ScenarioConfig;

pub const DEFAULT_SEED: u64 = 1;

pub const KEYS: [&str; 14] = [
    "m",
    "k",
    "n",
    "l_h",
    "l_cp",
    "decay_samples",
    "power_low",
    "power_high",
    "seed",
    "constellation",
    "detectors",
    "snr_sweep",
    "frames_per_point",
    "output",
];

pub type ConfigMap = BTreeMap<String, String>;

/// Parses `key = value` lines. Unknown or repeated keys are errors.
pub fn parse_kv(text: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key `{key}`", i + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: `{key}` set twice", i + 1)));
        }
    }
    Ok(map)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

/// `start:stop:step` (inclusive of `stop` up to rounding) or a comma list.
pub fn parse_sweep(value: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (f64, f64, f64) =
                (parse("snr_sweep", start)?, parse("snr_sweep", stop)?, parse("snr_sweep", step)?);
            if !(step > 0.0) || stop < start {
                return Err(Error::Config(format!("`snr_sweep`: bad range `{value}`")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + step * i as f64).collect())
        }
        [_] => value
            .split(',')
            .map(|v| parse("snr_sweep", v.trim()))
            .collect(),
        _ => Err(Error::Config(format!("`snr_sweep`: bad value `{value}`"))),
    }
}

/// Builds a scenario from parsed settings, defaulting unset keys.
pub fn scenario_from_map(map: &ConfigMap) -> Result<ScenarioConfig> {
    let seed = match map.get("seed") {
        Some(v) => parse("seed", v)?,
        None => DEFAULT_SEED,
    };
    let mut cfg = ScenarioConfig::reference(seed);
    for (key, value) in map {
        let v = value.as_str();
        match key.as_str() {
            "m" => cfg.channel.m = parse(key, v)?,
            "k" => cfg.channel.k = parse(key, v)?,
            "n" => {
                cfg.channel.n = parse(key, v)?;
                cfg.frame.n = cfg.channel.n;
            }
            "l_h" => cfg.channel.l_h = parse(key, v)?,
            "l_cp" => cfg.frame.l_cp = parse(key, v)?,
            "decay_samples" => cfg.channel.decay_samples = parse(key, v)?,
            "power_low" => cfg.channel.power_spread.0 = parse(key, v)?,
            "power_high" => cfg.channel.power_spread.1 = parse(key, v)?,
            "seed" => {}
            "constellation" => cfg.frame.constellation = v.parse()?,
            "detectors" => {
                cfg.detectors = v
                    .split(',')
                    .filter(|d| !d.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "snr_sweep" => cfg.snr_sweep = parse_sweep(v)?,
            "frames_per_point" => cfg.frames_per_point = parse(key, v)?,
            "output" => cfg.output = (!v.is_empty()).then(|| PathBuf::from(v)),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Renders a scenario back into `key = value` form.
pub fn scenario_to_kv(cfg: &ScenarioConfig) -> String {
    let c = &cfg.channel;
    let detectors: Vec<&str> = cfg.detectors.iter().map(|d| d.name()).collect();
    let sweep: Vec<String> = cfg.snr_sweep.iter().map(|x| x.to_string()).collect();
    let mut out = format!(
        "m = {}\nk = {}\nn = {}\nl_h = {}\nl_cp = {}\ndecay_samples = {}\npower_low = {}\npower_high = {}\nseed = {}\nconstellation = {}\ndetectors = {}\nsnr_sweep = {}\nframes_per_point = {}\n",
        c.m,
        c.k,
        c.n,
        c.l_h,
        cfg.frame.l_cp,
        c.decay_samples,
        c.power_spread.0,
        c.power_spread.1,
        c.seed,
        cfg.frame.constellation,
        detectors.join(","),
        sweep.join(","),
        cfg.frames_per_point
    );
    if let Some(p) = &cfg.output {
        out.push_str(&format!("output = {}\n", p.display()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::DetectorKind;
    use crate::frame::Constellation;

    #[test]
    fn defaults_are_reference_scenario() {
        let cfg = scenario_from_map(&ConfigMap::new()).unwrap();
        assert_eq!(cfg, ScenarioConfig::reference(DEFAULT_SEED));
        assert_eq!(cfg.snr_sweep.len(), 21);
        assert_eq!(cfg.snr_sweep[0], -30.0);
        assert_eq!(cfg.snr_sweep[20], 10.0);
    }

    #[test]
    fn parses_a_file() {
        let text = "# small run\nm = 8\nk=2\nn = 64 # frame\nl_h = 6\nl_cp = 8\nseed = 9\n\
                    constellation = 16qam\ndetectors = mmse, mrc-mmse\nsnr_sweep = -4:4:4\n\
                    frames_per_point = 2\noutput = out.csv\n";
        let cfg = scenario_from_map(&parse_kv(text).unwrap()).unwrap();
        assert_eq!((cfg.channel.m, cfg.channel.k, cfg.channel.n, cfg.frame.n), (8, 2, 64, 64));
        assert_eq!(cfg.channel.seed, 9);
        assert_eq!(cfg.frame.constellation, Constellation::Qam16);
        assert_eq!(cfg.detectors, vec![DetectorKind::Mmse, DetectorKind::MrcMmse]);
        assert_eq!(cfg.snr_sweep, vec![-4.0, 0.0, 4.0]);
        assert_eq!(cfg.output, Some(PathBuf::from("out.csv")));
        let again = scenario_from_map(&parse_kv(&scenario_to_kv(&cfg)).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_kv("bogus = 1").is_err());
        assert!(parse_kv("m = 1\nm = 2").is_err());
        assert!(parse_kv("m 4").is_err());
        assert!(scenario_from_map(&parse_kv("m = four").unwrap()).is_err());
        assert!(scenario_from_map(&parse_kv("k = 64").unwrap()).is_err());
        assert!(scenario_from_map(&parse_kv("constellation = 8psk").unwrap()).is_err());
        assert!(parse_sweep("1:0:1").is_err());
        assert!(parse_sweep("0:1:0").is_err());
        assert_eq!(parse_sweep("1, 2.5").unwrap(), vec![1.0, 2.5]);
    }
}
