//! Run configuration shared by flags and config files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use octagon_core::report::Format;
use serde::{Deserialize, Serialize};

/// Every parameter any command takes. Config files use the same keys; a
/// written report's `config` block is itself a valid config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_s: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_ell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub haar_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height_cut: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height_center: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_center: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr; $($f:ident),*) => {
        RunConfig { $($f: $hi.$f.or($lo.$f),)* }
    };
}

impl RunConfig {
    /// Values in `self` win; gaps are filled from `lower`.
    pub fn over(self, lower: RunConfig) -> RunConfig {
        overlay!(self, lower; command, t, n, kappa, rho, eps, eps2, n_s, n_ell, haar_n, height_cut, t_list,
            deltas, height_center, height_width, angle_center, angle_width, ell, s, seed, threads, out, format)
    }

    /// Reads a config file, or the `config` block of a written report.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let v: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let v = match v.get("config") {
            Some(inner) if v.get("report").is_some() => inner.clone(),
            _ => v,
        };
        serde_json::from_value(v).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }
}

/// Usage errors map to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

pub fn require(ok: bool, flag: &str, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        usage(format!("--{flag}: {msg}"))
    }
}

/// Fills the defaults of `command` into `cfg` and validates the result.
pub fn resolve(command: &str, cfg: RunConfig) -> Result<RunConfig> {
    let defaults = match command {
        "verify" => RunConfig::default(),
        "scan" => RunConfig { t: Some(12.0), n: Some(10_000), kappa: Some(0.1), rho: Some(0.1), ..Default::default() },
        "equi" => RunConfig {
            t: Some(10.0),
            n: Some(100_000),
            haar_n: Some(100_000),
            height_center: Some(10.0),
            height_width: Some(1.5),
            angle_center: Some(std::f64::consts::FRAC_PI_2),
            angle_width: Some(1.2),
            ..Default::default()
        },
        "recur" => RunConfig {
            t_list: Some(vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0]),
            height_cut: Some(40.0),
            n: Some(10_000),
            haar_n: Some(200_000),
            ..Default::default()
        },
        "match" => RunConfig { eps: Some(0.1), eps2: Some(1.0), t: Some(12.0), n: Some(200), ..Default::default() },
        "tremor" => RunConfig { ell: Some("1/3".into()), ..Default::default() },
        "avoid" => RunConfig {
            t: Some(10.0),
            rho: Some(0.05),
            n_s: Some(2000),
            n_ell: Some(2000),
            deltas: Some(vec![1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1]),
            ..Default::default()
        },
        other => bail!(UsageError(format!("unknown command {other}"))),
    };
    let mut cfg = cfg.over(defaults);
    if let Some(c) = &cfg.command {
        if c != command {
            return usage(format!("config is for command {c}, not {command}"));
        }
    }
    cfg.command = Some(command.to_string());
    cfg.seed = Some(cfg.seed());
    let finite = |x: Option<f64>| x.map_or(true, f64::is_finite);
    for (name, v) in [
        ("t", cfg.t),
        ("kappa", cfg.kappa),
        ("rho", cfg.rho),
        ("eps", cfg.eps),
        ("eps2", cfg.eps2),
        ("height-cut", cfg.height_cut),
        ("s", cfg.s),
    ] {
        require(finite(v), name, "must be finite")?;
    }
    require(cfg.threads.map_or(true, |k| k >= 1), "threads", "must be at least 1")?;
    let open01 = |x: Option<f64>| x.map_or(true, |v| v > 0.0 && v < 1.0);
    match command {
        "scan" => {
            require(cfg.t.unwrap() >= 0.0, "t", "must be non-negative")?;
            require(cfg.n.unwrap() >= 1000, "n", "must be at least 1000")?;
            require(open01(cfg.kappa), "kappa", "must lie in (0, 1)")?;
            require(open01(cfg.rho), "rho", "must lie in (0, 1)")?;
        }
        "equi" => {
            require(cfg.t.unwrap() >= 0.0, "t", "must be non-negative")?;
            require(cfg.n.unwrap() >= 1, "n", "must be positive")?;
            require(cfg.height_center.unwrap() > 0.0, "height-center", "must be positive")?;
            require(cfg.height_width.unwrap() > 0.0, "height-width", "must be positive")?;
            require(cfg.angle_width.unwrap() > 0.0, "angle-width", "must be positive")?;
        }
        "recur" => {
            let ts = cfg.t_list.as_ref().unwrap();
            require(!ts.is_empty() && ts.iter().all(|t| t.is_finite() && *t >= 0.0), "t-list", "needs non-negative times")?;
            require(cfg.height_cut.unwrap() > 0.0, "height-cut", "must be positive")?;
            require(cfg.n.unwrap() >= 1, "n", "must be positive")?;
            require(cfg.haar_n.unwrap() >= 1, "haar-n", "must be positive")?;
        }
        "match" => {
            require(open01(cfg.eps), "eps", "must lie in (0, 1)")?;
            require(cfg.eps2.unwrap() > 0.0, "eps2", "must be positive")?;
            require(cfg.t.unwrap() > 0.0, "t", "must be positive")?;
            require(cfg.n.unwrap() >= 1, "n", "must be positive")?;
        }
        "tremor" => {
            let ell = cfg.ell.as_ref().unwrap();
            require(ell.parse::<octagon_core::QSqrt2>().is_ok(), "ell", "must be an element of Q(sqrt2) such as 1/3")?;
            require(cfg.t.map_or(true, |t| t >= 0.0), "t", "must be non-negative")?;
        }
        "avoid" => {
            require(cfg.t.unwrap() >= 0.0, "t", "must be non-negative")?;
            require(open01(cfg.rho), "rho", "must lie in (0, 1)")?;
            require(cfg.n_s.unwrap() >= 1, "n-s", "must be positive")?;
            require(cfg.n_ell.unwrap() >= 2, "n-ell", "must be at least 2")?;
            require(cfg.deltas.as_ref().unwrap().iter().all(|d| *d > 0.0), "deltas", "must be positive")?;
        }
        _ => {}
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let flags = RunConfig { t: Some(3.0), ..Default::default() };
        let file = RunConfig { t: Some(9.0), n: Some(2000), ..Default::default() };
        let c = resolve("scan", flags.over(file)).unwrap();
        assert_eq!(c.t, Some(3.0));
        assert_eq!(c.n, Some(2000));
        assert_eq!(c.kappa, Some(0.1));
        assert_eq!(c.seed, Some(1));
    }

    #[test]
    fn validation_is_a_usage_error() {
        let bad = RunConfig { t: Some(-1.0), ..Default::default() };
        let e = resolve("scan", bad).unwrap_err();
        assert!(e.downcast_ref::<UsageError>().is_some());
        assert!(e.to_string().contains("--t"));
        let wrong = RunConfig { command: Some("equi".into()), ..Default::default() };
        assert!(resolve("scan", wrong).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = resolve("avoid", RunConfig::default()).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(resolve("avoid", back).unwrap(), c);
    }
}
