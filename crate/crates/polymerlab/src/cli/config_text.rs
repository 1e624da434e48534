//! The campaign configuration file format.
//!
//! Flat `key = value` text with dotted section prefixes, chosen so any
//! language can read and write it without a schema library.  Full-line
//! comments start with `#`; blank lines are ignored; every key may
//! appear at most once.  Keys not present keep the default-study value,
//! so the empty file is a valid configuration.
//!
//! Keys:
//!
//! | key                | value                                     |
//! |--------------------|-------------------------------------------|
//! | `d`                | lattice dimension (3, 4, or 5)            |
//! | `family`           | `gaussian`, `rademacher`, `bernoulli:p`, `exponential:rate` |
//! | `beta`             | inverse temperature, >= 0                 |
//! | `n_grid`           | comma-separated horizons, ascending       |
//! | `horizon_factor`   | tail-proxy multiplier `K`                 |
//! | `replicates`       | main-campaign replicate count             |
//! | `seed_base`        | replicate `r` uses seed `seed_base + r`   |
//! | `lk_exponent`      | front depth `ceil(k^e)`, `e` in (0, 1)    |
//! | `alpha_grid`       | window thresholds, ascending floats       |
//! | `eps_grid`         | exceedance levels, ascending floats       |
//! | `event.n0`         | conditioning time, or `auto`              |
//! | `event.quantile`   | split quantile in (0, 1)                  |
//! | `homog`            | `on` / `off` switch for the plane stage   |
//! | `homog.k_grid`     | plane anchor times, ascending             |
//! | `homog.alpha`      | plane window radius multiplier            |
//! | `llt`              | `on` / `off` switch for the residual stage|
//! | `llt.k_grid`       | residual horizons, ascending              |
//! | `llt.alpha`        | residual window radius multiplier         |
//! | `llt.replicates`   | residual-stage replicate count            |
//! | `allow_outside_l2` | `true` / `false`                          |

use crate::error::{Error, Result};
use crate::experiments::{ExperimentConfig, HomogSpec, LltSpec};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

/// Parse the configuration text; unknown, duplicate, or malformed keys
/// are refused with the offending line on the message.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut pairs: Vec<(usize, &str, &str)> = Vec::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let no = idx + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {no}: expected `key = value`, got {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {no}: empty key")));
        }
        if !seen.insert(key) {
            return Err(Error::Config(format!("line {no}: duplicate key `{key}`")));
        }
        pairs.push((no, key, value));
    }

    let mut cfg = ExperimentConfig::default_study();
    // Stage switches first, so `homog = off` rejects later `homog.*`
    // keys regardless of their order in the file.
    for &(no, key, value) in &pairs {
        match key {
            "homog" => cfg.homog = stage_switch(no, key, value, HomogSpec::default)?,
            "llt" => cfg.llt = stage_switch(no, key, value, LltSpec::default)?,
            _ => {}
        }
    }
    for &(no, key, value) in &pairs {
        apply_key(&mut cfg, no, key, value)?;
    }
    Ok(cfg)
}

fn stage_switch<T>(no: usize, key: &str, value: &str, default: impl Fn() -> T) -> Result<Option<T>> {
    match value {
        "on" => Ok(Some(default())),
        "off" => Ok(None),
        other => Err(Error::Config(format!(
            "line {no}: `{key}` must be `on` or `off`, got {other:?}"
        ))),
    }
}

fn apply_key(cfg: &mut ExperimentConfig, no: usize, key: &str, value: &str) -> Result<()> {
    match key {
        "d" => cfg.d = parse_one(no, key, value)?,
        "family" => {
            cfg.family = FromStr::from_str(value)
                .map_err(|e| Error::Config(format!("line {no}: {e}")))?;
        }
        "beta" => cfg.beta = parse_one(no, key, value)?,
        "n_grid" => cfg.n_grid = parse_list(no, key, value)?,
        "horizon_factor" => cfg.horizon_factor = parse_one(no, key, value)?,
        "replicates" => cfg.replicates = parse_one(no, key, value)?,
        "seed_base" => cfg.seed_base = parse_one(no, key, value)?,
        "lk_exponent" => cfg.lk_exponent = parse_one(no, key, value)?,
        "alpha_grid" => cfg.alpha_grid = parse_list(no, key, value)?,
        "eps_grid" => cfg.eps_grid = parse_list(no, key, value)?,
        "event.n0" => {
            cfg.event.n0 =
                if value == "auto" { None } else { Some(parse_one(no, key, value)?) };
        }
        "event.quantile" => cfg.event.quantile = parse_one(no, key, value)?,
        "homog" | "llt" => {} // handled in the switch pass
        "homog.k_grid" => stage_mut(&mut cfg.homog, no, key)?.k_grid = parse_list(no, key, value)?,
        "homog.alpha" => stage_mut(&mut cfg.homog, no, key)?.alpha = parse_one(no, key, value)?,
        "llt.k_grid" => stage_mut(&mut cfg.llt, no, key)?.k_grid = parse_list(no, key, value)?,
        "llt.alpha" => stage_mut(&mut cfg.llt, no, key)?.alpha = parse_one(no, key, value)?,
        "llt.replicates" => {
            stage_mut(&mut cfg.llt, no, key)?.replicates = parse_one(no, key, value)?;
        }
        "allow_outside_l2" => cfg.allow_outside_l2 = parse_bool(no, key, value)?,
        other => return Err(Error::Config(format!("line {no}: unknown key `{other}`"))),
    }
    Ok(())
}

fn stage_mut<'a, T>(stage: &'a mut Option<T>, no: usize, key: &str) -> Result<&'a mut T> {
    stage.as_mut().ok_or_else(|| {
        let section = key.split('.').next().unwrap_or(key);
        Error::Config(format!(
            "line {no}: `{key}` set while `{section} = off` disables the stage"
        ))
    })
}

fn parse_one<T: FromStr>(no: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("line {no}: bad value {value:?} for `{key}`")))
}

fn parse_list<T: FromStr>(no: usize, key: &str, value: &str) -> Result<Vec<T>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|part| parse_one(no, key, part.trim())).collect()
}

fn parse_bool(no: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Config(format!(
            "line {no}: `{key}` must be `true` or `false`, got {other:?}"
        ))),
    }
}

/// Render a configuration in the canonical file form.
///
/// Every key is written explicitly; `parse_config(render_config(c))`
/// reproduces `c` exactly (floats print in shortest round-trip form).
pub fn render_config(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "d = {}", cfg.d);
    let _ = writeln!(s, "family = {}", cfg.family);
    let _ = writeln!(s, "beta = {}", cfg.beta);
    let _ = writeln!(s, "n_grid = {}", join(&cfg.n_grid));
    let _ = writeln!(s, "horizon_factor = {}", cfg.horizon_factor);
    let _ = writeln!(s, "replicates = {}", cfg.replicates);
    let _ = writeln!(s, "seed_base = {}", cfg.seed_base);
    let _ = writeln!(s, "lk_exponent = {}", cfg.lk_exponent);
    let _ = writeln!(s, "alpha_grid = {}", join(&cfg.alpha_grid));
    let _ = writeln!(s, "eps_grid = {}", join(&cfg.eps_grid));
    match cfg.event.n0 {
        Some(n0) => {
            let _ = writeln!(s, "event.n0 = {n0}");
        }
        None => {
            let _ = writeln!(s, "event.n0 = auto");
        }
    }
    let _ = writeln!(s, "event.quantile = {}", cfg.event.quantile);
    match &cfg.homog {
        Some(h) => {
            let _ = writeln!(s, "homog = on");
            let _ = writeln!(s, "homog.k_grid = {}", join(&h.k_grid));
            let _ = writeln!(s, "homog.alpha = {}", h.alpha);
        }
        None => {
            let _ = writeln!(s, "homog = off");
        }
    }
    match &cfg.llt {
        Some(l) => {
            let _ = writeln!(s, "llt = on");
            let _ = writeln!(s, "llt.k_grid = {}", join(&l.k_grid));
            let _ = writeln!(s, "llt.alpha = {}", l.alpha);
            let _ = writeln!(s, "llt.replicates = {}", l.replicates);
        }
        None => {
            let _ = writeln!(s, "llt = off");
        }
    }
    let _ = writeln!(s, "allow_outside_l2 = {}", cfg.allow_outside_l2);
    s
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::DisorderFamily;

    fn assert_roundtrip(cfg: &ExperimentConfig) {
        let text = render_config(cfg);
        let back = parse_config(&text).expect("rendered config must parse");
        assert_eq!(&back, cfg, "round trip changed the configuration:\n{text}");
    }

    #[test]
    fn canonical_rendering_round_trips() {
        assert_roundtrip(&ExperimentConfig::default_study());

        let mut cfg = ExperimentConfig::default_study();
        cfg.family = DisorderFamily::CenteredBernoulli { p: 0.25 };
        cfg.beta = 0.7;
        cfg.n_grid = vec![4, 8, 16, 32, 64];
        cfg.replicates = 1234;
        cfg.seed_base = 99;
        cfg.lk_exponent = 0.45;
        cfg.alpha_grid = vec![1.5, 3.25];
        cfg.eps_grid = vec![0.1];
        cfg.event.n0 = Some(3);
        cfg.event.quantile = 0.75;
        cfg.homog = None;
        cfg.llt = Some(LltSpec { k_grid: vec![8, 16, 64], alpha: 2.5, replicates: 64 });
        cfg.allow_outside_l2 = true;
        assert_roundtrip(&cfg);

        cfg.family = DisorderFamily::ShiftedExponential { rate: 2.0 };
        cfg.homog = Some(HomogSpec { k_grid: vec![4], alpha: 1.0 });
        cfg.llt = None;
        assert_roundtrip(&cfg);
    }

    #[test]
    fn empty_and_commented_input_yields_the_default_study() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default_study());
        let cfg = parse_config("# nothing here\n\n   \n# d = 5\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::default_study());
    }

    #[test]
    fn overrides_apply_on_top_of_the_default_study() {
        let cfg = parse_config("beta = 0.5\nreplicates = 50\nllt = off\n").unwrap();
        assert_eq!(cfg.beta, 0.5);
        assert_eq!(cfg.replicates, 50);
        assert!(cfg.llt.is_none());
        // Untouched keys keep the study defaults.
        assert_eq!(cfg.n_grid, vec![8, 16, 32]);
        assert!(cfg.homog.is_some());
    }

    #[test]
    fn stage_subkeys_modify_the_default_stage() {
        let cfg = parse_config("llt.replicates = 64\nhomog.alpha = 2.5\n").unwrap();
        assert_eq!(cfg.llt.unwrap().replicates, 64);
        let homog = cfg.homog.unwrap();
        assert_eq!(homog.alpha, 2.5);
        assert_eq!(homog.k_grid, vec![16, 64]);
    }

    #[test]
    fn malformed_input_is_refused_with_line_numbers() {
        let cases: &[(&str, &str)] = &[
            ("beta 0.5", "expected `key = value`"),
            ("beta = 0.5\nbeta = 0.6", "duplicate key"),
            ("speed = 9", "unknown key"),
            ("beta = fast", "bad value"),
            ("= 3", "empty key"),
            ("homog = maybe", "`on` or `off`"),
            ("allow_outside_l2 = 1", "`true` or `false`"),
            ("homog = off\nhomog.alpha = 2", "disables the stage"),
            ("homog.alpha = 2\nhomog = off", "disables the stage"),
            ("n_grid = 8,x,32", "bad value"),
        ];
        for (text, needle) in cases {
            let err = parse_config(text).expect_err(text);
            let msg = err.to_string();
            assert!(msg.contains(needle), "{text:?} -> {msg}");
        }
    }

    #[test]
    fn switch_order_does_not_matter() {
        let a = parse_config("llt = off\nbeta = 0.3\n").unwrap();
        let b = parse_config("beta = 0.3\nllt = off\n").unwrap();
        assert_eq!(a, b);
        assert!(a.llt.is_none());
    }
}
