//! Scenario files: flat `key = value` lines with `#` comments.
//!
//! ```text
//! dimension = 1
//! soil = sandy-clay
//! nz = 201
//! t_end = 600
//! output_times = 100, 300, 600
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::constitutive::SoilParams;
use crate::error::{Error, Result};
use crate::oracle_fd::InterfaceMean;
use crate::output::fmt_num;
use crate::pointset::Dim;

/// Every key the parser accepts.
pub const KEYS: &[&str] = &[
    "dimension",
    "soil",
    "theta_r",
    "theta_s",
    "theta_0",
    "k_s",
    "h_cap",
    "lambda",
    "m",
    "depth",
    "width",
    "nz",
    "nx",
    "dt",
    "t_end",
    "output_times",
    "eps",
    "n_s",
    "tol",
    "max_picard",
    "max_cutbacks",
    "oracle_nz",
    "oracle_dt",
    "oracle_mean",
];

const SOIL_KEYS: [&str; 7] = ["theta_r", "theta_s", "theta_0", "k_s", "h_cap", "lambda", "m"];

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub dimension: Dim,
    /// Table name when the soil came from a named entry.
    pub soil_name: Option<String>,
    pub soil: SoilParams,
    pub depth: f64,
    /// Only meaningful in 2D.
    pub width: f64,
    pub nz: usize,
    /// 1 in 1D.
    pub nx: usize,
    pub dt: f64,
    pub t_end: f64,
    pub output_times: Vec<f64>,
    pub eps: f64,
    pub n_s: usize,
    pub tol: f64,
    pub max_picard: usize,
    pub max_cutbacks: usize,
    pub oracle_nz: usize,
    pub oracle_dt: f64,
    pub oracle_mean: InterfaceMean,
    /// Keys filled from defaults, in [`KEYS`] order.
    pub defaulted: Vec<&'static str>,
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse::<T>()
        .map_err(|_| Error::config(key, format!("cannot parse `{raw}`")))
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

/// Parses a scenario document. Unknown keys, duplicates, missing required
/// keys and invalid values are errors naming the key.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut entries: BTreeMap<&str, &str> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(
                format!("line {}", lineno + 1),
                format!("expected `key = value`, got `{line}`"),
            )
        })?;
        let key = key.trim();
        let value = value.trim();
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(Error::config(key, "unknown key"));
        };
        if value.is_empty() {
            return Err(Error::config(known, "empty value"));
        }
        if entries.insert(known, value).is_some() {
            return Err(Error::config(known, "given more than once"));
        }
    }

    let mut defaulted = Vec::new();
    let mut take = |key: &'static str, default: Option<&'static str>| -> Result<String> {
        match entries.get(key) {
            Some(v) => Ok(v.to_string()),
            None => match default {
                Some(d) => {
                    defaulted.push(key);
                    Ok(d.to_string())
                }
                None => Err(Error::config(key, "missing required key")),
            },
        }
    };

    let dimension = Dim::try_from(parse_value::<usize>("dimension", &take("dimension", None)?)?)?;
    let two_d = dimension == Dim::Two;

    let soil_name = entries.get("soil").map(|s| s.to_string());
    let base = match &soil_name {
        Some(name) => {
            Some(SoilParams::by_name(name).ok_or_else(|| Error::config("soil", format!("unknown soil `{name}`")))?)
        }
        None => None,
    };
    let mut values = [0.0; 7];
    for (slot, key) in values.iter_mut().zip(SOIL_KEYS) {
        *slot = match (entries.get(key), &base) {
            (Some(raw), _) => parse_value::<f64>(key, raw)?,
            (None, Some(b)) => match key {
                "theta_r" => b.theta_r(),
                "theta_s" => b.theta_s(),
                "theta_0" => b.theta_0(),
                "k_s" => b.k_s(),
                "h_cap" => b.h_cap(),
                "lambda" => b.lambda(),
                _ => b.m(),
            },
            (None, None) => return Err(Error::config(key, "missing: give `soil` or all soil parameters")),
        };
    }
    let [theta_r, theta_s, theta_0, k_s, h_cap, lambda, m] = values;
    let soil = SoilParams::new(theta_r, theta_s, theta_0, k_s, h_cap, lambda, m)?;

    let depth = positive("depth", parse_value("depth", &take("depth", Some("100"))?)?)?;
    let width = if two_d {
        positive("width", parse_value("width", &take("width", Some("100"))?)?)?
    } else {
        if entries.contains_key("width") {
            return Err(Error::config("width", "only valid when dimension = 2"));
        }
        0.0
    };
    let nz: usize = parse_value("nz", &take("nz", None)?)?;
    if nz < 3 {
        return Err(Error::config("nz", format!("need at least 3 nodes, got {nz}")));
    }
    let nx: usize = if two_d {
        let nx = parse_value("nx", &take("nx", None)?)?;
        if nx < 3 {
            return Err(Error::config("nx", format!("need at least 3 nodes, got {nx}")));
        }
        nx
    } else {
        if entries.contains_key("nx") {
            return Err(Error::config("nx", "only valid when dimension = 2"));
        }
        1
    };

    let dt = positive("dt", parse_value("dt", &take("dt", Some("0.05"))?)?)?;
    let t_end: f64 = parse_value("t_end", &take("t_end", None)?)?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::config("t_end", format!("must be non-negative, got {t_end}")));
    }
    let output_times = match entries.get("output_times") {
        Some(raw) => {
            let times = raw
                .split(',')
                .map(|s| parse_value::<f64>("output_times", s.trim()))
                .collect::<Result<Vec<f64>>>()?;
            if times.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::config("output_times", "must be strictly increasing"));
            }
            if times.iter().any(|&t| !(0.0..=t_end).contains(&t)) {
                return Err(Error::config("output_times", format!("must lie in [0, {t_end}]")));
            }
            times
        }
        None => vec![t_end],
    };

    let eps = positive("eps", parse_value("eps", &take("eps", Some("0.6"))?)?)?;
    let n_s: usize = parse_value("n_s", &take("n_s", Some("5"))?)?;
    if n_s < 2 || n_s > nx * nz {
        return Err(Error::config("n_s", format!("must lie in [2, {}], got {n_s}", nx * nz)));
    }
    let tol = positive("tol", parse_value("tol", &take("tol", Some("1e-8"))?)?)?;
    let max_picard: usize = parse_value("max_picard", &take("max_picard", Some("50"))?)?;
    if max_picard == 0 {
        return Err(Error::config("max_picard", "must be at least 1"));
    }
    let max_cutbacks: usize = parse_value("max_cutbacks", &take("max_cutbacks", Some("0"))?)?;
    let oracle_nz: usize = parse_value("oracle_nz", &take("oracle_nz", Some("401"))?)?;
    if oracle_nz < 3 {
        return Err(Error::config(
            "oracle_nz",
            format!("need at least 3 nodes, got {oracle_nz}"),
        ));
    }
    let oracle_dt = positive(
        "oracle_dt",
        parse_value("oracle_dt", &take("oracle_dt", Some("0.01"))?)?,
    )?;
    let mean_raw = take("oracle_mean", Some("arithmetic"))?;
    let oracle_mean = InterfaceMean::parse(&mean_raw)
        .ok_or_else(|| Error::config("oracle_mean", format!("unknown mean `{mean_raw}`")))?;

    if !entries.contains_key("output_times") {
        defaulted.push("output_times");
    }
    defaulted.sort_by_key(|k| KEYS.iter().position(|x| x == k));
    Ok(ScenarioConfig {
        dimension,
        soil_name,
        soil,
        depth,
        width,
        nz,
        nx,
        dt,
        t_end,
        output_times,
        eps,
        n_s,
        tol,
        max_picard,
        max_cutbacks,
        oracle_nz,
        oracle_dt,
        oracle_mean,
        defaulted,
    })
}

impl ScenarioConfig {
    pub fn is_defaulted(&self, key: &str) -> bool {
        self.defaulted.contains(&key)
    }

    /// Fully resolved settings as a `key = value` document that parses back
    /// to the same scenario. Defaulted keys carry a `# default` comment.
    pub fn to_meta(&self) -> String {
        let mut out = String::new();
        let mut line = |key: &str, value: String| {
            let tag = if self.is_defaulted(key) { "  # default" } else { "" };
            let _ = writeln!(out, "{key} = {value}{tag}");
        };
        line("dimension", self.dimension.value().to_string());
        if let Some(name) = &self.soil_name {
            line("soil", name.clone());
        }
        let s = &self.soil;
        line("theta_r", fmt_num(s.theta_r()));
        line("theta_s", fmt_num(s.theta_s()));
        line("theta_0", fmt_num(s.theta_0()));
        line("k_s", fmt_num(s.k_s()));
        line("h_cap", fmt_num(s.h_cap()));
        line("lambda", fmt_num(s.lambda()));
        line("m", fmt_num(s.m()));
        line("depth", fmt_num(self.depth));
        if self.dimension == Dim::Two {
            line("width", fmt_num(self.width));
            line("nx", self.nx.to_string());
        }
        line("nz", self.nz.to_string());
        line("dt", fmt_num(self.dt));
        line("t_end", fmt_num(self.t_end));
        let times: Vec<String> = self.output_times.iter().map(|&t| fmt_num(t)).collect();
        line("output_times", times.join(", "));
        line("eps", fmt_num(self.eps));
        line("n_s", self.n_s.to_string());
        line("tol", fmt_num(self.tol));
        line("max_picard", self.max_picard.to_string());
        line("max_cutbacks", self.max_cutbacks.to_string());
        line("oracle_nz", self.oracle_nz.to_string());
        line("oracle_dt", fmt_num(self.oracle_dt));
        line("oracle_mean", self.oracle_mean.name().to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "dimension = 1\nsoil = sandy-clay\nnz = 201\nt_end = 600\n";

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("expected a configuration error, got {other}"),
        }
    }

    #[test]
    fn minimal_document_uses_table_values_and_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.soil, SoilParams::sandy_clay());
        assert_eq!(c.eps, 0.6);
        assert!(c.is_defaulted("eps"));
        assert_eq!((c.n_s, c.dt, c.tol, c.max_picard), (5, 0.05, 1e-8, 50));
        assert_eq!(c.output_times, vec![600.0]);
        assert_eq!(c.max_cutbacks, 0);
        assert!(!c.is_defaulted("nz"));
    }

    #[test]
    fn comments_and_overrides() {
        let c = parse_config("# loam column\ndimension = 1 # vertical\nsoil = Loam\ntheta_0 = 0.1\nnz = 11\nt_end = 5\noutput_times = 0, 2.5, 5\neps = 1.2\n").unwrap();
        assert_eq!(c.soil.theta_0(), 0.1);
        assert_eq!(c.soil.k_s(), 0.022);
        assert_eq!(c.output_times, vec![0.0, 2.5, 5.0]);
        assert!(!c.is_defaulted("eps"));
    }

    #[test]
    fn errors_name_the_key() {
        let with = |extra: &str| parse_config(&format!("{MINIMAL}{extra}\n")).unwrap_err();
        assert_eq!(key_of(with("dt = -1")), "dt");
        assert_eq!(key_of(with("colour = blue")), "colour");
        assert_eq!(key_of(with("nz = 5")), "nz");
        assert_eq!(key_of(with("output_times = 10, 5")), "output_times");
        assert_eq!(key_of(with("output_times = 700")), "output_times");
        assert_eq!(key_of(with("eps = abc")), "eps");
        assert_eq!(key_of(with("nx = 10")), "nx");
        assert_eq!(key_of(with("m = 0.9")), "soil.m");
        assert_eq!(
            key_of(parse_config("soil = loam\nnz = 11\nt_end = 1").unwrap_err()),
            "dimension"
        );
        assert_eq!(
            key_of(parse_config("dimension = 1\nnz = 11\nt_end = 1").unwrap_err()),
            "theta_r"
        );
        assert_eq!(
            key_of(parse_config("dimension = 3\nsoil = loam\nnz = 11\nt_end = 1").unwrap_err()),
            "dimension"
        );
    }

    #[test]
    fn two_dimensional_requires_nx() {
        let doc = "dimension = 2\nsoil = loam\nnz = 21\nt_end = 1\n";
        assert_eq!(key_of(parse_config(doc).unwrap_err()), "nx");
        let c = parse_config(&format!("{doc}nx = 11\n")).unwrap();
        assert_eq!((c.width, c.nx), (100.0, 11));
        assert!(c.is_defaulted("width"));
    }

    #[test]
    fn meta_round_trips() {
        let c = parse_config(MINIMAL).unwrap();
        let meta = c.to_meta();
        assert!(meta.contains("eps = 0.6  # default"));
        let again = parse_config(&meta).unwrap();
        assert_eq!(again.soil, c.soil);
        assert_eq!(again.dt, c.dt);
        assert_eq!(again.output_times, c.output_times);
    }
}
