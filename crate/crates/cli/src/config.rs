use anyhow::{anyhow, Context, Result};
use kinlab::params::ModelParams;
use std::fs;

use crate::Common;

pub struct Config {
    pub params: ModelParams,
    pub seed: u64,
}

/// key=value lines; blank lines and `#` comments are ignored.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key=value", n + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Defaults, then the config file, then `--set` pairs, then the named flags.
pub fn resolve(c: &Common) -> Result<Config> {
    let mut pairs = Vec::new();
    if let Some(path) = &c.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        pairs.extend(parse_pairs(&text)?);
    }
    for s in &c.set {
        pairs.extend(parse_pairs(s)?);
    }
    let flags = [
        ("s", c.s.map(|x| x.to_string())),
        ("gamma", c.gamma.map(|x| x.to_string())),
        ("K", c.k_max.map(|x| x.to_string())),
        ("V", c.v_max.map(|x| x.to_string())),
        ("N_v", c.n_v.map(|x| x.to_string())),
        ("dt", c.dt.map(|x| x.to_string())),
        ("t_max", c.t_max.map(|x| x.to_string())),
        ("seed", c.seed.map(|x| x.to_string())),
    ];
    pairs.extend(flags.into_iter().filter_map(|(k, v)| Some((k.to_string(), v?))));
    let mut params = ModelParams::default();
    let mut seed = 1;
    for (k, v) in &pairs {
        if k == "seed" {
            seed = v.parse().with_context(|| format!("seed={v}"))?;
        } else {
            params.set(k, v)?;
        }
    }
    params.validate()?;
    Ok(Config { params, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_skip_comments_and_blanks() {
        let p = parse_pairs("# head\n\ns = 0.25  # inline\nK=8\n").unwrap();
        assert_eq!(p, vec![("s".into(), "0.25".into()), ("K".into(), "8".into())]);
        assert!(parse_pairs("s 0.25").is_err());
    }
}
