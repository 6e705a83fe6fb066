use crate::error::{LabError, Result};
use std::collections::BTreeMap;

/// Physical and numerical configuration shared by the modules.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub s: f64,
    pub gamma: f64,
    pub d_x: usize,
    pub d_v: usize,
    pub k_max: i64,
    pub v_max: f64,
    pub n_v: usize,
    pub theta_min: f64,
    pub n_sphere: usize,
    pub dt: f64,
    pub t_max: f64,
    pub tol: BTreeMap<String, f64>,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            s: 0.5,
            gamma: 0.0,
            d_x: 1,
            d_v: 1,
            k_max: 16,
            v_max: 8.0,
            n_v: 64,
            theta_min: std::f64::consts::PI / 128.0,
            n_sphere: 32,
            dt: 0.01,
            t_max: 1.0,
            tol: BTreeMap::new(),
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(LabError::InvalidParam(m.to_string()));
        if !(self.s > 0.0 && self.s < 1.0) {
            return bad("s must lie in (0,1)");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0,1]");
        }
        if !(1..=3).contains(&self.d_x) {
            return bad("d_x must be 1, 2 or 3");
        }
        if self.d_v != 1 && self.d_v != 3 {
            return bad("d_v must be 1 or 3");
        }
        if self.k_max < 1 {
            return bad("K must be >= 1");
        }
        if self.n_v < 8 || self.n_v % 2 != 0 {
            return bad("N_v must be even and >= 8");
        }
        if !(self.theta_min > 0.0 && self.theta_min < std::f64::consts::FRAC_PI_4) {
            return bad("theta_min must lie in (0, pi/4)");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.v_max > 0.0) {
            return bad("V must be positive");
        }
        Ok(())
    }

    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.tol.get(name).copied().unwrap_or(default)
    }

    /// Apply `key=value` pairs; unknown keys starting with `tol_` become tolerances.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = || -> Result<f64> {
            value
                .trim()
                .parse::<f64>()
                .map_err(|_| LabError::Parse(format!("{key}={value}")))
        };
        match key {
            "s" => self.s = num()?,
            "gamma" => self.gamma = num()?,
            "d_x" => self.d_x = num()? as usize,
            "d_v" => self.d_v = num()? as usize,
            "K" | "k_max" => self.k_max = num()? as i64,
            "V" | "v_max" => self.v_max = num()?,
            "N_v" | "n_v" => self.n_v = num()? as usize,
            "theta_min" => self.theta_min = num()?,
            "n_sphere" => self.n_sphere = num()? as usize,
            "dt" => self.dt = num()?,
            "t_max" => self.t_max = num()?,
            k if k.starts_with("tol_") => {
                self.tol.insert(k[4..].to_string(), num()?);
            }
            _ => return Err(LabError::Parse(format!("unknown key {key}"))),
        }
        Ok(())
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("s".into(), self.s.to_string()),
            ("gamma".into(), self.gamma.to_string()),
            ("d_x".into(), self.d_x.to_string()),
            ("d_v".into(), self.d_v.to_string()),
            ("K".into(), self.k_max.to_string()),
            ("V".into(), self.v_max.to_string()),
            ("N_v".into(), self.n_v.to_string()),
            ("theta_min".into(), self.theta_min.to_string()),
            ("n_sphere".into(), self.n_sphere.to_string()),
            ("dt".into(), self.dt.to_string()),
            ("t_max".into(), self.t_max.to_string()),
        ];
        for (k, t) in &self.tol {
            v.push((format!("tol_{k}"), t.to_string()));
        }
        v
    }
}
