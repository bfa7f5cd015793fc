use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact_numbers::{from_f64, int, parse_rational, render, to_f64, Rational};

fn rational_str<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&render(r))
}

/// Parameters of the folding construction for `E(S, 1, T)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldingConfig {
    #[serde(rename = "S", serialize_with = "rational_str")]
    pub s: Rational,
    #[serde(rename = "T", serialize_with = "rational_str")]
    pub t: Rational,
    pub eps: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub integrator_step: f64,
    /// The domain is `shrink · E(S, 1, T)`.
    pub shrink: f64,
    pub seed: u64,
    /// Gap between the moved fiber disk and the inner one, in action units.
    /// The second fiber region is the annulus `c2 ≤ π|z₂|² ≤ c2 + λ_f` with
    /// `c2 = λ_f + d2_gap`.
    pub d2_gap: f64,
}

pub const KEYS: [&str; 8] = ["S", "T", "eps", "N", "integrator_step", "shrink", "seed", "d2_gap"];

/// `⌈S/ε⌉`, computed exactly from the binary value of `eps`.
pub fn default_n(s: &Rational, eps: f64) -> Result<u64> {
    let e = from_f64(eps)?;
    if e <= int(0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let q = s / e;
    let c = q.ceil().to_integer();
    u64::try_from(c).map_err(|_| Error::InvalidInput("N does not fit in 64 bits".into()))
}

impl Default for FoldingConfig {
    fn default() -> Self {
        FoldingConfig::new(int(2), int(1), 0.1).expect("default parameters are valid")
    }
}

impl FoldingConfig {
    /// Config with `N = ⌈S/ε⌉`, `shrink = 0.9`, step `1e-3`, seed 0.
    pub fn new(s: Rational, t: Rational, eps: f64) -> Result<Self> {
        let n = default_n(&s, eps)?;
        let cfg = FoldingConfig { s, t, eps, n, integrator_step: 1e-3, shrink: 0.9, seed: 0, d2_gap: eps };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn lambda(&self) -> Rational {
        &self.s / (&self.s + int(1))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.s < int(1) || self.t < int(1) {
            return bad(format!("need S, T ≥ 1, got S = {}, T = {}", render(&self.s), render(&self.t)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if self.n == 0 {
            return bad("N must be at least 1".into());
        }
        if !(self.integrator_step > 0.0 && self.integrator_step <= 1.0) {
            return bad(format!("integrator_step must lie in (0, 1], got {}", self.integrator_step));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad(format!("shrink must lie in (0, 1), got {}", self.shrink));
        }
        if !(self.d2_gap >= self.eps && self.d2_gap.is_finite()) {
            return bad(format!("d2_gap must be at least eps, got {}", self.d2_gap));
        }
        Ok(())
    }

    /// Sets one key. Setting `S` or `eps` does not recompute `N`; callers that
    /// want the default should use [`FoldingConfig::apply`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let real = |v: &str| v.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("{key}: {e}")));
        let uint = |v: &str| v.trim().parse::<u64>().map_err(|e| Error::InvalidInput(format!("{key}: {e}")));
        match key {
            "S" => self.s = parse_rational(value)?,
            "T" => self.t = parse_rational(value)?,
            "eps" => self.eps = real(value)?,
            "N" => self.n = uint(value)?,
            "integrator_step" => self.integrator_step = real(value)?,
            "shrink" => self.shrink = real(value)?,
            "seed" => self.seed = uint(value)?,
            "d2_gap" => self.d2_gap = real(value)?,
            _ => return Err(Error::InvalidInput(format!("unknown key `{key}`; expected one of {}", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// Applies `(key, value)` pairs in order on top of the defaults. `N` and
    /// `d2_gap` follow `S` and `eps` unless given explicitly.
    pub fn apply<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut cfg = FoldingConfig::default();
        let mut explicit_n = false;
        let mut explicit_gap = false;
        for (k, v) in pairs {
            cfg.set(k, v)?;
            explicit_n |= k == "N";
            explicit_gap |= k == "d2_gap";
        }
        if !explicit_n {
            cfg.n = default_n(&cfg.s, cfg.eps)?;
        }
        if !explicit_gap {
            cfg.d2_gap = cfg.eps;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::ConfigParse { line: idx + 1, msg: format!("expected key = value, got `{line}`") });
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::ConfigParse { line: idx + 1, msg: format!("unknown key `{k}`") });
            }
            if v.is_empty() {
                return Err(Error::ConfigParse { line: idx + 1, msg: format!("missing value for `{k}`") });
            }
            out.push((k.to_string(), v.to_string()));
        }
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let pairs = Self::parse_pairs(text)?;
        Self::apply(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    /// Canonical `key = value` rendering, stable across runs.
    pub fn to_key_values(&self) -> String {
        format!(
            "S = {}\nT = {}\neps = {:?}\nN = {}\nintegrator_step = {:?}\nshrink = {:?}\nseed = {}\nd2_gap = {:?}\n",
            render(&self.s),
            render(&self.t),
            self.eps,
            self.n,
            self.integrator_step,
            self.shrink,
            self.seed,
            self.d2_gap
        )
    }
}

/// Derived real parameters shared by all stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Layout {
    pub s: f64,
    pub t: f64,
    pub eps: f64,
    pub n: u64,
    pub shrink: f64,
    pub lambda: f64,
    /// Fibers over the tail satisfy `π|z₂|² < λ_f = shrink² − λ/S`.
    pub lambda_f: f64,
    /// Action translation of the fiber disk; also `max G_i`.
    pub c2: f64,
    /// Action translation in the `z₃` plane, `T + ε`.
    pub c3: f64,
    /// Thickness of the tail strip after the first planar map.
    pub h: f64,
    /// Inner action of the annulus receiving the intervals.
    pub a_lo: f64,
    /// Inner action of the annulus receiving the square and even bands.
    pub a0: f64,
    /// Straightened band height `c2 + h`.
    pub band: f64,
    /// Inner action of the annulus receiving odd bands.
    pub a_in: f64,
}

impl Layout {
    pub fn new(cfg: &FoldingConfig) -> Result<Self> {
        cfg.validate()?;
        let s = to_f64(&cfg.s);
        let t = to_f64(&cfg.t);
        let lambda = to_f64(&cfg.lambda());
        let delta = 1.0 - cfg.shrink * cfg.shrink;
        let lambda_f = lambda - delta;
        if lambda_f <= 0.0 {
            return Err(Error::Sizing(format!(
                "shrink = {} leaves no room for the fiber disk (λ − (1 − shrink²) = {lambda_f:.6} ≤ 0)",
                cfg.shrink
            )));
        }
        let n = cfg.n as f64;
        let h = (s - lambda) / (2.0 * n);
        if h / 2.0 > cfg.eps {
            return Err(Error::Sizing(format!(
                "tail strip half-thickness {:.6} exceeds eps = {}; increase N (currently {})",
                h / 2.0,
                cfg.eps,
                cfg.n
            )));
        }
        let c2 = lambda_f + cfg.d2_gap;
        let band = c2 + h;
        let a_lo = h / 4.0;
        let a0 = a_lo + h;
        Ok(Layout {
            s,
            t,
            eps: cfg.eps,
            n: cfg.n,
            shrink: cfg.shrink,
            lambda,
            lambda_f,
            c2,
            c3: t + cfg.eps,
            h,
            a_lo,
            a0,
            band,
            a_in: a0 + lambda.max(band),
        })
    }

    /// Inner action of `B_i`; `B_i = [(i−1)(T+ε), (i−1)(T+ε) + T]` in `π|z₃|²`.
    pub fn b_inner(&self, i: u64) -> f64 {
        (i as f64 - 1.0) * self.c3
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_numbers::rat;

    #[test]
    fn default_n_examples() {
        assert_eq!(default_n(&int(2), 0.1).unwrap(), 20);
        assert_eq!(default_n(&int(1), 0.1).unwrap(), 10);
        assert_eq!(default_n(&int(4), 0.1).unwrap(), 40);
        assert_eq!(default_n(&rat(5, 2), 0.3).unwrap(), 9);
    }

    #[test]
    fn lambda_range() {
        for (p, q) in [(1, 1), (3, 2), (2, 1), (7, 1), (1000, 1)] {
            let cfg = FoldingConfig::new(rat(p, q), int(1), 0.1).unwrap();
            let l = cfg.lambda();
            assert!(l >= rat(1, 2) && l < int(1));
        }
        assert_eq!(FoldingConfig::new(int(1), int(1), 0.1).unwrap().lambda(), rat(1, 2));
    }

    #[test]
    fn parse_and_merge() {
        let cfg = FoldingConfig::parse("# run\nS = 4\nT=2\n\neps = 0.1 # comment\nseed = 7\n").unwrap();
        assert_eq!((cfg.s.clone(), cfg.t.clone(), cfg.n, cfg.seed), (int(4), int(2), 40, 7));
        let again = FoldingConfig::parse(&cfg.to_key_values()).unwrap();
        assert_eq!(again, cfg);
        let explicit = FoldingConfig::parse("S = 2\nN = 25").unwrap();
        assert_eq!(explicit.n, 25);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match FoldingConfig::parse("S = 2\nbogus = 1") {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(FoldingConfig::parse("S 2"), Err(Error::ConfigParse { line: 1, .. })));
        assert!(FoldingConfig::parse("S = 1/2").is_err());
        assert!(FoldingConfig::parse("shrink = 1").is_err());
        assert!(FoldingConfig::parse("eps = 0").is_err());
        assert!(FoldingConfig::parse("N = 0").is_err());
    }

    #[test]
    fn sizing_diagnostics() {
        let mut cfg = FoldingConfig::default();
        cfg.n = 1;
        assert!(matches!(Layout::new(&cfg), Err(Error::Sizing(_))));
        let mut cfg = FoldingConfig::default();
        cfg.shrink = 0.5;
        assert!(matches!(Layout::new(&cfg), Err(Error::Sizing(_))));
        let l = Layout::new(&FoldingConfig::default()).unwrap();
        assert!((l.lambda - 2.0 / 3.0).abs() < 1e-15);
        assert!((l.lambda_f - (0.81 - 1.0 / 3.0)).abs() < 1e-12);
        assert!(l.c2 <= l.lambda + l.eps);
    }
}
