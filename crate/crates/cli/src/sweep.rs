//! `KEY=START:STOP:STEP` sweep specifications.

use std::fmt;
use std::str::FromStr;

use isac_core::scenario::SweepKey;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub key: SweepKey,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepSpec {
    /// Points `start, start + step, ...` up to `stop` inclusive; empty when
    /// `start > stop`.
    pub fn points(&self) -> Vec<f64> {
        if self.start > self.stop {
            return Vec::new();
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for SweepSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, range) = s.split_once('=').ok_or_else(|| format!("expected KEY=START:STOP:STEP, got `{s}`"))?;
        let key = SweepKey::parse(key.trim()).map_err(|e| e.to_string())?;
        let parts: Vec<&str> = range.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(format!("expected START:STOP:STEP, got `{range}`"));
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("bad number `{v}`: {e}"));
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(start.is_finite() && stop.is_finite()) || !(step > 0.0 && step.is_finite()) {
            return Err(format!("sweep bounds must be finite and the step positive, got `{range}`"));
        }
        Ok(Self { key, start, stop, step })
    }
}

impl fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}:{}:{}", self.key.name(), self.start, self.stop, self.step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_expands() {
        let s: SweepSpec = "gamma=0:14:2".parse().unwrap();
        assert_eq!(s.key, SweepKey::Gamma);
        assert_eq!(s.points(), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0]);
        let r: SweepSpec = "d_o=20:200:45".parse().unwrap();
        assert_eq!(r.points().len(), 5);
        let t: SweepSpec = "k=0.1:0.3:0.1".parse().unwrap();
        assert_eq!(t.points().len(), 3);
    }

    #[test]
    fn empty_and_single_ranges() {
        assert!("d_o=50:20:5".parse::<SweepSpec>().unwrap().points().is_empty());
        assert_eq!("n_c=3:3:1".parse::<SweepSpec>().unwrap().points(), vec![3.0]);
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["gamma", "gamma=1:2", "foo=1:2:1", "gamma=0:10:0", "gamma=0:10:-1", "gamma=a:1:1"] {
            assert!(bad.parse::<SweepSpec>().is_err(), "{bad}");
        }
    }
}
