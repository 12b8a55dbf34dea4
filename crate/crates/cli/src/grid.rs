use anyhow::{bail, Context, Result};

/// A uniform grid `a:b:step`, inclusive of `b` when it falls on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

pub const MAX_POINTS: usize = 10_000_000;

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, step] = parts.as_slice() else {
            bail!("grid `{s}` is not of the form start:stop:step");
        };
        let num = |t: &str, what: &str| -> Result<f64> {
            let v: f64 = t
                .trim()
                .parse()
                .with_context(|| format!("grid {what} `{t}` is not a number"))?;
            if !v.is_finite() {
                bail!("grid {what} `{t}` is not finite");
            }
            Ok(v)
        };
        let g = GridSpec {
            start: num(a, "start")?,
            stop: num(b, "stop")?,
            step: num(step, "step")?,
        };
        g.points()?;
        Ok(g)
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) {
            bail!("grid step must be positive, got {}", self.step);
        }
        if self.stop < self.start {
            bail!("grid stop {} is below start {}", self.stop, self.start);
        }
        let span = (self.stop - self.start) / self.step;
        // tolerate a stop that is off the lattice by rounding only
        let count = (span + 1e-9).floor();
        if count >= MAX_POINTS as f64 {
            bail!("grid has more than {MAX_POINTS} points");
        }
        let count = count as usize;
        let mut pts: Vec<f64> = (0..=count)
            .map(|i| self.start + self.step * i as f64)
            .collect();
        if let Some(last) = pts.last_mut() {
            if (*last - self.stop).abs() <= 1e-9 * self.step {
                *last = self.stop;
            }
        }
        Ok(pts)
    }
}
