use std::str::FromStr;

use crate::CliError;

/// `points` uniformly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl EvalGrid {
    pub fn new(start: f64, stop: f64, points: usize) -> Result<Self, CliError> {
        if !(start.is_finite() && stop.is_finite() && start < stop) {
            return Err(CliError::Usage(format!(
                "grid needs start < stop, got {start}:{stop}"
            )));
        }
        if points < 2 {
            return Err(CliError::Usage(format!(
                "grid needs at least 2 points, got {points}"
            )));
        }
        Ok(EvalGrid {
            start,
            stop,
            points,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        let h = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.stop
                } else {
                    self.start + h * i as f64
                }
            })
            .collect()
    }
}

impl FromStr for EvalGrid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::Usage(format!("grid must be start:stop:points, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start = parts[0].trim().parse().map_err(|_| bad())?;
        let stop = parts[1].trim().parse().map_err(|_| bad())?;
        let points = parts[2].trim().parse().map_err(|_| bad())?;
        EvalGrid::new(start, stop, points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_spans_the_interval() {
        let g: EvalGrid = "0:10:200".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 200);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[199], 10.0);
    }

    #[test]
    fn rejects_malformed_grids() {
        for s in ["1:0:5", "0:1:1", "0:1", "a:1:3", "0:inf:3"] {
            assert!(s.parse::<EvalGrid>().is_err(), "{s}");
        }
    }
}
