use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Point;

/// Per-step record of the forward and backward points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// z_n = w_n − γ_n 𝔅_n
    pub z: Point,
    /// y_n = J_{γ_n A} z_n
    pub y: Point,
    pub gamma: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub n: usize,
    pub w: Point,
}

/// Iterates w_1, w_2, … of one run. Index n starts at 1; `records[k]` is the
/// step that maps w_{k+1} to w_{k+2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrajectory")]
pub struct Trajectory {
    iterates: Vec<Iterate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    records: Option<Vec<StepRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sq_dist_to_solution: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawTrajectory {
    iterates: Vec<Iterate>,
    #[serde(default)]
    records: Option<Vec<StepRecord>>,
    #[serde(default)]
    sq_dist_to_solution: Option<Vec<f64>>,
}

impl TryFrom<RawTrajectory> for Trajectory {
    type Error = Error;

    fn try_from(raw: RawTrajectory) -> Result<Self> {
        let t = Trajectory {
            iterates: raw.iterates,
            records: raw.records,
            sq_dist_to_solution: raw.sq_dist_to_solution,
        };
        t.validate()?;
        Ok(t)
    }
}

impl Trajectory {
    pub fn new(w1: Point, track_records: bool, track_sq_dist: bool) -> Self {
        Trajectory {
            iterates: vec![Iterate { n: 1, w: w1 }],
            records: track_records.then(Vec::new),
            sq_dist_to_solution: track_sq_dist.then(Vec::new),
        }
    }

    pub(crate) fn push(&mut self, w: Point, record: Option<StepRecord>) {
        let n = self.iterates.len() + 1;
        self.iterates.push(Iterate { n, w });
        if let (Some(records), Some(r)) = (self.records.as_mut(), record) {
            records.push(r);
        }
    }

    pub(crate) fn push_sq_dist(&mut self, d: f64) {
        if let Some(v) = self.sq_dist_to_solution.as_mut() {
            v.push(d);
        }
    }

    fn validate(&self) -> Result<()> {
        for (k, it) in self.iterates.iter().enumerate() {
            if it.n != k + 1 {
                return Err(Error::param(
                    "iterates",
                    format!("indices must run 1, 2, …; found {} at position {k}", it.n),
                ));
            }
        }
        if let Some(d) = &self.sq_dist_to_solution {
            if d.len() != self.iterates.len() {
                return Err(Error::param(
                    "sq_dist_to_solution",
                    "length differs from iterates",
                ));
            }
            if d.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::param(
                    "sq_dist_to_solution",
                    "entries must be nonnegative",
                ));
            }
        }
        if let Some(r) = &self.records {
            if r.len() + 1 != self.iterates.len() {
                return Err(Error::param("records", "expected one record per step"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    pub fn iterates(&self) -> &[Iterate] {
        &self.iterates
    }

    /// w_n for 1-based n.
    pub fn w(&self, n: usize) -> Option<&Point> {
        n.checked_sub(1)
            .and_then(|k| self.iterates.get(k))
            .map(|it| &it.w)
    }

    pub fn last(&self) -> &Point {
        &self.iterates[self.iterates.len() - 1].w
    }

    pub fn records(&self) -> Option<&[StepRecord]> {
        self.records.as_deref()
    }

    /// Record of step n (1-based), which produced w_{n+1}.
    pub fn record(&self, n: usize) -> Option<&StepRecord> {
        self.records.as_ref()?.get(n.checked_sub(1)?)
    }

    pub fn sq_dist_to_solution(&self) -> Option<&[f64]> {
        self.sq_dist_to_solution.as_deref()
    }

    /// CSV with header `n,sq_dist,gamma,lambda`. Fields that are not
    /// available (no known solution, or the final iterate, which has no
    /// step) are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,sq_dist,gamma,lambda\n");
        for (k, it) in self.iterates.iter().enumerate() {
            let sq = self
                .sq_dist_to_solution
                .as_ref()
                .map(|d| d[k].to_string())
                .unwrap_or_default();
            let (g, l) = match self.records.as_ref().and_then(|r| r.get(k)) {
                Some(r) => (r.gamma.to_string(), r.lambda.to_string()),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(out, "{},{},{},{}", it.n, sq, g, l);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
