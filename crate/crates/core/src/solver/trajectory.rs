use serde::{Deserialize, Serialize};
use std::io::Write;

use super::SolverError;
use crate::saturation::FrequencySet;
use crate::spectral::{box_frequencies, Frequency, TrigField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "t_star")]
pub enum Status {
    Completed,
    /// The norm crossed the blow-up threshold at this time.
    BlownUpAt(f64),
}

/// Recorded samples of a solution. `states[0]` is the initial state; samples
/// follow every `record_stride` steps and every window end.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<TrigField>,
    pub norms: Vec<f64>,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    #[serde(flatten)]
    pub status: Status,
    pub samples: usize,
    pub final_time: f64,
    pub final_norm: f64,
    pub max_norm: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &TrigField {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial time")
    }

    pub fn is_completed(&self) -> bool {
        self.status == Status::Completed
    }

    /// The final state, or `BlownUpAt` if the run did not complete.
    pub fn endpoint(&self) -> Result<&TrigField, SolverError> {
        match self.status {
            Status::Completed => Ok(self.final_state()),
            Status::BlownUpAt(t) => Err(SolverError::BlownUpAt {
                t,
                norm: *self.norms.last().unwrap(),
            }),
        }
    }

    pub fn summary(&self) -> TrajectorySummary {
        TrajectorySummary {
            status: self.status,
            samples: self.times.len(),
            final_time: self.final_time(),
            final_norm: *self.norms.last().unwrap(),
            max_norm: self.norms.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Writes `t, norm` followed by the cosine and sine coefficients of every
    /// canonical mode with `|k|_inf <= report_cutoff`.
    pub fn write_csv<W: Write>(&self, out: W, report_cutoff: i64) -> Result<(), SolverError> {
        let dim = self.states[0].dim();
        let keys: Vec<Frequency> = box_frequencies(dim, report_cutoff)
            .into_iter()
            .filter(|k| k.is_canonical())
            .collect();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "norm".to_string()];
        for k in &keys {
            header.push(format!("cos{k}"));
            if !k.is_zero() {
                header.push(format!("sin{k}"));
            }
        }
        w.write_record(&header)?;
        for ((t, u), n) in self.times.iter().zip(&self.states).zip(&self.norms) {
            let mut row = vec![t.to_string(), n.to_string()];
            for k in &keys {
                let m = u.coefficient(k);
                row.push(m.cos.to_string());
                if !k.is_zero() {
                    row.push(m.sin.to_string());
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Two-column `t, norm` table.
    pub fn write_norm_csv<W: Write>(&self, out: W) -> Result<(), SolverError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "norm"])?;
        for (t, n) in self.times.iter().zip(&self.norms) {
            w.write_record([t.to_string(), n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Frequencies (with their negatives) whose coefficient exceeds `tol` in
/// magnitude at some recorded time.
pub fn mode_support(traj: &Trajectory, tol: f64) -> FrequencySet {
    let dim = traj.states[0].dim();
    let mut keys = std::collections::BTreeSet::new();
    for u in &traj.states {
        for (k, m) in u.iter() {
            if m.cos.abs() > tol || m.sin.abs() > tol {
                keys.insert(k.clone());
                keys.insert(k.neg());
            }
        }
    }
    FrequencySet::new(dim, keys).expect("states share a dimension")
}
