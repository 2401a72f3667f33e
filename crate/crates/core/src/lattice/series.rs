use serde::{Deserialize, Serialize};

use crate::error::{Result, ZenoError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    /// Sampled right after a projection.
    Projection,
    /// Sampled during free or open evolution.
    Evolution,
}

/// One row of a moment time series. Fields that only make sense at
/// projections are `None` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRecord {
    pub t: f64,
    /// Unnormalized trace (survival probability).
    pub norm: f64,
    pub x2: f64,
    pub p2: f64,
    pub xp_sym: f64,
    /// `<p^2>` just before the projection.
    pub p2_pre: Option<f64>,
    /// Reduced-state contribution to the post-projection `<p^2>`.
    pub p2_red: Option<f64>,
    /// Interference contribution.
    pub delta_term: Option<f64>,
    /// Boundary-gradient contribution.
    pub sigma_term: Option<f64>,
    pub kind: RecordKind,
}

impl MomentRecord {
    pub fn evolution(t: f64, norm: f64, x2: f64, p2: f64, xp_sym: f64) -> Self {
        Self {
            t,
            norm,
            x2,
            p2,
            xp_sym,
            p2_pre: None,
            p2_red: None,
            delta_term: None,
            sigma_term: None,
            kind: RecordKind::Evolution,
        }
    }
}

/// Time-ordered moment records. Times are non-decreasing; a projection may
/// share its time with the evolution sample that precedes it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    records: Vec<MomentRecord>,
}

impl MomentSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, rec: MomentRecord) -> Result<()> {
        if !rec.t.is_finite() {
            return Err(ZenoError::NumericalStability(format!(
                "non-finite record time {}",
                rec.t
            )));
        }
        if let Some(last) = self.records.last() {
            if rec.t < last.t - 1e-12 {
                return Err(ZenoError::Argument(format!(
                    "record at t = {} precedes t = {}",
                    rec.t, last.t
                )));
            }
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn records(&self) -> &[MomentRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&MomentRecord> {
        self.records.last()
    }

    pub fn projections(&self) -> impl Iterator<Item = &MomentRecord> {
        self.records
            .iter()
            .filter(|r| r.kind == RecordKind::Projection)
    }

    /// `(t, survival)` at each projection.
    pub fn survival(&self) -> Vec<(f64, f64)> {
        self.projections().map(|r| (r.t, r.norm)).collect()
    }
}
