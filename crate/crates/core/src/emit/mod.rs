//! Progressive emission methods.
//!
//! Every method implements [`ProgressiveEmitter`]. Construction runs the
//! method's initialization phase exactly once: it builds the internal indexes
//! and, where the method buffers, the first comparison batch. Each
//! `next_comparison` call then yields the next best candidate or `None` on
//! exhaustion; once exhausted, every further call returns `None`.

pub mod equality;
pub mod naive;
pub mod similarity;

use std::str::FromStr;

use thiserror::Error;

use crate::model::{canonicalize, Comparison, ErMode, ProfileCollection, ProfileId};

pub trait ProgressiveEmitter: Send {
    fn next_comparison(&mut self) -> Option<Comparison>;
}

/// Mode context copied out of a collection so emitters need not keep the
/// profiles alive.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModeCtx {
    pub mode: ErMode,
    pub source_boundary: ProfileId,
    pub profile_count: usize,
}

impl ModeCtx {
    pub fn of(collection: &ProfileCollection) -> Self {
        Self {
            mode: collection.mode(),
            source_boundary: collection.source_boundary(),
            profile_count: collection.len(),
        }
    }

    /// Distinct profiles in dirty mode, cross-source profiles in clean-clean.
    pub fn valid_pair(&self, a: ProfileId, b: ProfileId) -> bool {
        match self.mode {
            ErMode::Dirty => a != b,
            ErMode::CleanClean => {
                (a < self.source_boundary) != (b < self.source_boundary)
            }
        }
    }

    pub fn comparison(&self, a: ProfileId, b: ProfileId, weight: f64) -> Comparison {
        let (i, j) = canonicalize(a, b, self.mode, self.source_boundary)
            .expect("emitters only canonicalize validity-checked pairs");
        Comparison::new(i, j, weight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    SaPsn,
    SaPsab,
    LsPsn,
    GsPsn,
    Pbs,
    Pps,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::SaPsn, Method::SaPsab, Method::LsPsn, Method::GsPsn, Method::Pbs, Method::Pps];

    pub fn name(&self) -> &'static str {
        match self {
            Method::SaPsn => "sa-psn",
            Method::SaPsab => "sa-psab",
            Method::LsPsn => "ls-psn",
            Method::GsPsn => "gs-psn",
            Method::Pbs => "pbs",
            Method::Pps => "pps",
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method '{s}' (expected one of sa-psn, sa-psab, ls-psn, gs-psn, pbs, pps)"))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tuning knobs shared by the method constructors. Defaults follow the usual
/// benchmark configuration: purge at 10%, filter at 80%, minimum suffix
/// length 2, window range 20, ten comparisons per scheduled profile.
#[derive(Debug, Clone)]
pub struct MethodParams {
    /// Minimum suffix length for the suffix forest (SA-PSAB).
    pub l_min: usize,
    /// Window range bound for GS-PSN.
    pub w_max: usize,
    /// Optional hard cap on the LS-PSN window growth; `None` runs windows up
    /// to the Neighbor List length.
    pub ls_window_cap: Option<usize>,
    /// Per-profile emission bound for PPS.
    pub k_max: usize,
    pub purge_ratio: f64,
    pub filter_ratio: f64,
    /// Whether SA-PSAB purges oversized suffix nodes before ordering them.
    pub psab_purge: bool,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            l_min: 2,
            w_max: 20,
            ls_window_cap: None,
            k_max: 10,
            purge_ratio: crate::blocking::DEFAULT_PURGE_RATIO,
            filter_ratio: crate::blocking::DEFAULT_FILTER_RATIO,
            psab_purge: true,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EmitError {
    #[error("the blocking workflow produced no blocks")]
    EmptyBlocks,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

fn workflow_params(params: &MethodParams) -> Result<crate::blocking::WorkflowParams, EmitError> {
    for (name, value) in [("purge_ratio", params.purge_ratio), ("filter_ratio", params.filter_ratio)] {
        if !(value > 0.0 && value <= 1.0) {
            return Err(EmitError::InvalidParameter(format!("{name} must be in (0, 1], got {value}")));
        }
    }
    Ok(crate::blocking::WorkflowParams {
        purge_ratio: params.purge_ratio,
        filter_ratio: params.filter_ratio,
    })
}

/// Constructs an initialized emitter for the given method.
pub fn build_emitter(
    method: Method,
    collection: &ProfileCollection,
    params: &MethodParams,
) -> Result<Box<dyn ProgressiveEmitter>, EmitError> {
    match method {
        Method::SaPsn => Ok(Box::new(naive::SaPsn::new(collection))),
        Method::SaPsab => {
            if params.l_min < 1 {
                return Err(EmitError::InvalidParameter("l_min must be at least 1".into()));
            }
            let purge_ratio = if params.psab_purge {
                let wf = workflow_params(params)?;
                Some(wf.purge_ratio)
            } else {
                None
            };
            Ok(Box::new(naive::SaPsab::new(collection, params.l_min, purge_ratio)))
        }
        Method::LsPsn => Ok(Box::new(similarity::LsPsn::new(collection, params.ls_window_cap))),
        Method::GsPsn => {
            if params.w_max < 1 {
                return Err(EmitError::InvalidParameter("w_max must be at least 1".into()));
            }
            Ok(Box::new(similarity::GsPsn::new(collection, params.w_max)))
        }
        Method::Pbs => {
            let wf = workflow_params(params)?;
            Ok(Box::new(equality::Pbs::new(collection, &wf)?))
        }
        Method::Pps => {
            if params.k_max < 1 {
                return Err(EmitError::InvalidParameter("k_max must be at least 1".into()));
            }
            let wf = workflow_params(params)?;
            Ok(Box::new(equality::Pps::new(collection, &wf, params.k_max)?))
        }
    }
}
