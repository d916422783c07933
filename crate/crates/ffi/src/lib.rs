//! C interface to `rrt-cut`.
//!
//! Every function returns an [`RrtStatus`]; results go through out
//! pointers. Handles are opaque and must be released with their `_free`
//! function. The message of the last failure on the calling thread is
//! available from [`rrt_last_error`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rrt_cut::cutter::Rule;
use rrt_cut::exactdist::{pmf, ExactPmf};
use rrt_cut::montecarlo::{run_experiment, ExperimentConfig, SampleSummary, Sampler};
use rrt_cut::numeric::Rational;
use rrt_cut::splitprob::{joint_l, joint_r, joint_y};
use rrt_cut::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RrtStatus {
    Ok = 0,
    InvalidArgument = 1,
    BudgetExceeded = 2,
    Io = 3,
    NullPointer = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RrtRule {
    First = 0,
    Last = 1,
    Random = 2,
}

impl From<RrtRule> for Rule {
    fn from(r: RrtRule) -> Rule {
        match r {
            RrtRule::First => Rule::First,
            RrtRule::Last => Rule::Last,
            RrtRule::Random => Rule::Random,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RrtSampler {
    Auto = 0,
    Direct = 1,
    Splitting = 2,
}

impl From<RrtSampler> for Sampler {
    fn from(s: RrtSampler) -> Sampler {
        match s {
            RrtSampler::Auto => Sampler::Auto,
            RrtSampler::Direct => Sampler::Direct,
            RrtSampler::Splitting => Sampler::Splitting,
        }
    }
}

/// A Monte Carlo experiment: configuration plus, after
/// [`rrt_experiment_run`], its cut counts.
pub struct RrtExperiment {
    config: ExperimentConfig,
    summary: Option<SampleSummary>,
}

/// An exact cut-count law.
pub struct RrtPmf {
    exact: ExactPmf<Rational>,
    float: ExactPmf<f64>,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RrtStatus {
    match e {
        Error::InvalidArgument(_) => RrtStatus::InvalidArgument,
        Error::BudgetExceeded(_) => RrtStatus::BudgetExceeded,
        Error::Io(_) => RrtStatus::Io,
        Error::Json(_) => RrtStatus::Internal,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), RrtStatus>) -> RrtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RrtStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".to_string());
            RrtStatus::Internal
        }
    }
}

fn fail(e: Error) -> RrtStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> RrtStatus {
    set_error(format!("{what} is null"));
    RrtStatus::NullPointer
}

fn rule_from(raw: u32) -> Result<Rule, RrtStatus> {
    match raw {
        0 => Ok(Rule::First),
        1 => Ok(Rule::Last),
        2 => Ok(Rule::Random),
        _ => {
            set_error(format!("unknown rule {raw}"));
            Err(RrtStatus::InvalidArgument)
        }
    }
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rrt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rrt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New experiment with the automatic sampler and the global thread pool.
/// `rule` is an [`RrtRule`] value.
#[no_mangle]
pub unsafe extern "C" fn rrt_experiment_new(
    rule: u32,
    n: u64,
    ell: u64,
    replicates: u64,
    seed: u64,
    out: *mut *mut RrtExperiment,
) -> RrtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = ExperimentConfig::new(rule_from(rule)?, n as usize, ell as usize, replicates as usize, seed);
        config.validate().map_err(fail)?;
        *out = Box::into_raw(Box::new(RrtExperiment { config, summary: None }));
        Ok(())
    })
}

/// Worker threads, 0 for the global pool. Results do not depend on it.
#[no_mangle]
pub unsafe extern "C" fn rrt_experiment_set_workers(exp: *mut RrtExperiment, workers: u32) -> RrtStatus {
    guard(|| {
        let exp = exp.as_mut().ok_or_else(|| null("experiment"))?;
        exp.config.workers = (workers > 0).then_some(workers as usize);
        exp.summary = None;
        Ok(())
    })
}

/// `sampler` is an [`RrtSampler`] value.
#[no_mangle]
pub unsafe extern "C" fn rrt_experiment_set_sampler(exp: *mut RrtExperiment, sampler: u32) -> RrtStatus {
    guard(|| {
        let exp = exp.as_mut().ok_or_else(|| null("experiment"))?;
        exp.config.sampler = match sampler {
            0 => RrtSampler::Auto,
            1 => RrtSampler::Direct,
            2 => RrtSampler::Splitting,
            _ => {
                set_error(format!("unknown sampler {sampler}"));
                return Err(RrtStatus::InvalidArgument);
            }
        }
        .into();
        exp.summary = None;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rrt_experiment_run(exp: *mut RrtExperiment) -> RrtStatus {
    guard(|| {
        let exp = exp.as_mut().ok_or_else(|| null("experiment"))?;
        exp.summary = Some(run_experiment(&exp.config).map_err(fail)?);
        Ok(())
    })
}

/// Number of cut counts available, 0 before a run.
#[no_mangle]
pub unsafe extern "C" fn rrt_experiment_len(exp: *const RrtExperiment, out: *mut u64) -> RrtStatus {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("experiment"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = exp.summary.as_ref().map_or(0, |s| s.cuts.len() as u64);
        Ok(())
    })
}

/// Copies the cut counts, in replicate order, into `buf` of capacity `cap`.
#[no_mangle]
pub unsafe extern "C" fn rrt_experiment_cuts(exp: *const RrtExperiment, buf: *mut u64, cap: u64) -> RrtStatus {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("experiment"))?;
        let Some(summary) = &exp.summary else {
            set_error("experiment has not been run".to_string());
            return Err(RrtStatus::InvalidArgument);
        };
        if (cap as usize) < summary.cuts.len() {
            set_error(format!("need room for {} counts, got {cap}", summary.cuts.len()));
            return Err(RrtStatus::BufferTooSmall);
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(summary.cuts.as_ptr(), buf, summary.cuts.len());
        Ok(())
    })
}

/// Sample mean of the cut counts.
#[no_mangle]
pub unsafe extern "C" fn rrt_experiment_mean(exp: *const RrtExperiment, out: *mut f64) -> RrtStatus {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("experiment"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let Some(summary) = &exp.summary else {
            set_error("experiment has not been run".to_string());
            return Err(RrtStatus::InvalidArgument);
        };
        *out = summary.mean();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rrt_experiment_free(exp: *mut RrtExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Exact law of the cut count for `rule`, `n`, `ell`.
#[no_mangle]
pub unsafe extern "C" fn rrt_pmf_new(rule: u32, n: u64, ell: u64, out: *mut *mut RrtPmf) -> RrtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (n, ell) = (n as usize, ell as usize);
        if ell == 0 || ell > n {
            set_error(format!("need 1 <= l <= n, got l = {ell}, n = {n}"));
            return Err(RrtStatus::InvalidArgument);
        }
        let exact = pmf::<Rational>(rule_from(rule)?, n, ell).map_err(fail)?;
        let json = serde_json::to_string(&exact.to_json()).map_err(|e| fail(e.into()))?;
        let json = CString::new(json).expect("json has no nul");
        let float = exact.to_f64();
        *out = Box::into_raw(Box::new(RrtPmf { exact, float, json }));
        Ok(())
    })
}

/// One past the largest cut count with positive probability.
#[no_mangle]
pub unsafe extern "C" fn rrt_pmf_len(p: *const RrtPmf, out: *mut u64) -> RrtStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("pmf"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = p.exact.probs().len() as u64;
        Ok(())
    })
}

/// `P(X = m)` rounded to double; 0 beyond the support.
#[no_mangle]
pub unsafe extern "C" fn rrt_pmf_prob(p: *const RrtPmf, m: u64, out: *mut f64) -> RrtStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("pmf"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = p.float.prob(m as usize);
        Ok(())
    })
}

/// The exact law as JSON with numerators and denominators; owned by the
/// handle.
#[no_mangle]
pub unsafe extern "C" fn rrt_pmf_json(p: *const RrtPmf, out: *mut *const c_char) -> RrtStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("pmf"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = p.json.as_ptr();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rrt_pmf_free(p: *mut RrtPmf) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Joint probability that the first cut removes `k` nodes of which `r` are
/// targets, for the target rule `rule`, in double precision.
#[no_mangle]
pub unsafe extern "C" fn rrt_split_probability(
    rule: u32,
    n: u64,
    ell: u64,
    k: u64,
    r: u64,
    out: *mut f64,
) -> RrtStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let (n, ell, k, r) = (n as usize, ell as usize, k as usize, r as usize);
        *out = match rule_from(rule)? {
            Rule::First => joint_r::<f64>(n, ell, k, r),
            Rule::Last => joint_l::<f64>(n, ell, k, r),
            Rule::Random => joint_y::<f64>(n, ell, k, r),
        }
        .map_err(fail)?;
        Ok(())
    })
}
