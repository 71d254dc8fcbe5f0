//! C ABI over the `satvnf` simulator.
//!
//! Handles are opaque heap objects owned by the caller and released with
//! the matching `*_free` function. Every entry point returns a
//! [`SatvnfStatus`]. On failure, `satvnf_last_error` returns a message that
//! stays valid on the calling thread until that thread's next failing call.
//! Panics never cross the boundary: they come back as `SATVNF_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use satvnf::config::{load_config, ExperimentConfig, Mode};
use satvnf::runner::{self, AggregateRow, DetailRow, RunOutput};
use satvnf::{Algorithm, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatvnfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Config text or file failed to parse or validate.
    Config = 3,
    InvalidParameter = 4,
    Io = 5,
    /// Row index past the end of a result table.
    OutOfRange = 6,
    /// The oracle check found a mismatch or a constraint violation.
    CheckFailed = 7,
    Internal = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatvnfAlgorithm {
    Dvnfp = 0,
    Greedy = 1,
    Viterbi = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatvnfMode {
    Static = 0,
    Dynamic = 1,
}

/// Opaque experiment configuration.
pub struct SatvnfConfig(ExperimentConfig);

/// Opaque result tables of one `satvnf_run`.
pub struct SatvnfResults(RunOutput);

/// One detail row. `slot` is -1 for static runs.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SatvnfDetailRow {
    pub mode: SatvnfMode,
    pub algorithm: SatvnfAlgorithm,
    pub cell_param: f64,
    pub repetition: u32,
    pub slot: i64,
    pub seed: u64,
    pub bandwidth_cost_mbps: f64,
    pub user_delay_ms: f64,
    pub allocated_fraction: f64,
    pub edge_count: u64,
    pub cloud_count: u64,
    pub local_count: u64,
    pub rounds: u64,
    pub solver_calls: u64,
    pub wall_ms: f64,
}

/// Mean and sample standard deviation over one (algorithm, cell).
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SatvnfAggregateRow {
    pub mode: SatvnfMode,
    pub algorithm: SatvnfAlgorithm,
    pub cell_param: f64,
    pub samples: u64,
    pub bandwidth_cost_mean: f64,
    pub bandwidth_cost_std: f64,
    pub user_delay_mean: f64,
    pub user_delay_std: f64,
    pub allocated_fraction_mean: f64,
    pub allocated_fraction_std: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SatvnfOracleSummary {
    pub instances: u64,
    pub matched: u64,
    pub scope_improved: u64,
    pub scope_bandwidth_gap: f64,
    pub audited_runs: u64,
    pub audit_failures: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SatvnfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config { .. } => SatvnfStatus::Config,
            Error::InvalidParameter { .. } => SatvnfStatus::InvalidParameter,
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) => SatvnfStatus::Io,
            _ => SatvnfStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SatvnfStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, stores any failure message, and converts panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SatvnfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SatvnfStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("panic: {message}"));
            SatvnfStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|e| Failure(SatvnfStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

unsafe fn ref_arg<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn mut_arg<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| null(what))
}

fn algorithm_to_c(name: &str) -> SatvnfAlgorithm {
    match name.parse::<Algorithm>() {
        Ok(Algorithm::Greedy) => SatvnfAlgorithm::Greedy,
        Ok(Algorithm::Viterbi) => SatvnfAlgorithm::Viterbi,
        _ => SatvnfAlgorithm::Dvnfp,
    }
}

fn mode_to_c(name: &str) -> SatvnfMode {
    if name == Mode::Dynamic.name() {
        SatvnfMode::Dynamic
    } else {
        SatvnfMode::Static
    }
}

impl From<&DetailRow> for SatvnfDetailRow {
    fn from(r: &DetailRow) -> Self {
        SatvnfDetailRow {
            mode: mode_to_c(&r.mode),
            algorithm: algorithm_to_c(&r.algorithm),
            cell_param: r.cell_param,
            repetition: r.repetition,
            slot: r.slot,
            seed: r.seed,
            bandwidth_cost_mbps: r.c_bw_mbps,
            user_delay_ms: r.c_user_ms,
            allocated_fraction: r.allocated_fraction,
            edge_count: r.edge_count as u64,
            cloud_count: r.cloud_count as u64,
            local_count: r.local_count as u64,
            rounds: r.rounds as u64,
            solver_calls: r.solver_calls as u64,
            wall_ms: r.wall_ms,
        }
    }
}

impl From<&AggregateRow> for SatvnfAggregateRow {
    fn from(r: &AggregateRow) -> Self {
        SatvnfAggregateRow {
            mode: mode_to_c(&r.mode),
            algorithm: algorithm_to_c(&r.algorithm),
            cell_param: r.cell_param,
            samples: r.samples as u64,
            bandwidth_cost_mean: r.c_bw_mean,
            bandwidth_cost_std: r.c_bw_std,
            user_delay_mean: r.c_user_mean,
            user_delay_std: r.c_user_std,
            allocated_fraction_mean: r.allocated_fraction_mean,
            allocated_fraction_std: r.allocated_fraction_std,
        }
    }
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    let slot = mut_arg(out, "out")?;
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn satvnf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null if none.
#[no_mangle]
pub extern "C" fn satvnf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Writes a new config holding the reference defaults to `*out`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn satvnf_config_default(out: *mut *mut SatvnfConfig) -> SatvnfStatus {
    guard(|| emit(out, SatvnfConfig(ExperimentConfig::default())))
}

/// Parses and validates TOML config text.
///
/// # Safety
/// `text` must be null or a NUL-terminated string; `out` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn satvnf_config_from_toml(text: *const c_char, out: *mut *mut SatvnfConfig) -> SatvnfStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        emit(out, SatvnfConfig(ExperimentConfig::from_toml_str(text)?))
    })
}

/// Reads and validates a TOML config file.
///
/// # Safety
/// `path` must be null or a NUL-terminated string; `out` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn satvnf_config_load(path: *const c_char, out: *mut *mut SatvnfConfig) -> SatvnfStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        emit(out, SatvnfConfig(load_config(Path::new(path))?))
    })
}

/// Serializes the resolved config as TOML. Free the string with
/// `satvnf_string_free`.
///
/// # Safety
/// `config` must be null or a live handle; `out` must be null or valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn satvnf_config_to_toml(config: *const SatvnfConfig, out: *mut *mut c_char) -> SatvnfStatus {
    guard(|| {
        let config = ref_arg(config, "config")?;
        let text =
            CString::new(config.0.to_toml_string()).map_err(|e| Failure(SatvnfStatus::Internal, e.to_string()))?;
        *mut_arg(out, "out")? = text.into_raw();
        Ok(())
    })
}

/// Overrides the root seed.
///
/// # Safety
/// `config` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn satvnf_config_set_seed(config: *mut SatvnfConfig, seed: u64) -> SatvnfStatus {
    guard(|| {
        mut_arg(config, "config")?.0.experiment.seed = seed;
        Ok(())
    })
}

/// Restricts the run to `count` algorithms read from `algorithms`.
///
/// # Safety
/// `config` must be null or a live handle; `algorithms` must be null or
/// point to `count` readable values.
#[no_mangle]
pub unsafe extern "C" fn satvnf_config_set_algorithms(
    config: *mut SatvnfConfig,
    algorithms: *const SatvnfAlgorithm,
    count: usize,
) -> SatvnfStatus {
    guard(|| {
        let config = mut_arg(config, "config")?;
        if algorithms.is_null() {
            return Err(null("algorithms"));
        }
        let selected: Vec<Algorithm> = std::slice::from_raw_parts(algorithms, count)
            .iter()
            .map(|a| match a {
                SatvnfAlgorithm::Dvnfp => Algorithm::Dvnfp,
                SatvnfAlgorithm::Greedy => Algorithm::Greedy,
                SatvnfAlgorithm::Viterbi => Algorithm::Viterbi,
            })
            .collect();
        let mut candidate = config.0.clone();
        candidate.experiment.algorithms = selected;
        candidate.validate()?;
        config.0 = candidate;
        Ok(())
    })
}

/// Releases a config handle. Null is a no-op.
///
/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn satvnf_config_free(config: *mut SatvnfConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the configured sweep on `jobs` threads (0 means 1).
///
/// # Safety
/// `config` must be null or a live handle; `out` must be null or valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn satvnf_run(
    config: *const SatvnfConfig,
    jobs: usize,
    out: *mut *mut SatvnfResults,
) -> SatvnfStatus {
    guard(|| {
        let config = ref_arg(config, "config")?;
        emit(out, SatvnfResults(runner::run_experiment(&config.0, jobs)?))
    })
}

/// # Safety
/// `results` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn satvnf_results_detail_count(results: *const SatvnfResults, out: *mut usize) -> SatvnfStatus {
    guard(|| {
        *mut_arg(out, "out")? = ref_arg(results, "results")?.0.detail.len();
        Ok(())
    })
}

/// # Safety
/// `results` must be null or a live handle; `out` must be null or valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn satvnf_results_detail_row(
    results: *const SatvnfResults,
    index: usize,
    out: *mut SatvnfDetailRow,
) -> SatvnfStatus {
    guard(|| {
        let rows = &ref_arg(results, "results")?.0.detail;
        let row = rows
            .get(index)
            .ok_or_else(|| Failure(SatvnfStatus::OutOfRange, format!("detail row {index} of {}", rows.len())))?;
        *mut_arg(out, "out")? = row.into();
        Ok(())
    })
}

/// # Safety
/// `results` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn satvnf_results_aggregate_count(
    results: *const SatvnfResults,
    out: *mut usize,
) -> SatvnfStatus {
    guard(|| {
        *mut_arg(out, "out")? = ref_arg(results, "results")?.0.aggregate.len();
        Ok(())
    })
}

/// # Safety
/// `results` must be null or a live handle; `out` must be null or valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn satvnf_results_aggregate_row(
    results: *const SatvnfResults,
    index: usize,
    out: *mut SatvnfAggregateRow,
) -> SatvnfStatus {
    guard(|| {
        let rows = &ref_arg(results, "results")?.0.aggregate;
        let row = rows
            .get(index)
            .ok_or_else(|| Failure(SatvnfStatus::OutOfRange, format!("aggregate row {index} of {}", rows.len())))?;
        *mut_arg(out, "out")? = row.into();
        Ok(())
    })
}

/// Writes the CSV, JSON and resolved-config files into `dir`.
///
/// # Safety
/// Handles must be null or live; `dir` must be null or a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn satvnf_results_write(
    results: *const SatvnfResults,
    config: *const SatvnfConfig,
    dir: *const c_char,
) -> SatvnfStatus {
    guard(|| {
        let results = ref_arg(results, "results")?;
        let config = ref_arg(config, "config")?;
        let dir = str_arg(dir, "dir")?;
        runner::write_outputs(Path::new(dir), &config.0, &results.0)?;
        Ok(())
    })
}

/// Releases a results handle. Null is a no-op.
///
/// # Safety
/// `results` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn satvnf_results_free(results: *mut SatvnfResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// Runs the oracle comparison and constraint audit. Fills `out` in every
/// case where the check ran; returns `SATVNF_STATUS_CHECK_FAILED` if it
/// found a problem.
///
/// # Safety
/// `config` must be null or a live handle; `out` must be null or valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn satvnf_oracle_check(
    config: *const SatvnfConfig,
    jobs: usize,
    out: *mut SatvnfOracleSummary,
) -> SatvnfStatus {
    guard(|| {
        let config = ref_arg(config, "config")?;
        let out = mut_arg(out, "out")?;
        let report = runner::oracle_check(&config.0, jobs)?;
        *out = SatvnfOracleSummary {
            instances: report.instances,
            matched: report.matched,
            scope_improved: report.scope_improved,
            scope_bandwidth_gap: report.scope_bandwidth_gap,
            audited_runs: report.audited_runs,
            audit_failures: report.audit_failures.len() as u64,
        };
        if report.passed() {
            Ok(())
        } else {
            let mut detail = report.audit_failures.join("; ");
            if !report.mismatched_seeds.is_empty() {
                detail = format!("oracle mismatch on seeds {:?}; {detail}", report.mismatched_seeds);
            }
            Err(Failure(SatvnfStatus::CheckFailed, detail))
        }
    })
}

/// Releases a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn satvnf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
