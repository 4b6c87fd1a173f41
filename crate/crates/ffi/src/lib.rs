//! C ABI over `mapsim-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/loader
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`MapsimStatus`]; on failure a message is kept per thread and
//! can be read with [`mapsim_last_error_message`]. Panics never unwind into
//! the caller: they are reported as `MAPSIM_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mapsim_core::deployment::{simba, DeploymentPlan, Evaluator, SimbaConfig};
use mapsim_core::marl::{evaluate, Associator, EvaluationConfig};
use mapsim_core::scenario::{load_scenario, preset, Scenario};

/// Result codes of every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ScenarioError = 3,
    /// A plan was produced but violates at least one constraint.
    Infeasible = 4,
    BufferTooSmall = 5,
    Internal = 6,
    Panic = 7,
}

/// A validated scenario.
pub struct MapsimScenario {
    inner: Scenario,
}

/// A MAP deployment plan.
pub struct MapsimPlan {
    inner: DeploymentPlan,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard(f: impl FnOnce() -> MapsimStatus) -> MapsimStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MapsimStatus::Panic
        }
    }
}

fn fail(status: MapsimStatus, message: impl Into<String>) -> MapsimStatus {
    set_error(message);
    status
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, MapsimStatus> {
    if s.is_null() {
        return Err(fail(MapsimStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(MapsimStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn mapsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mapsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a bundled preset (`"smallscale"` or `"mediumscale"`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mapsim_scenario_preset(name: *const c_char, out: *mut *mut MapsimScenario) -> MapsimStatus {
    guard(|| {
        if out.is_null() {
            return fail(MapsimStatus::NullPointer, "out is null");
        }
        let name = match read_str(name, "name") {
            Ok(n) => n,
            Err(s) => return s,
        };
        match preset(name) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(MapsimScenario { inner: s }));
                MapsimStatus::Ok
            }
            Err(e) => fail(MapsimStatus::ScenarioError, e.to_string()),
        }
    })
}

/// Parses a scenario from TOML text.
///
/// # Safety
/// `toml_text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mapsim_scenario_from_toml(
    toml_text: *const c_char,
    out: *mut *mut MapsimScenario,
) -> MapsimStatus {
    guard(|| {
        if out.is_null() {
            return fail(MapsimStatus::NullPointer, "out is null");
        }
        let text = match read_str(toml_text, "toml_text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match load_scenario(text) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(MapsimScenario { inner: s }));
                MapsimStatus::Ok
            }
            Err(e) => fail(MapsimStatus::ScenarioError, e.to_string()),
        }
    })
}

/// Releases a scenario; null is ignored.
///
/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mapsim_scenario_free(scenario: *mut MapsimScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of users and candidate grid locations.
///
/// # Safety
/// `scenario` must be a live handle; the out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn mapsim_scenario_sizes(
    scenario: *const MapsimScenario,
    users: *mut usize,
    grid_locations: *mut usize,
) -> MapsimStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else { return fail(MapsimStatus::NullPointer, "scenario is null") };
        if !users.is_null() {
            *users = s.inner.users.len();
        }
        if !grid_locations.is_null() {
            *grid_locations = s.inner.grid.len();
        }
        MapsimStatus::Ok
    })
}

/// Runs SIMBA on the scenario's snapshot. On `MAPSIM_STATUS_OK` `out` holds
/// the best feasible plan; on `MAPSIM_STATUS_INFEASIBLE` it holds the
/// best-effort plan (or null if nothing could be evaluated).
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mapsim_simba(
    scenario: *const MapsimScenario,
    monte_carlo_iters: usize,
    episodes: usize,
    seed: u64,
    out: *mut *mut MapsimPlan,
) -> MapsimStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else { return fail(MapsimStatus::NullPointer, "scenario is null") };
        if out.is_null() {
            return fail(MapsimStatus::NullPointer, "out is null");
        }
        if monte_carlo_iters == 0 || episodes == 0 {
            return fail(MapsimStatus::InvalidArgument, "monte_carlo_iters and episodes must be at least 1");
        }
        let ev = Evaluator::for_scenario(&s.inner);
        let outcome = simba(&ev, &SimbaConfig { monte_carlo_iters, episodes, rng_seed: seed }).search;
        *out = outcome.plan().map_or(ptr::null_mut(), |p| Box::into_raw(Box::new(MapsimPlan { inner: p.clone() })));
        if outcome.is_feasible() {
            MapsimStatus::Ok
        } else {
            fail(MapsimStatus::Infeasible, "no deployment within K_max satisfies every constraint")
        }
    })
}

/// Builds a plan from grid location ids.
///
/// # Safety
/// `locations` must point to `len` values (may be null when `len == 0`).
#[no_mangle]
pub unsafe extern "C" fn mapsim_plan_from_locations(
    scenario: *const MapsimScenario,
    locations: *const usize,
    len: usize,
    out: *mut *mut MapsimPlan,
) -> MapsimStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else { return fail(MapsimStatus::NullPointer, "scenario is null") };
        if out.is_null() || (locations.is_null() && len > 0) {
            return fail(MapsimStatus::NullPointer, "locations or out is null");
        }
        let locs = if len == 0 { &[][..] } else { std::slice::from_raw_parts(locations, len) };
        match DeploymentPlan::from_locations(&s.inner, locs, &Default::default()) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(MapsimPlan { inner: p }));
                MapsimStatus::Ok
            }
            Err(e) => fail(MapsimStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Releases a plan; null is ignored.
///
/// # Safety
/// `plan` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mapsim_plan_free(plan: *mut MapsimPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Deployed MAP count and total deployment cost.
///
/// # Safety
/// `plan` must be a live handle; the out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn mapsim_plan_summary(
    plan: *const MapsimPlan,
    deployed: *mut usize,
    total_cost: *mut f64,
) -> MapsimStatus {
    guard(|| {
        let Some(p) = plan.as_ref() else { return fail(MapsimStatus::NullPointer, "plan is null") };
        if !deployed.is_null() {
            *deployed = p.inner.deployed_count;
        }
        if !total_cost.is_null() {
            *total_cost = p.inner.total_cost;
        }
        MapsimStatus::Ok
    })
}

/// Copies the deployed locations (ascending) into `buffer`. `needed`
/// always receives the count; `MAPSIM_STATUS_BUFFER_TOO_SMALL` is returned
/// when `capacity` is below it.
///
/// # Safety
/// `buffer` must have room for `capacity` values; `needed` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mapsim_plan_locations(
    plan: *const MapsimPlan,
    buffer: *mut usize,
    capacity: usize,
    needed: *mut usize,
) -> MapsimStatus {
    guard(|| {
        let Some(p) = plan.as_ref() else { return fail(MapsimStatus::NullPointer, "plan is null") };
        if needed.is_null() {
            return fail(MapsimStatus::NullPointer, "needed is null");
        }
        let locs = p.inner.locations();
        *needed = locs.len();
        if capacity < locs.len() {
            return fail(MapsimStatus::BufferTooSmall, format!("{} slots needed", locs.len()));
        }
        if !locs.is_empty() {
            if buffer.is_null() {
                return fail(MapsimStatus::NullPointer, "buffer is null");
            }
            ptr::copy_nonoverlapping(locs.as_ptr(), buffer, locs.len());
        }
        MapsimStatus::Ok
    })
}

/// Mean log network sum-rate of MAX-SNR association over `episodes`
/// mobile episodes of `length` steps on `plan`.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mapsim_max_snr_log_sum_rate(
    scenario: *const MapsimScenario,
    plan: *const MapsimPlan,
    episodes: usize,
    length: usize,
    seed: u64,
    out: *mut f64,
) -> MapsimStatus {
    guard(|| {
        let (Some(s), Some(p)) = (scenario.as_ref(), plan.as_ref()) else {
            return fail(MapsimStatus::NullPointer, "scenario or plan is null");
        };
        if out.is_null() {
            return fail(MapsimStatus::NullPointer, "out is null");
        }
        if episodes == 0 || length == 0 {
            return fail(MapsimStatus::InvalidArgument, "episodes and length must be at least 1");
        }
        let cfg = EvaluationConfig { episodes, episode_length: Some(length), ..EvaluationConfig::default() };
        match evaluate(Associator::MaxSnr, &s.inner, &p.inner, &cfg, seed) {
            Ok(r) => {
                *out = r.log_sum_rate.mean;
                MapsimStatus::Ok
            }
            Err(e) => fail(MapsimStatus::Internal, e.to_string()),
        }
    })
}
