//! C interface to `chernwall`.
//!
//! Every fallible function returns a [`CwStatus`]; on failure the message is
//! available from [`cw_last_error_message`] on the same thread. Outputs are
//! written through caller-provided pointers only on success. Strings returned
//! by the library must be released with [`cw_string_free`], charts with
//! [`cw_domain_chart_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chernwall::walls::{build_domain_chart, ChartBox, ChartOptions};
use chernwall::{
    count_bands, delta_chern, min_discriminant, refine_until_stable, ChernOptions, ControlPoint, DomainChart, Error,
    TripletModel, WallId,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NearDegeneracy = 3,
    Unstable = 4,
    NotOnWall = 5,
    DirectionTangent = 6,
    NearIntersection = 7,
    RankDeficient = 8,
    InvalidJ = 9,
    AmbiguousBands = 10,
    ChartInconsistent = 11,
    OutOfRange = 12,
    Panic = 13,
    Other = 14,
}

impl From<&Error> for CwStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) => CwStatus::InvalidInput,
            Error::NearDegeneracy { .. } => CwStatus::NearDegeneracy,
            Error::Unstable { .. } | Error::NonIntegral { .. } => CwStatus::Unstable,
            Error::NotOnWall { .. } | Error::NotDegenerate { .. } => CwStatus::NotOnWall,
            Error::DirectionTangent(_) => CwStatus::DirectionTangent,
            Error::NearIntersection { .. } => CwStatus::NearIntersection,
            Error::RankDeficient { .. } => CwStatus::RankDeficient,
            Error::InvalidJ(_) => CwStatus::InvalidJ,
            Error::AmbiguousBands { .. } => CwStatus::AmbiguousBands,
            Error::PropagationConflict { .. } | Error::ChartIncomplete { .. } => CwStatus::ChartInconsistent,
            Error::NotHermitian(_) | Error::UnsupportedDimension(_) => CwStatus::Other,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard<F: FnOnce() -> Result<(), (CwStatus, String)>>(f: F) -> CwStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CwStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CwStatus::Panic
        }
    }
}

fn core(e: Error) -> (CwStatus, String) {
    ((&e).into(), e.to_string())
}

fn null(name: &str) -> (CwStatus, String) {
    (CwStatus::NullPointer, format!("{name} is null"))
}

fn control(a: f64, b: f64) -> Result<ControlPoint, (CwStatus, String)> {
    ControlPoint::checked(a, b).map_err(core)
}

/// Message for the last failed call on this thread, or null if it succeeded.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn cw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Chern numbers of the three bands at `(a, b)`, refined from `mesh` cells
/// per cube edge until stable. Writes three integers to `out_chern` and the
/// final mesh size to `out_mesh` (may be null).
///
/// # Safety
/// `out_chern` must point to space for 3 `int64_t`; `out_mesh` must be null
/// or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cw_chern_numbers(
    a: f64,
    b: f64,
    mesh: usize,
    out_chern: *mut i64,
    out_mesh: *mut usize,
) -> CwStatus {
    guard(|| {
        if out_chern.is_null() {
            return Err(null("out_chern"));
        }
        let rec =
            refine_until_stable(&TripletModel::new(control(a, b)?), mesh, &ChernOptions::default()).map_err(core)?;
        ptr::copy_nonoverlapping(rec.chern.as_ptr(), out_chern, 3);
        if !out_mesh.is_null() {
            *out_mesh = rec.mesh_size;
        }
        Ok(())
    })
}

/// Minimum over the sphere of the eigenvalue discriminant at `(a, b)`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cw_min_discriminant(a: f64, b: f64, out: *mut f64) -> CwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = min_discriminant(control(a, b)?, chernwall::spectral::SEARCH_DENSITY).map_err(core)?;
        *out = m.value;
        Ok(())
    })
}

/// Change of the three Chern numbers when crossing `wall` (one of `a=+1/3`,
/// `a=-1/3`, `b=+1`, `b=-1`, `c2+`, `c2-`) at `(a, b)` along `(da, db)`.
///
/// # Safety
/// `wall` must be a NUL-terminated string; `out_delta` must point to space
/// for 3 `int64_t`.
#[no_mangle]
pub unsafe extern "C" fn cw_delta_chern(
    wall: *const c_char,
    a: f64,
    b: f64,
    da: f64,
    db: f64,
    out_delta: *mut i64,
) -> CwStatus {
    guard(|| {
        if wall.is_null() {
            return Err(null("wall"));
        }
        if out_delta.is_null() {
            return Err(null("out_delta"));
        }
        let name = CStr::from_ptr(wall)
            .to_str()
            .map_err(|_| (CwStatus::InvalidInput, "wall id is not UTF-8".to_string()))?;
        let id: WallId = name.parse().map_err(|e: Error| core(e))?;
        let x = delta_chern(&id.wall(), control(a, b)?, [da, db]).map_err(core)?;
        ptr::copy_nonoverlapping(x.delta.as_ptr(), out_delta, 3);
        Ok(())
    })
}

/// Number of quantum levels in each of the three bands at rotational
/// quantum number `j`.
///
/// # Safety
/// `out_counts` must point to space for 3 `size_t`.
#[no_mangle]
pub unsafe extern "C" fn cw_quantum_band_counts(j: u32, a: f64, b: f64, out_counts: *mut usize) -> CwStatus {
    guard(|| {
        if out_counts.is_null() {
            return Err(null("out_counts"));
        }
        let q = count_bands(j, control(a, b)?, None).map_err(core)?;
        ptr::copy_nonoverlapping(q.counts.as_ptr(), out_counts, 3);
        Ok(())
    })
}

/// Opaque iso-Chern domain chart.
pub struct CwDomainChart(DomainChart);

/// One domain of a chart.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwDomain {
    pub a: f64,
    pub b: f64,
    /// Distance of the representative point from the nearest wall.
    pub wall_distance: f64,
    /// Chern numbers computed directly at the representative.
    pub chern: [i64; 3],
    /// Whether the triple propagated across walls agrees with `chern`.
    pub consistent: bool,
}

/// Builds the domain chart over `[a_min, a_max] x [b_min, b_max]`. `step`
/// and `mesh` fall back to the library defaults when zero.
///
/// # Safety
/// `out` must be valid for one write. The chart must be released with
/// [`cw_domain_chart_free`].
#[no_mangle]
pub unsafe extern "C" fn cw_domain_chart_build(
    a_min: f64,
    a_max: f64,
    b_min: f64,
    b_max: f64,
    step: f64,
    mesh: usize,
    out: *mut *mut CwDomainChart,
) -> CwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let defaults = ChartOptions::default();
        let opts = ChartOptions {
            step: if step == 0.0 { defaults.step } else { step },
            mesh: if mesh == 0 { defaults.mesh } else { mesh },
            ..defaults
        };
        let bbox = ChartBox {
            a_min,
            a_max,
            b_min,
            b_max,
        };
        let chart = build_domain_chart(bbox, &opts).map_err(core)?;
        *out = Box::into_raw(Box::new(CwDomainChart(chart)));
        Ok(())
    })
}

/// Number of domains, or 0 for a null chart.
///
/// # Safety
/// `chart` must be null or a live chart from [`cw_domain_chart_build`].
#[no_mangle]
pub unsafe extern "C" fn cw_domain_chart_len(chart: *const CwDomainChart) -> usize {
    chart.as_ref().map_or(0, |c| c.0.domains.len())
}

/// Copies domain `index` into `out`.
///
/// # Safety
/// `chart` must be a live chart; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cw_domain_chart_get(
    chart: *const CwDomainChart,
    index: usize,
    out: *mut CwDomain,
) -> CwStatus {
    guard(|| {
        let chart = chart.as_ref().ok_or_else(|| null("chart"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let d = chart.0.domains.get(index).ok_or_else(|| {
            (
                CwStatus::OutOfRange,
                format!("index {index} out of range for {} domains", chart.0.domains.len()),
            )
        })?;
        let mut chern = [0; 3];
        chern.copy_from_slice(&d.direct_chern);
        *out = CwDomain {
            a: d.representative.a,
            b: d.representative.b,
            wall_distance: d.wall_distance,
            chern,
            consistent: d.agrees(),
        };
        Ok(())
    })
}

/// The chart serialized as JSON, or null on failure. Release with
/// [`cw_string_free`].
///
/// # Safety
/// `chart` must be null or a live chart.
#[no_mangle]
pub unsafe extern "C" fn cw_domain_chart_to_json(chart: *const CwDomainChart) -> *mut c_char {
    let mut text = None;
    let status = guard(|| {
        let chart = chart.as_ref().ok_or_else(|| null("chart"))?;
        let s = serde_json::to_string(&chart.0).map_err(|e| (CwStatus::Other, e.to_string()))?;
        text = Some(CString::new(s).map_err(|e| (CwStatus::Other, e.to_string()))?);
        Ok(())
    });
    match (status, text) {
        (CwStatus::Ok, Some(s)) => s.into_raw(),
        _ => ptr::null_mut(),
    }
}

/// Releases a chart. Null is ignored.
///
/// # Safety
/// `chart` must be null or a chart not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_domain_chart_free(chart: *mut CwDomainChart) {
    if !chart.is_null() {
        drop(Box::from_raw(chart));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> Option<String> {
        let p = cw_last_error_message();
        (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
    }

    #[test]
    fn status_mapping() {
        assert_eq!(CwStatus::from(&Error::InvalidJ(0)), CwStatus::InvalidJ);
        assert_eq!(CwStatus::from(&Error::Unstable { mesh_size: 64 }), CwStatus::Unstable);
    }

    #[test]
    fn errors_are_recorded_and_cleared() {
        let mut out = [0usize; 3];
        let s = unsafe { cw_quantum_band_counts(0, 0.0, 0.0, out.as_mut_ptr()) };
        assert_eq!(s, CwStatus::InvalidJ);
        assert!(last_error().unwrap().contains("integer >= 1"));
        let s = unsafe { cw_quantum_band_counts(3, 0.0, 0.0, out.as_mut_ptr()) };
        assert_eq!(s, CwStatus::Ok);
        assert_eq!(last_error(), None);
        assert_eq!(out, [5, 7, 9]);
    }

    #[test]
    fn version_is_nul_terminated() {
        let v = unsafe { CStr::from_ptr(cw_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
