//! C ABI for the continual counting mechanism.
//!
//! The mechanism is exposed as an opaque handle created by
//! [`cc_mechanism_new`], advanced by [`cc_mechanism_step`], and released
//! by [`cc_mechanism_free`].  Every fallible call returns a [`CcStatus`];
//! outputs go through pointers that are written only on `CC_OK`.  Panics
//! are caught at the boundary and surface as `CC_PANIC` instead of
//! unwinding into foreign frames.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use contcount::coeffs::bf_closed;
use contcount::error::Error;
use contcount::factorization::norm_formula;
use contcount::streaming::{
    mechanism_init, MechanismConfig, NoiseMode, SensitivityMode, StreamState,
};

/// Result codes for every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    /// A parameter violated a documented precondition.
    InvalidArgument = 1,
    /// Matrix shapes disagree (library bug if reached through this ABI).
    DimensionMismatch = 2,
    /// Requested dense computation exceeds the supported size.
    DenseLimit = 3,
    /// Spectral construction left a non-negligible imaginary part.
    ImaginaryResidue = 4,
    /// A coefficient sequence failed a structural precondition.
    BadSequence = 5,
    /// More than `n` stream steps were requested.
    StreamExhausted = 6,
    /// A matrix block was numerically singular.
    Singular = 7,
    /// Serialization failed.
    Serialization = 8,
    /// Underlying I/O failure.
    Io = 9,
    /// A required pointer argument was null.
    NullPointer = 10,
    /// An internal panic was caught at the boundary.
    Panic = 11,
}

fn status_of(e: &Error) -> CcStatus {
    match e {
        Error::InvalidArgument(_) => CcStatus::InvalidArgument,
        Error::DimensionMismatch(_) => CcStatus::DimensionMismatch,
        Error::DenseLimit { .. } => CcStatus::DenseLimit,
        Error::ImaginaryResidue { .. } => CcStatus::ImaginaryResidue,
        Error::BadSequence(_) => CcStatus::BadSequence,
        Error::StreamExhausted { .. } => CcStatus::StreamExhausted,
        Error::Singular(_) => CcStatus::Singular,
        Error::Serialization(_) => CcStatus::Serialization,
        Error::Io(_) => CcStatus::Io,
    }
}

/// Opaque live mechanism; create with [`cc_mechanism_new`], destroy with
/// [`cc_mechanism_free`].
pub struct CcMechanism {
    state: StreamState,
}

fn guard<T>(out: *mut T, body: impl FnOnce() -> Result<T, CcStatus>) -> CcStatus {
    if out.is_null() {
        return CcStatus::NullPointer;
    }
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(value)) => {
            // SAFETY: null-checked above; caller promises a valid, aligned,
            // writable location.
            unsafe { out.write(value) };
            CcStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => CcStatus::Panic,
    }
}

/// Create a mechanism for a length-`n` stream.
///
/// `zeta` is the target error inflation in `(0, 1]`; `noise_multiplier`
/// is the Gaussian standard deviation per unit sensitivity (0 disables
/// noise); `seed` fixes the noise stream.  `use_norm_bound != 0` selects
/// the closed-form sensitivity bound (no dense matrices, any `n`);
/// otherwise the exact dense sensitivity is computed, which is limited to
/// moderate `n`.  `use_reference_noise != 0` selects the O(n) validation
/// noise source instead of the O(#segments) streaming one.
///
/// On `CC_OK`, `*out` owns the mechanism and must be released with
/// [`cc_mechanism_free`].
#[no_mangle]
pub extern "C" fn cc_mechanism_new(
    n: usize,
    zeta: f64,
    noise_multiplier: f64,
    seed: u64,
    use_norm_bound: i32,
    use_reference_noise: i32,
    out: *mut *mut CcMechanism,
) -> CcStatus {
    guard(out, || {
        let config = MechanismConfig {
            n,
            zeta,
            noise_multiplier,
            sensitivity_mode: if use_norm_bound != 0 {
                SensitivityMode::NormBound
            } else {
                SensitivityMode::ExactRhat
            },
            noise_mode: if use_reference_noise != 0 {
                NoiseMode::Reference
            } else {
                NoiseMode::Streaming
            },
            seed,
        };
        let state = mechanism_init(&config).map_err(|e| status_of(&e))?;
        Ok(Box::into_raw(Box::new(CcMechanism { state })))
    })
}

/// Consume one stream value and write the private prefix-sum estimate.
///
/// # Safety
/// `mechanism` must be a live pointer from [`cc_mechanism_new`].
#[no_mangle]
pub unsafe extern "C" fn cc_mechanism_step(
    mechanism: *mut CcMechanism,
    x: f64,
    estimate: *mut f64,
) -> CcStatus {
    if mechanism.is_null() {
        return CcStatus::NullPointer;
    }
    let m = unsafe { &mut *mechanism };
    guard(estimate, || m.state.step(x).map_err(|e| status_of(&e)))
}

/// Number of stream elements consumed so far.
///
/// # Safety
/// `mechanism` must be a live pointer from [`cc_mechanism_new`].
#[no_mangle]
pub unsafe extern "C" fn cc_mechanism_steps_taken(
    mechanism: *const CcMechanism,
    out: *mut usize,
) -> CcStatus {
    if mechanism.is_null() {
        return CcStatus::NullPointer;
    }
    let m = unsafe { &*mechanism };
    guard(out, || Ok(m.state.step_index()))
}

/// Effective sensitivity the noise was calibrated with.
///
/// # Safety
/// `mechanism` must be a live pointer from [`cc_mechanism_new`].
#[no_mangle]
pub unsafe extern "C" fn cc_mechanism_sensitivity(
    mechanism: *const CcMechanism,
    out: *mut f64,
) -> CcStatus {
    if mechanism.is_null() {
        return CcStatus::NullPointer;
    }
    let m = unsafe { &*mechanism };
    guard(out, || Ok(m.state.sensitivity()))
}

/// Number of piecewise-constant segments the noise state tracks.
///
/// # Safety
/// `mechanism` must be a live pointer from [`cc_mechanism_new`].
#[no_mangle]
pub unsafe extern "C" fn cc_mechanism_segment_count(
    mechanism: *const CcMechanism,
    out: *mut usize,
) -> CcStatus {
    if mechanism.is_null() {
        return CcStatus::NullPointer;
    }
    let m = unsafe { &*mechanism };
    guard(out, || Ok(m.state.segment_count()))
}

/// Release a mechanism.  Null is a no-op; the pointer must not be used
/// afterwards.
///
/// # Safety
/// `mechanism` must be null or a live pointer from [`cc_mechanism_new`].
#[no_mangle]
pub unsafe extern "C" fn cc_mechanism_free(mechanism: *mut CcMechanism) {
    if !mechanism.is_null() {
        // SAFETY: created by Box::into_raw in cc_mechanism_new.
        drop(unsafe { Box::from_raw(mechanism) });
    }
}

/// Max squared row norm of the left factor (equals the max squared
/// column norm of the right factor) as a closed-form sum.
#[no_mangle]
pub extern "C" fn cc_norm_formula(n: usize, out: *mut f64) -> CcStatus {
    guard(out, || {
        if n == 0 {
            return Err(CcStatus::InvalidArgument);
        }
        Ok(norm_formula(n))
    })
}

/// Factorization coefficient `b(omega^-t)` for `t in [-n, n-1]`.
#[no_mangle]
pub extern "C" fn cc_bf_closed(n: usize, t: i64, out: *mut f64) -> CcStatus {
    guard(out, || bf_closed(n, t).map_err(|e| status_of(&e)))
}

/// Static description of a status code (never null).
#[no_mangle]
pub extern "C" fn cc_status_message(status: CcStatus) -> *const c_char {
    let msg: &'static [u8] = match status {
        CcStatus::Ok => b"ok\0",
        CcStatus::InvalidArgument => b"invalid argument\0",
        CcStatus::DimensionMismatch => b"dimension mismatch\0",
        CcStatus::DenseLimit => b"dense computation limit exceeded\0",
        CcStatus::ImaginaryResidue => b"imaginary residue above tolerance\0",
        CcStatus::BadSequence => b"malformed coefficient sequence\0",
        CcStatus::StreamExhausted => b"stream exhausted\0",
        CcStatus::Singular => b"singular matrix block\0",
        CcStatus::Serialization => b"serialization failure\0",
        CcStatus::Io => b"i/o failure\0",
        CcStatus::NullPointer => b"null pointer argument\0",
        CcStatus::Panic => b"internal panic\0",
    };
    msg.as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn new_mechanism(n: usize, sigma: f64) -> *mut CcMechanism {
        let mut handle: *mut CcMechanism = std::ptr::null_mut();
        let status = cc_mechanism_new(n, 0.5, sigma, 7, 0, 0, &mut handle);
        assert_eq!(status, CcStatus::Ok);
        assert!(!handle.is_null());
        handle
    }

    #[test]
    fn zero_noise_prefix_sums_through_the_abi() {
        let m = new_mechanism(4, 0.0);
        for expected in 1..=4 {
            let mut est = f64::NAN;
            let status = unsafe { cc_mechanism_step(m, 1.0, &mut est) };
            assert_eq!(status, CcStatus::Ok);
            assert_eq!(est, expected as f64);
        }
        let mut est = 0.0;
        let status = unsafe { cc_mechanism_step(m, 1.0, &mut est) };
        assert_eq!(status, CcStatus::StreamExhausted);
        unsafe { cc_mechanism_free(m) };
    }

    #[test]
    fn accessors_report_configuration() {
        let m = new_mechanism(16, 1.0);
        let mut sens = 0.0;
        assert_eq!(unsafe { cc_mechanism_sensitivity(m, &mut sens) }, CcStatus::Ok);
        assert!(sens > 0.0);
        let mut segments = 0usize;
        assert_eq!(unsafe { cc_mechanism_segment_count(m, &mut segments) }, CcStatus::Ok);
        assert_eq!(segments, 32);
        let mut steps = 99usize;
        assert_eq!(unsafe { cc_mechanism_steps_taken(m, &mut steps) }, CcStatus::Ok);
        assert_eq!(steps, 0);
        unsafe { cc_mechanism_free(m) };
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let run = || {
            let m = new_mechanism(8, 2.0);
            let mut out = Vec::new();
            for _ in 0..8 {
                let mut est = 0.0;
                assert_eq!(unsafe { cc_mechanism_step(m, 1.0, &mut est) }, CcStatus::Ok);
                out.push(est);
            }
            unsafe { cc_mechanism_free(m) };
            out
        };
        let a = run();
        let b = run();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn invalid_parameters_are_reported() {
        let mut handle: *mut CcMechanism = std::ptr::null_mut();
        assert_eq!(
            cc_mechanism_new(0, 0.5, 1.0, 0, 0, 0, &mut handle),
            CcStatus::InvalidArgument
        );
        assert_eq!(
            cc_mechanism_new(4, 2.0, 1.0, 0, 0, 0, &mut handle),
            CcStatus::InvalidArgument
        );
        assert_eq!(
            cc_mechanism_new(4, 0.5, 1.0, 0, 0, 0, std::ptr::null_mut()),
            CcStatus::NullPointer
        );
        assert!(handle.is_null());
    }

    #[test]
    fn null_handles_rejected() {
        let mut est = 0.0;
        assert_eq!(
            unsafe { cc_mechanism_step(std::ptr::null_mut(), 1.0, &mut est) },
            CcStatus::NullPointer
        );
        let m = new_mechanism(2, 0.0);
        assert_eq!(
            unsafe { cc_mechanism_step(m, 1.0, std::ptr::null_mut()) },
            CcStatus::NullPointer
        );
        unsafe { cc_mechanism_free(m) };
        unsafe { cc_mechanism_free(std::ptr::null_mut()) };
    }

    #[test]
    fn scalar_helpers() {
        let mut v = 0.0;
        assert_eq!(cc_norm_formula(1, &mut v), CcStatus::Ok);
        assert_eq!(v, 1.0);
        assert_eq!(cc_norm_formula(0, &mut v), CcStatus::InvalidArgument);

        assert_eq!(cc_bf_closed(1, 0, &mut v), CcStatus::Ok);
        assert!((v - 1.0).abs() < 1e-14);
        assert_eq!(cc_bf_closed(1, 1, &mut v), CcStatus::InvalidArgument);

        let msg = cc_status_message(CcStatus::StreamExhausted);
        let text = unsafe { std::ffi::CStr::from_ptr(msg) }.to_str().unwrap();
        assert_eq!(text, "stream exhausted");
    }

    #[test]
    fn norm_bound_mode_avoids_dense_work() {
        let mut handle: *mut CcMechanism = std::ptr::null_mut();
        let status = cc_mechanism_new(10_000, 0.5, 1.0, 0, 1, 0, &mut handle);
        assert_eq!(status, CcStatus::Ok);
        let mut est = 0.0;
        assert_eq!(unsafe { cc_mechanism_step(handle, 1.0, &mut est) }, CcStatus::Ok);
        unsafe { cc_mechanism_free(handle) };
    }
}
