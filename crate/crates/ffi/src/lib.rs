//! C interface to `lieosc`.
//!
//! Every function returns a [`LieoscStatus`]; on failure the message is
//! available from [`lieosc_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Complex
//! arrays are passed as separate real and imaginary buffers of equal length.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use lieosc::dual::{spectral_data, DualIndex};
use lieosc::fourier::{forward_transform, inverse_transform, plancherel_energy, FourierCoefficients, GridFunction};
use lieosc::group::GroupId;
use lieosc::multiplier::{apply_multiplier, verify_decay, MultiplierSymbol};
use lieosc::quadrature::{build_grid, QuadratureGrid};
use lieosc::Error;
use num_complex::Complex64;

/// Group code for the circle 𝕋¹.
pub const LIEOSC_TORUS1: u32 = 1;
/// Group code for 𝕋².
pub const LIEOSC_TORUS2: u32 = 2;
/// Group code for 𝕋³.
pub const LIEOSC_TORUS3: u32 = 3;
/// Group code for SU(2).
pub const LIEOSC_SU2: u32 = 4;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LieoscStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Resolution = 3,
    Numerical = 4,
    Panic = 5,
}

/// Quadrature grid handle.
pub struct LieoscGrid {
    inner: Arc<QuadratureGrid>,
}

/// Fourier coefficient handle.
pub struct LieoscCoefficients {
    inner: FourierCoefficients,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LieoscSpectralData {
    pub dim: usize,
    pub eigenvalue: f64,
    pub weight: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> LieoscStatus {
    match e.exit_code() {
        2 => LieoscStatus::InvalidArgument,
        3 => LieoscStatus::Resolution,
        _ => LieoscStatus::Numerical,
    }
}

type Body = Result<(), Failure>;

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Body) -> LieoscStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LieoscStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            LieoscStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            LieoscStatus::Panic
        }
    }
}

fn nonnull<T>(p: *const T, what: &'static str) -> Result<*const T, Failure> {
    if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(p)
    }
}

fn group_of(code: u32) -> Result<GroupId, Failure> {
    match code {
        LIEOSC_TORUS1 => Ok(GroupId::Torus(1)),
        LIEOSC_TORUS2 => Ok(GroupId::Torus(2)),
        LIEOSC_TORUS3 => Ok(GroupId::Torus(3)),
        LIEOSC_SU2 => Ok(GroupId::Su2),
        _ => Err(Failure::Lib(Error::InvalidArgument(format!("unknown group code {code}")))),
    }
}

/// # Safety
/// `re` and `im` must each point to `len` readable doubles.
unsafe fn read_complex(re: *const f64, im: *const f64, len: usize) -> Result<Vec<Complex64>, Failure> {
    nonnull(re, "re")?;
    nonnull(im, "im")?;
    let (re, im) = (std::slice::from_raw_parts(re, len), std::slice::from_raw_parts(im, len));
    Ok(re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect())
}

/// # Safety
/// `re` and `im` must each point to `values.len()` writable doubles.
unsafe fn write_complex(values: &[Complex64], re: *mut f64, im: *mut f64) -> Body {
    nonnull(re, "out_re")?;
    nonnull(im, "out_im")?;
    let (re, im) = (
        std::slice::from_raw_parts_mut(re, values.len()),
        std::slice::from_raw_parts_mut(im, values.len()),
    );
    for (i, v) in values.iter().enumerate() {
        re[i] = v.re;
        im[i] = v.im;
    }
    Ok(())
}

fn check_len(grid: &QuadratureGrid, len: usize) -> Body {
    if len != grid.len() {
        return Err(Failure::Lib(Error::InvalidArgument(format!(
            "buffer length {len} does not match the grid size {}",
            grid.len()
        ))));
    }
    Ok(())
}

/// Message of the last failure on this thread; empty after a success. The
/// pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn lieosc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds the quadrature grid of resolution `b` for `group`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn lieosc_grid_new(group: u32, b: usize, out: *mut *mut LieoscGrid) -> LieoscStatus {
    guard(|| {
        nonnull(out, "out")?;
        let g = build_grid(group_of(group)?, b)?;
        *out = Box::into_raw(Box::new(LieoscGrid { inner: Arc::new(g) }));
        Ok(())
    })
}

/// # Safety
/// `grid` must come from [`lieosc_grid_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lieosc_grid_free(grid: *mut LieoscGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lieosc_grid_len(grid: *const LieoscGrid, out: *mut usize) -> LieoscStatus {
    guard(|| {
        let g = &*nonnull(grid, "grid")?;
        nonnull(out, "out")?;
        *out = g.inner.len();
        Ok(())
    })
}

/// Largest bandwidth `L` the grid resolves.
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lieosc_grid_max_bandwidth(grid: *const LieoscGrid, out: *mut f64) -> LieoscStatus {
    guard(|| {
        let g = &*nonnull(grid, "grid")?;
        nonnull(out, "out")?;
        *out = g.inner.max_bandwidth();
        Ok(())
    })
}

/// Copies the quadrature weights into `out` (length `len` = grid size).
///
/// # Safety
/// `grid` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lieosc_grid_weights(grid: *const LieoscGrid, out: *mut f64, len: usize) -> LieoscStatus {
    guard(|| {
        let g = &*nonnull(grid, "grid")?;
        nonnull(out, "out")?;
        check_len(&g.inner, len)?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(g.inner.weights());
        Ok(())
    })
}

/// Dimension, eigenvalue and weight of a representation. Tori read `n`
/// frequencies from `freq` and ignore `two_l`; SU(2) reads `two_l` (twice
/// the spin) and ignores `freq`.
///
/// # Safety
/// For tori `freq` must point to `n` integers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lieosc_spectral_data(
    group: u32,
    freq: *const i64,
    two_l: u32,
    out: *mut LieoscSpectralData,
) -> LieoscStatus {
    guard(|| {
        nonnull(out, "out")?;
        let g = group_of(group)?;
        let xi = match g {
            GroupId::Torus(n) => {
                nonnull(freq, "freq")?;
                DualIndex::torus(std::slice::from_raw_parts(freq, n as usize))?
            }
            GroupId::Su2 => DualIndex::spin(two_l),
        };
        let s = spectral_data(g, &xi)?;
        *out = LieoscSpectralData {
            dim: s.dim,
            eigenvalue: s.eigenvalue,
            weight: s.weight,
        };
        Ok(())
    })
}

/// Fourier coefficients up to `bandwidth` of the grid samples `re + i·im`.
///
/// # Safety
/// `grid` must be live, `re`/`im` must hold `len` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lieosc_forward_transform(
    grid: *const LieoscGrid,
    re: *const f64,
    im: *const f64,
    len: usize,
    bandwidth: f64,
    out: *mut *mut LieoscCoefficients,
) -> LieoscStatus {
    guard(|| {
        let g = &*nonnull(grid, "grid")?;
        nonnull(out, "out")?;
        check_len(&g.inner, len)?;
        let f = GridFunction::new(g.inner.clone(), read_complex(re, im, len)?)?;
        let c = forward_transform(&f, bandwidth)?;
        *out = Box::into_raw(Box::new(LieoscCoefficients { inner: c }));
        Ok(())
    })
}

/// Evaluates coefficients on `grid`, writing `len` samples.
///
/// # Safety
/// Handles must be live and `out_re`/`out_im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lieosc_inverse_transform(
    coeffs: *const LieoscCoefficients,
    grid: *const LieoscGrid,
    out_re: *mut f64,
    out_im: *mut f64,
    len: usize,
) -> LieoscStatus {
    guard(|| {
        let c = &*nonnull(coeffs, "coeffs")?;
        let g = &*nonnull(grid, "grid")?;
        check_len(&g.inner, len)?;
        let f = inverse_transform(&c.inner, &g.inner)?;
        write_complex(f.values(), out_re, out_im)
    })
}

/// `Σ d_ξ ‖f̂(ξ)‖²_HS`.
///
/// # Safety
/// `coeffs` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lieosc_coefficients_energy(
    coeffs: *const LieoscCoefficients,
    out: *mut f64,
) -> LieoscStatus {
    guard(|| {
        let c = &*nonnull(coeffs, "coeffs")?;
        nonnull(out, "out")?;
        *out = plancherel_energy(&c.inner);
        Ok(())
    })
}

/// Serialises coefficients to JSON. Release the string with
/// [`lieosc_string_free`].
///
/// # Safety
/// `coeffs` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lieosc_coefficients_to_json(
    coeffs: *const LieoscCoefficients,
    out: *mut *mut c_char,
) -> LieoscStatus {
    guard(|| {
        let c = &*nonnull(coeffs, "coeffs")?;
        nonnull(out, "out")?;
        let s = CString::new(c.inner.to_json().to_string()).map_err(|e| Error::Numerical(e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `coeffs` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lieosc_coefficients_free(coeffs: *mut LieoscCoefficients) {
    if !coeffs.is_null() {
        drop(Box::from_raw(coeffs));
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lieosc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Applies `⟨ξ⟩^{-nθ/2} e^{i⟨ξ⟩^θ}` at bandwidth `L` to the samples `re + i·im`.
///
/// # Safety
/// `grid` must be live; all four buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lieosc_apply_oscillating(
    grid: *const LieoscGrid,
    theta: f64,
    bandwidth: f64,
    re: *const f64,
    im: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
    len: usize,
) -> LieoscStatus {
    guard(|| {
        let g = &*nonnull(grid, "grid")?;
        check_len(&g.inner, len)?;
        let f = GridFunction::new(g.inner.clone(), read_complex(re, im, len)?)?;
        let sym = MultiplierSymbol::oscillating(g.inner.group(), theta)?;
        let tf = apply_multiplier(&sym, &f, bandwidth)?;
        write_complex(tf.values(), out_re, out_im)
    })
}

/// Decay constant `C_L` of the oscillating symbol and whether it stays flat
/// across dyadic levels (written as 1 or 0).
///
/// # Safety
/// `out_constant` and `out_admissible` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lieosc_verify_decay_oscillating(
    group: u32,
    theta: f64,
    bandwidth: f64,
    out_constant: *mut f64,
    out_admissible: *mut i32,
) -> LieoscStatus {
    guard(|| {
        nonnull(out_constant, "out_constant")?;
        nonnull(out_admissible, "out_admissible")?;
        let sym = MultiplierSymbol::oscillating(group_of(group)?, theta)?;
        let r = verify_decay(&sym, theta, bandwidth)?;
        *out_constant = r.constant;
        *out_admissible = i32::from(r.admissible);
        Ok(())
    })
}
