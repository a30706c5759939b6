use std::ffi::{c_char, CStr};
use std::path::Path;
use std::process::Command;
use std::ptr;

use lieosc_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(lieosc_last_error()) }.to_string_lossy().into_owned()
}

fn new_grid(group: u32, b: usize) -> *mut LieoscGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { lieosc_grid_new(group, b, &mut g) }, LieoscStatus::Ok);
    assert!(!g.is_null());
    g
}

fn grid_len(g: *const LieoscGrid) -> usize {
    let mut n = 0usize;
    assert_eq!(unsafe { lieosc_grid_len(g, &mut n) }, LieoscStatus::Ok);
    n
}

#[test]
fn grid_lifecycle_and_weights() {
    let g = new_grid(LIEOSC_SU2, 4);
    let n = grid_len(g);
    assert_eq!(n, 8 * 4 * 8);
    let mut w = vec![0.0; n];
    assert_eq!(unsafe { lieosc_grid_weights(g, w.as_mut_ptr(), n) }, LieoscStatus::Ok);
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(unsafe { lieosc_grid_weights(g, w.as_mut_ptr(), n - 1) }, LieoscStatus::InvalidArgument);
    assert!(last_error().contains("buffer length"));
    unsafe { lieosc_grid_free(g) };
    unsafe { lieosc_grid_free(ptr::null_mut()) };
}

#[test]
fn error_codes() {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { lieosc_grid_new(9, 4, &mut g) }, LieoscStatus::InvalidArgument);
    assert!(last_error().contains("unknown group code 9"));
    assert_eq!(unsafe { lieosc_grid_new(LIEOSC_TORUS1, 4, ptr::null_mut()) }, LieoscStatus::NullPointer);
    assert_eq!(unsafe { lieosc_grid_len(ptr::null(), ptr::null_mut()) }, LieoscStatus::NullPointer);

    let g = new_grid(LIEOSC_TORUS1, 8);
    let n = grid_len(g);
    let (re, im) = (vec![1.0; n], vec![0.0; n]);
    let mut c = ptr::null_mut();
    let status = unsafe { lieosc_forward_transform(g, re.as_ptr(), im.as_ptr(), n, 1000.0, &mut c) };
    assert_eq!(status, LieoscStatus::Resolution);
    assert!(c.is_null());
    assert!(!last_error().is_empty());
    let mut ok = 0.0;
    assert_eq!(unsafe { lieosc_grid_max_bandwidth(g, &mut ok) }, LieoscStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe { lieosc_grid_free(g) };
}

#[test]
fn spectral_data_values() {
    let mut s = LieoscSpectralData {
        dim: 0,
        eigenvalue: 0.0,
        weight: 0.0,
    };
    assert_eq!(unsafe { lieosc_spectral_data(LIEOSC_SU2, ptr::null(), 1, &mut s) }, LieoscStatus::Ok);
    assert_eq!(s.dim, 2);
    assert!((s.eigenvalue - 0.75).abs() < 1e-15);
    let freq = [0i64, 0];
    assert_eq!(unsafe { lieosc_spectral_data(LIEOSC_TORUS2, freq.as_ptr(), 0, &mut s) }, LieoscStatus::Ok);
    assert_eq!((s.dim, s.eigenvalue, s.weight), (1, 0.0, 1.0));
    assert_eq!(unsafe { lieosc_spectral_data(LIEOSC_TORUS1, ptr::null(), 0, &mut s) }, LieoscStatus::NullPointer);
}

#[test]
fn transform_round_trip_and_json() {
    let g = new_grid(LIEOSC_TORUS1, 16);
    let n = grid_len(g);
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let tau = std::f64::consts::TAU;
    let re: Vec<f64> = xs.iter().map(|x| (tau * 3.0 * x).cos()).collect();
    let im: Vec<f64> = xs.iter().map(|x| (tau * 3.0 * x).sin()).collect();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { lieosc_forward_transform(g, re.as_ptr(), im.as_ptr(), n, 40.0, &mut c) }, LieoscStatus::Ok);
    let mut e = 0.0;
    assert_eq!(unsafe { lieosc_coefficients_energy(c, &mut e) }, LieoscStatus::Ok);
    assert!((e - 1.0).abs() < 1e-12);
    let (mut br, mut bi) = (vec![0.0; n], vec![0.0; n]);
    assert_eq!(unsafe { lieosc_inverse_transform(c, g, br.as_mut_ptr(), bi.as_mut_ptr(), n) }, LieoscStatus::Ok);
    for i in 0..n {
        assert!((br[i] - re[i]).abs() < 1e-12 && (bi[i] - im[i]).abs() < 1e-12);
    }
    let mut s: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { lieosc_coefficients_to_json(c, &mut s) }, LieoscStatus::Ok);
    let json: serde_json::Value = serde_json::from_str(&unsafe { CStr::from_ptr(s) }.to_string_lossy()).unwrap();
    assert_eq!(json["group"], "torus1");
    assert_eq!(json["bandwidth"], 40.0);
    unsafe {
        lieosc_string_free(s);
        lieosc_coefficients_free(c);
        lieosc_grid_free(g);
    }
}

#[test]
fn oscillating_multiplier_and_decay() {
    let g = new_grid(LIEOSC_TORUS1, 16);
    let n = grid_len(g);
    let re = vec![1.0; n];
    let im = vec![0.0; n];
    let (mut or, mut oi) = (vec![0.0; n], vec![0.0; n]);
    let status =
        unsafe { lieosc_apply_oscillating(g, 0.5, 40.0, re.as_ptr(), im.as_ptr(), or.as_mut_ptr(), oi.as_mut_ptr(), n) };
    assert_eq!(status, LieoscStatus::Ok);
    // The constant sits at ξ = 0 where the symbol is e^{i}.
    for i in 0..n {
        assert!((or[i] - 1f64.cos()).abs() < 1e-12 && (oi[i] - 1f64.sin()).abs() < 1e-12);
    }
    let (mut c, mut adm) = (0.0, 0);
    assert_eq!(unsafe { lieosc_verify_decay_oscillating(LIEOSC_SU2, 0.75, 64.0, &mut c, &mut adm) }, LieoscStatus::Ok);
    assert!((c - 1.0).abs() < 1e-12);
    assert_eq!(adm, 1);
    assert_eq!(
        unsafe { lieosc_verify_decay_oscillating(LIEOSC_SU2, 1.0, 64.0, &mut c, &mut adm) },
        LieoscStatus::InvalidArgument
    );
    unsafe { lieosc_grid_free(g) };
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/lieosc.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["lieosc_grid_new", "lieosc_forward_transform", "lieosc_last_error", "LIEOSC_STATUS_RESOLUTION"] {
        assert!(text.contains(name), "{name}");
    }
    let dir = std::env::temp_dir().join(format!("lieosc-header-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ LieoscGrid *g = 0; return lieosc_grid_new(LIEOSC_SU2, 4, &g) == LIEOSC_STATUS_OK ? 0 : 1; }}\n",
            header.display()
        ),
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    match Command::new(&cc).arg("-fsyntax-only").arg("-Wall").arg("-Werror").arg(&src).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(e) => eprintln!("skipping C syntax check: {cc} unavailable ({e})"),
    }
    let _ = std::fs::remove_dir_all(&dir);
}
