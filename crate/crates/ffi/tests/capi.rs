//! Exercises the C ABI end to end: handle lifecycle, JSON round trip,
//! batched evaluation against the scalar oracle, directions, and tracking.

use std::ffi::{CStr, CString};
use std::ptr;

use num_complex::Complex64;
use phg_ffi::*;

fn cyclic_tables(n: usize) -> (*mut PhgSystem, *mut PhgTables) {
    let mut sys: *mut PhgSystem = ptr::null_mut();
    let status = unsafe { phg_system_cyclic(n, 7, &mut sys) };
    assert_eq!(status, PhgStatus::Ok);
    let mut tables: *mut PhgTables = ptr::null_mut();
    let status = unsafe { phg_tables_new(sys, &mut tables) };
    assert_eq!(status, PhgStatus::Ok);
    (sys, tables)
}

fn pack_points(points: &[Vec<Complex64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for row in points {
        for z in row {
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

#[test]
fn generator_counts_match_library() {
    let (sys, tables) = cyclic_tables(6);
    unsafe {
        assert_eq!(phg_system_equation_count(sys), 6);
        assert_eq!(phg_system_monomial_count(sys), 32);
        assert_eq!(phg_tables_variable_count(tables), 7);
        assert_eq!(phg_tables_degree(tables), 6);
        phg_tables_free(tables);
        phg_system_free(sys);
    }
}

#[test]
fn json_roundtrip_through_the_abi() {
    let (sys, tables) = cyclic_tables(4);
    unsafe {
        let mut json: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(phg_system_to_json(sys, &mut json), PhgStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        phg_string_free(json);

        let ctext = CString::new(text).unwrap();
        let mut again: *mut PhgSystem = ptr::null_mut();
        assert_eq!(phg_system_parse(ctext.as_ptr(), &mut again), PhgStatus::Ok);
        assert_eq!(phg_system_monomial_count(again), phg_system_monomial_count(sys));
        phg_system_free(again);
        phg_tables_free(tables);
        phg_system_free(sys);
    }
}

#[test]
fn parse_failure_sets_message_and_code() {
    let bad = CString::new("{\"n\": 1, \"support\": [[1],[1]], \"coefficients\": [[[1,0],[1,0]]], \"lifting\": [[1,1],[1,1]]}").unwrap();
    let mut out: *mut PhgSystem = ptr::null_mut();
    let status = unsafe { phg_system_parse(bad.as_ptr(), &mut out) };
    assert_eq!(status, PhgStatus::DuplicateMonomial);
    let msg = unsafe { CStr::from_ptr(phg_last_error()) }.to_str().unwrap();
    assert!(msg.contains("duplicate"), "message was: {msg}");
}

#[test]
fn eval_matches_oracle_through_the_abi() {
    let (sys, tables) = cyclic_tables(4);
    let nvars = unsafe { phg_tables_variable_count(tables) };
    let n = unsafe { phg_system_equation_count(sys) };
    let p = 3usize;
    let points: Vec<Vec<Complex64>> = (0..p)
        .map(|i| {
            (0..nvars)
                .map(|j| Complex64::from_polar(1.0 + 0.1 * i as f64, 0.3 * (i + j) as f64))
                .collect()
        })
        .collect();
    let packed = pack_points(&points);
    let taus = vec![-0.5f64; p];
    let width = n * (nvars + 2);
    let mut blocks = vec![0.0f64; 2 * p * width];
    let status = unsafe {
        phg_eval(
            tables,
            packed.as_ptr(),
            taus.as_ptr(),
            p,
            0,
            ptr::null(),
            blocks.as_mut_ptr(),
        )
    };
    assert_eq!(status, PhgStatus::Ok);

    let mut oracle = vec![0.0f64; 2 * width];
    for i in 0..p {
        let point = pack_points(&points[i..i + 1]);
        let status = unsafe { phg_eval_oracle(tables, point.as_ptr(), taus[i], oracle.as_mut_ptr()) };
        assert_eq!(status, PhgStatus::Ok);
        for c in 0..width {
            let got = Complex64::new(blocks[2 * (i * width + c)], blocks[2 * (i * width + c) + 1]);
            let want = Complex64::new(oracle[2 * c], oracle[2 * c + 1]);
            assert!(
                (got - want).norm() <= 1e-11 * want.norm().max(1.0),
                "point {i} entry {c}: {got} vs {want}"
            );
        }
    }
    unsafe {
        phg_tables_free(tables);
        phg_system_free(sys);
    }
}

#[test]
fn unknown_backend_is_rejected() {
    let (sys, tables) = cyclic_tables(4);
    let nvars = unsafe { phg_tables_variable_count(tables) };
    let packed = vec![1.0f64; 2 * nvars];
    let taus = [0.0f64];
    let name = CString::new("tensor").unwrap();
    let mut blocks = vec![0.0f64; 2 * 4 * (nvars + 2)];
    let status = unsafe {
        phg_eval(
            tables,
            packed.as_ptr(),
            taus.as_ptr(),
            1,
            0,
            name.as_ptr(),
            blocks.as_mut_ptr(),
        )
    };
    assert_eq!(status, PhgStatus::UnknownBackend);
    unsafe {
        phg_tables_free(tables);
        phg_system_free(sys);
    }
}

#[test]
fn directions_report_per_point_status() {
    // x^2 + x + 1 with matching extreme lifting values: the symmetric point
    // (1,1)/sqrt(2) is degenerate, a generic point is fine.
    let text = CString::new(
        r#"{
            "n": 1,
            "support": [[0], [1], [2]],
            "coefficients": [[[1.0,0.0],[1.0,0.0],[1.0,0.0]]],
            "lifting": [[0,1],[1,1],[0,1]]
        }"#,
    )
    .unwrap();
    let mut sys: *mut PhgSystem = ptr::null_mut();
    assert_eq!(unsafe { phg_system_parse(text.as_ptr(), &mut sys) }, PhgStatus::Ok);
    let mut tables: *mut PhgTables = ptr::null_mut();
    assert_eq!(unsafe { phg_tables_new(sys, &mut tables) }, PhgStatus::Ok);

    let s = 1.0 / 2.0f64.sqrt();
    let points = vec![
        vec![Complex64::new(0.6, 0.3), Complex64::new(0.9, -0.2)],
        vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
    ];
    let packed = pack_points(&points);
    let taus = [-1.0f64, -1.0];
    let mut euler = vec![0.0f64; 2 * 2 * 2];
    let mut newton = vec![0.0f64; 2 * 2 * 2];
    let mut cond = vec![0.0f64; 2];
    let mut statuses = vec![PhgStatus::Ok; 2];
    let status = unsafe {
        phg_directions(
            tables,
            packed.as_ptr(),
            taus.as_ptr(),
            2,
            ptr::null(),
            euler.as_mut_ptr(),
            newton.as_mut_ptr(),
            cond.as_mut_ptr(),
            statuses.as_mut_ptr(),
        )
    };
    assert_eq!(status, PhgStatus::DegenerateTangent);
    assert_eq!(statuses[0], PhgStatus::Ok);
    assert_eq!(statuses[1], PhgStatus::DegenerateTangent);
    assert!(cond[0] > 0.0);
    unsafe {
        phg_tables_free(tables);
        phg_system_free(sys);
    }
}

#[test]
fn track_follows_the_exponential_path() {
    // h = x - e^tau, exact path x = e^tau.
    let text = CString::new(
        r#"{
            "n": 1,
            "support": [[0], [1]],
            "coefficients": [[[-1.0,0.0],[1.0,0.0]]],
            "lifting": [[1,1],[0,1]]
        }"#,
    )
    .unwrap();
    let mut sys: *mut PhgSystem = ptr::null_mut();
    assert_eq!(unsafe { phg_system_parse(text.as_ptr(), &mut sys) }, PhgStatus::Ok);
    let mut tables: *mut PhgTables = ptr::null_mut();
    assert_eq!(unsafe { phg_tables_new(sys, &mut tables) }, PhgStatus::Ok);

    let tau0 = -2.0f64;
    let x = tau0.exp();
    let norm = (x * x + 1.0).sqrt();
    let start = vec![vec![
        Complex64::new(x / norm, 0.0),
        Complex64::new(1.0 / norm, 0.0),
    ]];
    let packed = pack_points(&start);
    let mut opts = PhgTrackOptions {
        tau0,
        step_init: 0.05,
        step_min: 1e-8,
        step_max: 0.5,
        newton_tol: 1e-10,
        newton_max_iters: 4,
        shrink: 0.5,
        grow: 2.0,
        grow_after: 3,
        max_steps: 10000,
        fixed_step_mode: false,
        fixed_steps: 100,
        accept_tol: 1e-8,
        start_tol: 1e-6,
        skip_start_check: false,
    };
    unsafe { phg_track_options_default(&mut opts) };
    opts.tau0 = tau0;

    let mut results = vec![PhgPathResult {
        status: PhgPathStatus::MaxSteps,
        tau: -1.0,
        residual: -1.0,
        steps: 0,
        newton_iters: 0,
        at_infinity: true,
    }];
    let mut out_y = vec![0.0f64; 2 * 2];
    let status = unsafe {
        phg_track(
            tables,
            packed.as_ptr(),
            tau0,
            1,
            &opts,
            ptr::null(),
            0,
            results.as_mut_ptr(),
            out_y.as_mut_ptr(),
        )
    };
    assert_eq!(status, PhgStatus::Ok);
    assert_eq!(results[0].status, PhgPathStatus::Converged);
    assert!(results[0].residual <= 1e-8);
    assert_eq!(results[0].tau, 0.0);
    assert!(!results[0].at_infinity);
    let y0 = Complex64::new(out_y[0], out_y[1]);
    let y1 = Complex64::new(out_y[2], out_y[3]);
    assert!((y0 / y1 - Complex64::new(1.0, 0.0)).norm() <= 1e-8);
    unsafe {
        phg_tables_free(tables);
        phg_system_free(sys);
    }
}
