use std::ffi::{c_char, CStr, CString};
use std::ptr;

use rramkit::limc::{input_vector, logical_sim, parse_netlist};
use rramkit_ffi::*;

const OR: &str = ".model or\n.inputs a b\n.outputs y\n.names a b y\n1- 1\n-1 1\n.end\n";

fn last_error() -> String {
    let n = rk_last_error_length();
    let mut buf = vec![0 as c_char; n + 1];
    let full = unsafe { rk_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(full, n);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned()
}

fn crossbar(rows: usize, cols: usize, d2d: bool) -> *mut RkCrossbar {
    let mut x = ptr::null_mut();
    assert_eq!(
        unsafe { rk_crossbar_new(rows, cols, 5, d2d, false, &mut x) },
        RkStatus::Ok
    );
    assert!(!x.is_null());
    x
}

#[test]
fn bits_and_levels_round_trip() {
    let x = crossbar(4, 4, false);
    unsafe {
        assert_eq!(rk_crossbar_write_bit(x, 1, 2, true), RkStatus::Ok);
        let mut b = false;
        assert_eq!(rk_crossbar_read_bit(x, 1, 2, &mut b), RkStatus::Ok);
        assert!(b);
        let mut r = 0.0;
        assert_eq!(rk_crossbar_resistance(x, 1, 2, &mut r), RkStatus::Ok);
        assert!(r < 2e4, "{r}");
        assert_eq!(rk_crossbar_read_bit(x, 0, 0, &mut b), RkStatus::Ok);
        assert!(!b);
        for level in 0..6 {
            assert_eq!(rk_crossbar_program_level(x, 3, 3, level), RkStatus::Ok);
            let mut got = usize::MAX;
            assert_eq!(rk_crossbar_read_level(x, 3, 3, &mut got), RkStatus::Ok);
            assert_eq!(got, level);
        }
        assert_eq!(rk_crossbar_write_bit(x, 4, 0, true), RkStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        assert_eq!(rk_crossbar_program_level(x, 0, 0, 6), RkStatus::InvalidArgument);
        rk_crossbar_free(x);
    }
}

#[test]
fn or2_compiles_and_runs() {
    let net = parse_netlist(OR).unwrap();
    let src = CString::new(OR).unwrap();
    let mut p = ptr::null_mut();
    let x = crossbar(4, 4, false);
    unsafe {
        assert_eq!(rk_lim_compile(src.as_ptr(), 4, 4, &mut p), RkStatus::Ok);
        assert_eq!((rk_lim_num_inputs(p), rk_lim_num_outputs(p)), (2, 1));
        for k in 0..4 {
            let v = input_vector(k, 2);
            let bytes: Vec<u8> = v.iter().map(|&b| b as u8).collect();
            let mut out = [9u8];
            let mut e = 0.0;
            assert_eq!(
                rk_lim_run(p, x, bytes.as_ptr(), 2, out.as_mut_ptr(), 1, &mut e),
                RkStatus::Ok
            );
            assert_eq!(out[0] == 1, logical_sim(&net, &v).unwrap()[0]);
            assert!(e > 0.0);
        }
        let mut out = [0u8; 2];
        assert_eq!(
            rk_lim_run(p, x, [1u8, 0].as_ptr(), 2, out.as_mut_ptr(), 2, ptr::null_mut()),
            RkStatus::InvalidArgument
        );
        assert_eq!(
            rk_lim_run(p, x, [2u8, 0].as_ptr(), 2, out.as_mut_ptr(), 1, ptr::null_mut()),
            RkStatus::InvalidArgument
        );
        assert!(last_error().contains("0 or 1"));
        rk_lim_free(p);
        rk_crossbar_free(x);
    }
}

#[test]
fn compile_errors_map_to_status() {
    let bad = CString::new(".model x\n.inputs a\n.outputs y\n.names a q y\n11 1\n.end\n").unwrap();
    let big = CString::new(rramkit::limc::ripple_carry_blif(4)).unwrap();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(rk_lim_compile(bad.as_ptr(), 4, 4, &mut p), RkStatus::Parse);
        assert_eq!(rk_lim_compile(big.as_ptr(), 8, 4, &mut p), RkStatus::Capacity);
        assert!(p.is_null());
        assert!(last_error().contains("169"));
    }
}

#[test]
fn spice_reports_needed_size() {
    let src = CString::new(OR).unwrap();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(rk_lim_compile(src.as_ptr(), 4, 4, &mut p), RkStatus::Ok);
        let ins = [1u8, 0];
        let mut needed = 0;
        let mut small = [0 as c_char; 8];
        let st = rk_lim_emit_spice(p, ins.as_ptr(), 2, small.as_mut_ptr(), small.len(), &mut needed);
        assert_eq!(st, RkStatus::BufferTooSmall);
        assert!(needed > small.len());
        assert_eq!(small, [0; 8]);
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(
            rk_lim_emit_spice(p, ins.as_ptr(), 2, buf.as_mut_ptr(), needed, ptr::null_mut()),
            RkStatus::Ok
        );
        let text = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert_eq!(text.len() + 1, needed);
        assert!(text.trim_end().ends_with(".end"));
        rk_lim_free(p);
    }
}

#[test]
fn ternary_add_matches_integers() {
    let x = crossbar(8, 8, false);
    // 2 + 3*1 + 9*2 = 23 and 1 + 3*2 + 9*2 = 25; 48 = 0 + 3*1 + 9*2 + 27*1.
    let (a, b) = ([2u8, 1, 2], [1u8, 2, 2]);
    let mut sum = [9u8; 4];
    unsafe {
        assert_eq!(
            rk_ternary_add(x, a.as_ptr(), b.as_ptr(), 3, sum.as_mut_ptr()),
            RkStatus::Ok
        );
        assert_eq!(sum, [0, 1, 2, 1]);
        let bad = [3u8, 0, 0];
        assert_eq!(
            rk_ternary_add(x, bad.as_ptr(), b.as_ptr(), 3, sum.as_mut_ptr()),
            RkStatus::InvalidArgument
        );
        rk_crossbar_free(x);
    }
}

#[test]
fn trng_fills_bits() {
    let x = crossbar(2, 2, false);
    let mut out = vec![7u8; 512];
    unsafe {
        assert_eq!(
            rk_trng_fill(x, 0, 0, 0.0, true, out.as_mut_ptr(), out.len()),
            RkStatus::Ok
        );
        rk_crossbar_free(x);
    }
    assert!(out.iter().all(|&b| b <= 1));
    let ones = out.iter().filter(|&&b| b == 1).count();
    assert!((150..=362).contains(&ones), "{ones}");
}

#[test]
fn puf_is_stable_and_chip_specific() {
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(rk_puf_new(1, &mut a), RkStatus::Ok);
        assert_eq!(rk_puf_new(2, &mut b), RkStatus::Ok);
        let (n_ch, n_resp) = (rk_puf_challenge_len(a), rk_puf_response_len(a));
        assert!(n_ch > 0 && n_resp > 0);
        let ch: Vec<u8> = (0..n_ch).map(|i| (i % 3 == 0) as u8).collect();
        let mut r1 = vec![9u8; n_resp];
        let mut r2 = vec![9u8; n_resp];
        let mut r3 = vec![9u8; n_resp];
        assert_eq!(
            rk_puf_response(a, ch.as_ptr(), n_ch, r1.as_mut_ptr(), n_resp),
            RkStatus::Ok
        );
        assert_eq!(
            rk_puf_response(a, ch.as_ptr(), n_ch, r2.as_mut_ptr(), n_resp),
            RkStatus::Ok
        );
        assert_eq!(
            rk_puf_response(b, ch.as_ptr(), n_ch, r3.as_mut_ptr(), n_resp),
            RkStatus::Ok
        );
        assert_eq!(r1, r2);
        assert_ne!(r1, r3);
        assert_eq!(
            rk_puf_response(a, ch.as_ptr(), n_ch - 1, r1.as_mut_ptr(), n_resp),
            RkStatus::InvalidArgument
        );
        rk_puf_free(a);
        rk_puf_free(b);
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        let mut b = false;
        assert_eq!(
            rk_crossbar_read_bit(ptr::null_mut(), 0, 0, &mut b),
            RkStatus::NullPointer
        );
        assert_eq!(last_error(), "crossbar is null");
        assert_eq!(
            rk_crossbar_new(2, 2, 0, false, false, ptr::null_mut()),
            RkStatus::NullPointer
        );
        let mut p = ptr::null_mut();
        assert_eq!(rk_lim_compile(ptr::null(), 2, 2, &mut p), RkStatus::NullPointer);
        assert_eq!(rk_lim_num_inputs(ptr::null()), 0);
        rk_crossbar_free(ptr::null_mut());
        rk_lim_free(ptr::null_mut());
        rk_puf_free(ptr::null_mut());
        // A success clears the message.
        let x = crossbar(2, 2, false);
        assert_eq!(rk_last_error_length(), 0);
        // Truncation keeps the NUL and reports the full length.
        rk_crossbar_read_bit(x, 9, 9, &mut b);
        let n = rk_last_error_length();
        let mut buf = [1 as c_char; 4];
        assert_eq!(rk_last_error_message(buf.as_mut_ptr(), 4), n);
        assert_eq!(buf[3], 0);
        rk_crossbar_free(x);
    }
    let name = unsafe { CStr::from_ptr(rk_status_string(RkStatus::BufferTooSmall)) };
    assert_eq!(name.to_str().unwrap(), "buffer too small");
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/rramkit.h")).unwrap();
    assert!(h.starts_with("#ifndef RRAMKIT_H\n#define RRAMKIT_H"));
    assert!(h.trim_end().ends_with("#endif  /* RRAMKIT_H */"));
    for sym in [
        "RK_STATUS_OK = 0",
        "RK_STATUS_PANIC = 8",
        "typedef struct RkCrossbar RkCrossbar;",
        "rk_crossbar_new(",
        "rk_lim_compile(",
        "rk_lim_emit_spice(",
        "rk_ternary_add(",
        "rk_trng_fill(",
        "rk_puf_response(",
        "rk_last_error_message(",
    ] {
        assert!(h.contains(sym), "missing {sym}");
    }
}
