use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use weldnet::pde::{gen_dataset, Family, GenConfig};
use weldnet::reduction::CoderKind;
use weldnet::weldnet::{train_weldnet, Architecture, Parallelism, TrainConfig};
use weldnet_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = weld_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn dataset_round_trip_through_handles() {
    let tmp = tempfile::tempdir().unwrap();
    let path = c(tmp.path().join("d.wtrj").to_str().unwrap());
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(weld_dataset_generate(c("tshift").as_ptr(), 4, 6, 16, 3, &mut ds), WeldStatus::Ok);
        let (mut n, mut t, mut d) = (0, 0, 0);
        assert_eq!(weld_dataset_shape(ds, &mut n, &mut t, &mut d), WeldStatus::Ok);
        assert_eq!((n, t, d), (4, 6, 16));
        assert_eq!(weld_dataset_write(ds, path.as_ptr()), WeldStatus::Ok);

        let mut back = ptr::null_mut();
        assert_eq!(weld_dataset_read(path.as_ptr(), &mut back), WeldStatus::Ok);
        let mut a = vec![0.0; 16];
        let mut b = vec![0.0; 16];
        assert_eq!(weld_dataset_snapshot(ds, 2, 5, a.as_mut_ptr(), 16), WeldStatus::Ok);
        assert_eq!(weld_dataset_snapshot(back, 2, 5, b.as_mut_ptr(), 16), WeldStatus::Ok);
        assert_eq!(a, b);
        assert!(a.iter().any(|&v| v != 0.0));

        assert_eq!(weld_dataset_snapshot(ds, 4, 0, a.as_mut_ptr(), 16), WeldStatus::InvalidArgument);
        assert_eq!(weld_dataset_snapshot(ds, 0, 0, a.as_mut_ptr(), 15), WeldStatus::InvalidArgument);
        weld_dataset_free(ds);
        weld_dataset_free(back);
        weld_dataset_free(ptr::null_mut());
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(
            weld_dataset_generate(c("kdv-bogus").as_ptr(), 2, 3, 8, 0, &mut ds),
            WeldStatus::InvalidArgument
        );
        assert!(last_error().contains("tscale"));
        assert!(ds.is_null());

        assert_eq!(weld_dataset_generate(ptr::null(), 2, 3, 8, 0, &mut ds), WeldStatus::NullPointer);
        assert_eq!(
            weld_dataset_generate(c("tscale").as_ptr(), 2, 3, 8, 0, ptr::null_mut()),
            WeldStatus::NullPointer
        );
        assert_eq!(weld_dataset_read(c("/nonexistent/x.wtrj").as_ptr(), &mut ds), WeldStatus::Io);

        let tmp = tempfile::tempdir().unwrap();
        let junk = tmp.path().join("junk");
        std::fs::write(&junk, b"NOTADATASETFILE!").unwrap();
        assert_eq!(weld_dataset_read(c(junk.to_str().unwrap()).as_ptr(), &mut ds), WeldStatus::Format);
        assert!(last_error().contains("magic"));

        assert_eq!(
            weld_model_dims(ptr::null(), ptr::null_mut(), ptr::null_mut()),
            WeldStatus::NullPointer
        );
    }
    let v = unsafe { CStr::from_ptr(weld_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn model_prediction_matches_library() {
    let ds = gen_dataset(&GenConfig {
        n_samples: 6,
        n_steps: 9,
        n_points: 16,
        seed: 2,
        ..GenConfig::new(Family::Tscale)
    })
    .unwrap();
    let cfg = TrainConfig {
        epochs_joint: 2,
        epochs_finetune: 1,
        epochs_transcoder: 1,
        arch: Architecture {
            coder_width: 8,
            coder_depth: 1,
            propagator_width: 4,
            propagator_depth: 1,
        },
        ..Default::default()
    };
    let m = train_weldnet(&ds, CoderKind::Neural, 2, 2, &cfg, Parallelism::default()).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    m.save(tmp.path()).unwrap();
    let x0 = ds.slice_at(&[0, 3], 0);
    let expect = m.predict(&x0, 7).unwrap();
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(weld_model_load(c(tmp.path().to_str().unwrap()).as_ptr(), &mut h), WeldStatus::Ok);
        let (mut dim, mut steps) = (0, 0);
        assert_eq!(weld_model_dims(h, &mut dim, &mut steps), WeldStatus::Ok);
        assert_eq!((dim, steps), (16, 9));
        let mut out = vec![0.0; 32];
        assert_eq!(
            weld_model_predict(h, x0.data().as_ptr(), 2, 16, 7, out.as_mut_ptr()),
            WeldStatus::Ok
        );
        assert_eq!(&out[..], expect.data());
        assert_eq!(
            weld_model_predict(h, x0.data().as_ptr(), 2, 15, 7, out.as_mut_ptr()),
            WeldStatus::InvalidArgument
        );
        assert_eq!(
            weld_model_predict(h, x0.data().as_ptr(), 2, 16, 9, out.as_mut_ptr()),
            WeldStatus::InvalidArgument
        );
        weld_model_free(h);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/weldnet.h")).unwrap();
    for name in [
        "weld_last_error_message",
        "weld_dataset_generate",
        "weld_dataset_read",
        "weld_dataset_snapshot",
        "weld_dataset_free",
        "weld_model_load",
        "weld_model_predict",
        "weld_model_free",
        "WELD_STATUS_OK",
        "typedef struct WeldDataset WeldDataset",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/weldnet.h");
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ WeldDataset *d = 0; return weld_dataset_read(\"x\", &d) == WELD_STATUS_OK; }}\n",
            header.display()
        ),
    )
    .unwrap();
    match std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&src)
        .status()
    {
        Ok(s) => assert!(s.success(), "C compiler rejected the header"),
        Err(_) => eprintln!("no C compiler found; skipping"),
    }
}
