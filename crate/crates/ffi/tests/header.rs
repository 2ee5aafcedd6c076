use std::path::PathBuf;
use std::process::Command;

fn header() -> (PathBuf, String) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/squeezeclock.h");
    let text = std::fs::read_to_string(&path).expect("generated header exists");
    (path, text)
}

#[test]
fn header_declares_every_export() {
    let (_, h) = header();
    for name in [
        "ssc_last_error_message",
        "ssc_version",
        "ssc_db_to_linear",
        "ssc_linear_to_db",
        "ssc_spec_new",
        "ssc_spec_free",
        "ssc_spec_regime_alpha",
        "ssc_curve_new",
        "ssc_curve_free",
        "ssc_curve_eval",
        "ssc_curve_kinks",
        "ssc_clock_phase_variance",
        "ssc_optimize",
        "typedef struct SscSpec SscSpec;",
        "typedef struct SscCurve SscCurve;",
        "SSC_STATUS_OK = 0",
        "SSC_STATUS_PANIC = 5",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

/// The header must compile as both C and C++ when a compiler is present.
#[test]
fn header_compiles() {
    let (path, _) = header();
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ SscSpecParams p = {{0}}; (void)p; return SSC_STATUS_OK; }}\n",
            path.display()
        ),
    )
    .unwrap();
    for (cc, extra) in [("cc", &["-std=c99"][..]), ("c++", &["-x", "c++"][..])] {
        let Ok(out) = Command::new(cc)
            .args(extra)
            .args(["-Wall", "-Werror", "-fsyntax-only"])
            .arg(&src)
            .output()
        else {
            eprintln!("{cc} not found; skipping");
            continue;
        };
        assert!(
            out.status.success(),
            "{cc}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
