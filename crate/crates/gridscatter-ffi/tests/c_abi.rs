//! Compiles and runs `examples/smoke.c` against the generated header and
//! the static library, proving the surface is usable from plain C.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn c_program_drives_a_run() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let workspace = manifest.parent().unwrap().parent().unwrap().to_path_buf();

    // the staticlib is a build product of this crate's lib target
    let build = Command::new(env!("CARGO"))
        .args(["build", "-p", "gridscatter-ffi"])
        .current_dir(&workspace)
        .status()
        .expect("cargo is runnable");
    assert!(build.success());
    let staticlib = workspace.join("target/debug/libgridscatter_ffi.a");
    assert!(staticlib.exists(), "missing {}", staticlib.display());
    let header = manifest.join("include/gridscatter.h");
    assert!(header.exists(), "missing {}", header.display());

    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let compile = Command::new("cc")
        .arg(manifest.join("examples/smoke.c"))
        .arg(&staticlib)
        .arg("-I")
        .arg(manifest.join("include"))
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("cc is runnable");
    assert!(
        compile.status.success(),
        "cc failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&exe).output().expect("smoke binary runs");
    assert_eq!(
        run.status.code(),
        Some(0),
        "stdout: {} stderr: {}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).contains("c abi smoke ok"));
}
