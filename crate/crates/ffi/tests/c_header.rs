use std::path::{Path, PathBuf};
use std::process::Command;

const HEADER: &str = include_str!("../include/snoregan.h");

#[test]
fn header_declares_every_entry_point() {
    for name in [
        "snoregan_last_error",
        "snoregan_version",
        "snoregan_model_load",
        "snoregan_model_free",
        "snoregan_model_shape",
        "snoregan_model_generate",
        "snoregan_model_discriminate",
        "snoregan_threshold",
        "snoregan_uar",
        "snoregan_boaw",
    ] {
        assert!(HEADER.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(HEADER.contains("SNOREGAN_STATUS_DIMENSION_MISMATCH = 3"));
}

fn static_lib() -> Option<PathBuf> {
    let deps = std::env::current_exe().ok()?.parent()?.to_path_buf();
    [deps.join("libsnoregan_ffi.a"), deps.parent()?.join("libsnoregan_ffi.a")]
        .into_iter()
        .find(|p| p.exists())
}

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "snoregan.h"

int main(void) {
    double t = 0.0;
    if (snoregan_threshold(0.95, 0.0, 0.7, 0, &t) != SNOREGAN_STATUS_OK || t != 1.0) return 1;
    size_t p[4] = {0, 0, 1, 1}, l[4] = {0, 1, 1, 1};
    double u = 0.0;
    if (snoregan_uar(p, l, 4, 2, &u) != SNOREGAN_STATUS_OK) return 2;
    if (u < 0.8333 || u > 0.8334) return 3;
    SnoreganModel *m = NULL;
    if (snoregan_model_load("/nonexistent/model.json", &m) != SNOREGAN_STATUS_IO) return 4;
    if (m != NULL || snoregan_last_error() == NULL) return 5;
    if (snoregan_uar(NULL, l, 4, 2, &u) != SNOREGAN_STATUS_NULL_POINTER) return 6;
    snoregan_model_free(NULL);
    printf("%s\n", snoregan_version());
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let Some(lib) = static_lib() else {
        eprintln!("static library not built; skipping");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "C program failed: {:?}", out);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
