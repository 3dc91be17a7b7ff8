use std::path::{Path, PathBuf};
use std::process::Command;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

const EXPORTS: [&str; 14] = [
    "wdan_last_error_message",
    "wdan_clear_last_error",
    "wdan_version",
    "wdan_normalizer_new",
    "wdan_normalizer_free",
    "wdan_normalizer_min_len",
    "wdan_normalizer_normalize",
    "wdan_denormalize",
    "wdan_adf_statistic",
    "wdan_model_load",
    "wdan_model_from_json",
    "wdan_model_free",
    "wdan_model_input_len",
    "wdan_model_forecast",
];

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(crate_dir().join("include/wdan.h")).unwrap();
    for name in EXPORTS {
        assert!(header.contains(&format!("{name}(")), "{name} missing from wdan.h");
    }
    assert!(header.contains("typedef struct WdanModel WdanModel;"));
    assert!(header.contains("WDAN_STATUS_PANIC = 7"));
}

/// Directory holding the static library cargo built alongside this test.
fn lib_dir() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?.to_path_buf();
    dir.join("libwdan_ffi.a").exists().then_some(dir)
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "wdan.h"

int main(void) {
    WdanNormalizer *n = NULL;
    if (wdan_normalizer_new("haar", 1, 2, 1e-5, false, &n) != WDAN_STATUS_OK) return 1;
    double x[8] = {1, 3, 2, 5, 4, 6, 5, 8};
    double z[8], m[8], s[8], back[8];
    if (wdan_normalizer_normalize(n, x, 8, z, m, s) != WDAN_STATUS_OK) return 2;
    if (wdan_denormalize(z, m, s, 8, 1e-5, back) != WDAN_STATUS_OK) return 3;
    for (int i = 0; i < 8; i++) {
        double d = back[i] - x[i];
        if (d > 1e-9 || d < -1e-9) return 4;
    }
    wdan_normalizer_free(n);
    if (wdan_normalizer_new("bogus", 1, 2, 1e-5, false, &n) != WDAN_STATUS_CONFIG) return 5;
    const char *msg = wdan_last_error_message();
    if (msg == NULL || strstr(msg, "bogus") == NULL) return 6;
    printf("ok %s\n", wdan_version());
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_static_library() {
    let (Some(lib), true) = (lib_dir(), have_cc()) else {
        eprintln!("skipping: no C compiler or static library");
        return;
    };
    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("smoke.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = work.path().join("smoke");
    let include = crate_dir().join("include");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg(format!("-I{}", include.display()))
        .arg(lib.join("libwdan_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(Path::new(&bin)).output().unwrap();
    assert!(out.status.success(), "C program exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
