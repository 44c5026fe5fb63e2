//! Compiles and runs a small C client against the generated header and
//! the cdylib, exercising the ABI end to end.

use std::path::PathBuf;
use std::process::Command;

const C_CLIENT: &str = r#"
#include "typiclust.h"
#include <stdio.h>
#include <stddef.h>

int main(void) {
    float data[16] = {
        5.0f, 0.0f, 5.1f, 0.0f, 5.0f, 0.1f, 5.1f, 0.1f,
        0.0f, 9.0f, 0.1f, 9.0f, 0.0f, 9.1f, 0.1f, 9.1f,
    };
    struct TcEmbeddings *emb = NULL;
    if (tc_embeddings_create(data, 8, 2, &emb) != TcStatus_Ok) return 1;
    if (tc_embeddings_rows(emb) != 8 || tc_embeddings_dims(emb) != 2) return 2;
    if (tc_embeddings_normalize(emb) != TcStatus_Ok) return 3;

    uint64_t indices[2];
    uint64_t len = 0;
    if (tc_select(emb, "typiclust_rp", 2, 7, 20, 500, 1, NULL, 0, indices, &len)
        != TcStatus_Ok) {
        fprintf(stderr, "select: %s\n", tc_last_error_message());
        return 4;
    }
    if (len != 2) return 5;
    int first_low = indices[0] < 4;
    int second_low = indices[1] < 4;
    if (first_low == second_low) return 6; /* must cover both groups */

    double scores[8];
    if (tc_typicality(emb, 3, scores) != TcStatus_Ok) return 7;

    tc_embeddings_free(emb);
    printf("version %s\n", tc_version());
    return 0;
}
"#;

#[test]
fn c_client_links_and_runs() {
    let compiler = ["cc", "gcc", "clang"]
        .iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok());
    let Some(compiler) = compiler else {
        eprintln!("no C compiler found; skipping");
        return;
    };

    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    let lib_dir = {
        // target/debug relative to the workspace root
        let mut dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
        dir.pop();
        dir.pop();
        dir.join("target").join(if cfg!(debug_assertions) { "debug" } else { "release" })
    };
    assert!(
        lib_dir.join("libtypiclust_ffi.so").exists()
            || lib_dir.join("libtypiclust_ffi.dylib").exists(),
        "cdylib not built at {}",
        lib_dir.display()
    );

    let work = tempfile_dir();
    let source = work.join("client.c");
    let binary = work.join("client");
    std::fs::write(&source, C_CLIENT).unwrap();

    let compile = Command::new(compiler)
        .arg(&source)
        .arg("-I")
        .arg(&include_dir)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-ltypiclust_ffi")
        .arg("-o")
        .arg(&binary)
        .output()
        .expect("compiler runs");
    assert!(
        compile.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .output()
        .expect("client runs");
    assert!(
        run.status.success(),
        "client exited {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    std::fs::remove_dir_all(&work).ok();
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("typiclust-ffi-c-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
