//! Writes the 10-blob demo dataset as EMB1 + LBL1 files, ready for the
//! CLI: `cargo run --example make_blobs -- /tmp/demo`

use typiclust::io::{write_embeddings, write_labels};
use typiclust::synthetic::blobs_fixture;

fn main() {
    let dir = std::path::PathBuf::from(
        std::env::args().nth(1).unwrap_or_else(|| "blobs-demo".into()),
    );
    std::fs::create_dir_all(&dir).unwrap();
    let set = blobs_fixture(1);
    write_embeddings(&dir.join("blobs.emb"), &set).unwrap();
    write_labels(&dir.join("blobs.lbl"), set.labels().unwrap()).unwrap();
    println!(
        "wrote {} ({} points, {} dims, {} classes)",
        dir.display(),
        set.len(),
        set.dim(),
        set.class_count().unwrap()
    );
}
