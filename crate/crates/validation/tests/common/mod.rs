use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use lcqnn_core::mnist::idx::{encode_images, encode_labels, IdxImages};
use lcqnn_core::mnist::{TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS};

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// The `lcqnn` binary from this build's profile directory, built on first use.
fn binary() -> &'static Path {
    static BIN: OnceLock<PathBuf> = OnceLock::new();
    BIN.get_or_init(|| {
        let exe = std::env::current_exe().expect("test executable path");
        let profile_dir = exe.parent().and_then(Path::parent).expect("target/<profile>/deps layout");
        let cargo = std::env::var_os("CARGO").unwrap_or_else(|| "cargo".into());
        let mut build = Command::new(cargo);
        build.current_dir(workspace_root()).args(["build", "--quiet", "-p", "lcqnn-cli", "--bin", "lcqnn"]);
        if profile_dir.file_name().is_some_and(|n| n == "release") {
            build.arg("--release");
        }
        let status = build.status().expect("cargo runs");
        assert!(status.success(), "building lcqnn failed");
        profile_dir.join(format!("lcqnn{}", std::env::consts::EXE_SUFFIX))
    })
}

pub fn lcqnn(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .env_remove("LCQNN_DATA_DIR")
        .output()
        .expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Tiny IDX dataset where class `c` lights pooled cell `5c` plus a faint background.
pub fn synthetic_mnist(dir: &Path, train: usize, test: usize) {
    let make = |count: usize, salt: usize| {
        let mut pixels = vec![0u8; count * 784];
        let mut labels = Vec::with_capacity(count);
        for i in 0..count {
            let label = ((i * 7 + salt) % 10) as u8;
            let img = &mut pixels[i * 784..(i + 1) * 784];
            for (p, px) in img.iter_mut().enumerate() {
                *px = ((p * 31 + i * 17 + salt) % 23) as u8;
            }
            let cell = 5 * (label as usize % 4);
            let (r0, c0) = ((cell / 4) * 7, (cell % 4) * 7);
            for r in r0..r0 + 7 {
                for c in c0..c0 + 7 {
                    img[r * 28 + c] = 230;
                }
            }
            labels.push(label);
        }
        (IdxImages { count, rows: 28, cols: 28, pixels }, labels)
    };
    let (tri, trl) = make(train, 0);
    let (tei, tel) = make(test, 3);
    std::fs::write(dir.join(TRAIN_IMAGES), encode_images(&tri)).unwrap();
    std::fs::write(dir.join(TRAIN_LABELS), encode_labels(&trl)).unwrap();
    std::fs::write(dir.join(TEST_IMAGES), encode_images(&tei)).unwrap();
    std::fs::write(dir.join(TEST_LABELS), encode_labels(&tel)).unwrap();
}
