#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lcqnn_core::mnist::idx::{encode_images, encode_labels, IdxImages};
use lcqnn_core::mnist::{TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS};
use serde_json::Value;

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn lcqnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcqnn"))
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

pub fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "command failed: {}", stderr(out));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn load(name: &str) -> Value {
    let path = workspace_root().join("schema").join(name);
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

/// Validates `doc` against a schema shipped in `schema/`, resolving sibling refs locally.
pub fn validate(schema: &str, doc: &Value) {
    let root = load(schema);
    let base = root["$id"].as_str().unwrap().rsplit_once('/').unwrap().0.to_string();
    let mut opts = jsonschema::options();
    for dep in ["meta.schema.json", "architecture.schema.json"] {
        let resource = jsonschema::Resource::from_contents(load(dep)).unwrap();
        opts = opts.with_resource(format!("{base}/{dep}"), resource);
    }
    let validator = opts.build(&root).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{schema}: {errors:#?}");
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
