//! 4-class MNIST classification: IDX loading, 4×4 pooling, amplitude
//! encoding and LCQNN training.

pub mod data;
pub mod idx;
pub mod train;

pub use data::{
    default_data_dir, load_dataset, preprocess, required_files, select_examples, Dataset, MnistExample,
    DATA_DIR_ENV, TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS,
};
pub use idx::{parse_idx, IdxData, IdxImages};
pub use train::{
    cell_accuracy, classify_logits, run_grid, softmax_cross_entropy, train, train_run, trend_report, Classifier, Optimizer,
    RunMetrics, GridCell, TrainConfig, TrendCheck,
};
