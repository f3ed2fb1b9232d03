//! Holds the `acceptance` test target, which drives the `lcqnn` binary and
//! the core library end to end. Run it with
//! `cargo test -p lcqnn-validation --test acceptance`.
