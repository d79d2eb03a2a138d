//! Holds the `acceptance` test target, which prints one PASS/FAIL line per
//! end-to-end criterion:
//!
//! ```sh
//! cargo test -p refocus-validation --test acceptance
//! ```
//!
//! It lives in its own package so that it runs after the library and CLI
//! suites and a failing criterion cannot hide their results.
