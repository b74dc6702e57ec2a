//! Holds the acceptance suite in `tests/acceptance.rs`. Kept as its own
//! package so the other test binaries run before it.
