//! Holds the `acceptance` test target; run it with
//! `cargo test -p hcschema-verify --test acceptance`.
