//! Hosts the `acceptance` test target. Run it alone with
//! `cargo test -p pds-validation --test acceptance`, optionally followed by
//! `-- <name filter>`.
