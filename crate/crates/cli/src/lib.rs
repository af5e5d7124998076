//! Experiment drivers behind the `inexact-mg` command line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod summary;
