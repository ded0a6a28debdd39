//! Configuration parsing and subcommands of the `ancient-mcf` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
