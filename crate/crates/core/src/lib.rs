//! Two-window event study of yield-curve repricing around monetary-policy
//! statements.
//!
//! Each event pairs an initial shock with the next policy statement. The
//! curve's move from the last trading day before the shock to the shock
//! date is the initial repricing; its move from there to the day after the
//! statement is the statement-window repricing, which is regressed on the
//! initial move, market controls, statement text features and pre-event
//! survey expectations.

pub mod calendar;
pub mod config;
pub mod dataset;
pub mod dist;
pub mod estimators;
pub mod ingest;
pub mod report;
pub mod textfeat;
