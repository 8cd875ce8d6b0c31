//! Digital twin of a self-powered static/dynamic triboelectric pressure sensor.
//!
//! The crate is organised bottom-up:
//!
//! - [`physics`]: closed-form transduction models (parallel-plate static
//!   channel, contact-separation dynamic channel, saturating empirical forms).
//! - [`gradient`]: stepped-pyramid sponge stack with progressive contact.
//! - [`excitation`] and [`trace`]: synthetic pressure protocols and the
//!   uniformly sampled [`Trace`] container.
//! - [`transducer`]: pressure trace to DC/AC voltage traces, including the
//!   charge-excitation gain and first-order response lag.
//! - [`conditioning`] and [`harvest`]: RC pulse shaping and rectifier/storage
//!   capacitor charging.
//! - [`charfit`]: piecewise and saturating-exponential fits, sensitivity
//!   tables, response-time extraction and detection limit.
//! - [`control`]: DC/AC event classification, command mapping, lossy link
//!   and a kinematic hand.
//! - [`config`], [`io`] and [`report`]: configuration, CSV/JSON files and
//!   run reports used by the `isd` command-line tool.
//!
//! Pressures are in pascal everywhere inside the library; kPa only shows up
//! at file boundaries where the column name says so.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charfit;
pub mod conditioning;
pub mod config;
pub mod control;
pub mod error;
pub mod excitation;
pub mod gradient;
pub mod harvest;
pub mod io;
pub mod physics;
pub mod report;
pub mod trace;
pub mod transducer;

pub use error::{Error, Result};
pub use trace::{Channel, Trace};
