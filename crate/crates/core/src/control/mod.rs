//! Event detection on the DC/AC channels and the command path to a
//! simulated hand: `classify` → `map_control` → `transmit` → `actuate`.

mod events;
mod hand;
mod link;
mod mapping;

pub use events::{classify, ClassifierConfig, Event, EventKind};
pub use hand::{actuate, ActuatorConfig, HandState, HandTrajectory, FINGER_NAMES};
pub use link::{transmit, ChannelModel};
pub use mapping::{gesture_name, map_control, CommandKind, ControlCommand, MappingConfig};
