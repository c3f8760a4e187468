//! Interactive steering of a simulated robot inside a spinal-cord phantom.
//!
//! [`TeleopSession`] holds the commanded insertion, base rotation and
//! tension, recomputes the rod shape on change and reports target distances.
//! [`TeleopServer`] exposes a session over WebSocket using the JSON messages
//! in [`protocol`].

pub mod protocol;
mod scene;
mod server;
mod session;

pub use protocol::{ClientMessage, CommandSet, EventBody, StatusBody, TeleopEvent};
pub use scene::{Cord, EntryFrame, PhantomScene, Target, TARGET_LABELS};
pub use server::TeleopServer;
pub use session::{CommandInput, Commands, SessionConfig, TargetDistance, TargetReport, TeleopSession};
