//! JSON messages exchanged with teleop clients.
//!
//! Client to service:
//! * `{"seq":3,"kind":"command","set":{"eta":0.5,"rotation":-3.1416,"tau":0.6}}`
//! * `{"seq":4,"kind":"command","delta":{"eta":0.05}}`
//! * `{"kind":"assist","on":true}`
//! * `{"kind":"snapshot"}`
//!
//! Service to client: events with a gapless per-session `seq` and a `kind` of
//! `command`, `shape`, `status`, `reach` or `error`.

use serde::{Deserialize, Serialize};

use super::session::CommandInput;

/// Partial command values; missing fields keep their current value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CommandSet {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusBody {
    pub eta: f64,
    pub rotation: f64,
    pub tau: f64,
    pub tau_max: f64,
    pub ftl_assist: bool,
    pub gravity: bool,
    /// Names of the command fields clamped by the last command.
    pub clamped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EventBody {
    Command {
        set: CommandSet,
    },
    Shape {
        points: Vec<[f64; 3]>,
        eta: f64,
        tau: f64,
        rotation: f64,
    },
    Status(StatusBody),
    Reach {
        target: String,
        distance: f64,
    },
    Error {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeleopEvent {
    pub seq: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

impl TeleopEvent {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClientMessage {
    Command {
        #[serde(default)]
        seq: Option<u64>,
        #[serde(default)]
        set: Option<CommandSet>,
        #[serde(default)]
        delta: Option<CommandSet>,
    },
    Assist {
        on: bool,
    },
    Snapshot,
}

impl ClientMessage {
    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Session inputs in application order (`set` before `delta`).
    pub fn inputs(&self) -> Vec<CommandInput> {
        match self {
            ClientMessage::Command { set, delta, .. } => set
                .map(CommandInput::Set)
                .into_iter()
                .chain(delta.map(CommandInput::Delta))
                .collect(),
            ClientMessage::Assist { on } => vec![CommandInput::Assist(*on)],
            ClientMessage::Snapshot => Vec::new(),
        }
    }
}
