//! Optional JSON-lines event log of a solve.

use serde::Serialize;
use serde_json::Value;

use crate::preprocess::Reduction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationEvent {
    Forced,
    Fake,
    Absorb,
    ActivateR1,
    ActivateR2,
    Push,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Guess {
        t: i64,
        core: &'static str,
    },
    Reduction {
        t: i64,
        #[serde(flatten)]
        step: Reduction,
    },
    /// A pebble move of the two-valued core.
    Push {
        t: i64,
        round: usize,
        pebble: String,
        from: String,
        to: String,
        potential: u64,
    },
    /// A step of the general core.
    Orientation {
        t: i64,
        iteration: usize,
        kind: OrientationEvent,
        payload: Value,
    },
    Outcome {
        t: i64,
        accepted: bool,
        detail: String,
    },
}

/// Collects events when enabled; otherwise recording is a no-op and the
/// event is never built.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    enabled: bool,
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn enabled() -> Self {
        Trace {
            enabled: true,
            events: Vec::new(),
        }
    }

    pub fn disabled() -> Self {
        Trace::default()
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn record(&mut self, event: impl FnOnce() -> TraceEvent) {
        if self.enabled {
            self.events.push(event());
        }
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }
}
