use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Holds,
    Violated,
    /// The explored state space was truncated before a verdict could be established.
    Unknown,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Holds => "holds",
            Status::Violated => "violated",
            Status::Unknown => "unknown",
        }
    }
}

/// Outcome of a check.
///
/// `witness` is a path of state ids from the root. Trace-based checks also
/// fill `trace` with the observable labels along the counterexample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub property: String,
    pub status: Status,
    pub witness: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<String>>,
    pub reason: String,
    pub states_explored: usize,
    pub complete: bool,
}

impl Verdict {
    pub fn new(property: impl Into<String>, status: Status, states_explored: usize, complete: bool) -> Self {
        Verdict {
            property: property.into(),
            status,
            witness: None,
            trace: None,
            reason: String::new(),
            states_explored,
            complete,
        }
    }

    pub fn with_witness(mut self, path: Vec<usize>) -> Self {
        self.witness = Some(path);
        self
    }

    pub fn with_trace(mut self, trace: Vec<String>) -> Self {
        self.trace = Some(trace);
        self
    }

    pub fn with_reason(mut self, reason: impl Into<String>) -> Self {
        self.reason = reason.into();
        self
    }

    pub fn holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("verdict serializes")
    }
}
