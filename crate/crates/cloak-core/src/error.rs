use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    /// Transport-level failure after exhausting the retry budget.
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    /// Endpoint answered with a non-2xx status. Not retried.
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },

    #[error("script underrun for role \"{role}\"")]
    ScriptUnderrun { role: String },

    #[error("script parse error at line {line}: {message}")]
    ScriptParse { line: usize, message: String },

    /// An agent reply could not be parsed even after one reprompt.
    #[error("unparseable reply from \"{role}\" agent: {excerpt}")]
    AgentReply { role: String, excerpt: String },

    #[error("privacy violation: {0}")]
    PrivacyViolation(String),

    /// Endpoint answered 2xx but the payload was not usable.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// External recognizer unreachable or returned a malformed payload.
    #[error("recognizer error: {0}")]
    Recognizer(String),

    #[error("dataset schema violation in instance \"{id}\": {message}")]
    DatasetSchema { id: String, message: String },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Coarse category label, safe to expose: carries no payload text.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "configuration",
            Error::Transport { .. } => "transport",
            Error::Status { .. } => "upstream status",
            Error::ScriptUnderrun { .. } => "script underrun",
            Error::ScriptParse { .. } => "script parse",
            Error::AgentReply { .. } => "agent reply",
            Error::PrivacyViolation(_) => "privacy violation",
            Error::Protocol(_) => "protocol",
            Error::Recognizer(_) => "recognizer",
            Error::DatasetSchema { .. } => "dataset schema",
            Error::Eval(_) => "evaluation",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Shorten a payload for inclusion in an error message.
    pub(crate) fn excerpt(s: &str) -> String {
        const MAX: usize = 160;
        let trimmed = s.trim();
        if trimmed.chars().count() <= MAX {
            trimmed.to_string()
        } else {
            let cut: String = trimmed.chars().take(MAX).collect();
            format!("{cut}…")
        }
    }
}
