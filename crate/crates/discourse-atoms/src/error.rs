use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no token reaches min_count {min_count}; vocabulary would be empty")]
    EmptyVocabulary { min_count: u64 },

    #[error("word not in vocabulary: {0}")]
    MissingWord(String),

    #[error("merged token {0} collides with an existing vocabulary entry")]
    TokenCollision(String),

    #[error("pmi undefined: {w1} and {w2} never co-occur")]
    UndefinedPmi { w1: String, w2: String },

    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("atom basis dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("atom index {index} out of range (basis has {size} atoms)")]
    AtomIndexOutOfRange { index: usize, size: usize },

    #[error("empty context set for {0}: no co-occurring words")]
    EmptyContext(String),

    #[error("similarity over an empty word set")]
    EmptyWordSet,

    #[error("degenerate span: v1 and v2 are (anti-)parallel")]
    DegenerateSpan,

    #[error("target {0} has no atoms after coefficient flooring")]
    NoAtoms(String),

    #[error("sense {sense_id} has only {in_vocab} in-vocabulary words (need at least {min})")]
    SenseTooSmall {
        sense_id: String,
        in_vocab: usize,
        min: usize,
    },

    #[error("sentence too short: {found} usable tokens, need at least {need}")]
    SentenceTooShort { found: usize, need: usize },

    #[error("no sentence of more than {min_tokens} tokens contains {word}")]
    NoSentence { word: String, min_tokens: usize },

    #[error("word group for ({atom}, {word}) could not reach 3 members before the relaxation floor")]
    UngrowableGroup { atom: usize, word: String },

    #[error("pipeline stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed {what} at line {line}: {detail}")]
    Format {
        what: &'static str,
        line: usize,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
