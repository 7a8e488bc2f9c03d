//! Word lists and tokenization shared by the rule-based question analysers.

pub(crate) const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "did", "does", "do", "has", "have", "had", "be", "been", "being", "can", "could",
    "will", "would", "should", "shall", "may", "might", "must",
];

/// Tokens that make a question boolean when they open it.
pub(crate) const BOOLEAN_OPENERS: &[&str] = &["is", "are", "was", "were", "did", "does", "do"];

pub(crate) const QUESTION_WORDS: &[&str] = &[
    "who", "whom", "whose", "what", "which", "where", "when", "how", "name", "give", "list", "show", "tell", "count",
];

pub(crate) const ARTICLES: &[&str] = &["the", "a", "an"];

pub(crate) const PREPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "to", "for", "by", "with", "from", "into", "onto", "as", "about", "through", "under",
    "over", "between", "during", "since", "within",
];

pub(crate) const STOPWORDS: &[&str] = &[
    "the", "a", "an", "me", "us", "all", "of", "in", "on", "at", "to", "for", "by", "with", "from", "into", "as",
    "one", "some", "any", "that", "this", "these", "those", "many", "much", "please", "there", "it", "its",
    "their", "his", "her", "and", "or", "not", "also", "type", "kind",
];

/// Frequent verbs that never serve as a semantic type.
pub(crate) const COMMON_VERBS: &[&str] = &[
    "wrote", "write", "writes", "written", "born", "die", "died", "dies", "flow", "flows", "play", "plays", "played",
    "directed", "founded", "located", "made", "make", "makes", "live", "lives", "lived", "start", "started", "take",
    "took", "won", "win", "created", "create", "produced", "developed", "own", "owns", "owned", "belong", "belongs",
    "happen", "happened", "invented", "discovered", "married", "speak", "spoken", "use", "used",
];

/// Markers that close one relation phrase and open the next.
pub(crate) const CONJUNCTIONS: &[&str] = &["and", "but", "or", "while"];

pub(crate) const CONNECTORS: &[&str] = &["of", "the", "de", "del", "la", "le", "von", "van", "der", "den", "du", "da"];

/// Suffix-stripping singular/base form for one word. Leaves short words and
/// irregular forms alone.
pub fn lemmatize(word: &str) -> String {
    let lower = word.to_lowercase();
    if lower.chars().count() <= 3 || !lower.is_ascii() {
        return word.to_string();
    }
    let cut = |n: usize, add: &str| format!("{}{add}", &word[..word.len() - n]);
    if lower.ends_with("ies") {
        return cut(3, "y");
    }
    if lower.ends_with("es") && ["shes", "ches", "xes", "ses", "zes"].iter().any(|s| lower.ends_with(s)) {
        return cut(2, "");
    }
    if lower.ends_with('s') && !["ss", "us", "is"].iter().any(|s| lower.ends_with(s)) {
        return cut(1, "");
    }
    word.to_string()
}

pub(crate) fn is_in(list: &[&str], word: &str) -> bool {
    list.contains(&word)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    /// Text with surrounding punctuation stripped.
    pub text: String,
    pub lower: String,
    /// Byte range of `text` inside the normalized question.
    pub start: usize,
    pub end: usize,
    /// The raw token ended with a clause separator such as `,` or `;`.
    pub clause_break: bool,
    pub quoted: bool,
}

impl Token {
    pub fn is_capitalized(&self) -> bool {
        self.text.chars().next().is_some_and(|c| c.is_uppercase())
    }

    pub fn is_numeric(&self) -> bool {
        self.text.chars().next().is_some_and(|c| c.is_ascii_digit())
    }
}

/// Collapses runs of whitespace and trims.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub(crate) fn tokenize(normalized: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut offset = 0;
    let mut in_quote = false;
    for raw in normalized.split(' ') {
        let raw_start = offset;
        offset += raw.len() + 1;
        let opens = raw.starts_with(['"', '“', '\'']);
        let tail = raw.trim_end_matches(['?', '.', '!', ',', ';', ':']);
        let closes = tail.ends_with(['"', '”', '\'']) && (tail.chars().count() > 1 || !opens);
        let trimmed_front = raw.trim_start_matches(|c: char| !c.is_alphanumeric());
        let text = trimmed_front.trim_end_matches(|c: char| !c.is_alphanumeric());
        if opens {
            in_quote = true;
        }
        let quoted = in_quote;
        if closes {
            in_quote = false;
        }
        if text.is_empty() {
            continue;
        }
        let start = raw_start + (raw.len() - trimmed_front.len());
        let clause_break = raw.ends_with([',', ';', ':']);
        tokens.push(Token {
            text: text.to_string(),
            lower: text.to_lowercase(),
            start,
            end: start + text.len(),
            clause_break,
            quoted,
        });
    }
    tokens
}
