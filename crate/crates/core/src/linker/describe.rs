//! Human-readable descriptions of IRIs.

/// The part of an IRI after its last `/` or `#`, ignoring trailing slashes.
pub fn local_name(iri: &str) -> &str {
    let trimmed = iri.trim_end_matches(['/', '#']);
    match trimmed.rfind(['/', '#', ':']) {
        Some(i) => &trimmed[i + 1..],
        None => trimmed,
    }
}

/// True when the local name has three letters in a row and is not a short
/// prefix followed by digits, as in `P227` or `2279569217`.
pub fn is_human_readable(iri: &str) -> bool {
    let name = local_name(iri);
    let mut run = 0;
    let mut longest = 0;
    for c in name.chars() {
        if c.is_alphabetic() {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    let letters = name.chars().take_while(|c| c.is_ascii_alphabetic()).count();
    let coded = letters <= 2 && name.len() > letters && name[letters..].bytes().all(|b| b.is_ascii_digit());
    longest >= 3 && !coded
}

/// Splits a local name on camelCase boundaries, underscores and hyphens and
/// lowercases the words: `numberOfStudents` becomes `number of students`.
pub fn split_local_name(name: &str) -> String {
    let chars: Vec<char> = name.chars().collect();
    let mut words: Vec<String> = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c == '_' || c == '-' || c.is_whitespace() {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            continue;
        }
        let prev = i.checked_sub(1).map(|j| chars[j]);
        let next = chars.get(i + 1).copied();
        let boundary = c.is_uppercase()
            && !current.is_empty()
            && (prev.is_some_and(|p| p.is_lowercase() || p.is_ascii_digit())
                || (prev.is_some_and(char::is_uppercase) && next.is_some_and(char::is_lowercase)));
        if boundary {
            words.push(std::mem::take(&mut current));
        }
        current.extend(c.to_lowercase());
    }
    if !current.is_empty() {
        words.push(current);
    }
    words.join(" ")
}

/// Local name suggests a label-like predicate (`rdfs:label`, `foaf:name`).
pub fn is_label_predicate(iri: &str) -> bool {
    let n = local_name(iri).to_ascii_lowercase();
    n.contains("label") || n.contains("name")
}
