/// Splits an identifier on underscores and camel-case boundaries and
/// lowercases every part.
///
/// An uppercase run followed by a lowercase letter breaks before the run's
/// last capital (`XMLParser` -> `xml`, `parser`). Digits stay with the part
/// they follow (`utf8` -> `utf8`); an uppercase letter after a digit starts a
/// new part.
pub fn split_identifier(identifier: &str) -> Vec<String> {
    let mut parts = Vec::new();
    for segment in identifier.split('_').filter(|s| !s.is_empty()) {
        let chars: Vec<char> = segment.chars().collect();
        let mut current = String::new();
        for (i, &c) in chars.iter().enumerate() {
            if i > 0 && c.is_uppercase() {
                let prev = chars[i - 1];
                let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
                let boundary = prev.is_lowercase()
                    || prev.is_ascii_digit()
                    || (prev.is_uppercase() && next_lower);
                if boundary && !current.is_empty() {
                    parts.push(std::mem::take(&mut current));
                }
            }
            current.extend(c.to_lowercase());
        }
        if !current.is_empty() {
            parts.push(current);
        }
    }
    parts
}

/// Character-wise lowercase, the normalization applied to every split part.
pub fn lowercase(text: &str) -> String {
    text.chars().flat_map(char::to_lowercase).collect()
}
