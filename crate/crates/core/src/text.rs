//! Minimal tokenization shared by noun mining, type extraction and context
//! features.

/// Splits on anything that is not alphanumeric and lowercases each token.
///
/// Apostrophes and hyphens are separators too, so `hip-hop` yields two tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    tokens(text).collect()
}

pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Splits `text` at the first sentence terminator (`.`, `!`, `?`) that is
/// followed by whitespace or the end of input. Returns `(first, rest)`, both
/// trimmed.
///
/// This is a heuristic: abbreviations such as `Mr.` end the sentence early.
pub fn split_first_sentence(text: &str) -> (&str, &str) {
    let text = text.trim();
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let at_boundary = match chars.peek() {
                None => true,
                Some(&(_, next)) => next.is_whitespace(),
            };
            if at_boundary {
                let end = i + c.len_utf8();
                return (text[..end].trim(), text[end..].trim());
            }
        }
    }
    (text, "")
}
