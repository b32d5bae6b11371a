/// Word-level tokenizer.
///
/// Lowercases, splits on whitespace, and emits every punctuation character as
/// its own token. Words are maximal runs of alphanumerics and apostrophes; a
/// trailing `n't` is split off (`don't` -> `do`, `n't`).
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '\'' {
            word.extend(ch.to_lowercase());
        } else {
            flush_word(&mut word, &mut out);
            if !ch.is_whitespace() {
                out.push(ch.to_lowercase().collect());
            }
        }
    }
    flush_word(&mut word, &mut out);
    out
}

fn flush_word(word: &mut String, out: &mut Vec<String>) {
    if word.is_empty() {
        return;
    }
    let mut stem = word.as_str();
    let mut clitics = 0;
    while stem.len() > 3 && stem.ends_with("n't") {
        stem = &stem[..stem.len() - 3];
        clitics += 1;
    }
    out.push(stem.to_string());
    out.extend(std::iter::repeat_n("n't".to_string(), clitics));
    word.clear();
}
