//! Unicode-aware tokenizer shared by indexing and query parsing.

/// Lowercased terms with their 0-based term positions.
///
/// A term is a maximal run of alphanumeric code points; everything else
/// separates terms.
pub fn tokenize(text: &str) -> Vec<(String, u32)> {
    let mut out = Vec::new();
    for_each_token(text, |term, pos, _| out.push((term.to_string(), pos)));
    out
}

pub fn terms(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for_each_token(text, |term, _, _| out.push(term.to_string()));
    out
}

/// Calls `f(term, position, byte_range_in_text)` for every term, reusing one
/// buffer for the lowercased term.
pub fn for_each_token<F>(text: &str, mut f: F)
where
    F: FnMut(&str, u32, std::ops::Range<usize>),
{
    let mut buf = String::new();
    let mut pos = 0u32;
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
            if c.is_ascii() {
                buf.push(c.to_ascii_lowercase());
            } else {
                buf.extend(c.to_lowercase());
            }
        } else if let Some(s) = start.take() {
            f(&buf, pos, s..i);
            buf.clear();
            pos += 1;
        }
    }
    if let Some(s) = start {
        f(&buf, pos, s..text.len());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference(text: &str) -> Vec<(String, u32)> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if !chars[i].is_alphanumeric() {
                i += 1;
                continue;
            }
            let mut term = String::new();
            while i < chars.len() && chars[i].is_alphanumeric() {
                for l in chars[i].to_lowercase() {
                    term.push(l);
                }
                i += 1;
            }
            let pos = out.len() as u32;
            out.push((term, pos));
        }
        out
    }

    #[test]
    fn basic_sentence() {
        let got = tokenize("Write a NEW article");
        let want: Vec<(String, u32)> = [("write", 0), ("a", 1), ("new", 2), ("article", 3)]
            .iter()
            .map(|(t, p)| (t.to_string(), *p))
            .collect();
        assert_eq!(got, want);
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ,.;!! ").is_empty());
    }

    #[test]
    fn unicode_terms() {
        let got: Vec<String> = tokenize("¿Cuántos ÁRBOLES? 北京-2024").into_iter().map(|t| t.0).collect();
        assert_eq!(got, ["cuántos", "árboles", "北京", "2024"]);
    }

    #[test]
    fn byte_ranges_cover_source() {
        let text = "Héllo, wörld";
        let mut spans = Vec::new();
        for_each_token(text, |_, _, r| spans.push(&text[r]));
        assert_eq!(spans, ["Héllo", "wörld"]);
    }

    #[test]
    fn matches_reference_on_synthetic_strings() {
        use rand::prelude::*;
        let alphabet: Vec<char> = "abcXYZ019 ,.-_'éÉßİ北京\t\n!?ǅ".chars().collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1_000 {
            let len = rng.random_range(0..60);
            let s: String = (0..len).map(|_| *alphabet.choose(&mut rng).unwrap()).collect();
            assert_eq!(tokenize(&s), reference(&s), "{s:?}");
        }
    }

    proptest! {
        #[test]
        fn prop_matches_reference(s in "\\PC{0,80}") {
            prop_assert_eq!(tokenize(&s), reference(&s));
        }
    }
}
