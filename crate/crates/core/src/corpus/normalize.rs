use crate::span::token::lower_char;

/// Strictly increasing map from normalized-text positions to the
/// original-text positions they were copied from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OffsetMap(Vec<usize>);

impl OffsetMap {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, normalized: usize) -> Option<usize> {
        self.0.get(normalized).copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Maps a half-open normalized range to the smallest original range
    /// containing every mapped character.
    pub fn map_range(&self, start: usize, end: usize) -> Option<(usize, usize)> {
        if start >= end {
            return None;
        }
        Some((self.get(start)?, self.get(end - 1)? + 1))
    }
}

/// Lowercases `text` and strips punctuation that is not inside a word.
///
/// A maximal run of characters that are neither alphanumeric nor whitespace
/// survives only when both of its neighbours are alphanumeric, so `a$$hole`
/// is kept while the `!` of `FOOL!` goes. Lowercasing is applied only where
/// it maps one scalar to one scalar.
pub fn normalize(text: &str) -> (String, OffsetMap) {
    let chars: Vec<char> = text.chars().collect();
    let is_punct = |c: char| !c.is_alphanumeric() && !c.is_whitespace();
    let mut out = String::with_capacity(text.len());
    let mut map = Vec::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        if is_punct(chars[i]) {
            let start = i;
            while i < chars.len() && is_punct(chars[i]) {
                i += 1;
            }
            let inner = start > 0
                && chars[start - 1].is_alphanumeric()
                && i < chars.len()
                && chars[i].is_alphanumeric();
            if inner {
                for (k, &c) in chars[start..i].iter().enumerate() {
                    out.push(c);
                    map.push(start + k);
                }
            }
        } else {
            out.push(lower_char(chars[i]));
            map.push(i);
            i += 1;
        }
    }
    (out, OffsetMap(map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let (n, map) = normalize("You FOOL!");
        assert_eq!(n, "you fool");
        assert_eq!(map.as_slice(), &[0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(map.get(7), Some(7));

        assert_eq!(normalize("a$$hole").0, "a$$hole");
        let (n, map) = normalize("");
        assert!(n.is_empty() && map.is_empty());
    }

    #[test]
    fn leading_and_spaced_punctuation_goes() {
        let (n, map) = normalize("\"Hey\" -- you, idiot.");
        assert_eq!(n, "hey  you idiot");
        assert_eq!(map.map_range(9, 14), Some((14, 19)));
        assert_eq!(normalize("pu55y!!x").0, "pu55y!!x");
    }

    #[test]
    fn multi_scalar_lowercase_is_kept() {
        // 'İ' lowercases to two scalars.
        let (n, map) = normalize("İstanbul");
        assert_eq!(n, "İstanbul");
        assert_eq!(map.len(), 8);
    }

    fn text_strategy() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                Just("a"), Just("B"), Just("7"), Just(" "), Just("$"), Just("'"),
                Just("!"), Just("."), Just("É"), Just("☃"), Just("İ"), Just("\n")
            ],
            0..40,
        )
        .prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn map_points_back_to_source(text in text_strategy()) {
            let original: Vec<char> = text.chars().collect();
            let (n, map) = normalize(&text);
            prop_assert_eq!(n.chars().count(), map.len());
            for w in map.as_slice().windows(2) {
                prop_assert!(w[0] < w[1]);
            }
            for (p, c) in n.chars().enumerate() {
                let o = original[map.get(p).unwrap()];
                prop_assert!(o == c || lower_char(o) == c);
            }
        }

        #[test]
        fn idempotent(text in text_strategy()) {
            let (once, _) = normalize(&text);
            let (twice, _) = normalize(&once);
            prop_assert_eq!(once, twice);
        }
    }
}
