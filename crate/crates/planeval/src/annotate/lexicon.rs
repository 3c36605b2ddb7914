//! Plain-text lexicon files: UTF-8, one lowercase lemma per line, `#` comments.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use super::AnnotatorError;

/// Parses lexicon text into a sorted set of lemmas.
pub fn parse_lexicon(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|entry| !entry.is_empty())
        .map(|entry| entry.to_lowercase())
        .collect()
}

/// Loads a lexicon file from disk.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<BTreeSet<String>, AnnotatorError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| AnnotatorError(format!("cannot read lexicon {}: {e}", path.display())))?;
    Ok(parse_lexicon(&text))
}

macro_rules! bundled {
    ($fn_name:ident, $file:literal) => {
        pub fn $fn_name() -> &'static BTreeSet<String> {
            static SET: OnceLock<BTreeSet<String>> = OnceLock::new();
            SET.get_or_init(|| {
                parse_lexicon(include_str!(concat!("../../resources/lexicons/", $file)))
            })
        }
    };
}

bundled!(bundled_verbs, "verbs.txt");
bundled!(bundled_nouns, "nouns.txt");
bundled!(bundled_prepositions, "prepositions.txt");
bundled!(bundled_particles, "particles.txt");
bundled!(bundled_determiners, "determiners.txt");
bundled!(bundled_conjunctions, "conjunctions.txt");

/// True for words dropped during key-action-phrase construction.
pub fn is_determiner(lemma: &str) -> bool {
    bundled_determiners().contains(lemma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_skips_comments_and_blanks() {
        let set = parse_lexicon("# header\nwalk\n\n  grab  # trailing\nWALK\n");
        assert_eq!(set.iter().collect::<Vec<_>>(), vec!["grab", "walk"],);
    }

    #[test]
    fn bundled_lexicons_are_nonempty_and_cover_core_vocabulary() {
        assert!(bundled_verbs().contains("walk"));
        assert!(bundled_verbs().contains("wear"));
        assert!(bundled_nouns().contains("tomato"));
        assert!(bundled_nouns().contains("desk"));
        assert!(bundled_prepositions().contains("to"));
        assert!(is_determiner("the"));
        assert!(!is_determiner("desk"));
    }
}
