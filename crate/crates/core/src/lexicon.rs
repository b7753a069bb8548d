//! Music keyword vocabulary shared by suggestion pools, fallback modifiers and mocks.

use crate::model::KeywordCategory;

pub const GENRES: &[&str] = &[
    "jazz", "lo-fi", "ambient", "electronic", "orchestral", "rock", "folk", "pop", "hip hop",
    "classical", "funk", "cinematic", "synth pop", "indie pop", "blues", "reggae", "bossa nova",
    "techno", "acoustic", "chillhop", "soul", "world",
];

pub const INSTRUMENTS: &[&str] = &[
    "piano", "guitar", "bass", "drums", "strings", "brass", "synthesizer", "ukulele", "violin",
    "cello", "flute", "oboe", "xylophone", "trumpet", "saxophone", "harp", "marimba",
    "percussion", "organ", "bells",
];

pub const MOODS: &[&str] = &[
    "uplifting", "calm", "cheerful", "melancholic", "mysterious", "hopeful", "playful", "dreamy",
    "tense", "romantic", "nostalgic", "joyful", "serene", "dramatic", "warm", "optimistic",
];

pub const ENERGY: &[&str] = &[
    "high energy", "low energy", "medium energy", "fast tempo", "slow tempo", "building",
    "driving", "steady", "relaxed", "energetic", "mellow", "upbeat",
];

pub fn category(c: KeywordCategory) -> &'static [&'static str] {
    match c {
        KeywordCategory::Genres => GENRES,
        KeywordCategory::Instruments => INSTRUMENTS,
        KeywordCategory::Moods => MOODS,
        KeywordCategory::Energy => ENERGY,
    }
}

const GENRE_MODIFIERS: &[&str] = &[
    "meditative ambient", "jazz swing", "lo-fi chill", "cinematic orchestral", "electronic pop",
    "acoustic folk", "bossa nova groove", "synth pop",
];
const INSTRUMENT_MODIFIERS: &[&str] = &[
    "tropical ukulele", "soft strings", "warm brass", "jazz piano", "muted trumpet",
    "gentle harp", "deep bass", "light percussion",
];
const MOOD_MODIFIERS: &[&str] = &[
    "uplifting morning", "dreamy nostalgic", "playful whimsical", "hopeful warm",
    "mysterious night", "calm serene", "joyful bright",
];
const ENERGY_MODIFIERS: &[&str] = &[
    "driving rhythm", "slow tempo", "building energy", "steady groove", "high energy",
    "relaxed pace",
];

/// Fallback suffix modifiers, interleaved genre, instrument, mood, energy.
pub fn fallback_modifiers() -> Vec<&'static str> {
    let lists = [GENRE_MODIFIERS, INSTRUMENT_MODIFIERS, MOOD_MODIFIERS, ENERGY_MODIFIERS];
    let longest = lists.iter().map(|l| l.len()).max().unwrap_or(0);
    let mut out = Vec::new();
    for i in 0..longest {
        for l in lists {
            if let Some(m) = l.get(i) {
                out.push(*m);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fallback_pool_is_distinct_and_short() {
        let pool = fallback_modifiers();
        let mut seen = std::collections::HashSet::new();
        for m in &pool {
            assert!(seen.insert(m.to_lowercase()));
            assert!((1..=3).contains(&m.split_whitespace().count()));
        }
        assert_eq!(&pool[..4], &["meditative ambient", "tropical ukulele", "uplifting morning", "driving rhythm"]);
    }

    #[test]
    fn every_category_has_ten_plus() {
        for c in KeywordCategory::ALL {
            assert!(category(c).len() >= 10);
        }
    }
}
