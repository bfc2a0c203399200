//! Synthetic tagged corpus with topical structure, used as a stand-in for
//! real text when none is available.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::corpus::{CorpusSnapshot, SnapshotLabel};
use crate::error::{Error, Result};

const FUNCTION_WORDS: &[(&str, &str)] = &[
    ("the", "DT"), ("a", "DT"), ("an", "DT"), ("this", "DT"), ("that", "DT"), ("these", "DT"),
    ("each", "DT"), ("some", "DT"), ("every", "DT"), ("no", "DT"),
    ("of", "IN"), ("in", "IN"), ("on", "IN"), ("at", "IN"), ("by", "IN"), ("with", "IN"),
    ("from", "IN"), ("for", "IN"), ("into", "IN"), ("over", "IN"), ("under", "IN"), ("about", "IN"),
    ("and", "CC"), ("or", "CC"), ("but", "CC"), ("nor", "CC"),
    ("he", "PRP"), ("she", "PRP"), ("it", "PRP"), ("they", "PRP"), ("we", "PRP"), ("you", "PRP"),
    ("is", "VBZ"), ("was", "VBD"), ("are", "VBP"), ("were", "VBD"), ("has", "VBZ"), ("had", "VBD"),
    ("will", "MD"), ("can", "MD"), ("may", "MD"), ("would", "MD"), ("should", "MD"),
    ("not", "RB"), ("very", "RB"), ("then", "RB"), ("also", "RB"), ("there", "EX"),
    ("which", "WDT"), ("who", "WP"), ("when", "WRB"), ("where", "WRB"),
    ("to", "TO"), ("as", "IN"), ("than", "IN"), ("if", "IN"), ("because", "IN"), ("while", "IN"),
    ("his", "PRP$"), ("her", "PRP$"), ("its", "PRP$"), ("their", "PRP$"),
];

const CONSONANTS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pos {
    Noun,
    Verb,
    Adj,
}

impl Pos {
    fn tag(self) -> &'static str {
        match self {
            Pos::Noun => "NN",
            Pos::Verb => "VB",
            Pos::Adj => "JJ",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    /// Approximate total token count.
    pub tokens: usize,
    pub topics: usize,
    /// Content words owned by each topic, split between nouns, verbs and
    /// adjectives in the ratio 3:2:1.
    pub words_per_topic: usize,
    /// Content words shared by every topic.
    pub general_words: usize,
    /// Probability that a content slot draws from the shared pool.
    pub general_rate: f64,
    pub sentences_per_document: usize,
    pub zipf_exponent: f64,
    /// Fraction of content words that are sometimes tagged with another
    /// part of speech.
    pub ambiguous_rate: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            tokens: 1_000_000,
            topics: 40,
            words_per_topic: 60,
            general_words: 300,
            general_rate: 0.3,
            sentences_per_document: 12,
            zipf_exponent: 1.0,
            ambiguous_rate: 0.15,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedCorpus {
    pub snapshot: CorpusSnapshot,
    pub stopwords: Vec<String>,
}

struct Lexeme {
    word: String,
    pos: Pos,
    /// Alternative tag and its probability.
    alternative: Option<(Pos, f64)>,
}

struct Pool {
    nouns: Vec<usize>,
    verbs: Vec<usize>,
    adjs: Vec<usize>,
}

impl Pool {
    fn of(&self, pos: Pos) -> &[usize] {
        match pos {
            Pos::Noun => &self.nouns,
            Pos::Verb => &self.verbs,
            Pos::Adj => &self.adjs,
        }
    }
}

fn pseudo_word(mut index: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    index += base * base;
    let mut syllables = Vec::new();
    while index > 0 {
        let s = index % base;
        syllables.push(format!("{}{}", CONSONANTS[s / VOWELS.len()], VOWELS[s % VOWELS.len()]));
        index /= base;
    }
    syllables.concat()
}

enum Slot {
    Function(usize),
    Content(Pos),
}

/// Generates a single tagged snapshot of roughly `config.tokens` tokens.
/// Documents each follow one topic; sentences follow a handful of simple
/// templates mixing function words with topical and shared content words.
pub fn generate_corpus(config: &GeneratorConfig) -> Result<GeneratedCorpus> {
    if config.topics == 0 || config.words_per_topic < 6 || config.sentences_per_document == 0 {
        return Err(Error::InvalidConfig(
            "need at least one topic, six words per topic and one sentence per document".into(),
        ));
    }
    if !(0.0..=1.0).contains(&config.general_rate) || !(0.0..=1.0).contains(&config.ambiguous_rate) {
        return Err(Error::InvalidConfig("rates must lie in [0, 1]".into()));
    }
    if config.general_rate > 0.0 && config.general_words < 6 {
        return Err(Error::InvalidConfig("the shared pool needs at least six words".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut lexicon = Vec::new();
    let make_pool = |size: usize, lexicon: &mut Vec<Lexeme>, rng: &mut ChaCha8Rng| {
        let mut pool = Pool {
            nouns: Vec::new(),
            verbs: Vec::new(),
            adjs: Vec::new(),
        };
        for i in 0..size {
            let pos = match i % 6 {
                0..=2 => Pos::Noun,
                3 | 4 => Pos::Verb,
                _ => Pos::Adj,
            };
            let alternative = rng.random_bool(config.ambiguous_rate).then(|| {
                let other = match pos {
                    Pos::Noun => Pos::Verb,
                    Pos::Verb => Pos::Noun,
                    Pos::Adj => Pos::Noun,
                };
                (other, rng.random_range(0.05..0.45))
            });
            let id = lexicon.len();
            lexicon.push(Lexeme {
                word: pseudo_word(id),
                pos,
                alternative,
            });
            match pos {
                Pos::Noun => pool.nouns.push(id),
                Pos::Verb => pool.verbs.push(id),
                Pos::Adj => pool.adjs.push(id),
            }
        }
        pool
    };
    let general = make_pool(config.general_words, &mut lexicon, &mut rng);
    let topics: Vec<Pool> = (0..config.topics)
        .map(|_| make_pool(config.words_per_topic, &mut lexicon, &mut rng))
        .collect();

    const DETERMINER: usize = 0;
    const PREPOSITION: usize = 1;
    const CONJUNCTION: usize = 2;
    const PRONOUN: usize = 3;
    const AUXILIARY: usize = 4;
    const ADVERB: usize = 5;
    let groups: Vec<Vec<usize>> = [
        &["DT", "PRP$"][..],
        &["IN", "TO"],
        &["CC"],
        &["PRP", "EX", "WP"],
        &["VBZ", "VBD", "VBP", "MD"],
        &["RB", "WDT", "WRB"],
    ]
    .iter()
    .map(|tags| {
        (0..FUNCTION_WORDS.len())
            .filter(|&i| tags.contains(&FUNCTION_WORDS[i].1))
            .collect()
    })
    .collect();

    use Pos::*;
    use Slot::{Content as C, Function as F};
    let templates: Vec<Vec<Slot>> = vec![
        vec![F(DETERMINER), C(Adj), C(Noun), C(Verb), F(DETERMINER), C(Noun), F(PREPOSITION), F(DETERMINER), C(Noun)],
        vec![F(PRONOUN), F(AUXILIARY), C(Verb), F(DETERMINER), C(Noun), F(CONJUNCTION), F(DETERMINER), C(Adj), C(Noun)],
        vec![F(DETERMINER), C(Noun), F(PREPOSITION), C(Noun), F(AUXILIARY), F(ADVERB), C(Adj)],
        vec![C(Noun), C(Verb), C(Noun), F(PREPOSITION), F(DETERMINER), C(Adj), C(Noun), F(ADVERB)],
        vec![F(DETERMINER), C(Noun), F(AUXILIARY), C(Verb), F(PREPOSITION), F(DETERMINER), C(Noun), F(CONJUNCTION), F(PRONOUN), C(Verb)],
    ];

    let zipf = |n: usize| Zipf::new(n as f64, config.zipf_exponent).map_err(|e| Error::InvalidConfig(e.to_string()));
    let group_zipf = groups.iter().map(|g| zipf(g.len())).collect::<Result<Vec<_>>>()?;
    let topic_zipf = [Noun, Verb, Adj]
        .iter()
        .map(|&p| zipf(topics[0].of(p).len()))
        .collect::<Result<Vec<_>>>()?;
    let general_zipf = if config.general_rate > 0.0 {
        Some(
            [Noun, Verb, Adj]
                .iter()
                .map(|&p| zipf(general.of(p).len()))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let pos_index = |p: Pos| p as usize;

    let mut docs: Vec<Vec<(String, String)>> = Vec::new();
    let mut total = 0;
    while total < config.tokens {
        let topic = &topics[rng.random_range(0..topics.len())];
        let mut doc = Vec::new();
        for _ in 0..config.sentences_per_document {
            let template = &templates[rng.random_range(0..templates.len())];
            for slot in template {
                match slot {
                    Slot::Function(group) => {
                        let rank = group_zipf[*group].sample(&mut rng) as usize - 1;
                        let (w, t) = FUNCTION_WORDS[groups[*group][rank]];
                        doc.push((w.to_owned(), t.to_owned()));
                    }
                    Slot::Content(pos) => {
                        let shared = general_zipf.is_some() && rng.random_bool(config.general_rate);
                        let (pool, dist) = match (&general_zipf, shared) {
                            (Some(g), true) => (&general, &g[pos_index(*pos)]),
                            _ => (topic, &topic_zipf[pos_index(*pos)]),
                        };
                        let rank = dist.sample(&mut rng) as usize - 1;
                        let lexeme = &lexicon[pool.of(*pos)[rank]];
                        let tag = match lexeme.alternative {
                            Some((alt, p)) if rng.random_bool(p) => alt.tag(),
                            _ => lexeme.pos.tag(),
                        };
                        doc.push((lexeme.word.clone(), tag.to_owned()));
                    }
                }
            }
        }
        total += doc.len();
        docs.push(doc);
    }

    let snapshot = CorpusSnapshot::from_tagged_documents(SnapshotLabel::new("base", 0), docs)?;
    let mut stopwords: Vec<String> = FUNCTION_WORDS.iter().map(|(w, _)| (*w).to_owned()).collect();
    stopwords.sort();
    stopwords.dedup();
    Ok(GeneratedCorpus { snapshot, stopwords })
}
