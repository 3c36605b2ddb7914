//! Generators and exhaustive oracles shared by the acceptance suite.

use std::collections::HashMap;

use planeval::embedding::fixture::{FixtureSentenceEmbedder, FixtureWordEmbedder};
use planeval::plan::{ActionFrame, Plan};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VERB_POOL: [&str; 8] = [
    "walk", "open", "grab", "place", "clean", "slice", "wash", "push",
];
pub const NOUN_POOL: [&str; 10] = [
    "desk", "drawer", "pen", "sock", "shoe", "tomato", "knife", "lamp", "card", "box",
];

/// A 1x1 gray PNG; the smallest stable image payload for replay fixtures.
pub const PNG_1X1: [u8; 69] = [
    137, 80, 78, 71, 13, 10, 26, 10, 0, 0, 0, 13, 73, 72, 68, 82, 0, 0, 0, 1, 0, 0, 0, 1, 8, 2, 0,
    0, 0, 144, 119, 83, 222, 0, 0, 0, 12, 73, 68, 65, 84, 120, 156, 99, 104, 104, 104, 0, 0, 3, 4,
    1, 129, 75, 211, 210, 16, 0, 0, 0, 0, 73, 69, 78, 68, 174, 66, 96, 130,
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn capitalized(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// "Wash the sock." — one pool verb acting on one pool noun, so the bundled
/// annotator always produces a frame.
pub fn pool_step(verb: &str, noun: &str) -> String {
    format!("{} the {}.", capitalized(verb), noun)
}

/// Random plan over the pools. With `distinct_nouns` each noun appears in at
/// most one step, so a single substitution touches a single step.
pub fn random_pool_plan(rng: &mut ChaCha8Rng, steps: usize, distinct_nouns: bool) -> Plan {
    let mut nouns: Vec<&str> = NOUN_POOL.to_vec();
    nouns.shuffle(rng);
    let steps = (0..steps)
        .map(|i| {
            let verb = VERB_POOL.choose(rng).unwrap();
            let noun = if distinct_nouns {
                nouns[i]
            } else {
                NOUN_POOL.choose(rng).unwrap()
            };
            pool_step(verb, noun)
        })
        .collect();
    Plan::new("arrange the pool objects", steps)
}

/// Complete similarity table over the pool vocabulary: every unordered pair
/// gets a value in [0, 0.95), stored under the lexicographically first order.
pub fn random_word_table(rng: &mut ChaCha8Rng) -> HashMap<(String, String), f64> {
    let mut vocab: Vec<&str> = VERB_POOL.iter().chain(NOUN_POOL.iter()).copied().collect();
    vocab.sort_unstable();
    let mut table = HashMap::new();
    for (i, a) in vocab.iter().enumerate() {
        for b in &vocab[i + 1..] {
            table.insert((a.to_string(), b.to_string()), rng.gen_range(0.0..0.95));
        }
    }
    table
}

/// Symmetric lookup into a pair table; identical words score 1.0.
pub fn table_sim(table: &HashMap<(String, String), f64>, a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    let key = if a < b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    };
    *table
        .get(&key)
        .unwrap_or_else(|| panic!("pair table is missing ({a}, {b})"))
}

pub fn table_word_embedder(table: &HashMap<(String, String), f64>) -> FixtureWordEmbedder {
    FixtureWordEmbedder::from_pairs(table.iter().map(|(pair, value)| (pair.clone(), *value)))
        .unwrap()
}

/// Embeds every pool sentence with a random 8-dimensional vector.
pub fn pool_sentence_embedder(rng: &mut ChaCha8Rng) -> FixtureSentenceEmbedder {
    let mut entries = HashMap::new();
    for verb in VERB_POOL {
        for noun in NOUN_POOL {
            let vector: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            entries.insert(pool_step(verb, noun), vector);
        }
    }
    FixtureSentenceEmbedder::from_entries(8, entries).unwrap()
}

/// All n! orderings of 0..n, via Heap's algorithm.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, items: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(items.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, items, out);
            if k % 2 == 0 {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    let mut items: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut items, &mut out);
    out
}

/// Whether a frame pair clears the gate, recomputed from scratch: verb
/// similarity and the greedy mean over noun pairings must both exceed tau
/// (an empty noun pair on both sides passes on the verb alone).
pub fn oracle_frame_match(
    gt: &ActionFrame,
    pred: &ActionFrame,
    sim: &dyn Fn(&str, &str) -> f64,
    tau: f64,
) -> bool {
    let verb = sim(&gt.verb, &pred.verb);
    if gt.nouns.is_empty() && pred.nouns.is_empty() {
        return verb > tau;
    }
    let mut used = vec![false; pred.nouns.len()];
    let mut total = 0.0;
    for gt_noun in &gt.nouns {
        let mut best: Option<(usize, f64)> = None;
        for (j, pred_noun) in pred.nouns.iter().enumerate() {
            if used[j] {
                continue;
            }
            let value = sim(gt_noun, pred_noun);
            if best.map_or(true, |(_, current)| value > current) {
                best = Some((j, value));
            }
        }
        if let Some((j, value)) = best {
            used[j] = true;
            total += value;
        }
    }
    let mean = total / gt.nouns.len().max(pred.nouns.len()) as f64;
    verb > tau && mean > tau
}

/// Size of the best injective gt->pred assignment over gate-passing pairs,
/// by exhaustive search (at most 6 prediction frames).
pub fn max_gate_matching(matched: &[Vec<bool>]) -> usize {
    fn go(matched: &[Vec<bool>], row: usize, used: u32) -> usize {
        if row == matched.len() {
            return 0;
        }
        let mut best = go(matched, row + 1, used);
        for (j, ok) in matched[row].iter().enumerate() {
            if *ok && used & (1 << j) == 0 {
                best = best.max(1 + go(matched, row + 1, used | (1 << j)));
            }
        }
        best
    }
    go(matched, 0, 0)
}
