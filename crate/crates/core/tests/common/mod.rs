#![allow(dead_code)]

use igt_augment::igt::IgtExample;
use igt_augment::lexicon::{ConjugationTable, InsertionList, LexEntry};
use igt_augment::rng::{below, substream};
use igt_augment::strategies::Lexicons;
use rand_chacha::ChaCha8Rng;

pub fn uspanteko_example() -> IgtExample {
    IgtExample::from_lines(
        "t5",
        "usp",
        "wi' neen tb'ank juntir",
        Some("wi' neen t-b'an-k juntiir"),
        Some("EXS INT INC-hacer-SC todo"),
        "Tienen que hacer todo",
    )
}

pub fn arapaho_example() -> IgtExample {
    IgtExample::from_lines(
        "t6",
        "arp",
        "Nihtooneete3eino' hini' xouu",
        None,
        Some("PAST-almost-run.into-1S that(aforementioned).those skunk"),
        "I almost ran into that skunk .",
    )
}

pub fn lines(ex: &IgtExample) -> Vec<String> {
    let mut out = vec![ex.surface_line()];
    out.extend(ex.segmentation_line());
    out.extend(ex.gloss_line());
    out.push(ex.translation.clone());
    out
}

/// A 20-entry list whose entries have one-token glosses and translations.
pub fn word_list(name: &str, label: &str) -> InsertionList {
    let entries = (0..20)
        .map(|i| {
            LexEntry::new(&format!("{name}{i:02}"), &format!("{label}{i}"), &format!("{}{i}", name.to_uppercase()))
        })
        .collect();
    InsertionList::new(name, entries).unwrap()
}

pub fn lexicons() -> Lexicons {
    Lexicons {
        conj: Some(word_list("kon", "conj")),
        noise: Some(word_list("noi", "adv")),
        intj: Some(word_list("ij", "intj")),
        conjugations: Some(ConjugationTable::starter()),
    }
}

/// A generated example plus what the generator knows about it.
#[derive(Debug, Clone)]
pub struct Generated {
    pub example: IgtExample,
    /// Aspect swap should succeed.
    pub tam_applies: bool,
}

const STEMS: [(&str, &str); 4] = [("b'an", "hacer"), ("chaq", "comer"), ("loq'", "comprar"), ("ch'aj", "lavar")];
const PRESENT: [&str; 4] = ["tienen", "hacen", "come", "hablan"];
const PRETERITE: [&str; 4] = ["tuvieron", "hicieron", "comió", "hablaron"];
const FILLER: [&str; 6] = ["wi'", "neen", "juntir", "ja'", "ri", "aq'"];
const FILLER_GLOSS: [&str; 6] = ["EXS", "INT", "todo", "E3-casa", "DEM", "PREP-lado"];

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[below(rng, items.len() as u64) as usize]
}

fn chance(rng: &mut ChaCha8Rng, percent: u64) -> bool {
    below(rng, 100) < percent
}

/// Uspanteko-like examples of 1 to 8 words. About 10% lack a segmentation
/// line, 5% have a short gloss line and 15% have a translation whose token
/// count differs from the word count.
pub fn random_corpus(n: usize, seed: u64, language: &str) -> Vec<Generated> {
    let mut rng = substream(seed, &["fixture-corpus"]);
    (0..n)
        .map(|i| {
            let words = 1 + below(&mut rng, 8) as usize;
            let mut surface = Vec::new();
            let mut seg = Vec::new();
            let mut gloss = Vec::new();
            let mut first_aspect = None;
            for w in 0..words {
                if chance(&mut rng, 30) {
                    let (stem, meaning) = STEMS[below(&mut rng, STEMS.len() as u64) as usize];
                    let (tag, prefix) = if chance(&mut rng, 50) { ("INC", "t") } else { ("COM", "x") };
                    first_aspect.get_or_insert(tag);
                    surface.push(format!("{prefix}{stem}k"));
                    seg.push(format!("{prefix}-{stem}-k"));
                    gloss.push(format!("{tag}-{meaning}-SC"));
                } else {
                    let f = below(&mut rng, FILLER.len() as u64) as usize;
                    let morphemes = FILLER_GLOSS[f].matches('-').count();
                    let word = format!("{}{w}", FILLER[f]);
                    seg.push(if morphemes > 0 { format!("a-{word}") } else { word.clone() });
                    surface.push(format!("a{word}"));
                    gloss.push(FILLER_GLOSS[f].to_string());
                }
            }
            let has_seg = !chance(&mut rng, 10);
            let short_gloss = words >= 2 && chance(&mut rng, 5);
            if short_gloss {
                gloss.pop();
            }
            let tokens = if chance(&mut rng, 15) { words + 1 + below(&mut rng, 2) as usize } else { words };
            let mut translation: Vec<String> = (0..tokens).map(|t| format!("zo{t}")).collect();
            let mut tam_applies = false;
            if let Some(tag) = first_aspect {
                if chance(&mut rng, 70) {
                    let matching = chance(&mut rng, 80);
                    let present = (tag == "INC") == matching;
                    let form = pick(&mut rng, if present { &PRESENT } else { &PRETERITE });
                    let at = below(&mut rng, tokens as u64) as usize;
                    translation[at] = form.to_string();
                    tam_applies = matching && has_seg && !short_gloss;
                }
            }
            let example = IgtExample::from_lines(
                &format!("r{i}"),
                language,
                &surface.join(" "),
                has_seg.then(|| seg.join(" ")).as_deref(),
                Some(&gloss.join(" ")),
                &translation.join(" "),
            );
            Generated { example, tam_applies }
        })
        .collect()
}

/// `n!`, saturating.
pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).fold(1u64, |acc, k| acc.saturating_mul(k))
}
