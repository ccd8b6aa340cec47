//! Seeded synthetic corpus with known labels.
//!
//! Every kept passage is exactly three sentences and names a brand. Three
//! kinds are planted:
//!
//! - `keyword`: issue keywords define the gold labels (class frequencies are
//!   Zipf-like), plus class-correlated context vocabulary;
//! - `context`: only the context vocabulary of one class, no keyword — the
//!   keyword baseline cannot find these;
//! - `brand_only`: a brand and nothing else; gold is the empty set.
//!
//! Documents also contain three-sentence blocks with neither brand nor
//! keyword (dropped by the filter), and one German document (dropped by the
//! language check).

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, weighted::WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Passage, SourceType};
use crate::error::{Error, Result};
use crate::schema::{ClassId, KeywordLexicon, LabelSet, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassageKind {
    Keyword,
    Context,
    BrandOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoConfig {
    pub seed: u64,
    /// Labeled (kept) passages.
    pub n_passages: usize,
    pub keyword_fraction: f64,
    pub context_fraction: f64,
    /// Labeled blocks per document.
    pub blocks_per_document: usize,
    /// Irrelevant blocks inserted per document.
    pub irrelevant_per_document: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            seed: 7,
            n_passages: 200,
            keyword_fraction: 0.7,
            context_fraction: 0.2,
            blocks_per_document: 5,
            irrelevant_per_document: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoManifest {
    pub seed: u64,
    pub documents: usize,
    pub passages: usize,
    pub irrelevant_blocks: usize,
    pub non_english_documents: Vec<String>,
    /// Passage id → how it was generated.
    pub kinds: BTreeMap<String, PassageKind>,
    /// Number of passages carrying each class.
    pub class_support: BTreeMap<ClassId, usize>,
}

impl DemoManifest {
    pub fn ids_of(&self, kind: PassageKind) -> impl Iterator<Item = &str> {
        self.kinds
            .iter()
            .filter(move |(_, k)| **k == kind)
            .map(|(id, _)| id.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct DemoCorpus {
    pub documents: Vec<Document>,
    /// Labeled passages, identical (ids, spans, text) to what ingestion yields.
    pub passages: Vec<Passage>,
    pub manifest: DemoManifest,
}

/// Vocabulary that signals a class without being one of its keywords.
const CONTEXT: [&[&str]; NUM_CLASSES] = [
    &["payslips", "salary", "earnings", "paycheck", "pay slips"],
    &["schoolchildren", "minors", "age verification", "school attendance"],
    &["passports confiscated", "recruitment fees", "migrant recruits", "coercion"],
    &["organizers", "strike", "shop stewards", "labour activists"],
    &["pregnancy testing", "women supervisors", "unequal treatment", "caste"],
    &["fire exits", "injuries", "protective equipment", "cracked walls"],
    &["temporary agency", "dismissals", "probation periods", "layoffs"],
    &["risk assessment", "remediation", "complaints channel", "accountability"],
    &["supplier names", "public disclosure", "tier two", "mapping"],
    &["last-minute changes", "price pressure", "rush orders", "buyer pressure"],
    &["revenues", "shareholder returns", "market share", "turnover"],
    &["emission reduction", "scope three", "net zero", "carbon footprint"],
    &["rivers", "effluent", "dye houses", "aquifers"],
    &["solvents", "restricted substances", "formaldehyde", "residues"],
    &["solar panels", "boilers", "electricity grid", "heat recovery"],
    &["take-back schemes", "unsold stock", "resale", "repair services"],
    &["cotton sourcing", "fibre blends", "viscose", "hemp"],
    &["forests", "habitats", "soil health", "wetlands"],
    &["leather", "wool sourcing", "livestock", "angora"],
];

const OPENINGS: &[&str] = &[
    "In its latest report, {brand} described conditions at its supplier factories.",
    "The campaign group examined how {brand} works with producers in several countries.",
    "{brand} was among the retailers named in the review of the apparel sector.",
    "Researchers interviewed staff at factories that produce garments for {brand}.",
    "According to the company website, {brand} has published new commitments this year.",
    "A recent survey compared the statements of {brand} with those of its competitors.",
];

const KEYWORD_LINES: &[&str] = &[
    "The report found that {kw} remained a central concern for the sector.",
    "Several interviewees raised {kw} as an issue that had not been addressed.",
    "The brand stated that {kw} would be a priority for the coming season.",
    "Critics argued that the progress on {kw} was far too slow.",
];

const CONTEXT_LINES: &[&str] = &[
    "Auditors mentioned {a} and {b} during their visits.",
    "The discussion focused on {a} as well as {b}.",
    "Workers described {a} and spoke about {b} at length.",
    "The section on {a} also covered {b} in some detail.",
];

const FILLERS: &[&str] = &[
    "The findings were shared with the company before publication.",
    "Further details are provided in the annex of the document.",
    "The authors plan to repeat the exercise next year.",
    "Most of the information was collected through interviews and site visits.",
    "The company did not respond to every question that was sent.",
    "Some of the claims could not be verified by the team.",
];

const IRRELEVANT: &[&str] = &[
    "The weather in the region was mild for most of the year.",
    "The study team met several times to agree on the method.",
    "A glossary of terms appears at the end of this chapter.",
    "Figures were rounded to the nearest whole number.",
    "The next section introduces the structure of the report.",
    "Readers may contact the authors with any questions.",
];

const GERMAN: &str = "Die Arbeiterinnen in der Fabrik berichten von langen Arbeitszeiten und \
niedrigen Löhnen. Zara und Primark haben auf die Fragen der Organisation nicht geantwortet. \
Die Gewerkschaft fordert seit Jahren bessere Bedingungen für alle Beschäftigten.";

fn fill(template: &str, pairs: &[(&str, &str)]) -> String {
    pairs
        .iter()
        .fold(template.to_owned(), |s, (k, v)| s.replace(k, v))
}

/// Class frequencies ∝ 1/(rank + 1)^0.8 over a seeded ranking.
fn class_weights(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut ranks: Vec<usize> = (0..NUM_CLASSES).collect();
    rand::seq::SliceRandom::shuffle(ranks.as_mut_slice(), rng);
    let mut w = vec![0.0; NUM_CLASSES];
    for (rank, &class) in ranks.iter().enumerate() {
        w[class] = 1.0 / ((rank + 1) as f64).powf(0.8);
    }
    w
}

struct Block {
    text: String,
    labeled: Option<(PassageKind, LabelSet)>,
}

fn keyword_block(rng: &mut ChaCha8Rng, lex: &KeywordLexicon, classes: &LabelSet) -> String {
    let brand = lex.brands.choose(rng).expect("brands");
    let opening = fill(OPENINGS.choose(rng).unwrap(), &[("{brand}", brand)]);
    let kws: Vec<&str> = classes
        .iter()
        .map(|c| lex.issue_keywords[c].choose(rng).unwrap().as_str())
        .collect();
    let kw = match kws.as_slice() {
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
        [] => unreachable!("at least one class"),
    };
    let middle = fill(KEYWORD_LINES.choose(rng).unwrap(), &[("{kw}", &kw)]);
    // Context for one of the planted classes most of the time.
    let last = if rng.random::<f64>() < 0.8 {
        let class = *classes.iter().collect::<Vec<_>>().choose(rng).unwrap();
        context_line(rng, *class)
    } else {
        FILLERS.choose(rng).unwrap().to_string()
    };
    format!("{opening} {middle} {last}")
}

fn context_line(rng: &mut ChaCha8Rng, class: ClassId) -> String {
    let pair: Vec<&&str> = CONTEXT[class].choose_multiple(rng, 2).collect();
    fill(CONTEXT_LINES.choose(rng).unwrap(), &[("{a}", pair[0]), ("{b}", pair[1])])
}

fn context_block(rng: &mut ChaCha8Rng, lex: &KeywordLexicon, class: ClassId) -> String {
    let brand = lex.brands.choose(rng).expect("brands");
    let opening = fill(OPENINGS.choose(rng).unwrap(), &[("{brand}", brand)]);
    format!("{opening} {} {}", context_line(rng, class), context_line(rng, class))
}

fn brand_only_block(rng: &mut ChaCha8Rng, lex: &KeywordLexicon) -> String {
    let brand = lex.brands.choose(rng).expect("brands");
    let opening = fill(OPENINGS.choose(rng).unwrap(), &[("{brand}", brand)]);
    let f: Vec<&&str> = FILLERS.choose_multiple(rng, 2).collect();
    format!("{opening} {} {}", f[0], f[1])
}

fn irrelevant_block(rng: &mut ChaCha8Rng) -> String {
    let s: Vec<&&str> = IRRELEVANT.choose_multiple(rng, 3).collect();
    format!("{} {} {}", s[0], s[1], s[2])
}

/// Generates the corpus with the bundled lexicon.
pub fn generate(config: &DemoConfig) -> DemoCorpus {
    let lex = KeywordLexicon::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let weights = class_weights(&mut rng);
    let pick_class = WeightedIndex::new(&weights).expect("positive weights");

    let n = config.n_passages;
    let n_keyword = (n as f64 * config.keyword_fraction).round() as usize;
    let n_context = ((n as f64 * config.context_fraction).round() as usize).min(n - n_keyword);
    let mut kinds: Vec<PassageKind> = std::iter::repeat_n(PassageKind::Keyword, n_keyword)
        .chain(std::iter::repeat_n(PassageKind::Context, n_context))
        .chain(std::iter::repeat_n(PassageKind::BrandOnly, n - n_keyword - n_context))
        .collect();
    rand::seq::SliceRandom::shuffle(kinds.as_mut_slice(), &mut rng);

    let mut labeled: Vec<Block> = kinds
        .into_iter()
        .map(|kind| {
            let (text, gold) = match kind {
                PassageKind::Keyword => {
                    // 1 class (65%), 2 (28%) or 3 (7%).
                    let u: f64 = rng.random();
                    let k = if u < 0.65 { 1 } else if u < 0.93 { 2 } else { 3 };
                    let mut gold = LabelSet::new();
                    while gold.len() < k {
                        gold.insert(pick_class.sample(&mut rng));
                    }
                    (keyword_block(&mut rng, &lex, &gold), gold)
                }
                PassageKind::Context => {
                    let class = pick_class.sample(&mut rng);
                    (context_block(&mut rng, &lex, class), LabelSet::from([class]))
                }
                PassageKind::BrandOnly => (brand_only_block(&mut rng, &lex), LabelSet::new()),
            };
            Block {
                text,
                labeled: Some((kind, gold)),
            }
        })
        .collect();

    let per_doc = config.blocks_per_document.max(1);
    let mut documents = Vec::new();
    let mut passages = Vec::new();
    let mut manifest = DemoManifest {
        seed: config.seed,
        documents: 0,
        passages: n,
        irrelevant_blocks: 0,
        non_english_documents: Vec::new(),
        kinds: BTreeMap::new(),
        class_support: BTreeMap::new(),
    };
    let mut doc_index = 0;
    while !labeled.is_empty() {
        let take = per_doc.min(labeled.len());
        let mut blocks: Vec<Block> = labeled.drain(..take).collect();
        for _ in 0..config.irrelevant_per_document {
            let at = rng.random_range(0..=blocks.len());
            blocks.insert(
                at,
                Block {
                    text: irrelevant_block(&mut rng),
                    labeled: None,
                },
            );
            manifest.irrelevant_blocks += 1;
        }
        doc_index += 1;
        let id = format!("demo-{doc_index:03}");
        let mut text = String::new();
        for (k, block) in blocks.iter().enumerate() {
            if k > 0 {
                text.push(' ');
            }
            let start = text.len();
            text.push_str(&block.text);
            if let Some((kind, gold)) = &block.labeled {
                let pid = Passage::passage_id(&id, k);
                manifest.kinds.insert(pid.clone(), *kind);
                for &c in gold {
                    *manifest.class_support.entry(c).or_default() += 1;
                }
                passages.push(Passage {
                    id: pid,
                    document_id: id.clone(),
                    sentence_indices: [3 * k, 3 * k + 2],
                    text: text[start..].to_owned(),
                    matched_brands: Default::default(),
                    matched_issue_keywords: Default::default(),
                    gold_labels: Some(gold.clone()),
                });
            }
        }
        documents.push(demo_document(doc_index, id, text));
    }
    let german_id = format!("demo-{:03}", doc_index + 1);
    manifest.non_english_documents.push(german_id.clone());
    documents.push(demo_document(doc_index + 1, german_id, GERMAN.to_owned()));
    manifest.documents = documents.len();

    // Record the matches exactly as the ingestion filter would.
    let matcher = crate::text::KeywordMatcher::new(&lex);
    for p in &mut passages {
        let m = matcher.find(&p.text);
        p.matched_brands = m.brands;
        p.matched_issue_keywords = m.issues;
    }
    DemoCorpus {
        documents,
        passages,
        manifest,
    }
}

fn demo_document(index: usize, id: String, text: String) -> Document {
    let (source_type, doi, website) = if index % 2 == 0 {
        (SourceType::Scientific, Some(format!("10.5555/demo.{index:03}")), None)
    } else {
        (SourceType::Ngo, None, Some(format!("https://example.org/reports/{index:03}")))
    };
    Document {
        title: format!("Synthetic sector report {index}"),
        id,
        source_type,
        doi,
        website,
        filename: None,
        text,
    }
}

impl DemoCorpus {
    /// Writes `documents.jsonl`, `passages.jsonl` and `manifest.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        crate::io::write_jsonl(dir.join("documents.jsonl"), &self.documents)?;
        crate::io::write_jsonl(dir.join("passages.jsonl"), &self.passages)?;
        let path = dir.join("manifest.json");
        let body = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
    }
}
