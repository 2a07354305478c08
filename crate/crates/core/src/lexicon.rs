//! Domain dictionaries and the food-composition index.
//!
//! Five flat files drive the pipeline: a unit-of-measurement dictionary, a
//! redundant-phrase list, a brand list, a unit→grams conversion table, and a
//! token→(lemma, POS) lexicon. A sixth file holds the food-composition
//! records. All loaders are deterministic; the loaded structures are
//! immutable afterward and safe to share across threads.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::mapper::PosSets;
use crate::nutrition::{Nutrient, NutrientProfile};
use crate::preprocess;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while loading any of the dictionary files.
#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: malformed row: {reason}")]
    MalformedRow {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("abbreviation {0:?} maps to more than one canonical unit")]
    DuplicateAbbreviation(String),
    #[error("{file}:{line}: grams-per-unit factor must be > 0")]
    NonPositiveFactor { file: String, line: usize },
    #[error("canonical unit {0:?} has no row in the conversion table")]
    MissingConversion(String),
    #[error("record {0:?} has a negative nutrient value")]
    NegativeNutrient(String),
}

fn read_file(path: &Path) -> Result<String, LexiconError> {
    fs::read_to_string(path).map_err(|_| LexiconError::MissingFile(path.to_path_buf()))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

// ---------------------------------------------------------------------------
// Units of measurement
// ---------------------------------------------------------------------------

/// Measurement system a unit belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    Si,
    Household,
    Apothecaries,
}

impl UnitSystem {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "si" => Some(Self::Si),
            "household" => Some(Self::Household),
            "apothecaries" => Some(Self::Apothecaries),
            _ => None,
        }
    }
}

/// Unit dictionary: canonical names plus abbreviation variants, each tagged
/// with the system it belongs to. Lookup is case-insensitive and covers both
/// canonical names and abbreviations.
#[derive(Debug, Clone)]
pub struct UnitLexicon {
    /// surface form (lowercased) → canonical name
    surface_to_canonical: HashMap<String, String>,
    /// canonical name → system
    canonical: BTreeMap<String, UnitSystem>,
    /// longest surface form, in tokens (for n-gram matching)
    max_tokens: usize,
}

impl UnitLexicon {
    /// Number of canonical units.
    pub fn canonical_count(&self) -> usize {
        self.canonical.len()
    }

    /// Resolve a surface form (canonical name or abbreviation) to its
    /// canonical unit name.
    pub fn lookup(&self, surface: &str) -> Option<&str> {
        self.surface_to_canonical
            .get(&surface.to_lowercase())
            .map(String::as_str)
    }

    pub fn is_unit(&self, surface: &str) -> bool {
        self.lookup(surface).is_some()
    }

    pub fn system(&self, canonical: &str) -> Option<UnitSystem> {
        self.canonical.get(canonical).copied()
    }

    /// Longest surface form measured in whitespace-separated tokens.
    pub fn max_surface_tokens(&self) -> usize {
        self.max_tokens
    }

    fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = read_file(path)?;
        let file = file_name(path);
        let mut surface_to_canonical: HashMap<String, String> = HashMap::new();
        let mut canonical: BTreeMap<String, UnitSystem> = BTreeMap::new();
        let mut max_tokens = 1;
        let mut rows = 0usize;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(LexiconError::MalformedRow {
                    file,
                    line: idx + 1,
                    reason: "expected canonical,abbreviation,system".into(),
                });
            }
            let canon = parts[0].to_lowercase();
            let abbrev = parts[1].to_lowercase();
            if canon.is_empty() || abbrev.is_empty() {
                return Err(LexiconError::MalformedRow {
                    file,
                    line: idx + 1,
                    reason: "empty unit name".into(),
                });
            }
            let system = UnitSystem::parse(parts[2]).ok_or_else(|| LexiconError::MalformedRow {
                file: file.clone(),
                line: idx + 1,
                reason: format!("unknown system {:?}", parts[2]),
            })?;
            canonical.entry(canon.clone()).or_insert(system);
            for surface in [canon.clone(), abbrev] {
                match surface_to_canonical.get(&surface) {
                    Some(existing) if existing != &canon => {
                        return Err(LexiconError::DuplicateAbbreviation(surface));
                    }
                    _ => {
                        max_tokens = max_tokens.max(surface.split_whitespace().count());
                        surface_to_canonical.insert(surface, canon.clone());
                    }
                }
            }
            rows += 1;
        }
        if rows == 0 {
            return Err(LexiconError::MalformedRow {
                file,
                line: 0,
                reason: "unit lexicon is empty".into(),
            });
        }
        Ok(Self {
            surface_to_canonical,
            canonical,
            max_tokens,
        })
    }
}

// ---------------------------------------------------------------------------
// Redundant words and phrases
// ---------------------------------------------------------------------------

/// Ordered list of words/phrases to delete from ingredient text,
/// longest-match-first. Phrases are pre-tokenized and lemmatized at load so
/// matching against a lemmatized token stream is a plain window compare.
#[derive(Debug, Clone)]
pub struct RedundantLexicon {
    phrases: Vec<String>,
    /// lemma sequences, sorted by descending token length
    token_seqs: Vec<Vec<String>>,
}

impl RedundantLexicon {
    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    /// Lemma sequences sorted longest first.
    pub fn token_seqs(&self) -> &[Vec<String>] {
        &self.token_seqs
    }

    fn load(path: &Path, pos: &PosLexicon) -> Result<Self, LexiconError> {
        let text = read_file(path)?;
        let file = file_name(path);
        let mut phrases = Vec::new();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let folded = line.to_lowercase();
            if !seen.insert(folded.clone()) {
                return Err(LexiconError::MalformedRow {
                    file,
                    line: idx + 1,
                    reason: format!("duplicate phrase {:?}", line),
                });
            }
            phrases.push(folded);
        }
        if phrases.is_empty() {
            return Err(LexiconError::MalformedRow {
                file,
                line: 0,
                reason: "redundant lexicon is empty".into(),
            });
        }
        let mut token_seqs: Vec<Vec<String>> = phrases
            .iter()
            .map(|p| {
                preprocess::tokenize_words(p)
                    .into_iter()
                    .map(|w| pos.lemma_of(&w))
                    .collect()
            })
            .collect();
        token_seqs.retain(|seq| !seq.is_empty());
        token_seqs.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        token_seqs.dedup();
        Ok(Self {
            phrases,
            token_seqs,
        })
    }
}

// ---------------------------------------------------------------------------
// Brands
// ---------------------------------------------------------------------------

/// Brand names protected from pre-processing. Matching is case-insensitive;
/// protected spans are never lemmatized or split.
#[derive(Debug, Clone)]
pub struct BrandLexicon {
    /// lowercased brand → canonical surface as listed
    brands: BTreeMap<String, String>,
}

impl BrandLexicon {
    pub fn len(&self) -> usize {
        self.brands.len()
    }

    pub fn contains(&self, s: &str) -> bool {
        self.brands.contains_key(&s.to_lowercase())
    }

    /// Find non-overlapping brand occurrences in raw text, longest first.
    /// Matches require non-alphanumeric (or boundary) context on both sides.
    pub fn find_spans(&self, text: &str) -> Vec<(usize, usize)> {
        let lower = text.to_lowercase();
        let mut keys: Vec<&String> = self.brands.keys().collect();
        keys.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        let mut spans: Vec<(usize, usize)> = Vec::new();
        for key in keys {
            let mut from = 0;
            while let Some(pos) = lower[from..].find(key.as_str()) {
                let start = from + pos;
                let end = start + key.len();
                from = start + 1;
                let left_ok = start == 0
                    || !lower[..start]
                        .chars()
                        .next_back()
                        .is_some_and(|c| c.is_alphanumeric());
                let right_ok = end == lower.len()
                    || !lower[end..].chars().next().is_some_and(|c| c.is_alphanumeric());
                if !(left_ok && right_ok) {
                    continue;
                }
                if spans.iter().any(|&(s, e)| start < e && s < end) {
                    continue;
                }
                spans.push((start, end));
            }
        }
        spans.sort_unstable();
        spans
    }

    fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = read_file(path)?;
        let mut brands = BTreeMap::new();
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            brands.insert(line.to_lowercase(), line.to_string());
        }
        Ok(Self { brands })
    }
}

// ---------------------------------------------------------------------------
// Conversion table
// ---------------------------------------------------------------------------

/// Unit → grams-per-unit conversion rows. Food-specific rows (a unit paired
/// with a food-item key) override generic rows; when several food-specific
/// rows match, the longest food key wins.
#[derive(Debug, Clone)]
pub struct ConversionTable {
    /// unit → grams per unit (generic rows)
    generic: BTreeMap<String, f64>,
    /// unit → [(food key, grams per unit)]
    food_specific: BTreeMap<String, Vec<(String, f64)>>,
}

impl ConversionTable {
    pub fn generic_factor(&self, unit: &str) -> Option<f64> {
        self.generic.get(unit).copied()
    }

    /// Best factor for (unit, food): the longest matching food-specific key,
    /// falling back to the generic row. The food key matches when it occurs
    /// as a whole-word phrase inside the food text.
    pub fn factor_for(&self, unit: &str, food: &str) -> Option<(f64, bool)> {
        let food_lower = food.to_lowercase();
        let food_tokens: Vec<&str> = food_lower.split_whitespace().collect();
        if let Some(rows) = self.food_specific.get(unit) {
            let mut best: Option<(&str, f64)> = None;
            for (key, factor) in rows {
                if phrase_in_tokens(&food_tokens, key) {
                    let better = match best {
                        Some((bk, _)) => key.len() > bk.len(),
                        None => true,
                    };
                    if better {
                        best = Some((key, *factor));
                    }
                }
            }
            if let Some((_, factor)) = best {
                return Some((factor, true));
            }
        }
        self.generic.get(unit).map(|f| (*f, false))
    }

    pub fn row_count(&self) -> usize {
        self.generic.len() + self.food_specific.values().map(Vec::len).sum::<usize>()
    }

    fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = read_file(path)?;
        let file = file_name(path);
        let mut generic = BTreeMap::new();
        let mut food_specific: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        let mut rows = 0usize;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(LexiconError::MalformedRow {
                    file,
                    line: idx + 1,
                    reason: "expected unit,food_key,grams_per_unit".into(),
                });
            }
            let unit = parts[0].to_lowercase();
            if unit.is_empty() {
                return Err(LexiconError::MalformedRow {
                    file,
                    line: idx + 1,
                    reason: "empty unit".into(),
                });
            }
            let factor: f64 = parts[2].parse().map_err(|_| LexiconError::MalformedRow {
                file: file.clone(),
                line: idx + 1,
                reason: format!("bad factor {:?}", parts[2]),
            })?;
            if !(factor > 0.0) {
                return Err(LexiconError::NonPositiveFactor {
                    file,
                    line: idx + 1,
                });
            }
            if parts[1].is_empty() {
                generic.insert(unit, factor);
            } else {
                food_specific
                    .entry(unit)
                    .or_default()
                    .push((parts[1].to_lowercase(), factor));
            }
            rows += 1;
        }
        if rows == 0 {
            return Err(LexiconError::MalformedRow {
                file,
                line: 0,
                reason: "conversion table is empty".into(),
            });
        }
        Ok(Self {
            generic,
            food_specific,
        })
    }
}

fn phrase_in_tokens(tokens: &[&str], phrase: &str) -> bool {
    let needle: Vec<&str> = phrase.split_whitespace().collect();
    if needle.is_empty() || needle.len() > tokens.len() {
        return false;
    }
    tokens.windows(needle.len()).any(|w| w == needle.as_slice())
}

// ---------------------------------------------------------------------------
// POS lexicon
// ---------------------------------------------------------------------------

/// Part-of-speech class of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosClass {
    Noun,
    Verb,
    Adjective,
    Number,
    Other,
}

impl PosClass {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "noun" => Some(Self::Noun),
            "verb" => Some(Self::Verb),
            "adjective" => Some(Self::Adjective),
            "number" => Some(Self::Number),
            "other" => Some(Self::Other),
            _ => None,
        }
    }
}

impl fmt::Display for PosClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Noun => "noun",
            Self::Verb => "verb",
            Self::Adjective => "adjective",
            Self::Number => "number",
            Self::Other => "other",
        };
        f.write_str(s)
    }
}

/// Token → (lemma, POS class) mapping. Total via fallback: unknown tokens
/// lemmatize to themselves with class `Other`; pure-digit, decimal, and
/// fraction tokens get class `Number`.
#[derive(Debug, Clone)]
pub struct PosLexicon {
    entries: HashMap<String, (String, PosClass)>,
}

impl PosLexicon {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Lemma and POS class for a token. Never fails.
    pub fn lookup(&self, token: &str) -> (String, PosClass) {
        let folded = token.to_lowercase();
        if is_numeric_token(&folded) {
            return (folded, PosClass::Number);
        }
        match self.entries.get(&folded) {
            Some((lemma, class)) => (lemma.clone(), *class),
            None => (folded, PosClass::Other),
        }
    }

    pub fn lemma_of(&self, token: &str) -> String {
        self.lookup(token).0
    }

    fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = read_file(path)?;
        let file = file_name(path);
        let mut entries = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(LexiconError::MalformedRow {
                    file,
                    line: idx + 1,
                    reason: "expected token<TAB>lemma<TAB>pos_class".into(),
                });
            }
            let class = PosClass::parse(parts[2]).ok_or_else(|| LexiconError::MalformedRow {
                file: file.clone(),
                line: idx + 1,
                reason: format!("unknown pos class {:?}", parts[2]),
            })?;
            entries.insert(
                parts[0].to_lowercase(),
                (parts[1].to_lowercase(), class),
            );
        }
        Ok(Self { entries })
    }
}

/// Integer, decimal, or fraction token.
pub fn is_numeric_token(s: &str) -> bool {
    if s.is_empty() {
        return false;
    }
    if s.chars().all(|c| c.is_ascii_digit()) {
        return true;
    }
    for sep in ['.', '/'] {
        if let Some((a, b)) = s.split_once(sep) {
            if !a.is_empty()
                && !b.is_empty()
                && a.chars().all(|c| c.is_ascii_digit())
                && b.chars().all(|c| c.is_ascii_digit())
            {
                return true;
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

/// All five dictionaries, loaded together.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub units: UnitLexicon,
    pub redundant: RedundantLexicon,
    pub brands: BrandLexicon,
    pub conversions: ConversionTable,
    pub pos: PosLexicon,
}

/// File paths for [`load_lexicons`].
#[derive(Debug, Clone)]
pub struct LexiconPaths {
    pub units: PathBuf,
    pub redundant: PathBuf,
    pub brands: PathBuf,
    pub conversions: PathBuf,
    pub pos: PathBuf,
}

/// Load and cross-validate the five dictionaries.
///
/// Every canonical unit must have at least one conversion row; abbreviation
/// collisions and non-positive factors are rejected at load.
pub fn load_lexicons(paths: &LexiconPaths) -> Result<Lexicons, LexiconError> {
    let pos = PosLexicon::load(&paths.pos)?;
    let units = UnitLexicon::load(&paths.units)?;
    let redundant = RedundantLexicon::load(&paths.redundant, &pos)?;
    let brands = BrandLexicon::load(&paths.brands)?;
    let conversions = ConversionTable::load(&paths.conversions)?;
    for canon in units.canonical.keys() {
        if conversions.factor_for(canon, "").is_none() {
            return Err(LexiconError::MissingConversion(canon.clone()));
        }
    }
    Ok(Lexicons {
        units,
        redundant,
        brands,
        conversions,
        pos,
    })
}

// ---------------------------------------------------------------------------
// Food-composition records
// ---------------------------------------------------------------------------

/// One food-composition entry: identifier, description, pre-processed POS
/// sets, per-100 g nutrient values, and portion weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FoodRecord {
    pub id: String,
    pub description: String,
    pub pos: PosSets,
    pub nutrients: NutrientProfile,
    /// (portion label, grams) in file order; the first entry is the
    /// portion-weight fallback for unit-less counts.
    pub portion_weights: Vec<(String, f64)>,
}

/// Deduplicated, indexed food-composition records.
#[derive(Debug, Clone)]
pub struct FcdbIndex {
    records: BTreeMap<String, FoodRecord>,
    /// noun → record ids containing that noun
    inverted_nouns: BTreeMap<String, BTreeSet<String>>,
    /// sorted unique lemma key → record ids with exactly that lemma set
    lemma_sets: HashMap<String, Vec<String>>,
}

impl FcdbIndex {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&FoodRecord> {
        self.records.get(id)
    }

    /// Records in ascending id order.
    pub fn records(&self) -> impl Iterator<Item = &FoodRecord> {
        self.records.values()
    }

    pub fn ids_with_noun(&self, noun: &str) -> Option<&BTreeSet<String>> {
        self.inverted_nouns.get(noun)
    }

    pub fn inverted_nouns(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.inverted_nouns
    }

    /// Record ids whose lemma set equals the given set exactly.
    pub fn ids_with_lemma_set(&self, lemmas: &BTreeSet<&str>) -> &[String] {
        match self.lemma_sets.get(&lemma_set_key(lemmas)) {
            Some(ids) => ids.as_slice(),
            None => &[],
        }
    }
}

fn lemma_set_key(lemmas: &BTreeSet<&str>) -> String {
    let mut key = String::new();
    for lemma in lemmas {
        key.push_str(lemma);
        key.push('\x1f');
    }
    key
}

/// Load the food-composition TSV: pre-process each description (tokenize,
/// lemmatize, strip brackets and redundant phrases), populate POS sets, drop
/// duplicates by identical pre-processed lemma multiset keeping the first
/// occurrence in file order, and build the inverted noun index.
pub fn load_fcdb(
    path: &Path,
    pos: &PosLexicon,
    redundant: &RedundantLexicon,
) -> Result<FcdbIndex, LexiconError> {
    let text = read_file(path)?;
    let file = file_name(path);
    let mut records: BTreeMap<String, FoodRecord> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut seen_multisets: BTreeSet<Vec<String>> = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 8 {
            return Err(LexiconError::MalformedRow {
                file,
                line: idx + 1,
                reason: format!("expected 8 tab-separated fields, got {}", parts.len()),
            });
        }
        let id = parts[0].trim().to_string();
        if id.is_empty() || records.contains_key(&id) {
            return Err(LexiconError::MalformedRow {
                file,
                line: idx + 1,
                reason: "empty or duplicate id".into(),
            });
        }
        let description = parts[1].trim().to_string();
        let mut values = [0.0f64; 5];
        for (slot, field) in values.iter_mut().zip(&parts[2..7]) {
            *slot = field
                .trim()
                .parse()
                .map_err(|_| LexiconError::MalformedRow {
                    file: file.clone(),
                    line: idx + 1,
                    reason: format!("bad nutrient value {:?}", field),
                })?;
        }
        if values.iter().any(|v| *v < 0.0) {
            return Err(LexiconError::NegativeNutrient(id));
        }
        let nutrients = NutrientProfile::from_values(values);
        let portion_weights = parse_portions(parts[7], &file, idx + 1)?;

        let stream = preprocess::preprocess_description(&description, pos, redundant);
        let pos_sets = PosSets::from_tokens(&stream);
        let mut multiset: Vec<String> = pos_sets.lemmas.clone();
        multiset.sort_unstable();
        if !seen_multisets.insert(multiset) {
            continue; // duplicate by pre-processed lemma multiset
        }
        order.push(id.clone());
        records.insert(
            id.clone(),
            FoodRecord {
                id,
                description,
                pos: pos_sets,
                nutrients,
                portion_weights,
            },
        );
    }

    let mut inverted_nouns: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut lemma_sets: HashMap<String, Vec<String>> = HashMap::new();
    for id in &order {
        let record = &records[id];
        for noun in &record.pos.nouns {
            inverted_nouns
                .entry(noun.clone())
                .or_default()
                .insert(id.clone());
        }
        let set: BTreeSet<&str> = record.pos.lemmas.iter().map(String::as_str).collect();
        lemma_sets.entry(lemma_set_key(&set)).or_default().push(id.clone());
    }
    for ids in lemma_sets.values_mut() {
        ids.sort_unstable();
    }
    Ok(FcdbIndex {
        records,
        inverted_nouns,
        lemma_sets,
    })
}

fn parse_portions(
    field: &str,
    file: &str,
    line: usize,
) -> Result<Vec<(String, f64)>, LexiconError> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(Vec::new());
    }
    let mut portions = Vec::new();
    for part in field.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (label, grams) = part.split_once('=').ok_or_else(|| LexiconError::MalformedRow {
            file: file.to_string(),
            line,
            reason: format!("portion {:?} is not label=grams", part),
        })?;
        let grams: f64 = grams.trim().parse().map_err(|_| LexiconError::MalformedRow {
            file: file.to_string(),
            line,
            reason: format!("bad portion grams in {:?}", part),
        })?;
        if !(grams > 0.0) {
            return Err(LexiconError::MalformedRow {
                file: file.to_string(),
                line,
                reason: format!("portion grams must be > 0 in {:?}", part),
            });
        }
        portions.push((label.trim().to_string(), grams));
    }
    Ok(portions)
}

impl FoodRecord {
    /// Serialize back to the fcdb.tsv row format.
    pub fn to_tsv_row(&self) -> String {
        let n = &self.nutrients;
        let portions = self
            .portion_weights
            .iter()
            .map(|(label, grams)| format!("{label}={grams}"))
            .collect::<Vec<_>>()
            .join(";");
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.id,
            self.description,
            n.get(Nutrient::Fat),
            n.get(Nutrient::Protein),
            n.get(Nutrient::Sugar),
            n.get(Nutrient::SaturatedFat),
            n.get(Nutrient::Sodium),
            portions
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use tempfile::TempDir;

    fn write(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
        let path = dir.path().join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    fn minimal_paths(dir: &TempDir) -> LexiconPaths {
        LexiconPaths {
            units: write(
                dir,
                "units.csv",
                "cup,cups,household\ngram,g,si\ngram,grams,si\n",
            ),
            redundant: write(dir, "redundant.txt", "of\nthe\nfinely chopped\n"),
            brands: write(dir, "brands.txt", "Stevia\nM&M's\n"),
            conversions: write(dir, "conversions.csv", "cup,,240\ngram,,1\nclove,garlic,5\n"),
            pos: write(dir, "pos.tsv", "cups\tcup\tnoun\nchopped\tchop\tverb\n"),
        }
    }

    #[test]
    fn loads_minimal_lexicons() {
        let dir = TempDir::new().unwrap();
        let lex = load_lexicons(&minimal_paths(&dir)).unwrap();
        assert_eq!(lex.units.canonical_count(), 2);
        assert_eq!(lex.units.lookup("CUPS"), Some("cup"));
        assert_eq!(lex.units.lookup("grams"), Some("gram"));
        assert_eq!(lex.redundant.len(), 3);
        assert!(lex.brands.contains("stevia"));
        assert_eq!(lex.conversions.generic_factor("cup"), Some(240.0));
    }

    #[test]
    fn unit_file_with_144_unique_rows_yields_144_canonicals() {
        let dir = TempDir::new().unwrap();
        let mut units = String::new();
        let mut conv = String::new();
        for i in 0..144 {
            units.push_str(&format!("unit{i},u{i},household\n"));
            conv.push_str(&format!("unit{i},,1\n"));
        }
        let mut paths = minimal_paths(&dir);
        paths.units = write(&dir, "units144.csv", &units);
        paths.conversions = write(&dir, "conv144.csv", &conv);
        let lex = load_lexicons(&paths).unwrap();
        assert_eq!(lex.units.canonical_count(), 144);
    }

    #[test]
    fn empty_redundant_file_is_an_error() {
        let dir = TempDir::new().unwrap();
        let mut paths = minimal_paths(&dir);
        paths.redundant = write(&dir, "empty.txt", "");
        let err = load_lexicons(&paths).unwrap_err();
        assert!(matches!(err, LexiconError::MalformedRow { .. }));
    }

    #[test]
    fn pound_row_parses_standard_factor() {
        // 1 avoirdupois pound = 453.59237 g; the fixture rounds to 453.59.
        let dir = TempDir::new().unwrap();
        let path = write(&dir, "conv.csv", "pound,,453.59\n");
        let table = ConversionTable::load(&path).unwrap();
        assert_eq!(table.generic_factor("pound"), Some(453.59));
    }

    #[test]
    fn duplicate_abbreviation_is_rejected() {
        let dir = TempDir::new().unwrap();
        let path = write(&dir, "units.csv", "cup,c,household\ncanister,c,household\n");
        let err = UnitLexicon::load(&path).unwrap_err();
        assert!(matches!(err, LexiconError::DuplicateAbbreviation(a) if a == "c"));
    }

    #[test]
    fn non_positive_factor_is_rejected() {
        let dir = TempDir::new().unwrap();
        let path = write(&dir, "conv.csv", "cup,,0\n");
        let err = ConversionTable::load(&path).unwrap_err();
        assert!(matches!(err, LexiconError::NonPositiveFactor { line: 1, .. }));
    }

    #[test]
    fn missing_conversion_row_fails_cross_check() {
        let dir = TempDir::new().unwrap();
        let mut paths = minimal_paths(&dir);
        paths.conversions = write(&dir, "conv.csv", "cup,,240\n");
        let err = load_lexicons(&paths).unwrap_err();
        assert!(matches!(err, LexiconError::MissingConversion(u) if u == "gram"));
    }

    #[test]
    fn food_specific_rows_prefer_longest_key() {
        let dir = TempDir::new().unwrap();
        let path = write(
            &dir,
            "conv.csv",
            "stalk,,40\nstalk,onion,20\nstalk,green onion,15\n",
        );
        let table = ConversionTable::load(&path).unwrap();
        assert_eq!(table.factor_for("stalk", "green onion"), Some((15.0, true)));
        assert_eq!(table.factor_for("stalk", "onion"), Some((20.0, true)));
        assert_eq!(table.factor_for("stalk", "celery"), Some((40.0, false)));
    }

    fn fcdb_fixture_paths(dir: &TempDir) -> (PathBuf, PosLexicon, RedundantLexicon) {
        let pos_path = write(
            dir,
            "pos.tsv",
            "oranges\torange\tnoun\norange\torange\tnoun\njuice\tjuice\tnoun\nraw\traw\tadjective\nmilk\tmilk\tnoun\nwhole\twhole\tadjective\n",
        );
        let pos = PosLexicon::load(&pos_path).unwrap();
        let red_path = write(dir, "red.txt", "of\n");
        let redundant = RedundantLexicon::load(&red_path, &pos).unwrap();
        let fcdb = write(
            dir,
            "fcdb.tsv",
            concat!(
                "1\tOrange juice, raw\t0.2\t0.7\t8.4\t0.03\t0.001\t1 cup=248\n",
                "2\tMilk, whole\t3.3\t3.2\t5.1\t1.9\t0.04\t1 cup=244\n",
                "3\tOrange juice (raw)\t0.2\t0.7\t8.4\t0.03\t0.001\t\n",
                "4\tMilk whole\t3.3\t3.2\t5.1\t1.9\t0.04\t\n",
                "5\tOrange\t0.1\t0.9\t9.4\t0.02\t0\t1 fruit=131\n",
            ),
        );
        (fcdb, pos, redundant)
    }

    #[test]
    fn fcdb_dedups_by_preprocessed_lemma_multiset() {
        let dir = TempDir::new().unwrap();
        let (path, pos, redundant) = fcdb_fixture_paths(&dir);
        // rows 3 and 4 pre-process to the same multisets as rows 1 and 2
        let index = load_fcdb(&path, &pos, &redundant).unwrap();
        assert_eq!(index.len(), 3);
        assert!(index.get("1").is_some());
        assert!(index.get("3").is_none());
    }

    #[test]
    fn fcdb_populates_noun_sets_and_inverted_index() {
        let dir = TempDir::new().unwrap();
        let (path, pos, redundant) = fcdb_fixture_paths(&dir);
        let index = load_fcdb(&path, &pos, &redundant).unwrap();
        let record = index.get("1").unwrap();
        assert!(record.pos.nouns.contains("orange"));
        assert!(record.pos.nouns.contains("juice"));
        for record in index.records() {
            for noun in &record.pos.nouns {
                assert!(index.ids_with_noun(noun).unwrap().contains(&record.id));
            }
        }
        for (noun, ids) in index.inverted_nouns() {
            for id in ids {
                assert!(index.get(id).unwrap().pos.nouns.contains(noun));
            }
        }
    }

    #[test]
    fn fcdb_negative_nutrient_is_rejected() {
        let dir = TempDir::new().unwrap();
        let (_, pos, redundant) = fcdb_fixture_paths(&dir);
        let path = write(&dir, "bad.tsv", "9\tBad food\t-1\t0\t0\t0\t0\t\n");
        let err = load_fcdb(&path, &pos, &redundant).unwrap_err();
        assert!(matches!(err, LexiconError::NegativeNutrient(id) if id == "9"));
    }

    #[test]
    fn fcdb_dedup_is_idempotent_over_reserialization() {
        let dir = TempDir::new().unwrap();
        let (path, pos, redundant) = fcdb_fixture_paths(&dir);
        let index = load_fcdb(&path, &pos, &redundant).unwrap();
        let reserialized: String = index
            .records()
            .map(|r| r.to_tsv_row() + "\n")
            .collect();
        let path2 = write(&dir, "fcdb2.tsv", &reserialized);
        let index2 = load_fcdb(&path2, &pos, &redundant).unwrap();
        assert_eq!(index2.len(), index.len());
    }

    #[test]
    fn loading_twice_is_deterministic() {
        let dir = TempDir::new().unwrap();
        let paths = minimal_paths(&dir);
        let a = load_lexicons(&paths).unwrap();
        let b = load_lexicons(&paths).unwrap();
        assert_eq!(a.units.canonical_count(), b.units.canonical_count());
        assert_eq!(a.redundant.phrases(), b.redundant.phrases());
        assert_eq!(a.conversions.row_count(), b.conversions.row_count());
        let (dir2, _) = (TempDir::new().unwrap(), ());
        let (path, pos, redundant) = fcdb_fixture_paths(&dir2);
        let x = load_fcdb(&path, &pos, &redundant).unwrap();
        let y = load_fcdb(&path, &pos, &redundant).unwrap();
        let xs: Vec<_> = x.records().map(|r| r.to_tsv_row()).collect();
        let ys: Vec<_> = y.records().map(|r| r.to_tsv_row()).collect();
        assert_eq!(xs, ys);
    }
}
