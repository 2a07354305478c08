//! Rule-based extraction of quantity, unit, and food item from a
//! pre-processed ingredient line: dictionary unit matching with container
//! and food-pair special cases, quantity pattern scanning (summation and
//! multiplication), conjunction resolution ("and"/"with"/"plus"/"or"/"to"),
//! duplicate-quantity resolution, and food-item assembly.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::lexicon::{Lexicons, UnitLexicon};
use crate::preprocess::{self, Token, TokenStream};

/// Packaging words promoted to units only when no dictionary unit is found,
/// and omitted from the food text otherwise.
const CONTAINER_WORDS: &[&str] = &[
    "jar",
    "can",
    "packet",
    "package",
    "box",
    "bottle",
    "container",
];

/// Units valid only next to particular foods.
const FOOD_PAIR_UNITS: &[(&str, &[&str])] = &[
    ("clove", &["garlic"]),
    ("stick", &["butter", "margarine", "cinnamon", "carrot", "celery"]),
    ("sprig", &["rosemary", "thyme", "mint", "parsley"]),
    ("link", &["sausage"]),
    (
        "stalk",
        &["celery", "green onion", "spring onion", "broccoli", "kale", "cauliflower"],
    ),
    ("sheet", &["gelatin"]),
    ("cube", &["stock", "butter", "margarine"]),
    ("head", &["cabbage", "lettuce", "cauliflower"]),
];

/// Phrases that concatenate two ingredients; rewritten to "plus".
const PLUS_PHRASES: &[&[&str]] = &[
    &["mixed", "with"],
    &["mixed", "in"],
    &["beaten", "with"],
    &["dissolved", "in"],
    &["sauteed", "in"],
    &["diluted"],
    &["combined"],
    &["add"],
];

/// Quantity phrases left to the cook; removed from the food text.
const USER_DEFINED_PHRASES: &[&[&str]] = &[&["to", "taste"], &["as", "needed"]];

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantityKind {
    Int,
    Float,
    Fraction,
    IntFraction,
    Product,
}

/// One extracted quantity occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityPattern {
    pub kind: QuantityKind,
    pub value: f64,
    /// token range in the stream it was extracted from
    pub span: Range<usize>,
}

/// How a unit match was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    Dictionary,
    FoodPair,
    Container,
}

/// One extracted unit occurrence with its canonical name.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitMatch {
    pub canonical: String,
    pub kind: UnitKind,
    pub span: Range<usize>,
}

/// Provenance flags of a parsed ingredient.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngredientFlags {
    pub user_defined_qty: bool,
    pub no_unit: bool,
    pub container_unit: bool,
    pub brand_present: bool,
    pub dismissed_and: bool,
}

/// One normalized ingredient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedIngredient {
    pub food: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qty: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grams: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grams_source: Option<crate::convert::GramsSource>,
    pub flags: IngredientFlags,
}

/// Parse result for one raw line. Batch drivers never abort on a line:
/// unparseable content surfaces as `skipped` plus warnings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedLine {
    pub raw: String,
    pub ingredients: Vec<ParsedIngredient>,
    pub skipped: bool,
    pub warnings: Vec<String>,
}

// ---------------------------------------------------------------------------
// Unit extraction
// ---------------------------------------------------------------------------

fn token_is_container(token: &Token) -> bool {
    !token.protected && CONTAINER_WORDS.iter().any(|w| token.matches_word(w))
}

fn token_pair_unit(token: &Token) -> Option<&'static str> {
    if token.protected {
        return None;
    }
    FOOD_PAIR_UNITS
        .iter()
        .find(|(unit, _)| token.matches_word(unit))
        .map(|(unit, _)| *unit)
}

fn stream_contains_phrase(stream: &[Token], phrase: &str) -> bool {
    let words: Vec<&str> = phrase.split_whitespace().collect();
    if words.is_empty() || words.len() > stream.len() {
        return false;
    }
    stream
        .windows(words.len())
        .any(|w| w.iter().zip(words.iter()).all(|(t, p)| t.matches_word(p)))
}

/// Extract unit matches from a pre-processed stream.
///
/// Dictionary units match longest-first on surfaces and lemmas; food-pair
/// units fire only when the paired food co-occurs; container words are
/// reported only when neither of the first two found anything.
pub fn extract_units(stream: &TokenStream, units: &UnitLexicon) -> Vec<UnitMatch> {
    let mut matches: Vec<UnitMatch> = Vec::new();
    let max_len = units.max_surface_tokens().max(1);
    let mut i = 0;
    while i < stream.len() {
        if stream[i].protected || stream[i].is_punct() {
            i += 1;
            continue;
        }
        let mut advanced = false;
        for len in (1..=max_len.min(stream.len() - i)).rev() {
            let window = &stream[i..i + len];
            if window.iter().any(|t| t.protected || t.is_punct()) {
                continue;
            }
            let surface = window
                .iter()
                .map(|t| t.surface.to_lowercase())
                .collect::<Vec<_>>()
                .join(" ");
            let lemma = window
                .iter()
                .map(|t| t.lemma.clone())
                .collect::<Vec<_>>()
                .join(" ");
            let hit = units.lookup(&surface).or_else(|| units.lookup(&lemma));
            if let Some(canonical) = hit {
                matches.push(UnitMatch {
                    canonical: canonical.to_string(),
                    kind: UnitKind::Dictionary,
                    span: i..i + len,
                });
                i += len;
                advanced = true;
                break;
            }
        }
        if !advanced {
            i += 1;
        }
    }

    for (i, token) in stream.iter().enumerate() {
        if let Some(unit) = token_pair_unit(token) {
            let paired = FOOD_PAIR_UNITS
                .iter()
                .find(|(u, _)| *u == unit)
                .map(|(_, foods)| foods)
                .unwrap();
            if paired.iter().any(|food| stream_contains_phrase(stream, food)) {
                matches.push(UnitMatch {
                    canonical: unit.to_string(),
                    kind: UnitKind::FoodPair,
                    span: i..i + 1,
                });
            }
        }
    }

    if matches.is_empty() {
        for (i, token) in stream.iter().enumerate() {
            if token_is_container(token) {
                let canonical = CONTAINER_WORDS
                    .iter()
                    .find(|w| token.matches_word(w))
                    .unwrap();
                matches.push(UnitMatch {
                    canonical: (*canonical).to_string(),
                    kind: UnitKind::Container,
                    span: i..i + 1,
                });
            }
        }
    }

    matches.sort_by_key(|m| m.span.start);
    matches
}

// ---------------------------------------------------------------------------
// Quantity extraction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum NumKind {
    Int,
    Float,
    Fraction,
}

fn numeric_value(token: &Token) -> Option<(NumKind, f64)> {
    if token.protected {
        return None;
    }
    let s = token.surface.as_str();
    if s.chars().all(|c| c.is_ascii_digit()) && !s.is_empty() {
        return s.parse::<f64>().ok().map(|v| (NumKind::Int, v));
    }
    if let Some((a, b)) = s.split_once('/') {
        let (num, den) = (a.parse::<f64>().ok()?, b.parse::<f64>().ok()?);
        if den == 0.0 {
            return None; // zero denominator: token stays food text
        }
        return Some((NumKind::Fraction, num / den));
    }
    if let Some((a, b)) = s.split_once('.') {
        if !a.is_empty()
            && !b.is_empty()
            && a.chars().all(|c| c.is_ascii_digit())
            && b.chars().all(|c| c.is_ascii_digit())
        {
            return s.parse::<f64>().ok().map(|v| (NumKind::Float, v));
        }
    }
    None
}

/// Scan a stream for quantity patterns, left to right, longest pattern wins,
/// no token reused.
///
/// "D D/D" (optionally "D and D/D") sums into one number; adjacent
/// int/float/fraction pairs in the multiplication formats multiply.
pub fn extract_quantities(stream: &TokenStream) -> Vec<QuantityPattern> {
    // primitives
    let mut prims: Vec<QuantityPattern> = Vec::new();
    for (i, token) in stream.iter().enumerate() {
        if let Some((kind, value)) = numeric_value(token) {
            let kind = match kind {
                NumKind::Int => QuantityKind::Int,
                NumKind::Float => QuantityKind::Float,
                NumKind::Fraction => QuantityKind::Fraction,
            };
            prims.push(QuantityPattern {
                kind,
                value,
                span: i..i + 1,
            });
        }
    }

    // summation pass: Int [and] Fraction → IntFraction
    let mut summed: Vec<QuantityPattern> = Vec::new();
    let mut i = 0;
    while i < prims.len() {
        if i + 1 < prims.len()
            && prims[i].kind == QuantityKind::Int
            && prims[i + 1].kind == QuantityKind::Fraction
        {
            let gap = prims[i].span.end..prims[i + 1].span.start;
            let adjacent = gap.is_empty()
                || (gap.len() == 1 && stream[gap.start].matches_word("and"));
            if adjacent {
                summed.push(QuantityPattern {
                    kind: QuantityKind::IntFraction,
                    value: prims[i].value + prims[i + 1].value,
                    span: prims[i].span.start..prims[i + 1].span.end,
                });
                i += 2;
                continue;
            }
        }
        summed.push(prims[i].clone());
        i += 1;
    }

    // multiplication pass over adjacent patterns
    let multiplies = |a: QuantityKind, b: QuantityKind| {
        use QuantityKind::*;
        let a = if a == IntFraction { Float } else { a };
        let b = if b == IntFraction { Float } else { b };
        matches!(
            (a, b),
            (Int, Int) | (Int, Float) | (Float, Int) | (Fraction, Fraction) | (Fraction, Int) | (Float, Float)
        )
    };
    let mut out: Vec<QuantityPattern> = Vec::new();
    let mut i = 0;
    while i < summed.len() {
        if i + 1 < summed.len()
            && summed[i].span.end == summed[i + 1].span.start
            && multiplies(summed[i].kind, summed[i + 1].kind)
        {
            out.push(QuantityPattern {
                kind: QuantityKind::Product,
                value: summed[i].value * summed[i + 1].value,
                span: summed[i].span.start..summed[i + 1].span.end,
            });
            i += 2;
            continue;
        }
        out.push(summed[i].clone());
        i += 1;
    }
    out
}

// ---------------------------------------------------------------------------
// Conjunction resolution
// ---------------------------------------------------------------------------

fn rewrite_plus_phrases(stream: &mut TokenStream) {
    let plus_token = || Token {
        surface: "plus".into(),
        lemma: "plus".into(),
        pos: crate::lexicon::PosClass::Other,
        protected: false,
    };
    let mut i = 0;
    'outer: while i < stream.len() {
        for phrase in PLUS_PHRASES {
            if i + phrase.len() <= stream.len()
                && stream[i..i + phrase.len()]
                    .iter()
                    .zip(phrase.iter())
                    .all(|(t, w)| !t.protected && t.matches_word(w))
            {
                stream.splice(i..i + phrase.len(), [plus_token()]);
                i += 1;
                continue 'outer;
            }
        }
        i += 1;
    }
}

/// Collapse numeric "to" ranges: the numeric part before "to" is kept and
/// appended to what follows the second numeric part.
fn collapse_to_ranges(stream: &mut TokenStream) {
    let is_numeric = |t: &Token| numeric_value(t).is_some();
    let mut i = 0;
    while i < stream.len() {
        if stream[i].matches_word("to") && !stream[i].protected {
            let before = i > 0 && is_numeric(&stream[i - 1]);
            let mut end = i + 1;
            while end < stream.len() && is_numeric(&stream[end]) {
                end += 1;
            }
            if before && end > i + 1 {
                stream.drain(i..end);
                continue;
            }
        }
        i += 1;
    }
}

fn unit_on_each_side(stream: &TokenStream, idx: usize, units: &UnitLexicon) -> bool {
    let left: TokenStream = stream[..idx].to_vec();
    let right: TokenStream = stream[idx + 1..].to_vec();
    !extract_units(&left, units).is_empty() && !extract_units(&right, units).is_empty()
}

fn count_word(stream: &TokenStream, word: &str) -> usize {
    stream
        .iter()
        .filter(|t| !t.protected && t.matches_word(word))
        .count()
}

/// Resolve "or" by splitting into segments and keeping one of them.
fn resolve_or(stream: TokenStream, units: &UnitLexicon) -> TokenStream {
    let or_positions: Vec<usize> = stream
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.protected && t.matches_word("or"))
        .map(|(i, _)| i)
        .collect();
    if or_positions.is_empty() {
        return stream;
    }
    let mut segments: Vec<TokenStream> = Vec::new();
    let mut start = 0;
    for &pos in &or_positions {
        segments.push(stream[start..pos].to_vec());
        start = pos + 1;
    }
    segments.push(stream[start..].to_vec());

    let seg_units: Vec<Vec<UnitMatch>> = segments.iter().map(|s| extract_units(s, units)).collect();
    let seg_has_qty: Vec<bool> = segments
        .iter()
        .map(|s| !extract_quantities(s).is_empty())
        .collect();
    let unit_segments: Vec<usize> = seg_units
        .iter()
        .enumerate()
        .filter(|(_, u)| !u.is_empty())
        .map(|(i, _)| i)
        .collect();

    if unit_segments.is_empty() {
        // no unit extracted: keep the first side
        return segments.swap_remove(0);
    }
    let total_units: usize = seg_units.iter().map(Vec::len).sum();
    if or_positions.len() == 1 && total_units == 1 {
        // one occurrence: take the part with the unit of measurement
        return segments.swap_remove(unit_segments[0]);
    }
    let has_plus = count_word(&stream, "plus") > 0;
    if !has_plus {
        let with_qty: Vec<usize> = unit_segments
            .iter()
            .copied()
            .filter(|&i| seg_has_qty[i])
            .collect();
        if with_qty.is_empty() || with_qty.len() == unit_segments.len() {
            // all or none with assigned quantity: part with the first unit
            return segments.swap_remove(unit_segments[0]);
        }
        // some without quantity: part whose unit has an assigned quantity
        return segments.swap_remove(with_qty[0]);
    }
    segments.swap_remove(unit_segments[0])
}

/// Apply all conjunction rules and split the stream into one stream per
/// ingredient. Returns the streams plus whether an "and" was dismissed
/// (kept in place without splitting).
pub fn resolve_conjunctions(
    stream: TokenStream,
    units: &UnitLexicon,
) -> (Vec<TokenStream>, bool) {
    let mut stream = stream;
    rewrite_plus_phrases(&mut stream);
    collapse_to_ranges(&mut stream);

    // "and"/"with" become "plus" when there is no plus yet and a unit sits
    // on each side; every other "and" is dismissed (the line stays whole)
    let mut dismissed_and = false;
    if count_word(&stream, "plus") == 0 {
        let candidates: Vec<usize> = stream
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                !t.protected && (t.matches_word("and") || t.matches_word("with"))
            })
            .map(|(i, _)| i)
            .collect();
        for idx in candidates {
            if unit_on_each_side(&stream, idx, units) {
                stream[idx] = Token {
                    surface: "plus".into(),
                    lemma: "plus".into(),
                    pos: crate::lexicon::PosClass::Other,
                    protected: false,
                };
            } else if stream[idx].matches_word("and") {
                dismissed_and = true;
            }
        }
    } else if count_word(&stream, "and") > 0 {
        dismissed_and = true;
    }

    let stream = resolve_or(stream, units);

    let mut streams: Vec<TokenStream> = Vec::new();
    let mut current: TokenStream = Vec::new();
    for token in stream {
        if !token.protected && token.matches_word("plus") {
            streams.push(std::mem::take(&mut current));
        } else {
            current.push(token);
        }
    }
    streams.push(current);
    streams.retain(|s| !s.is_empty());
    if streams.is_empty() {
        streams.push(Vec::new());
    }
    (streams, dismissed_and)
}

// ---------------------------------------------------------------------------
// Duplicate quantities
// ---------------------------------------------------------------------------

/// Resolve multiple quantity patterns against the extracted units.
///
/// With exactly two patterns the four positional rules apply in order;
/// more than two is ambiguous (first kept, warning emitted).
pub fn resolve_duplicate_quantities(
    patterns: &[QuantityPattern],
    units: &[UnitMatch],
    _stream: &TokenStream,
) -> (Option<f64>, Option<usize>, Vec<String>) {
    let mut warnings = Vec::new();
    let first_unit = (!units.is_empty()).then_some(0);
    match patterns.len() {
        0 => (None, first_unit, warnings),
        1 => (Some(patterns[0].value), first_unit, warnings),
        2 => {
            let (p1, p2) = (&patterns[0], &patterns[1]);
            let adjacent = p1.span.end == p2.span.start;
            // rule 1: one unit right after the second pattern, nothing
            // between the patterns → keep the second
            if let Some(u) = units.iter().position(|u| u.span.start == p2.span.end) {
                if adjacent {
                    return (Some(p2.value), Some(u), warnings);
                }
            }
            // rule 2: unit right after the first pattern, immediately
            // followed by the second → keep the first
            if let Some(u) = units
                .iter()
                .position(|u| u.span.start == p1.span.end && p2.span.start == u.span.end)
            {
                return (Some(p1.value), Some(u), warnings);
            }
            // rule 3: two units, nothing between the patterns except the
            // first pattern's unit → keep the first
            if units.len() >= 2 {
                if let Some(u) = units
                    .iter()
                    .position(|u| u.span.start == p1.span.end && u.span.end == p2.span.start)
                {
                    return (Some(p1.value), Some(u), warnings);
                }
            }
            // rule 4: no unit, nothing between the patterns → keep the first
            if units.is_empty() && adjacent {
                return (Some(p1.value), None, warnings);
            }
            warnings.push("unresolved duplicate quantity patterns; kept the first".into());
            (Some(p1.value), first_unit, warnings)
        }
        n => {
            warnings.push(format!(
                "AmbiguousQuantities: {n} quantity patterns; kept the first"
            ));
            (Some(patterns[0].value), first_unit, warnings)
        }
    }
}

// ---------------------------------------------------------------------------
// Food item
// ---------------------------------------------------------------------------

/// Error for a stream with no food tokens left after extraction.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no food item remains after extraction")]
pub struct EmptyFoodItem;

/// Assemble the food item from whatever the other extractions left behind.
///
/// Consumed quantity/unit spans, punctuation, bare measure words, and
/// user-defined quantity phrases are dropped; the trailing-clause rule cuts
/// everything after a "."/"," that immediately follows the consumed
/// quantity+unit region (when no "and"/"or" is present).
pub fn extract_food_item(
    stream: &TokenStream,
    consumed: &[Range<usize>],
    redundant: &crate::lexicon::RedundantLexicon,
) -> Result<(String, bool), EmptyFoodItem> {
    let mut keep: Vec<bool> = vec![true; stream.len()];
    for span in consumed {
        for i in span.clone() {
            keep[i] = false;
        }
    }

    // trailing-clause rule
    let has_and_or = stream
        .iter()
        .any(|t| !t.protected && (t.matches_word("and") || t.matches_word("or")));
    if !has_and_or {
        if let Some(consumed_end) = consumed.iter().map(|s| s.end).max() {
            if consumed_end < stream.len()
                && matches!(stream[consumed_end].surface.as_str(), "," | ".")
            {
                let any_food_before = (0..consumed_end).any(|i| keep[i] && !stream[i].is_punct());
                if any_food_before {
                    for flag in keep.iter_mut().skip(consumed_end) {
                        *flag = false;
                    }
                }
            }
        }
    }

    // user-defined quantity phrases ("to taste")
    let mut user_defined = false;
    for phrase in USER_DEFINED_PHRASES {
        let mut i = 0;
        while i + phrase.len() <= stream.len() {
            let window = &stream[i..i + phrase.len()];
            if window
                .iter()
                .zip(phrase.iter())
                .all(|(t, w)| !t.protected && t.matches_word(w))
            {
                user_defined = true;
                for flag in keep.iter_mut().skip(i).take(phrase.len()) {
                    *flag = false;
                }
            }
            i += 1;
        }
    }

    let mut remaining: Vec<Token> = stream
        .iter()
        .enumerate()
        .filter(|(i, t)| {
            keep[*i]
                && !t.is_punct()
                && !(token_is_container(t))
                && token_pair_unit(t).is_none()
        })
        .map(|(_, t)| t.clone())
        .collect();

    // drop any phrase that became matchable once quantities/units left
    let mut filtered: TokenStream = remaining.clone();
    for seq in redundant.token_seqs() {
        let mut i = 0;
        while i + seq.len() <= filtered.len() {
            let window = &filtered[i..i + seq.len()];
            if window
                .iter()
                .zip(seq.iter())
                .all(|(t, w)| !t.protected && t.matches_word(w))
            {
                filtered.drain(i..i + seq.len());
            } else {
                i += 1;
            }
        }
    }
    remaining = filtered;

    let words: Vec<&str> = remaining
        .iter()
        .map(|t| {
            if t.protected {
                t.surface.as_str()
            } else {
                t.lemma.as_str()
            }
        })
        .collect();
    if words.is_empty() {
        return Err(EmptyFoodItem);
    }
    Ok((words.join(" "), user_defined))
}

// ---------------------------------------------------------------------------
// Whole line
// ---------------------------------------------------------------------------

/// Parse one raw ingredient line into zero or more [`ParsedIngredient`]s.
///
/// Deterministic and total over UTF-8 input; per-stream failures become
/// warnings, never errors.
pub fn parse_line(raw: &str, lexicons: &Lexicons) -> ParsedLine {
    let stream = preprocess::preprocess_line(raw, lexicons);
    if stream.is_empty() {
        return ParsedLine {
            raw: raw.to_string(),
            ingredients: Vec::new(),
            skipped: true,
            warnings: if raw.trim().is_empty() {
                vec!["empty line".into()]
            } else {
                vec!["no tokens after pre-processing".into()]
            },
        };
    }

    let (streams, dismissed_and) = resolve_conjunctions(stream, &lexicons.units);
    let mut ingredients = Vec::new();
    let mut warnings = Vec::new();
    for sub in &streams {
        let units = extract_units(sub, &lexicons.units);
        let patterns = extract_quantities(sub);
        let (qty, unit_idx, mut dup_warnings) =
            resolve_duplicate_quantities(&patterns, &units, sub);
        warnings.append(&mut dup_warnings);
        let chosen_unit = unit_idx.map(|i| &units[i]);

        let mut consumed: Vec<Range<usize>> = patterns.iter().map(|p| p.span.clone()).collect();
        consumed.extend(units.iter().map(|u| u.span.clone()));

        match extract_food_item(sub, &consumed, &lexicons.redundant) {
            Ok((food, user_defined_qty)) => {
                let flags = IngredientFlags {
                    user_defined_qty,
                    no_unit: chosen_unit.is_none(),
                    container_unit: chosen_unit.is_some_and(|u| u.kind == UnitKind::Container),
                    brand_present: sub.iter().any(|t| t.protected),
                    dismissed_and,
                };
                ingredients.push(ParsedIngredient {
                    food,
                    qty,
                    unit: chosen_unit.map(|u| u.canonical.clone()),
                    grams: None,
                    grams_source: None,
                    flags,
                });
            }
            Err(EmptyFoodItem) => {
                warnings.push("EmptyFoodItem: stream left no food tokens".into());
            }
        }
    }

    let skipped = ingredients.is_empty();
    ParsedLine {
        raw: raw.to_string(),
        ingredients,
        skipped,
        warnings,
    }
}

#[cfg(test)]
mod tests;
