//! Normalizes unstructured recipe-ingredient text into structured records,
//! links food items to a food-composition database with an ordered
//! lexical-similarity ensemble, computes per-100 g recipe nutrient profiles,
//! builds quantity-weighted recipe embeddings, and evaluates nutrient
//! regressors against mean/median baselines.
//!
//! The pipeline stages map onto the modules below:
//!
//! 1. [`lexicon`] — domain dictionaries and the food-composition index.
//! 2. [`preprocess`] — text canonicalization into a [`preprocess::TokenStream`].
//! 3. [`parser`] — rule-based quantity/unit/food extraction.
//! 4. [`convert`] — gram conversion with portion-weight fallback.
//! 5. [`mapper`] — five-tier similarity matching against the food index.
//! 6. [`nutrition`] — gram-weighted per-100 g nutrient profiles.
//! 7. [`embedding`] — ingredient and recipe vector construction.
//! 8. [`model`] — regression, k-fold evaluation, and baselines.
//! 9. [`pipeline`] — end-to-end batch orchestration used by the CLI.

pub mod convert;
pub mod embedding;
pub mod lexicon;
pub mod mapper;
pub mod model;
pub mod nutrition;
pub mod parser;
pub mod pipeline;
pub mod preprocess;

pub use convert::{to_grams, GramAmount, GramsSource};
pub use lexicon::{
    load_fcdb, load_lexicons, BrandLexicon, ConversionTable, FcdbIndex, FoodRecord, Lexicons,
    PosClass, PosLexicon, RedundantLexicon, UnitLexicon, UnitSystem,
};
pub use mapper::{levenshtein, match_ingredient, similarity_index, MatchOptions, MatchResult, PosSets};
pub use model::{benchmark, fit_linear, fit_ridge, kfold_eval, Dataset, EvalReport, ModelSpec};
pub use nutrition::{recipe_profile, Nutrient, NutrientProfile, Recipe};
pub use parser::{parse_line, ParsedIngredient, ParsedLine};
pub use preprocess::{preprocess_line, TokenStream};
