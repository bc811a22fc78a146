//! Keyword and pattern rules that turn a Director utterance into clauses.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::world::{fold_name, Direction, Side, WorldMap};

/// One unit of meaning extracted from an utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Clause {
    /// A span that names a country, exactly or nearly (the raw span is kept).
    NameMention { text: String },
    /// A region tag from the map, e.g. "Northern Africa".
    RegionMention { region: String },
    /// "the three biggest", "the smallest".
    Superlative { order: SizeOrder, count: usize },
    /// "the one furthest right".
    Extremal { side: Side },
    /// "go two down" from the most recent anchor.
    RelativeStep { direction: Direction, count: usize },
}

impl Clause {
    fn rank(&self) -> u8 {
        match self {
            Clause::NameMention { .. } => 0,
            Clause::RegionMention { .. } => 1,
            Clause::Superlative { .. } => 2,
            Clause::Extremal { .. } => 3,
            Clause::RelativeStep { .. } => 4,
        }
    }

    pub fn name_mention(text: impl Into<String>) -> Self {
        Clause::NameMention { text: text.into() }
    }

    pub fn region(region: impl Into<String>) -> Self {
        Clause::RegionMention {
            region: region.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeOrder {
    Largest,
    Smallest,
}

const FILLERS: &[&str] = &["um", "uh", "uhm", "umm", "er", "erm", "hmm", "mm", "ah"];

/// Words that never start a fuzzy name match.
const STOPWORDS: &[&str] = &[
    "about",
    "after",
    "again",
    "above",
    "below",
    "there",
    "their",
    "these",
    "those",
    "where",
    "which",
    "while",
    "other",
    "think",
    "thing",
    "right",
    "known",
    "going",
    "would",
    "could",
    "should",
    "first",
    "second",
    "third",
    "country",
    "countries",
    "finger",
    "little",
    "middle",
    "bigger",
    "smaller",
    "biggest",
    "largest",
    "smallest",
    "really",
    "pretty",
    "looks",
];

const MAX_NAME_TOKENS: usize = 6;

fn number_word(tok: &str) -> Option<usize> {
    let n = match tok {
        "one" => 1,
        "two" => 2,
        "three" => 3,
        "four" => 4,
        "five" => 5,
        "six" => 6,
        "seven" => 7,
        "eight" => 8,
        "nine" => 9,
        "ten" => 10,
        _ => return tok.parse().ok().filter(|n| (1..=10).contains(n)),
    };
    Some(n)
}

/// Screen and compass words usable in relative steps.
fn step_direction(tok: &str) -> Option<Direction> {
    Some(match tok {
        "down" | "below" | "beneath" | "south" | "southward" | "southwards" => Direction::South,
        "up" | "above" | "north" | "northward" | "northwards" => Direction::North,
        "right" | "east" | "eastward" | "eastwards" => Direction::East,
        "left" | "west" | "westward" | "westwards" => Direction::West,
        _ => return None,
    })
}

fn side_word(tok: &str) -> Option<Side> {
    match tok {
        "right" | "east" | "eastern" => Some(Side::East),
        "left" | "west" | "western" => Some(Side::West),
        _ => None,
    }
}

fn is_motion_verb(tok: &str) -> bool {
    matches!(
        tok,
        "go" | "goes" | "going" | "move" | "moving" | "step" | "head" | "then" | "further" | "more"
    )
}

/// Compass modifiers that turn a continent into a sub-region tag. `None`
/// keeps the plain continent ("middle of Africa" stays "Africa").
fn region_modifier(words: &[&str]) -> Option<(usize, Option<&'static str>)> {
    let two = |a: &str, b: &str| words.len() >= 2 && words[0] == a && words[1] == b;
    if two("top", "of") || two("north", "of") || two("upper", "part") {
        return Some((2, Some("Northern")));
    }
    if two("bottom", "of") || two("south", "of") {
        return Some((2, Some("Southern")));
    }
    if two("east", "of") {
        return Some((2, Some("Eastern")));
    }
    if two("west", "of") {
        return Some((2, Some("Western")));
    }
    if two("middle", "of") || two("center", "of") || two("centre", "of") || two("heart", "of") {
        return Some((2, None));
    }
    match words.first().copied() {
        Some("northern" | "upper" | "north") => Some((1, Some("Northern"))),
        Some("southern" | "lower" | "south") => Some((1, Some("Southern"))),
        Some("eastern" | "east") => Some((1, Some("Eastern"))),
        Some("western" | "west") => Some((1, Some("Western"))),
        Some("central") => Some((1, Some("Central"))),
        _ => None,
    }
}

/// Parses utterances against one map's names and region tags.
#[derive(Debug, Clone)]
pub struct DescriptionParser {
    /// Folded names and aliases.
    names: HashSet<String>,
    /// Folded region tag -> tag.
    regions: HashMap<String, String>,
    /// Longest region tag, in tokens.
    region_tokens: usize,
}

impl DescriptionParser {
    pub fn new(map: &WorldMap) -> Self {
        let names = map
            .name_index()
            .map(|(folded, _)| folded.to_string())
            .collect();
        let regions = map
            .region_tags()
            .map(|t| (fold_name(t), t.to_string()))
            .collect::<HashMap<_, _>>();
        let region_tokens = regions
            .keys()
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(1);
        Self {
            names,
            regions,
            region_tokens,
        }
    }

    fn region_at(&self, toks: &[&str], i: usize) -> Option<(usize, String)> {
        let mut best = None;
        for len in (1..=self.region_tokens.min(toks.len() - i)).rev() {
            let phrase = toks[i..i + len].join(" ");
            if let Some(tag) = self.regions.get(&phrase) {
                best = Some((len, tag.clone()));
                break;
            }
        }
        best
    }

    fn name_at(&self, toks: &[&str], i: usize) -> Option<usize> {
        (1..=MAX_NAME_TOKENS.min(toks.len() - i))
            .rev()
            .find(|&len| self.names.contains(&toks[i..i + len].join(" ")))
    }

    /// "top of Africa", "northern Africa", "middle of Africa".
    fn modified_region_at(&self, toks: &[&str], i: usize) -> Option<(usize, String)> {
        let (skip, modifier) = region_modifier(&toks[i..])?;
        // allow "the" between modifier and region: "top of the Americas"
        let mut j = i + skip;
        if toks.get(j) == Some(&"the") {
            j += 1;
        }
        if j >= toks.len() {
            return None;
        }
        let (len, base) = self.region_at(toks, j)?;
        let tag = match modifier {
            Some(m) => {
                let wanted = fold_name(&format!("{m} {base}"));
                self.regions.get(&wanted).cloned().unwrap_or(base)
            }
            None => base,
        };
        Some((j + len - i, tag))
    }

    fn superlative_at(toks: &[&str], i: usize) -> Option<(usize, Clause)> {
        let mut j = i;
        if toks[j] == "top" && toks.get(j + 1) != Some(&"of") {
            j += 1;
        }
        let mut count = 1;
        if let Some(n) = toks.get(j).and_then(|t| number_word(t)) {
            count = n;
            j += 1;
        }
        let order = match toks.get(j).copied()? {
            "biggest" | "largest" => SizeOrder::Largest,
            "smallest" | "tiniest" => SizeOrder::Smallest,
            _ => return None,
        };
        Some((j + 1 - i, Clause::Superlative { order, count }))
    }

    fn extremal_at(toks: &[&str], i: usize) -> Option<(usize, Clause)> {
        let single = match toks[i] {
            "rightmost" | "easternmost" => Some(Side::East),
            "leftmost" | "westernmost" => Some(Side::West),
            _ => None,
        };
        if let Some(side) = single {
            return Some((1, Clause::Extremal { side }));
        }
        if !matches!(
            toks[i],
            "furthest" | "farthest" | "far" | "most" | "further"
        ) {
            return None;
        }
        // "furthest right", "furthest to the right", "far east"
        let mut j = i + 1;
        while matches!(toks.get(j).copied(), Some("to" | "the" | "on")) {
            j += 1;
        }
        let side = side_word(toks.get(j).copied()?)?;
        Some((j + 1 - i, Clause::Extremal { side }))
    }

    fn step_at(toks: &[&str], i: usize) -> Option<(usize, Clause)> {
        let direction = step_direction(toks[i])?;
        let window = &toks[i.saturating_sub(3)..i];
        let count = window.iter().rev().find_map(|t| number_word(t));
        let verb = window.iter().any(|t| is_motion_verb(t));
        let standalone = matches!(toks[i], "below" | "beneath" | "above");
        let screen_word = matches!(toks[i], "down" | "up" | "left" | "right");
        let accepted = match () {
            _ if standalone => true,
            _ if screen_word => count.is_some() || verb,
            // compass words need a motion verb, or a count directly before
            _ => verb || (i > 0 && number_word(toks[i - 1]).is_some()),
        };
        if !accepted {
            return None;
        }
        Some((
            1,
            Clause::RelativeStep {
                direction,
                count: count.unwrap_or(1),
            },
        ))
    }

    /// Extracts clauses from `text`, ordered name, region, superlative,
    /// extremal, step (the order in which they compose).
    pub fn parse(&self, text: &str) -> Vec<Clause> {
        let folded = fold_name(text);
        let toks: Vec<&str> = folded
            .split(' ')
            .filter(|t| !t.is_empty() && !FILLERS.contains(t))
            .collect();
        let mut used = vec![false; toks.len()];
        let mut clauses = Vec::new();
        let mut found_exact_name = false;

        let mut i = 0;
        while i < toks.len() {
            let name = self.name_at(&toks, i);
            let region = self
                .modified_region_at(&toks, i)
                .into_iter()
                .chain(self.region_at(&toks, i))
                .max_by_key(|(len, _)| *len);
            // A country name wins ties: "South Africa" is the country, but
            // "the Micronesia region" is the region.
            let region_word = |r: usize| toks.get(i + r) == Some(&"region");
            match (name, region) {
                (Some(n), Some((r, _))) if n >= r && !(n == r && region_word(r)) => {
                    clauses.push(Clause::name_mention(toks[i..i + n].join(" ")));
                    found_exact_name = true;
                    used[i..i + n].fill(true);
                    i += n;
                    continue;
                }
                (_, Some((r, tag))) => {
                    clauses.push(Clause::region(tag));
                    let r = r + usize::from(region_word(r));
                    used[i..i + r].fill(true);
                    i += r;
                    continue;
                }
                (Some(n), None) => {
                    clauses.push(Clause::name_mention(toks[i..i + n].join(" ")));
                    found_exact_name = true;
                    used[i..i + n].fill(true);
                    i += n;
                    continue;
                }
                (None, None) => {}
            }
            let matched = Self::superlative_at(&toks, i)
                .or_else(|| Self::extremal_at(&toks, i))
                .or_else(|| Self::step_at(&toks, i));
            if let Some((len, clause)) = matched {
                clauses.push(clause);
                used[i..i + len].fill(true);
                i += len;
                continue;
            }
            i += 1;
        }

        if !found_exact_name {
            if let Some(span) = self.fuzzy_span(&toks, &used) {
                clauses.push(Clause::name_mention(span));
            }
        }

        clauses.sort_by_key(Clause::rank);
        clauses
    }

    /// The unconsumed window closest to some name, if within the fuzzy limit.
    fn fuzzy_span(&self, toks: &[&str], used: &[bool]) -> Option<String> {
        let mut best: Option<(usize, String)> = None;
        for i in 0..toks.len() {
            for len in 1..=3.min(toks.len() - i) {
                if used[i..i + len].iter().any(|u| *u)
                    || toks[i..i + len]
                        .iter()
                        .any(|t| STOPWORDS.contains(t) || FILLERS.contains(t))
                {
                    break;
                }
                let span = toks[i..i + len].join(" ");
                if let Some((d, _)) = self.closest_name(&span) {
                    if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                        best = Some((d, span));
                    }
                }
            }
        }
        best.map(|(_, s)| s)
    }

    /// Nearest folded name within the fuzzy limit for `span`.
    pub(crate) fn closest_name(&self, span: &str) -> Option<(usize, &str)> {
        closest_in(self.names.iter().map(String::as_str), span)
    }
}

/// Longest allowed edit distance for a fuzzy match against `name`.
pub(crate) fn fuzzy_limit(name: &str) -> usize {
    match name.chars().count() {
        0..=4 => 0,
        5..=7 => 1,
        _ => 2,
    }
}

pub(crate) fn closest_in<'a>(
    names: impl Iterator<Item = &'a str>,
    span: &str,
) -> Option<(usize, &'a str)> {
    if span.chars().count() < 5 {
        return None;
    }
    let mut best: Option<(usize, &str)> = None;
    for name in names {
        let limit = fuzzy_limit(name);
        if limit == 0 {
            continue;
        }
        let d = strsim::levenshtein(span, name);
        if d == 0 || d > limit {
            continue;
        }
        if best.is_none_or(|(bd, bn)| d < bd || (d == bd && name < bn)) {
            best = Some((d, name));
        }
    }
    best
}
