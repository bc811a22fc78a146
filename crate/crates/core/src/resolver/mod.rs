//! Rule-based resolution of Director descriptions to countries.
//!
//! Resolution runs in two stages. [`DescriptionParser::parse`] turns an
//! utterance into [`Clause`]s; [`resolve`] composes those clauses against a
//! [`ResolutionContext`] and ranks [`Candidate`]s. Clauses compose left to
//! right: region mentions restrict the candidate set, superlatives keep the
//! largest members, an extremal clause picks one end of the set, and a
//! relative step walks the adjacency graph from the most recent anchor.
//!
//! Scores only matter by order: exact name > compositional chain > fuzzy
//! name > partial chain.
//!
//! ```
//! use rdgmap::resolver::{resolve_episode, ResolutionContext};
//! use rdgmap::world::WorldMap;
//!
//! let map = WorldMap::bundled();
//! let ctx = ResolutionContext::new(map);
//! let ranked = resolve_episode(
//!     &["Look at Africa, the three biggest countries on top of Africa",
//!       "The one furthest right is Egypt",
//!       "Go two down"],
//!     ctx,
//! );
//! assert_eq!(ranked[0].id.as_str(), "SSD");
//! ```

mod parse;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::world::{fold_name, CountryId, Direction, Side, WorldMap};

pub use parse::{Clause, DescriptionParser, SizeOrder};

/// Score table. Only the order exact > chain > fuzzy > partial is relied on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub exact_name: f64,
    pub chain: f64,
    pub fuzzy_name: f64,
    pub partial_per_clause: f64,
}

impl Default for ScoreTable {
    fn default() -> Self {
        Self {
            exact_name: 10.0,
            chain: 8.0,
            fuzzy_name: 6.0,
            partial_per_clause: 3.0,
        }
    }
}

impl ScoreTable {
    /// Partial chains never reach the fuzzy-name score, however many
    /// clauses they satisfied.
    fn partial(&self, satisfied: usize) -> f64 {
        let cap = self.fuzzy_name - 1.0;
        (self.partial_per_clause * satisfied as f64).min(cap)
    }
}

/// What the resolver knows when interpreting the next utterance.
#[derive(Debug, Clone)]
pub struct ResolutionContext<'m> {
    pub map: &'m WorldMap,
    /// Countries established so far, most recent last.
    pub anchors: Vec<CountryId>,
    /// Countries the Matcher can locate by name.
    pub known: BTreeSet<CountryId>,
    /// The set the previous description narrowed to ("those").
    pub focus: Vec<CountryId>,
    pub scores: ScoreTable,
}

impl<'m> ResolutionContext<'m> {
    pub fn new(map: &'m WorldMap) -> Self {
        Self {
            map,
            anchors: Vec::new(),
            known: BTreeSet::new(),
            focus: Vec::new(),
            scores: ScoreTable::default(),
        }
    }

    pub fn with_known(mut self, known: impl IntoIterator<Item = CountryId>) -> Self {
        self.known.extend(known);
        self
    }

    pub fn with_anchors(mut self, anchors: impl IntoIterator<Item = CountryId>) -> Self {
        self.anchors.extend(anchors);
        self
    }

    /// Adds an anchor unless it is already the most recent one.
    pub fn push_anchor(&mut self, id: CountryId) {
        if self.anchors.last() != Some(&id) {
            self.anchors.retain(|a| a != &id);
            self.anchors.push(id);
        }
    }

    /// Clears per-target state; `known` survives.
    pub fn reset_episode(&mut self) {
        self.anchors.clear();
        self.focus.clear();
    }
}

/// One step of a candidate's derivation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Derivation {
    ExactName {
        mention: String,
    },
    FuzzyName {
        mention: String,
        matched: String,
        distance: usize,
    },
    Region {
        tag: String,
        remaining: usize,
    },
    Focus {
        size: usize,
    },
    Superlative {
        order: SizeOrder,
        count: usize,
        kept: Vec<CountryId>,
    },
    Extremal {
        side: Side,
        picked: CountryId,
    },
    Anchor {
        id: CountryId,
    },
    Step {
        from: CountryId,
        to: CountryId,
        direction: Direction,
    },
    Aborted {
        reason: String,
    },
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Derivation::ExactName { mention } => write!(f, "name \"{mention}\""),
            Derivation::FuzzyName {
                mention,
                matched,
                distance,
            } => write!(f, "fuzzy \"{mention}\"~\"{matched}\" (d={distance})"),
            Derivation::Region { tag, remaining } => write!(f, "region {tag} ({remaining})"),
            Derivation::Focus { size } => write!(f, "previous set ({size})"),
            Derivation::Superlative { order, count, kept } => {
                let word = match order {
                    SizeOrder::Largest => "largest",
                    SizeOrder::Smallest => "smallest",
                };
                let ids: Vec<_> = kept.iter().map(CountryId::as_str).collect();
                write!(f, "{count} {word} [{}]", ids.join(","))
            }
            Derivation::Extremal { side, picked } => {
                let side = match side {
                    Side::East => "east",
                    Side::West => "west",
                };
                write!(f, "furthest {side} {picked}")
            }
            Derivation::Anchor { id } => write!(f, "anchor {id}"),
            Derivation::Step {
                from,
                to,
                direction,
            } => write!(f, "step {direction} {from}->{to}"),
            Derivation::Aborted { reason } => write!(f, "aborted: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: CountryId,
    pub score: f64,
    /// Whether the derivation pins the country on the map (or it is
    /// already known/anchored), as opposed to merely naming it.
    pub located: bool,
    pub derivation: Vec<Derivation>,
}

impl Candidate {
    /// Human-readable rule trace.
    pub fn trace(&self) -> String {
        self.derivation
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" > ")
    }

    /// The walk recorded in the derivation, anchor first.
    pub fn walk(&self) -> Vec<CountryId> {
        let mut path = Vec::new();
        for d in &self.derivation {
            match d {
                Derivation::Anchor { id } => path = vec![id.clone()],
                Derivation::Step { to, .. } => path.push(to.clone()),
                _ => {}
            }
        }
        path
    }
}

/// Whether `candidates[0]` clears the margin rule: at least twice the
/// runner-up's score, or unopposed.
pub fn is_confident(candidates: &[Candidate]) -> bool {
    match candidates {
        [] => false,
        [_] => true,
        [top, next, ..] => top.score >= 2.0 * next.score,
    }
}

/// Parses `text` against `map`. Builds a parser each call; hold a
/// [`DescriptionParser`] when parsing many utterances.
pub fn parse_description(text: &str, map: &WorldMap) -> Vec<Clause> {
    DescriptionParser::new(map).parse(text)
}

struct Chain {
    members: Vec<CountryId>,
    trace: Vec<Derivation>,
    satisfied: usize,
    complete: bool,
}

fn run_chain(clauses: &[&Clause], ctx: &ResolutionContext<'_>) -> Option<Chain> {
    let map = ctx.map;
    let mut trace = Vec::new();
    let mut members: Option<Vec<CountryId>> = None;
    let mut satisfied = 0;
    if matches!(
        clauses.first(),
        Some(Clause::Superlative { .. } | Clause::Extremal { .. })
    ) && !ctx.focus.is_empty()
    {
        trace.push(Derivation::Focus {
            size: ctx.focus.len(),
        });
        members = Some(ctx.focus.clone());
    }
    let abort =
        |members: Option<Vec<CountryId>>, mut trace: Vec<Derivation>, satisfied, reason: String| {
            trace.push(Derivation::Aborted { reason });
            members.filter(|m| !m.is_empty()).map(|members| Chain {
                members,
                trace,
                satisfied,
                complete: false,
            })
        };
    for clause in clauses {
        let current = || -> Vec<CountryId> {
            members
                .clone()
                .unwrap_or_else(|| map.ids().cloned().collect())
        };
        match clause {
            Clause::RegionMention { region } => {
                let Ok(set) = map.region(region) else {
                    return abort(
                        members,
                        trace,
                        satisfied,
                        format!("unknown region {region}"),
                    );
                };
                let next: Vec<_> = current()
                    .into_iter()
                    .filter(|id| set.contains(id))
                    .collect();
                if next.is_empty() {
                    return abort(
                        members,
                        trace,
                        satisfied,
                        format!("nothing left in {region}"),
                    );
                }
                trace.push(Derivation::Region {
                    tag: region.clone(),
                    remaining: next.len(),
                });
                members = Some(next);
            }
            Clause::Superlative { order, count } => {
                let pool = current();
                let mut kept = map
                    .largest_among(pool.iter(), pool.len().max(1))
                    .unwrap_or_default();
                if *order == SizeOrder::Smallest {
                    kept.reverse();
                }
                kept.truncate(*count);
                trace.push(Derivation::Superlative {
                    order: *order,
                    count: *count,
                    kept: kept.clone(),
                });
                members = Some(kept);
            }
            Clause::Extremal { side } => {
                let Ok(picked) = map.extremal_by_longitude(current().iter(), *side) else {
                    return abort(
                        members,
                        trace,
                        satisfied,
                        "no candidates for extremal".into(),
                    );
                };
                trace.push(Derivation::Extremal {
                    side: *side,
                    picked: picked.clone(),
                });
                members = Some(vec![picked]);
            }
            Clause::RelativeStep { direction, count } => {
                let Some(anchor) = ctx.anchors.last() else {
                    return abort(members, trace, satisfied, "no anchor to step from".into());
                };
                let path = map
                    .walk(anchor.as_str(), *direction, *count)
                    .unwrap_or_default();
                trace.push(Derivation::Anchor { id: anchor.clone() });
                for w in path.windows(2) {
                    trace.push(Derivation::Step {
                        from: w[0].clone(),
                        to: w[1].clone(),
                        direction: *direction,
                    });
                }
                if path.len() != count + 1 {
                    let stuck = path.last().cloned().unwrap_or_else(|| anchor.clone());
                    return abort(
                        Some(vec![stuck.clone()]),
                        trace,
                        satisfied,
                        format!("no {direction} neighbor of {stuck}"),
                    );
                }
                members = Some(vec![path[*count].clone()]);
            }
            Clause::NameMention { .. } => continue,
        }
        satisfied += 1;
    }
    members.map(|members| Chain {
        members,
        trace,
        satisfied,
        complete: true,
    })
}

/// Composes `clauses` against `ctx` and ranks the results by score, then id.
pub fn resolve(clauses: &[Clause], ctx: &ResolutionContext<'_>) -> Vec<Candidate> {
    let map = ctx.map;
    let scores = ctx.scores;

    let mut named: Vec<Candidate> = Vec::new();
    for clause in clauses {
        let Clause::NameMention { text } = clause else {
            continue;
        };
        let folded = fold_name(text);
        let hit = if let Some(id) = map.lookup_name(&folded) {
            Some((
                id.clone(),
                scores.exact_name,
                Derivation::ExactName {
                    mention: text.clone(),
                },
            ))
        } else {
            parse::closest_in(map.name_index().map(|(n, _)| n), &folded).map(
                |(distance, matched)| {
                    (
                        map.lookup_name(matched).expect("indexed name").clone(),
                        scores.fuzzy_name,
                        Derivation::FuzzyName {
                            mention: text.clone(),
                            matched: matched.to_string(),
                            distance,
                        },
                    )
                },
            )
        };
        if let Some((id, score, why)) = hit {
            match named.iter_mut().find(|c| c.id == id) {
                Some(c) if c.score < score => {
                    c.score = score;
                    c.derivation = vec![why];
                }
                Some(_) => {}
                None => named.push(Candidate {
                    id,
                    score,
                    located: false,
                    derivation: vec![why],
                }),
            }
        }
    }

    let spatial: Vec<&Clause> = clauses
        .iter()
        .filter(|c| !matches!(c, Clause::NameMention { .. }))
        .collect();
    let chain = if spatial.is_empty() {
        None
    } else {
        run_chain(&spatial, ctx)
    };

    let mut out: Vec<Candidate> = Vec::new();
    match chain {
        Some(chain) => {
            let pinned = chain.complete && chain.members.len() == 1;
            let chain_score = if chain.complete {
                scores.chain
            } else {
                scores.partial(chain.satisfied)
            };
            let agreeing: Vec<&Candidate> = named
                .iter()
                .filter(|c| chain.members.contains(&c.id))
                .collect();
            if !agreeing.is_empty() {
                // The name and the description agree: keep the named country,
                // carrying the spatial trace.
                for c in agreeing {
                    let mut derivation = chain.trace.clone();
                    derivation.extend(c.derivation.iter().cloned());
                    out.push(Candidate {
                        id: c.id.clone(),
                        score: c.score.max(chain_score),
                        located: pinned,
                        derivation,
                    });
                }
            } else {
                out.extend(named);
                if chain_score > 0.0 {
                    for id in &chain.members {
                        out.push(Candidate {
                            id: id.clone(),
                            score: chain_score,
                            located: pinned,
                            derivation: chain.trace.clone(),
                        });
                    }
                }
            }
        }
        None => out.extend(named),
    }

    for c in &mut out {
        c.located |= ctx.known.contains(&c.id) || ctx.anchors.contains(&c.id);
    }
    out.retain(|c| c.score > 0.0);
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    out
}

/// What one utterance contributed to an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceResolution {
    pub text: String,
    pub clauses: Vec<Clause>,
    /// Candidates from this utterance alone (empty when nothing parsed).
    pub candidates: Vec<Candidate>,
    /// Referent promoted to anchor after this utterance.
    pub promoted: Option<CountryId>,
}

/// Incremental resolution over one target episode.
#[derive(Debug, Clone)]
pub struct Episode<'m> {
    parser: DescriptionParser,
    ctx: ResolutionContext<'m>,
    current: Vec<Candidate>,
}

impl<'m> Episode<'m> {
    pub fn new(ctx: ResolutionContext<'m>) -> Self {
        Self {
            parser: DescriptionParser::new(ctx.map),
            ctx,
            current: Vec::new(),
        }
    }

    pub fn context(&self) -> &ResolutionContext<'m> {
        &self.ctx
    }

    pub fn context_mut(&mut self) -> &mut ResolutionContext<'m> {
        &mut self.ctx
    }

    /// Latest non-empty candidate list.
    pub fn candidates(&self) -> &[Candidate] {
        &self.current
    }

    /// Feeds one utterance. A confidently resolved, located referent becomes
    /// the newest anchor; a tie at the top becomes the focus set.
    pub fn observe(&mut self, text: &str) -> UtteranceResolution {
        let clauses = self.parser.parse(text);
        let mut result = UtteranceResolution {
            text: text.to_string(),
            clauses: clauses.clone(),
            candidates: Vec::new(),
            promoted: None,
        };
        if clauses.is_empty() {
            return result;
        }
        let candidates = resolve(&clauses, &self.ctx);
        if candidates.is_empty() {
            return result;
        }
        let top_score = candidates[0].score;
        let tied: Vec<CountryId> = candidates
            .iter()
            .take_while(|c| c.score == top_score)
            .map(|c| c.id.clone())
            .collect();
        if tied.len() > 1 {
            self.ctx.focus = tied;
        } else if is_confident(&candidates) && candidates[0].located {
            let id = candidates[0].id.clone();
            self.ctx.focus = vec![id.clone()];
            self.ctx.push_anchor(id.clone());
            result.promoted = Some(id);
        }
        result.candidates = candidates.clone();
        self.current = candidates;
        result
    }

    /// Clears per-target state after the game advances.
    pub fn reset(&mut self) {
        self.ctx.reset_episode();
        self.current.clear();
    }
}

/// Folds [`Episode::observe`] over `transcript` and returns the final
/// candidate list.
pub fn resolve_episode<S: AsRef<str>>(
    transcript: &[S],
    ctx: ResolutionContext<'_>,
) -> Vec<Candidate> {
    let mut episode = Episode::new(ctx);
    for line in transcript {
        episode.observe(line.as_ref());
    }
    episode.current
}
