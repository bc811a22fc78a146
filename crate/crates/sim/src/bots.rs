//! Scripted Director and Matcher bots.
//!
//! Bots see only the wire messages delivered to their role and answer with
//! payloads to send after a fixed latency. The Matcher bots never read the
//! target from anywhere but the Director's text.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdgmap::game::Variant;
use rdgmap::resolver::{is_confident, Clause, DescriptionParser, Episode, ResolutionContext};
use rdgmap::world::{CountryId, Direction, Side, WorldMap};
use rdgmap_server::{Origin, Payload, WireMessage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BotRole {
    Director,
    Matcher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Director names the target; Matcher clicks what is named.
    Perfect,
    /// Director walks from a landmark in clause chains; Matcher runs the
    /// reference resolver over the Director's text.
    AnchorNavigator,
    /// Matcher clicks a uniformly random country once per target.
    Random,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "perfect" => Ok(Strategy::Perfect),
            "anchor-navigator" => Ok(Strategy::AnchorNavigator),
            "random" => Ok(Strategy::Random),
            _ => Err(format!("unknown strategy {s:?}")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("knowledge level {0} is outside [0, 1]")]
    Knowledge(f64),
    #[error("a perfect bot must know every country (knowledge level {0})")]
    ImperfectPerfect(f64),
    #[error("the random strategy is for Matchers only")]
    RandomDirector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BotPolicy {
    pub role: BotRole,
    /// Fraction of the map's countries the bot can name or locate.
    pub knowledge_level: f64,
    /// Simulated time per turn.
    pub latency_ms: u64,
    pub strategy: Strategy,
}

impl BotPolicy {
    pub fn new(
        role: BotRole,
        strategy: Strategy,
        knowledge_level: f64,
        latency_ms: u64,
    ) -> Result<Self, PolicyError> {
        let p = Self {
            role,
            knowledge_level,
            latency_ms,
            strategy,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn perfect(role: BotRole, latency_ms: u64) -> Self {
        Self {
            role,
            knowledge_level: 1.0,
            latency_ms,
            strategy: Strategy::Perfect,
        }
    }

    pub fn random_matcher(latency_ms: u64) -> Self {
        Self {
            role: BotRole::Matcher,
            knowledge_level: 0.0,
            latency_ms,
            strategy: Strategy::Random,
        }
    }

    pub fn anchor_navigator(role: BotRole, knowledge_level: f64, latency_ms: u64) -> Self {
        Self {
            role,
            knowledge_level,
            latency_ms,
            strategy: Strategy::AnchorNavigator,
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if !(0.0..=1.0).contains(&self.knowledge_level) {
            return Err(PolicyError::Knowledge(self.knowledge_level));
        }
        if self.strategy == Strategy::Perfect && self.knowledge_level < 1.0 {
            return Err(PolicyError::ImperfectPerfect(self.knowledge_level));
        }
        if self.strategy == Strategy::Random && self.role == BotRole::Director {
            return Err(PolicyError::RandomDirector);
        }
        Ok(())
    }

    /// The countries this bot knows: a seeded sample of the map.
    pub fn known_set(&self, map: &WorldMap, rng: &mut ChaCha8Rng) -> BTreeSet<CountryId> {
        let mut ids: Vec<CountryId> = map.ids().cloned().collect();
        let n = (self.knowledge_level * ids.len() as f64).round() as usize;
        if n >= ids.len() {
            return ids.into_iter().collect();
        }
        ids.shuffle(rng);
        ids.truncate(n);
        ids.into_iter().collect()
    }
}

/// A payload a bot wants to send `delay_ms` after the message it reacted to.
#[derive(Debug, Clone, PartialEq)]
pub struct Planned {
    pub delay_ms: u64,
    pub payload: Payload,
}

/// A bot attached to one role of one session.
pub trait Bot {
    /// Reacts to a delivered message.
    fn on_message(&mut self, msg: &WireMessage) -> Vec<Planned>;
    /// Plans made before the bot's view of the game last changed are stale.
    fn epoch(&self) -> u64;
}

/// How the anchor-navigator Director reaches a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub region: String,
    /// How many of the region's largest countries are considered.
    pub count: usize,
    pub side: Option<Side>,
    pub anchor: CountryId,
    pub legs: Vec<Leg>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub direction: Direction,
    pub count: usize,
    pub to: CountryId,
}

const MAX_LEG_STEPS: usize = 3;
const MAX_LEGS: usize = 2;

fn landmarks(map: &WorldMap, region: &str) -> Vec<(usize, Option<Side>, CountryId)> {
    let mut out = Vec::new();
    for count in 1..=3 {
        let Ok(top) = map.largest_in_region(region, count) else {
            continue;
        };
        if top.len() < count {
            break;
        }
        if count == 1 {
            out.push((1, None, top[0].clone()));
            continue;
        }
        for side in [Side::East, Side::West] {
            if let Ok(a) = map.extremal_by_longitude(top.iter(), side) {
                out.push((count, Some(side), a));
            }
        }
    }
    out
}

/// Every leg of 1..=MAX_LEG_STEPS steps out of `from`. A shorter walk is a
/// prefix of a longer one, so one walk per direction covers all counts.
fn hops(map: &WorldMap, from: &CountryId) -> Vec<Leg> {
    let mut out = Vec::new();
    for direction in [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
    ] {
        let Ok(path) = map.walk(from.as_str(), direction, MAX_LEG_STEPS) else {
            continue;
        };
        for (count, to) in path.into_iter().enumerate().skip(1) {
            out.push(Leg {
                direction,
                count,
                to,
            });
        }
    }
    // Shorter legs first, as a Director would say them.
    out.sort_by_key(|l| l.count);
    out
}

fn legs_to(
    map: &WorldMap,
    cache: &mut HashMap<CountryId, Vec<Leg>>,
    from: &CountryId,
    target: &CountryId,
    depth: usize,
) -> Option<Vec<Leg>> {
    if from == target {
        return Some(Vec::new());
    }
    if depth == 0 {
        return None;
    }
    let out = cache
        .entry(from.clone())
        .or_insert_with(|| hops(map, from))
        .clone();
    if let Some(leg) = out.iter().find(|l| &l.to == target) {
        return Some(vec![leg.clone()]);
    }
    for hop in out {
        if let Some(rest) = legs_to(map, cache, &hop.to, target, depth - 1) {
            let mut legs = vec![hop];
            legs.extend(rest);
            return Some(legs);
        }
    }
    None
}

/// Finds the shortest landmark-and-steps route to `target` from a landmark
/// the Director `knows`. Regions containing the target are tried first.
pub fn plan_route(
    map: &WorldMap,
    target: &CountryId,
    knows: impl Fn(&CountryId) -> bool,
) -> Option<Route> {
    let mut regions: Vec<&str> = map.region_tags().collect();
    regions.sort_by_key(|r| {
        let contains = map.region(r).is_ok_and(|m| m.contains(target));
        (
            !contains,
            map.region(r).map_or(usize::MAX, |m| m.len()),
            r.to_string(),
        )
    });
    let landmarks: Vec<(&str, usize, Option<Side>, CountryId)> = regions
        .into_iter()
        .flat_map(|r| {
            landmarks(map, r)
                .into_iter()
                .map(move |(n, s, a)| (r, n, s, a))
        })
        .filter(|(_, _, _, a)| knows(a))
        .collect();
    let mut cache = HashMap::new();
    // Fewest legs first, then the first region in preference order.
    for depth in 0..=MAX_LEGS {
        for (region, count, side, anchor) in &landmarks {
            if let Some(legs) = legs_to(map, &mut cache, anchor, target, depth) {
                return Some(Route {
                    region: region.to_string(),
                    count: *count,
                    side: *side,
                    anchor: anchor.clone(),
                    legs,
                });
            }
        }
    }
    None
}

fn number(n: usize) -> &'static str {
    [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ]
    .get(n)
    .copied()
    .unwrap_or("many")
}

fn screen_word(d: Direction) -> &'static str {
    match d {
        Direction::North => "up",
        Direction::South => "down",
        Direction::East => "right",
        Direction::West => "left",
    }
}

/// How a Director names a region: "the Micronesia region" when the tag is
/// also a country's name.
pub fn region_phrase(map: &WorldMap, region: &str) -> String {
    if map.lookup_name(region).is_some() {
        format!("the {region} region")
    } else {
        region.to_string()
    }
}

/// The Director's lines for `route`, ending on the target.
pub fn route_lines(map: &WorldMap, target: &CountryId, route: &Route) -> Vec<String> {
    let name = |id: &CountryId| {
        map.get(id.as_str())
            .map_or(id.to_string(), |c| c.name.clone())
    };
    let mut lines = vec![format!("So, the country is {}.", name(target))];
    let anchor = name(&route.anchor);
    let region = region_phrase(map, &route.region);
    match route.side {
        None => lines.push(format!("The biggest country in {region} is {anchor}.")),
        Some(side) => {
            let side = match side {
                Side::East => "right",
                Side::West => "left",
            };
            lines.push(format!(
                "Look at {region}, the {} biggest countries in {region}.",
                number(route.count),
            ));
            lines.push(format!(
                "The one furthest {side} of those {} is {anchor}.",
                number(route.count)
            ));
        }
    }
    let mut from = anchor;
    for leg in &route.legs {
        let to = name(&leg.to);
        lines.push(format!(
            "Go {} {} from {from}, that is {to}.",
            number(leg.count),
            screen_word(leg.direction)
        ));
        from = to;
    }
    lines
}

/// Describes `target` by size rank within one of its regions, for targets
/// no route reaches: "the three smallest countries in X", then the one
/// furthest left or right of those, or the biggest or smallest of them.
/// Lines after the name line.
pub fn rank_lines(map: &WorldMap, target: &CountryId) -> Option<Vec<String>> {
    let name = map.get(target.as_str())?.name.clone();
    let mut regions: Vec<(&str, &BTreeSet<CountryId>)> = map
        .region_tags()
        .filter_map(|r| map.region(r).ok().map(|m| (r, m)))
        .filter(|(_, m)| m.contains(target))
        .collect();
    regions.sort_by_key(|(r, m)| (m.len(), r.to_string()));
    for count in 1..=10 {
        for (region, members) in &regions {
            if members.len() < count {
                continue;
            }
            let Ok(by_size) = map.largest_among(members.iter(), members.len()) else {
                continue;
            };
            for (word, other) in [("biggest", "smallest"), ("smallest", "biggest")] {
                let mut ranked = by_size.clone();
                if word == "smallest" {
                    ranked.reverse();
                }
                ranked.truncate(count);
                if !ranked.contains(target) {
                    continue;
                }
                let region = region_phrase(map, region);
                if count == 1 {
                    return Some(vec![format!("The {word} country in {region} is {name}.")]);
                }
                let n = number(count);
                let mut lines = vec![format!(
                    "Look at {region}, the {n} {word} countries in {region}."
                )];
                let east = map.extremal_by_longitude(ranked.iter(), Side::East).ok();
                let west = map.extremal_by_longitude(ranked.iter(), Side::West).ok();
                if east.as_ref() == Some(target) {
                    lines.push(format!("The one furthest right of those {n} is {name}."));
                } else if west.as_ref() == Some(target) {
                    lines.push(format!("The one furthest left of those {n} is {name}."));
                } else if ranked.last() == Some(target) {
                    lines.push(format!("The {other} of those {n} is {name}."));
                } else {
                    continue;
                }
                return Some(lines);
            }
        }
    }
    None
}

/// Scripted Director.
pub struct DirectorBot<'m> {
    map: &'m WorldMap,
    policy: BotPolicy,
    variant: Variant,
    known: BTreeSet<CountryId>,
    target: Option<CountryId>,
    /// Route directions already given for the current target.
    explained: bool,
    epoch: u64,
}

impl<'m> DirectorBot<'m> {
    pub fn new(
        map: &'m WorldMap,
        policy: BotPolicy,
        variant: Variant,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        Self {
            map,
            policy,
            variant,
            known: policy.known_set(map, rng),
            target: None,
            explained: false,
            epoch: 0,
        }
    }

    /// Directions for a listener who could not place the name. Only the
    /// anchor and the legs; the name was already said.
    fn explain(&mut self) -> Vec<Planned> {
        let Some(target) = self.target.clone() else {
            return Vec::new();
        };
        if self.explained {
            return Vec::new();
        }
        self.explained = true;
        let lat = self.policy.latency_ms.max(1);
        self.directions(&target)
            .into_iter()
            .enumerate()
            .map(|(i, text)| Planned {
                delay_ms: lat * (i as u64 + 1),
                payload: Payload::Chat { text },
            })
            .collect()
    }

    /// How to find `target` without its name: a route from a known
    /// landmark, else its size rank in a region, else just the region.
    fn directions(&self, target: &CountryId) -> Vec<String> {
        if let Some(route) = plan_route(self.map, target, |c| self.known.contains(c)) {
            return route_lines(self.map, target, &route).split_off(1);
        }
        if let Some(lines) = rank_lines(self.map, target) {
            return lines;
        }
        let region = self
            .map
            .get(target.as_str())
            .map(|c| region_phrase(self.map, &c.region))
            .unwrap_or_default();
        vec![format!("It is in {region}.")]
    }

    /// What the Director says about `target`.
    pub fn describe(&self, target: &CountryId) -> Vec<String> {
        let name = self
            .map
            .get(target.as_str())
            .map_or(target.to_string(), |c| c.name.clone());
        let mut lines = vec![format!("So, the country is {name}.")];
        if self.policy.strategy == Strategy::AnchorNavigator {
            lines.extend(self.directions(target));
        }
        lines
    }
}

impl Bot for DirectorBot<'_> {
    fn on_message(&mut self, msg: &WireMessage) -> Vec<Planned> {
        let country = match &msg.payload {
            Payload::Target { country } => country,
            // The Matcher could not place the name. In WEB the Director moves
            // on with REQUEST_NEXT instead.
            Payload::Utterance { button, .. }
                if button.starts_with("no_")
                    && self.variant == Variant::Embodied
                    && matches!(msg.from, Origin::Matcher | Origin::Agent | Origin::Wizard) =>
            {
                return self.explain();
            }
            _ => return Vec::new(),
        };
        self.epoch += 1;
        self.target = Some(country.clone());
        self.explained = self.policy.strategy == Strategy::AnchorNavigator;
        let lat = self.policy.latency_ms;
        let lines = self.describe(country);
        let n = lines.len() as u64;
        let mut plan: Vec<Planned> = lines
            .into_iter()
            .enumerate()
            .map(|(i, text)| Planned {
                delay_ms: lat * (i as u64 + 1),
                payload: Payload::Chat { text },
            })
            .collect();
        if self.variant == Variant::Web {
            plan.push(Planned {
                delay_ms: lat * (n + 1),
                payload: Payload::RequestNext {},
            });
        }
        plan
    }

    fn epoch(&self) -> u64 {
        self.epoch
    }
}

/// Scripted human-role Matcher.
pub struct MatcherBot<'m> {
    map: &'m WorldMap,
    policy: BotPolicy,
    known: BTreeSet<CountryId>,
    parser: DescriptionParser,
    episode: Option<Episode<'m>>,
    board: Vec<CountryId>,
    rng: ChaCha8Rng,
    selected: Option<CountryId>,
    /// The first country named outright for this target.
    named: Option<CountryId>,
    /// Countries still worth a blind guess after a bare region hint.
    guess_pool: Vec<CountryId>,
    epoch: u64,
}

impl<'m> MatcherBot<'m> {
    pub fn new(map: &'m WorldMap, policy: BotPolicy, rng: &mut ChaCha8Rng) -> Self {
        let known = policy.known_set(map, rng);
        let episode = (policy.strategy == Strategy::AnchorNavigator)
            .then(|| Episode::new(ResolutionContext::new(map).with_known(known.iter().cloned())));
        Self {
            map,
            policy,
            parser: DescriptionParser::new(map),
            episode,
            board: map.ids().cloned().collect(),
            rng: ChaCha8Rng::seed_from_u64(rng.gen()),
            known,
            selected: None,
            named: None,
            guess_pool: Vec::new(),
            epoch: 0,
        }
    }

    fn random_pick(&mut self) -> Vec<Planned> {
        let c = self.board[self.rng.gen_range(0..self.board.len())].clone();
        self.click(c)
    }

    fn click(&mut self, country: CountryId) -> Vec<Planned> {
        if self.selected.as_ref() == Some(&country) {
            return Vec::new();
        }
        self.selected = Some(country.clone());
        vec![Planned {
            delay_ms: self.policy.latency_ms,
            payload: Payload::Select {
                country,
                rule: None,
            },
        }]
    }

    fn blind_guess(&mut self) -> Vec<Planned> {
        match self.guess_pool.pop() {
            Some(c) => self.click(c),
            None => Vec::new(),
        }
    }

    fn new_target(&mut self) {
        self.epoch += 1;
        self.selected = None;
        self.named = None;
        self.guess_pool.clear();
        if let Some(e) = self.episode.as_mut() {
            e.reset();
        }
    }

    fn hear(&mut self, text: &str) -> Vec<Planned> {
        match self.policy.strategy {
            Strategy::Random => Vec::new(),
            Strategy::Perfect => {
                let named = self.parser.parse(text).into_iter().find_map(|c| match c {
                    Clause::NameMention { text } => self.map.lookup_name(&text).cloned(),
                    _ => None,
                });
                match named {
                    Some(c) if self.known.contains(&c) => self.click(c),
                    _ => Vec::new(),
                }
            }
            Strategy::AnchorNavigator => {
                let clauses = self.parser.parse(text);
                if self.named.is_none() {
                    self.named = clauses.iter().find_map(|c| match c {
                        Clause::NameMention { text } => self.map.lookup_name(text).cloned(),
                        _ => None,
                    });
                }
                let Some(episode) = self.episode.as_mut() else {
                    return Vec::new();
                };
                episode.observe(text);
                let cands = episode.candidates();
                // Other located referents are landmarks, not guesses.
                let pick = match cands.first() {
                    Some(top)
                        if top.located
                            && is_confident(cands)
                            && self.named.as_ref().is_none_or(|n| *n == top.id) =>
                    {
                        Some(top.id.clone())
                    }
                    _ => None,
                };
                match (pick, clauses.as_slice()) {
                    (Some(id), _) => self.click(id),
                    // Only a region to go on: guess among what cannot be placed.
                    (None, [Clause::RegionMention { region }]) if self.selected.is_none() => {
                        let mut pool: Vec<CountryId> = self
                            .map
                            .region(region)
                            .map(|m| {
                                m.iter()
                                    .filter(|c| !self.known.contains(*c))
                                    .cloned()
                                    .collect()
                            })
                            .unwrap_or_default();
                        pool.shuffle(&mut self.rng);
                        self.guess_pool = pool;
                        self.blind_guess()
                    }
                    _ => Vec::new(),
                }
            }
        }
    }
}

impl Bot for MatcherBot<'_> {
    fn on_message(&mut self, msg: &WireMessage) -> Vec<Planned> {
        match &msg.payload {
            Payload::Start { .. } if self.policy.strategy == Strategy::Random => self.random_pick(),
            Payload::Chat { text } if msg.from == Origin::Director => self.hear(text),
            // A SCORE always means the target moved on.
            Payload::Score { .. } => {
                self.new_target();
                if self.policy.strategy == Strategy::Random {
                    self.random_pick()
                } else {
                    Vec::new()
                }
            }
            Payload::SelectionShown { guess: 1, .. }
                if self.policy.strategy == Strategy::Random =>
            {
                // A first embodied guess that did not end the target; try again.
                self.selected = None;
                self.random_pick()
            }
            // The blind guess missed; one more.
            Payload::SelectionShown { guess: 1, .. } if !self.guess_pool.is_empty() => {
                self.selected = None;
                self.blind_guess()
            }
            _ => Vec::new(),
        }
    }

    fn epoch(&self) -> u64 {
        self.epoch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_bots_must_know_everything() {
        assert_eq!(
            BotPolicy::new(BotRole::Matcher, Strategy::Perfect, 0.5, 0),
            Err(PolicyError::ImperfectPerfect(0.5))
        );
        assert_eq!(
            BotPolicy::new(BotRole::Director, Strategy::Random, 0.0, 0),
            Err(PolicyError::RandomDirector)
        );
        assert!(BotPolicy::new(BotRole::Matcher, Strategy::AnchorNavigator, 1.5, 0).is_err());
    }

    #[test]
    fn known_set_size_follows_level() {
        let map = WorldMap::bundled();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = BotPolicy::anchor_navigator(BotRole::Director, 0.25, 0);
        let k = p.known_set(map, &mut rng);
        assert_eq!(k.len(), (0.25 * map.len() as f64).round() as usize);
    }

    #[test]
    fn route_to_south_sudan_walks_from_a_landmark() {
        let map = WorldMap::bundled();
        let target = CountryId::from("SSD");
        let route = plan_route(map, &target, |_| true).unwrap();
        // Replay the route with the map primitives.
        let mut here = route.anchor.clone();
        for leg in &route.legs {
            here = map
                .walk(here.as_str(), leg.direction, leg.count)
                .unwrap()
                .last()
                .unwrap()
                .clone();
        }
        assert_eq!(here, target);
        let lines = route_lines(map, &target, &route);
        assert_eq!(lines[0], "So, the country is South Sudan.");
        assert!(lines.last().unwrap().ends_with("South Sudan."));
    }

    #[test]
    fn random_matcher_ignores_text() {
        let map = WorldMap::bundled();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = MatcherBot::new(map, BotPolicy::random_matcher(0), &mut rng);
        let chat = WireMessage {
            seq: 1,
            session: None,
            ts: 0,
            from: Origin::Director,
            payload: Payload::Chat {
                text: "So, the country is Canada.".into(),
            },
        };
        assert!(m.on_message(&chat).is_empty());
    }

    fn msg(from: Origin, payload: Payload) -> WireMessage {
        WireMessage {
            seq: 1,
            session: None,
            ts: 0,
            from,
            payload,
        }
    }

    /// Every target has a size-rank description, and a listener who knows
    /// nothing resolves it to the target and can place it.
    #[test]
    fn rank_lines_cover_every_target() {
        let map = WorldMap::bundled();
        for target in map.selectable_ids() {
            let lines = rank_lines(map, &target).unwrap_or_else(|| panic!("{target}"));
            let mut ep = Episode::new(ResolutionContext::new(map));
            let mut last = Vec::new();
            for l in &lines {
                last = ep.observe(l).candidates;
            }
            let top = &last[0];
            assert_eq!(top.id, target, "{lines:?}");
            assert!(top.located && is_confident(&last), "{lines:?} {last:?}");
        }
    }

    #[test]
    fn clashing_region_names_get_a_suffix() {
        let map = WorldMap::bundled();
        assert_eq!(region_phrase(map, "Micronesia"), "the Micronesia region");
        assert_eq!(region_phrase(map, "Eastern Africa"), "Eastern Africa");
    }

    #[test]
    fn perfect_director_explains_once_when_the_name_is_not_placed() {
        let map = WorldMap::bundled();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let policy = BotPolicy::perfect(BotRole::Director, 1_000);
        let mut d = DirectorBot::new(map, policy, Variant::Embodied, &mut rng);
        let plan = d.on_message(&msg(
            Origin::Server,
            Payload::Target {
                country: "SSD".into(),
            },
        ));
        assert_eq!(plan.len(), 1);
        let no = msg(
            Origin::Agent,
            Payload::Utterance {
                button: "no_2".into(),
                text: "I don't know where that is.".into(),
                country: None,
                rule: None,
            },
        );
        let more = d.on_message(&no);
        assert!(!more.is_empty());
        assert!(more
            .iter()
            .all(|p| matches!(&p.payload, Payload::Chat { text } if !text.starts_with("So,"))));
        assert!(d.on_message(&no).is_empty());
    }
}
