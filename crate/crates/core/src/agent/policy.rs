//! A rule-based Matcher that plays from the Director's text alone.
//!
//! The policy keeps one resolver [`Episode`] per target and remembers the
//! first country the Director names outright: that is assumed to be the
//! target. Other countries the Director locates become anchors.

use serde::{Deserialize, Serialize};

use super::repertoire::{Repertoire, Utterance};
use super::AgentKnowledge;
use crate::game::{SelectionOutcome, Variant};
use crate::resolver::{Candidate, Clause, Derivation, Episode, ResolutionContext};
use crate::world::{fold_name, CountryId, WorldMap};

/// Which rule produced an action. Every agent message carries one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyRule {
    /// Confident, located referent that is (or may be) the target.
    SelectConfident,
    /// Confident, located referent that is not the named target.
    AcknowledgeAnchor,
    /// Director asked whether a country is known.
    AnswerProbe,
    /// Confident referent the agent cannot place.
    Unlocated,
    /// Several candidates too close to call.
    Clarify,
    /// The referent is already selected.
    AlreadySelected,
    /// Nothing in the utterance could be interpreted.
    NoParse,
}

impl PolicyRule {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyRule::SelectConfident => "select_confident",
            PolicyRule::AcknowledgeAnchor => "acknowledge_anchor",
            PolicyRule::AnswerProbe => "answer_probe",
            PolicyRule::Unlocated => "unlocated",
            PolicyRule::Clarify => "clarify",
            PolicyRule::AlreadySelected => "already_selected",
            PolicyRule::NoParse => "no_parse",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum AgentAction {
    Select {
        country: CountryId,
        rule: PolicyRule,
        derivation: Vec<Derivation>,
    },
    Say {
        utterance: Utterance,
        rule: PolicyRule,
    },
    NoOp {
        rule: PolicyRule,
    },
}

impl AgentAction {
    pub fn rule(&self) -> PolicyRule {
        match self {
            AgentAction::Select { rule, .. }
            | AgentAction::Say { rule, .. }
            | AgentAction::NoOp { rule } => *rule,
        }
    }
}

/// Buttons and thresholds the policy uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Select only when the top score is at least this multiple of the
    /// runner-up.
    pub confidence_ratio: f64,
    pub confirm_button: String,
    pub acknowledge_button: String,
    pub dont_know_button: String,
    pub probe_yes_button: String,
    pub probe_no_button: String,
    pub clarify_button: String,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            confidence_ratio: 2.0,
            confirm_button: "confirmation_1".into(),
            acknowledge_button: "backchannel_1".into(),
            dont_know_button: "no_2".into(),
            probe_yes_button: "yes_2".into(),
            probe_no_button: "no_1".into(),
            clarify_button: "game_question_1".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AutonomousMatcher<'m> {
    map: &'m WorldMap,
    repertoire: &'m Repertoire,
    config: PolicyConfig,
    knowledge: AgentKnowledge,
    episode: Episode<'m>,
    named_target: Option<CountryId>,
    selected: Option<CountryId>,
}

impl<'m> AutonomousMatcher<'m> {
    pub fn new(map: &'m WorldMap, repertoire: &'m Repertoire, knowledge: AgentKnowledge) -> Self {
        Self::with_config(map, repertoire, knowledge, PolicyConfig::default())
    }

    pub fn with_config(
        map: &'m WorldMap,
        repertoire: &'m Repertoire,
        knowledge: AgentKnowledge,
        config: PolicyConfig,
    ) -> Self {
        let ctx = ResolutionContext::new(map).with_known(knowledge.known_countries.iter().cloned());
        Self {
            map,
            repertoire,
            config,
            knowledge,
            episode: Episode::new(ctx),
            named_target: None,
            selected: None,
        }
    }

    pub fn knowledge(&self) -> &AgentKnowledge {
        &self.knowledge
    }

    pub fn into_knowledge(self) -> AgentKnowledge {
        self.knowledge
    }

    pub fn episode(&self) -> &Episode<'m> {
        &self.episode
    }

    /// The country the Director named as the target, if any yet.
    pub fn named_target(&self) -> Option<&CountryId> {
        self.named_target.as_ref()
    }

    fn variant(&self) -> Variant {
        self.knowledge.variant
    }

    fn say(&self, button: &str, country: Option<&CountryId>, rule: PolicyRule) -> AgentAction {
        let name = country
            .and_then(|id| self.map.get(id.as_str()))
            .map(|c| c.name.as_str());
        let utterance = self
            .repertoire
            .utter(button, self.variant(), name)
            .unwrap_or_else(|e| panic!("policy button {button}: {e}"));
        AgentAction::Say { utterance, rule }
    }

    /// Reacts to one Director utterance.
    pub fn step(&mut self, director_text: &str) -> Vec<AgentAction> {
        let probe = fold_name(director_text).contains("know where");
        let res = self.episode.observe(director_text);
        if res.clauses.is_empty() || res.candidates.is_empty() {
            return vec![self.say(&self.config.dont_know_button, None, PolicyRule::NoParse)];
        }
        let cands = &res.candidates;
        let top = &cands[0];
        let named = first_named(&res.clauses, cands);

        if probe {
            if let Some(id) = named {
                return if self.knowledge.knows(id.as_str()) {
                    self.note_anchor(id);
                    vec![self.say(
                        &self.config.probe_yes_button,
                        Some(id),
                        PolicyRule::AnswerProbe,
                    )]
                } else {
                    vec![self.say(&self.config.probe_no_button, None, PolicyRule::AnswerProbe)]
                };
            }
        } else if self.named_target.is_none() {
            self.named_target = named.cloned();
        }

        if !self.confident(cands) {
            return vec![self.say(
                &self.config.clarify_button,
                Some(&top.id),
                PolicyRule::Clarify,
            )];
        }
        if !top.located {
            return vec![self.say(&self.config.dont_know_button, None, PolicyRule::Unlocated)];
        }
        if self.named_target.as_ref().is_some_and(|t| t != &top.id) {
            self.note_anchor(&top.id);
            return vec![self.say(
                &self.config.acknowledge_button,
                None,
                PolicyRule::AcknowledgeAnchor,
            )];
        }
        if self.selected.as_ref() == Some(&top.id) {
            return vec![AgentAction::NoOp {
                rule: PolicyRule::AlreadySelected,
            }];
        }
        self.selected = Some(top.id.clone());
        vec![
            AgentAction::Select {
                country: top.id.clone(),
                rule: PolicyRule::SelectConfident,
                derivation: top.derivation.clone(),
            },
            self.say(
                &self.config.confirm_button,
                None,
                PolicyRule::SelectConfident,
            ),
        ]
    }

    /// Feeds back a game result. A correct identification joins the known
    /// set; an advance starts a fresh episode.
    pub fn on_outcome(&mut self, outcome: &SelectionOutcome) {
        if outcome.correct {
            if let Some(t) = &outcome.resolved_target {
                self.learn(t);
            }
        }
        if outcome.advanced {
            self.new_target();
        }
    }

    /// Forgets per-target state.
    pub fn new_target(&mut self) {
        self.episode.reset();
        self.named_target = None;
        self.selected = None;
    }

    fn learn(&mut self, id: &CountryId) {
        if self
            .knowledge
            .learn_country(self.map, id.as_str())
            .unwrap_or(false)
        {
            self.episode.context_mut().known.insert(id.clone());
        }
    }

    fn note_anchor(&mut self, id: &CountryId) {
        let label = self
            .map
            .get(id.as_str())
            .map(|c| c.name.clone())
            .unwrap_or_else(|| id.to_string());
        let _ = self.knowledge.add_anchor(self.map, &label, id.as_str());
        self.episode.context_mut().push_anchor(id.clone());
    }

    fn confident(&self, cands: &[Candidate]) -> bool {
        match cands {
            [] => false,
            [_] => true,
            [top, next, ..] => top.score >= self.config.confidence_ratio * next.score,
        }
    }
}

/// The candidate for the first name mention in the utterance.
fn first_named<'c>(clauses: &[Clause], cands: &'c [Candidate]) -> Option<&'c CountryId> {
    let mention = clauses.iter().find_map(|c| match c {
        Clause::NameMention { text } => Some(text),
        _ => None,
    })?;
    cands
        .iter()
        .find(|c| {
            c.derivation.iter().any(|d| match d {
                Derivation::ExactName { mention: m } | Derivation::FuzzyName { mention: m, .. } => {
                    m == mention
                }
                _ => false,
            })
        })
        .map(|c| &c.id)
}
