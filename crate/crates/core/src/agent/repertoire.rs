//! The fixed set of things the Matcher agent can say.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::embodiment::{EmbodimentEvent, Mood};
use super::AgentError;
use crate::game::Variant;

static BUNDLED: &str = include_str!("../../data/repertoire.toml");

/// Number of buttons every WEB console shows.
pub const WEB_BUTTONS: usize = 23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Opening,
    Closing,
    Confirmation,
    Backchannel,
    Yes,
    No,
    GameStatement,
    GameQuestion,
    SituationFix,
    ReactionHappy,
    ReactionSad,
}

impl Category {
    pub const WEB: [Category; 8] = [
        Category::Opening,
        Category::Closing,
        Category::Confirmation,
        Category::Backchannel,
        Category::Yes,
        Category::No,
        Category::GameStatement,
        Category::GameQuestion,
    ];

    pub fn is_embodied_only(self) -> bool {
        matches!(
            self,
            Category::SituationFix | Category::ReactionHappy | Category::ReactionSad
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtteranceButton {
    pub id: String,
    pub category: Category,
    pub text: String,
    pub variants: Vec<Variant>,
}

impl UtteranceButton {
    pub fn available_in(&self, variant: Variant) -> bool {
        self.variants.contains(&variant)
    }

    /// Whether the text has a `{country}` slot.
    pub fn takes_country(&self) -> bool {
        self.text.contains("{country}")
    }
}

/// A spoken line, always traceable to its button.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub button: String,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expression: Option<EmbodimentEvent>,
}

impl fmt::Display for Utterance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.button, self.text)
    }
}

#[derive(Deserialize)]
struct RepertoireFile {
    version: String,
    button: Vec<UtteranceButton>,
}

#[derive(Debug, Clone)]
pub struct Repertoire {
    version: String,
    buttons: BTreeMap<String, UtteranceButton>,
    order: Vec<String>,
}

impl Repertoire {
    /// The repertoire shipped with the crate.
    pub fn bundled() -> &'static Repertoire {
        static REP: OnceLock<Repertoire> = OnceLock::new();
        REP.get_or_init(|| Repertoire::from_toml(BUNDLED).expect("bundled repertoire is valid"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AgentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| AgentError::Storage(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Parses and validates: unique ids, exactly 23 WEB buttons covering the
    /// eight WEB categories, and 3 + 2 + 2 EMBODIED-only additions.
    pub fn from_toml(text: &str) -> Result<Self, AgentError> {
        let file: RepertoireFile =
            toml::from_str(text).map_err(|e| AgentError::Repertoire(e.to_string()))?;
        let mut buttons = BTreeMap::new();
        let mut order = Vec::new();
        for b in file.button {
            if b.id.is_empty() || b.text.is_empty() {
                return Err(AgentError::Repertoire(format!("empty button {:?}", b.id)));
            }
            if b.category.is_embodied_only() && b.available_in(Variant::Web) {
                return Err(AgentError::Repertoire(format!(
                    "{} must be EMBODIED-only",
                    b.id
                )));
            }
            order.push(b.id.clone());
            if let Some(dup) = buttons.insert(b.id.clone(), b) {
                return Err(AgentError::Repertoire(format!(
                    "duplicate button {}",
                    dup.id
                )));
            }
        }
        let rep = Self {
            version: format!(
                "{}-{}",
                file.version,
                &hex::encode(Sha256::digest(text))[..12]
            ),
            buttons,
            order,
        };
        let web = rep.available(Variant::Web).count();
        if web != WEB_BUTTONS {
            return Err(AgentError::Repertoire(format!(
                "{web} WEB buttons, expected {WEB_BUTTONS}"
            )));
        }
        for cat in Category::WEB {
            if !rep.available(Variant::Web).any(|b| b.category == cat) {
                return Err(AgentError::Repertoire(format!("no WEB button for {cat:?}")));
            }
        }
        for (cat, n) in [
            (Category::SituationFix, 3),
            (Category::ReactionHappy, 2),
            (Category::ReactionSad, 2),
        ] {
            let got = rep
                .available(Variant::Embodied)
                .filter(|b| b.category == cat)
                .count();
            if got != n {
                return Err(AgentError::Repertoire(format!(
                    "{got} {cat:?} buttons, expected {n}"
                )));
            }
        }
        Ok(rep)
    }

    /// Declared version plus a content hash prefix.
    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn get(&self, id: &str) -> Option<&UtteranceButton> {
        self.buttons.get(id)
    }

    /// Buttons usable in `variant`, in file order.
    pub fn available(&self, variant: Variant) -> impl Iterator<Item = &UtteranceButton> {
        self.order
            .iter()
            .map(|id| &self.buttons[id])
            .filter(move |b| b.available_in(variant))
    }

    pub fn by_category(&self, category: Category) -> impl Iterator<Item = &UtteranceButton> {
        self.order
            .iter()
            .map(|id| &self.buttons[id])
            .filter(move |b| b.category == category)
    }

    /// Speaks `button_id`. Templated buttons need `country`; reactions carry
    /// the matching facial expression.
    pub fn utter(
        &self,
        button_id: &str,
        variant: Variant,
        country: Option<&str>,
    ) -> Result<Utterance, AgentError> {
        let b = self
            .get(button_id)
            .ok_or_else(|| AgentError::UnknownButton(button_id.to_string()))?;
        if !b.available_in(variant) {
            return Err(AgentError::UnavailableButton {
                button: button_id.to_string(),
                variant,
            });
        }
        let text = match (b.takes_country(), country) {
            (true, Some(name)) => b.text.replace("{country}", name),
            (true, None) => return Err(AgentError::MissingCountry(button_id.to_string())),
            (false, _) => b.text.clone(),
        };
        let expression = match b.category {
            Category::ReactionHappy => Some(EmbodimentEvent::Expression { mood: Mood::Happy }),
            Category::ReactionSad => Some(EmbodimentEvent::Expression { mood: Mood::Sad }),
            _ => None,
        };
        Ok(Utterance {
            button: b.id.clone(),
            text,
            expression,
        })
    }
}
