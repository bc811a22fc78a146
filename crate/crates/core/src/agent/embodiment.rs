//! Gaze and expression events for an embodied Matcher. Nothing here drives
//! hardware; events go out on the wire for a robot adapter or avatar pane.

use serde::{Deserialize, Serialize};

use crate::game::{SelectionOutcome, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GazeSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mood {
    Happy,
    Sad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbodimentEvent {
    GazeScreen,
    GazeUser,
    GazeRegion { side: GazeSide },
    Expression { mood: Mood },
    HeadPose { tilt: f64, pan: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeConfig {
    /// References west of this longitude look left.
    pub left_of_lon: f64,
    /// References east of this longitude look right.
    pub right_of_lon: f64,
    /// Director silence before the agent looks up at the user.
    pub silence_ms: u64,
    /// How long a look at the user lasts before returning to the screen.
    pub glance_ms: u64,
}

impl Default for GazeConfig {
    fn default() -> Self {
        Self {
            left_of_lon: -30.0,
            right_of_lon: 60.0,
            silence_ms: 8_000,
            glance_ms: 1_500,
        }
    }
}

/// Keeps the agent looking at the shared screen, with glances at the user
/// during long silences and towards referenced map regions.
#[derive(Debug, Clone)]
pub struct GazeController {
    enabled: bool,
    config: GazeConfig,
    last_speech_ms: u64,
    looking_at_user_since: Option<u64>,
    glanced_this_silence: bool,
}

impl GazeController {
    /// Emits nothing unless `variant` is EMBODIED.
    pub fn new(variant: Variant, config: GazeConfig, now_ms: u64) -> Self {
        Self {
            enabled: variant == Variant::Embodied,
            config,
            last_speech_ms: now_ms,
            looking_at_user_since: None,
            glanced_this_silence: false,
        }
    }

    pub fn config(&self) -> &GazeConfig {
        &self.config
    }

    /// The Director spoke: the silence timer restarts.
    pub fn on_director_speech(&mut self, now_ms: u64) -> Vec<EmbodimentEvent> {
        self.last_speech_ms = now_ms;
        self.glanced_this_silence = false;
        self.back_to_screen()
    }

    /// The agent refers to a place at longitude `lon`.
    pub fn on_reference(&mut self, lon: f64) -> Option<EmbodimentEvent> {
        if !self.enabled {
            return None;
        }
        let side = if lon < self.config.left_of_lon {
            GazeSide::Left
        } else if lon > self.config.right_of_lon {
            GazeSide::Right
        } else {
            return None;
        };
        Some(EmbodimentEvent::GazeRegion { side })
    }

    /// Advances time. Returns a `gaze_user` once per silence and the
    /// `gaze_screen` that ends it.
    pub fn poll(&mut self, now_ms: u64) -> Vec<EmbodimentEvent> {
        if !self.enabled {
            return Vec::new();
        }
        if let Some(since) = self.looking_at_user_since {
            if now_ms.saturating_sub(since) >= self.config.glance_ms {
                return self.back_to_screen();
            }
            return Vec::new();
        }
        if !self.glanced_this_silence
            && now_ms.saturating_sub(self.last_speech_ms) >= self.config.silence_ms
        {
            self.glanced_this_silence = true;
            self.looking_at_user_since = Some(now_ms);
            return vec![EmbodimentEvent::GazeUser];
        }
        Vec::new()
    }

    /// The next time [`poll`](Self::poll) has work: the end of the current
    /// glance, or the point where silence triggers one.
    pub fn next_deadline(&self) -> Option<u64> {
        if !self.enabled {
            return None;
        }
        match self.looking_at_user_since {
            Some(since) => Some(since + self.config.glance_ms),
            None if !self.glanced_this_silence => {
                Some(self.last_speech_ms + self.config.silence_ms)
            }
            None => None,
        }
    }

    fn back_to_screen(&mut self) -> Vec<EmbodimentEvent> {
        if self.looking_at_user_since.take().is_some() && self.enabled {
            vec![EmbodimentEvent::GazeScreen]
        } else {
            Vec::new()
        }
    }
}

/// Picks the reaction button for an embodied selection result: happy when
/// it scored, sad when the target was lost, none for a wrong first guess.
/// `nth` rotates between the two buttons of each mood.
pub fn reaction_button(variant: Variant, outcome: &SelectionOutcome, nth: usize) -> Option<String> {
    if variant != Variant::Embodied || !outcome.accepted {
        return None;
    }
    let mood = if outcome.scored > 0 {
        "happy"
    } else if outcome.advanced {
        "sad"
    } else {
        return None;
    };
    Some(format!("reaction_{mood}_{}", nth % 2 + 1))
}
