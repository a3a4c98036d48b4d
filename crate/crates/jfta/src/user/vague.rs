//! Template bank for the rule-based user's natural-language replies.
//!
//! Fault-confirmation replies are deliberately vague: they hedge, describe
//! observations instead of verdicts, and never use conclusive vocabulary.
//! Solution-confirmation replies are plain effective/ineffective statements.
//! Rollback corrections are the one place a node name is spelled out.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::UserAction;

/// Hedging markers every fault-confirmation reply carries at least one of.
pub const HEDGE_MARKERS: &[&str] = &[
    "seems", "feels", "kind of", "looks like", "hard to say", "might",
];

/// Conclusive vocabulary that never appears in rendered fault replies.
pub const CONCLUSIVE_TERMS: &[&str] = &["exists", "does not exist", "normal", "fault", "broken"];

const FAULT_TRUE: &[&str] = &[
    "Now that you mention it, that part seems to be acting a little strange lately.",
    "I took a quick look, and it kind of feels different from how it usually runs.",
    "Hmm, something about what you described looks like it changed recently — hard to say exactly what.",
    "The area you're pointing at seems a bit off; I noticed it behaving oddly earlier today.",
    "It feels like there's something unusual going on around that piece — I can't quite pin it down.",
    "I went over and checked: it kind of looks different than it did last week, to be honest.",
];

const FAULT_FALSE: &[&str] = &[
    "I checked around what you mentioned — it seems about the same, and I haven't noticed any particular changes.",
    "That area looks like it always does to me; I haven't noticed anything odd so far.",
    "Honestly it feels pretty much as usual over there; nothing new has caught my eye.",
    "I kept an eye on it for a while and it kind of looks the way it always does.",
    "Hard to say anything changed — I haven't spotted anything different when I looked.",
];

const SOLUTION_TRUE: &[&str] = &[
    "This method is effective and the issue has been resolved.",
    "That did it — after following those steps the issue has been resolved.",
    "I carried that out and the problem cleared up; resolved from my side.",
];

const SOLUTION_FALSE: &[&str] = &[
    "The method is ineffective.",
    "I tried that, but it didn't help.",
    "No luck — that approach didn't change anything for the issue.",
];

const CORRECTION: &[&str] = &[
    "Wait — about the {name} I brought up earlier: I went back and rechecked, and it actually seems alright. I think I had that one wrong.",
    "Sorry, I need to correct something: what I said before about the {name} doesn't hold up — on a second look it seems fine after all.",
    "Actually, scratch my earlier remark on the {name}; after checking again it looks like nothing is off there.",
];

/// Retraction stems, one per correction template. A rollback correction is
/// recognizable by these, which matters when it happens to name the very
/// node the displaced move was asking about.
pub const CORRECTION_MARKERS: &[&str] = &[
    "had that one wrong",
    "need to correct",
    "scratch my earlier",
];

/// Does this reply text retract an earlier statement?
pub fn is_correction_text(text: &str) -> bool {
    let lower = text.to_lowercase();
    CORRECTION_MARKERS.iter().any(|m| lower.contains(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bank {
    FaultTrue,
    FaultFalse,
    SolutionTrue,
    SolutionFalse,
    Correction,
}

impl Bank {
    fn templates(self) -> &'static [&'static str] {
        match self {
            Bank::FaultTrue => FAULT_TRUE,
            Bank::FaultFalse => FAULT_FALSE,
            Bank::SolutionTrue => SOLUTION_TRUE,
            Bank::SolutionFalse => SOLUTION_FALSE,
            Bank::Correction => CORRECTION,
        }
    }
}

/// Seeded template selector. Never emits the same template twice in a row
/// within one session.
#[derive(Debug, Clone)]
pub struct VagueRenderer {
    rng: ChaCha8Rng,
    last: Option<(Bank, usize)>,
}

impl VagueRenderer {
    pub fn new(style_seed: u64) -> Self {
        VagueRenderer {
            rng: ChaCha8Rng::seed_from_u64(style_seed),
            last: None,
        }
    }

    /// Render the reply text for a classified, non-invalid move.
    pub fn render(&mut self, name: &str, verdict: bool, action: UserAction) -> String {
        let bank = match (action, verdict) {
            (UserAction::FaultConfirmation, true) => Bank::FaultTrue,
            (UserAction::FaultConfirmation, false) => Bank::FaultFalse,
            (UserAction::SolutionConfirmation, true) => Bank::SolutionTrue,
            (UserAction::SolutionConfirmation, false) => Bank::SolutionFalse,
            (UserAction::InvalidInput, _) => return String::new(),
        };
        let text = self.draw(bank);
        text.replace("{name}", name)
    }

    /// Render the rollback correction naming the node being retracted.
    pub fn render_correction(&mut self, name: &str) -> String {
        self.draw(Bank::Correction).replace("{name}", name)
    }

    fn draw(&mut self, bank: Bank) -> &'static str {
        let templates = bank.templates();
        let mut idx = self.rng.gen_range(0..templates.len());
        if let Some((last_bank, last_idx)) = self.last {
            if last_bank == bank && last_idx == idx {
                idx = (idx + 1) % templates.len();
            }
        }
        self.last = Some((bank, idx));
        templates[idx]
    }
}

/// One-shot rendering with a fresh seeded renderer; same inputs and seed
/// always produce the same text.
pub fn render_vague(name: &str, verdict: bool, action: UserAction, style_seed: u64) -> String {
    VagueRenderer::new(style_seed).render(name, verdict, action)
}
