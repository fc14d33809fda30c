use serde::{Deserialize, Serialize};

/// Which reasoning call a ledger entry was billed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    InferGoal,
    SelectAction,
    CrossAppGoal,
    AnnotateStep,
    Summarize,
    ReviseGoal,
    TextInput,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenUsage {
    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

/// Stand-in tokenizer: one token per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRates {
    /// Dollars per million prompt tokens.
    pub prompt: f64,
    /// Dollars per million completion tokens.
    pub completion: f64,
}

impl Default for PriceRates {
    fn default() -> Self {
        Self { prompt: 0.15, completion: 0.60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub call: CallKind,
    pub usage: TokenUsage,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub entries: Vec<LedgerEntry>,
    pub rates: PriceRates,
}

impl CostLedger {
    pub fn new(rates: PriceRates) -> Self {
        Self { entries: Vec::new(), rates }
    }

    pub fn push(&mut self, call: CallKind, usage: TokenUsage) {
        self.entries.push(LedgerEntry { call, usage });
    }

    pub fn prompt_tokens(&self) -> u64 {
        self.entries.iter().map(|e| e.usage.prompt_tokens).sum()
    }

    pub fn completion_tokens(&self) -> u64 {
        self.entries.iter().map(|e| e.usage.completion_tokens).sum()
    }

    pub fn dollars(&self) -> f64 {
        dollars(self.prompt_tokens(), self.completion_tokens(), self.rates)
    }
}

pub fn dollars(prompt_tokens: u64, completion_tokens: u64, rates: PriceRates) -> f64 {
    (prompt_tokens as f64 * rates.prompt + completion_tokens as f64 * rates.completion) / 1e6
}

/// Total tokens and dollar cost of a ledger.
pub fn account_cost(ledger: &CostLedger) -> (u64, f64) {
    (ledger.prompt_tokens() + ledger.completion_tokens(), ledger.dollars())
}
