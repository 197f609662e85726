//! Physical/spurious classification of computed eigenvalues.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const DEFAULT_MATCH_RTOL: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Physical,
    Spurious,
    /// Above the window cap and unmatched.
    Unclassified,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::Physical => "physical",
            Flag::Spurious => "spurious",
            Flag::Unclassified => "unclassified",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classified {
    pub value: f64,
    pub flag: Flag,
    /// Position in the expanded reference list of the matched value.
    pub reference_index: Option<usize>,
    pub reference: Option<f64>,
    /// `|value - reference| / reference`, when matched.
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpuriousReport {
    pub entries: Vec<Classified>,
    pub window_cap: f64,
    pub match_rtol: f64,
}

impl SpuriousReport {
    pub fn spurious_count(&self) -> usize {
        self.entries.iter().filter(|e| e.flag == Flag::Spurious).count()
    }

    /// The computed value matched to reference `i`, if any.
    pub fn matched(&self, i: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.reference_index == Some(i))
            .map(|e| e.value)
    }
}

/// Greedy one-to-one matching of ascending computed values to the ascending
/// reference list (repeated by multiplicity). A reference the computed values
/// have already passed by more than `match_rtol` counts as missed. Unmatched
/// values below `window_cap` are spurious.
pub fn classify_spurious(
    computed: &[f64],
    reference: &[f64],
    window_cap: f64,
    match_rtol: f64,
) -> SpuriousReport {
    let mut values = computed.to_vec();
    values.sort_by(f64::total_cmp);
    let mut j = 0;
    let entries = values
        .into_iter()
        .map(|x| {
            while j < reference.len() && reference[j] * (1.0 + match_rtol) < x {
                j += 1;
            }
            if j < reference.len() && (x - reference[j]).abs() <= match_rtol * reference[j].abs() {
                j += 1;
                Classified {
                    value: x,
                    flag: Flag::Physical,
                    reference_index: Some(j - 1),
                    reference: Some(reference[j - 1]),
                    distance: Some((x - reference[j - 1]).abs() / reference[j - 1].abs()),
                }
            } else {
                Classified {
                    value: x,
                    flag: if x < window_cap {
                        Flag::Spurious
                    } else {
                        Flag::Unclassified
                    },
                    reference_index: None,
                    reference: None,
                    distance: None,
                }
            }
        })
        .collect();
    SpuriousReport {
        entries,
        window_cap,
        match_rtol,
    }
}
