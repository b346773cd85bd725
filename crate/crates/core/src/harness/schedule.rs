//! Stage schedules: ordered (threshold, skill) pairs written in the compact
//! `"0.17(S) -> 0.74(W) -> 2.0(R)"` form. Thresholds are in millions of
//! steps at full scale; routing normalizes them by the final threshold to
//! get phase breakpoints.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::env::refs::Skill;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSchedule {
    /// (until_step_millions, skill), strictly increasing thresholds.
    pub stages: Vec<(f64, Skill)>,
}

impl StageSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::EmptyInput("stage schedule"));
        }
        let mut prev = f64::NEG_INFINITY;
        for &(until, _) in &self.stages {
            if until <= prev {
                return Err(Error::ScheduleOrder {
                    prev,
                    next: until,
                });
            }
            prev = until;
        }
        Ok(())
    }

    /// Stage index active at normalized progress in [0, 1]: thresholds are
    /// scaled by the final one.
    pub fn stage_at_progress(&self, progress: f64) -> usize {
        let last = self.stages.last().expect("validated nonempty").0;
        for (i, &(until, _)) in self.stages.iter().enumerate() {
            if progress < until / last {
                return i;
            }
        }
        self.stages.len() - 1
    }

    pub fn skill_at_progress(&self, progress: f64) -> Skill {
        self.stages[self.stage_at_progress(progress)].1
    }
}

/// Default letter map: S, W, R for the stand/walk/reach stages.
pub fn default_letter_map() -> BTreeMap<String, Skill> {
    let mut m = BTreeMap::new();
    m.insert("S".to_string(), Skill::Stand);
    m.insert("W".to_string(), Skill::Walk);
    m.insert("R".to_string(), Skill::Reach);
    m
}

/// Parse `"0.17(S) -> 0.74(W) -> 2.0(R)"` with the given letter map.
/// Thresholds must be strictly increasing; unknown letters are rejected.
pub fn parse_schedule(text: &str, letters: &BTreeMap<String, Skill>) -> Result<StageSchedule> {
    let mut stages = Vec::new();
    for part in text.split("->") {
        let part = part.trim();
        if part.is_empty() {
            return Err(Error::Parse(format!("empty stage in schedule: {text}")));
        }
        let open = part
            .find('(')
            .ok_or_else(|| Error::Parse(format!("stage missing '(': {part}")))?;
        if !part.ends_with(')') {
            return Err(Error::Parse(format!("stage missing ')': {part}")));
        }
        let number = part[..open].trim();
        let letter = &part[open + 1..part.len() - 1];
        let until: f64 = number
            .parse()
            .map_err(|e| Error::Parse(format!("stage threshold '{number}': {e}")))?;
        let skill = *letters.get(letter).ok_or_else(|| Error::UnknownTag {
            kind: "schedule skill letter",
            value: letter.to_string(),
        })?;
        stages.push((until, skill));
    }
    let schedule = StageSchedule { stages };
    schedule.validate()?;
    Ok(schedule)
}

fn format_threshold(x: f64) -> String {
    if x == x.trunc() {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

/// Inverse of [`parse_schedule`] for valid schedules.
pub fn format_schedule(schedule: &StageSchedule, letters: &BTreeMap<String, Skill>) -> String {
    let reverse: BTreeMap<Skill, &String> = letters.iter().map(|(k, v)| (*v, k)).collect();
    schedule
        .stages
        .iter()
        .map(|(until, skill)| {
            let letter = reverse
                .get(skill)
                .map(|s| s.as_str())
                .unwrap_or_else(|| skill.as_str());
            format!("{}({})", format_threshold(*until), letter)
        })
        .collect::<Vec<_>>()
        .join(" -> ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_stage_door_schedule() {
        let s = parse_schedule("0.17(S) -> 0.74(W) -> 2.0(R)", &default_letter_map()).unwrap();
        assert_eq!(
            s.stages,
            vec![(0.17, Skill::Stand), (0.74, Skill::Walk), (2.0, Skill::Reach)]
        );
    }

    #[test]
    fn parses_two_stage_schedule() {
        let s = parse_schedule("0.87(S) -> 2.0(R)", &default_letter_map()).unwrap();
        assert_eq!(s.stages.len(), 2);
        assert_eq!(s.stages[1], (2.0, Skill::Reach));
    }

    #[test]
    fn rejects_non_increasing_thresholds() {
        assert!(matches!(
            parse_schedule("1.0(S) -> 0.5(W)", &default_letter_map()),
            Err(Error::ScheduleOrder { .. })
        ));
    }

    #[test]
    fn rejects_unknown_letter() {
        assert!(matches!(
            parse_schedule("1.0(S) -> 2.0(Z)", &default_letter_map()),
            Err(Error::UnknownTag { .. })
        ));
    }

    #[test]
    fn format_round_trips_exactly() {
        let letters = default_letter_map();
        for text in ["0.17(S) -> 0.74(W) -> 2.0(R)", "0.87(S) -> 2.0(R)"] {
            let parsed = parse_schedule(text, &letters).unwrap();
            assert_eq!(format_schedule(&parsed, &letters), text);
        }
    }

    #[test]
    fn extended_letter_map() {
        let mut letters = default_letter_map();
        letters.insert("C".into(), Skill::Crawl);
        let s = parse_schedule("0.4(C) -> 1.0(R)", &letters).unwrap();
        assert_eq!(s.stages[0].1, Skill::Crawl);
    }

    #[test]
    fn stage_lookup_uses_normalized_progress() {
        let s = parse_schedule("0.17(S) -> 0.74(W) -> 2.0(R)", &default_letter_map()).unwrap();
        // Breakpoints normalize to 0.085 and 0.37.
        assert_eq!(s.skill_at_progress(0.0), Skill::Stand);
        assert_eq!(s.skill_at_progress(0.08), Skill::Stand);
        assert_eq!(s.skill_at_progress(0.2), Skill::Walk);
        assert_eq!(s.skill_at_progress(0.5), Skill::Reach);
        assert_eq!(s.skill_at_progress(1.0), Skill::Reach);
    }
}
