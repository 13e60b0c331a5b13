//! Cross-section construction: inclusion criteria and the transformation of
//! per-patient event streams into incidence/pre-existence states.
//!
//! Each condition of each patient gets exactly one state per cross section:
//!
//! * `PreExisting` — an event occurred before the window (looking back to
//!   `history_start`); the patient is no longer at risk of first incidence.
//! * `Incident` — the first event falls inside the window and the patient
//!   was under observation (had an encounter) before the window.
//! * `NotObserved` — nothing on record in or before the window and no
//!   encounter before the window; the data cannot reveal the condition.
//! * `Absent` — everything else.
//!
//! Timestamps are days; windows are half-open `[start, end)`, so an event on
//! a boundary belongs to the later window.

use std::collections::HashMap;

use crate::catalog::ConditionCatalog;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Male => "M",
            Sex::Female => "F",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "M" | "m" => Some(Sex::Male),
            "F" | "f" => Some(Sex::Female),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Demographics {
    /// Age in years at the end of the first cross section.
    pub age: Option<f64>,
    pub sex: Option<Sex>,
}

/// Longitudinal record for one patient.
#[derive(Debug, Clone)]
pub struct EventStream {
    pub patient_id: String,
    pub demographics: Demographics,
    /// (condition id, day) pairs, sorted by day then id.
    pub events: Vec<(String, i64)>,
    /// Days on which the patient was observable, sorted.
    pub encounters: Vec<i64>,
}

impl EventStream {
    pub fn new(
        patient_id: impl Into<String>,
        demographics: Demographics,
        mut events: Vec<(String, i64)>,
        mut encounters: Vec<i64>,
    ) -> Self {
        events.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        encounters.sort_unstable();
        EventStream {
            patient_id: patient_id.into(),
            demographics,
            events,
            encounters,
        }
    }
}

/// The two analysis windows plus the history horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossSectionSpec {
    pub history_start: i64,
    pub window1: (i64, i64),
    pub window2: (i64, i64),
}

impl CrossSectionSpec {
    pub fn new(history_start: i64, window1: (i64, i64), window2: (i64, i64)) -> Result<Self> {
        if window1.0 > window1.1 || window2.0 > window2.1 {
            return Err(Error::InvalidArgument("window start exceeds window end".into()));
        }
        if window1.1 > window2.0 {
            return Err(Error::InvalidArgument(
                "cross-section windows must be ordered and non-overlapping".into(),
            ));
        }
        if history_start > window1.0 {
            return Err(Error::InvalidArgument(
                "history_start must not exceed window1 start".into(),
            ));
        }
        Ok(CrossSectionSpec {
            history_start,
            window1,
            window2,
        })
    }

    pub fn window(&self, section: Section) -> (i64, i64) {
        match section {
            Section::Cs1 => self.window1,
            Section::Cs2 => self.window2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Cs1,
    Cs2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ConditionState {
    Absent,
    Incident,
    PreExisting,
    NotObserved,
}

impl ConditionState {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionState::Absent => "absent",
            ConditionState::Incident => "incident",
            ConditionState::PreExisting => "pre-existing",
            ConditionState::NotObserved => "not-observed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "absent" => Some(ConditionState::Absent),
            "incident" => Some(ConditionState::Incident),
            "pre-existing" => Some(ConditionState::PreExisting),
            "not-observed" => Some(ConditionState::NotObserved),
            _ => None,
        }
    }

    /// Developed: the patient has the condition (newly or not).
    pub fn present(self) -> bool {
        matches!(self, ConditionState::Incident | ConditionState::PreExisting)
    }
}

/// Inclusion criteria applied before the transformation.
#[derive(Debug, Clone, Copy)]
pub struct InclusionCriteria {
    /// Require one encounter before window1 and one after window2.
    pub require_bracketing_encounters: bool,
    /// Minimum age (years) at the end of window1.
    pub min_age: f64,
    /// Require age and sex to be known.
    pub require_demographics: bool,
}

impl Default for InclusionCriteria {
    fn default() -> Self {
        InclusionCriteria {
            require_bracketing_encounters: true,
            min_age: 18.0,
            require_demographics: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExclusionReason {
    MissingDemographics,
    UnderMinAge,
    NoPreWindow1Encounter,
    NoPostWindow2Encounter,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::MissingDemographics => "missing demographics",
            ExclusionReason::UnderMinAge => "under minimum age",
            ExclusionReason::NoPreWindow1Encounter => "no pre-window1 encounter",
            ExclusionReason::NoPostWindow2Encounter => "no post-window2 encounter",
        }
    }

    pub const ALL: [ExclusionReason; 4] = [
        ExclusionReason::MissingDemographics,
        ExclusionReason::UnderMinAge,
        ExclusionReason::NoPreWindow1Encounter,
        ExclusionReason::NoPostWindow2Encounter,
    ];
}

/// Exclusion counts per criterion. A patient failing several criteria counts
/// toward each of them.
#[derive(Debug, Clone, Default)]
pub struct ExclusionReport {
    pub examined: usize,
    pub retained: usize,
    pub excluded: usize,
    pub counts: HashMap<ExclusionReason, usize>,
    pub excluded_patients: Vec<(String, Vec<ExclusionReason>)>,
}

impl ExclusionReport {
    pub fn count(&self, reason: ExclusionReason) -> usize {
        self.counts.get(&reason).copied().unwrap_or(0)
    }
}

/// Applies the inclusion criteria, returning the qualifying streams and an
/// exclusion report. Exclusion is the mechanism here, not an error.
pub fn apply_inclusion(
    streams: Vec<EventStream>,
    spec: &CrossSectionSpec,
    criteria: &InclusionCriteria,
) -> (Vec<EventStream>, ExclusionReport) {
    let mut report = ExclusionReport {
        examined: streams.len(),
        ..Default::default()
    };
    let mut kept = Vec::with_capacity(streams.len());
    for s in streams {
        let mut reasons = Vec::new();
        if criteria.require_demographics
            && (s.demographics.age.is_none() || s.demographics.sex.is_none())
        {
            reasons.push(ExclusionReason::MissingDemographics);
        }
        if let Some(age) = s.demographics.age {
            if age < criteria.min_age {
                reasons.push(ExclusionReason::UnderMinAge);
            }
        }
        if criteria.require_bracketing_encounters {
            if !s.encounters.iter().any(|&t| t < spec.window1.0) {
                reasons.push(ExclusionReason::NoPreWindow1Encounter);
            }
            if !s.encounters.iter().any(|&t| t >= spec.window2.1) {
                reasons.push(ExclusionReason::NoPostWindow2Encounter);
            }
        }
        if reasons.is_empty() {
            kept.push(s);
        } else {
            for &r in &reasons {
                *report.counts.entry(r).or_insert(0) += 1;
            }
            report.excluded_patients.push((s.patient_id.clone(), reasons));
        }
    }
    report.retained = kept.len();
    report.excluded = report.examined - report.retained;
    (kept, report)
}

/// Classifies one (patient, condition, cross section) triple.
///
/// Events before `history_start` are outside the configured horizon and are
/// ignored; "under observation" means at least one encounter strictly before
/// the window start.
pub fn classify_state(
    stream: &EventStream,
    catalog: &ConditionCatalog,
    condition: &str,
    spec: &CrossSectionSpec,
    section: Section,
) -> Result<ConditionState> {
    if !catalog.contains(condition) {
        return Err(Error::UnknownCondition(condition.to_string()));
    }
    let (wstart, wend) = spec.window(section);
    let mut before_window = false;
    let mut in_window = false;
    for (id, day) in &stream.events {
        if id != condition || *day < spec.history_start {
            continue;
        }
        if *day < wstart {
            before_window = true;
            break;
        }
        if *day < wend {
            in_window = true;
        }
    }
    let observed = stream.encounters.iter().any(|&t| t < wstart);
    Ok(if before_window {
        ConditionState::PreExisting
    } else if in_window && observed {
        ConditionState::Incident
    } else if !in_window && !observed {
        ConditionState::NotObserved
    } else {
        ConditionState::Absent
    })
}

/// Per-patient, per-condition states for both cross sections.
#[derive(Debug, Clone)]
pub struct TransformedDataset {
    patients: Vec<String>,
    conditions: Vec<String>,
    condition_index: HashMap<String, usize>,
    state1: Vec<ConditionState>,
    state2: Vec<ConditionState>,
    /// Per patient: under observation in both cross sections.
    common: Vec<bool>,
    n_common: usize,
    demographics: Vec<Demographics>,
}

impl TransformedDataset {
    /// Direct constructor for fixtures; checks the chronicity invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn from_states(
        patients: Vec<String>,
        conditions: Vec<String>,
        state1: Vec<ConditionState>,
        state2: Vec<ConditionState>,
        common: Vec<bool>,
        demographics: Vec<Demographics>,
    ) -> Result<Self> {
        let (np, nc) = (patients.len(), conditions.len());
        if state1.len() != np * nc || state2.len() != np * nc || common.len() != np {
            return Err(Error::InvalidArgument("state matrix shape mismatch".into()));
        }
        let demographics = if demographics.is_empty() {
            vec![Demographics::default(); np]
        } else if demographics.len() == np {
            demographics
        } else {
            return Err(Error::InvalidArgument("demographics length mismatch".into()));
        };
        let mut condition_index = HashMap::new();
        for (i, c) in conditions.iter().enumerate() {
            if condition_index.insert(c.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate condition `{c}`")));
            }
        }
        for p in 0..np {
            for c in 0..nc {
                if state1[p * nc + c].present() && state2[p * nc + c] != ConditionState::PreExisting
                {
                    return Err(Error::InvalidArgument(format!(
                        "patient `{}`, condition `{}`: present at cross section 1 but not \
                         pre-existing at cross section 2",
                        patients[p], conditions[c]
                    )));
                }
            }
        }
        let n_common = common.iter().filter(|&&b| b).count();
        Ok(TransformedDataset {
            patients,
            conditions,
            condition_index,
            state1,
            state2,
            common,
            n_common,
            demographics,
        })
    }

    pub fn n_patients(&self) -> usize {
        self.patients.len()
    }

    pub fn patients(&self) -> &[String] {
        &self.patients
    }

    pub fn conditions(&self) -> &[String] {
        &self.conditions
    }

    pub fn condition_index(&self, id: &str) -> Result<usize> {
        self.condition_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownCondition(id.to_string()))
    }

    pub fn state1(&self, patient: usize, condition: usize) -> ConditionState {
        self.state1[patient * self.conditions.len() + condition]
    }

    pub fn state2(&self, patient: usize, condition: usize) -> ConditionState {
        self.state2[patient * self.conditions.len() + condition]
    }

    /// Under observation in both cross sections.
    pub fn is_common(&self, patient: usize) -> bool {
        self.common[patient]
    }

    /// Count of patients under observation in both cross sections; the `n`
    /// of the BIC penalty.
    pub fn n_common(&self) -> usize {
        self.n_common
    }

    pub fn demographics(&self, patient: usize) -> Demographics {
        self.demographics[patient]
    }

    /// Patients at risk of first incidence of `condition`: absent at cross
    /// section 1 and observable at both cross sections for it.
    pub fn at_risk_set(&self, condition: &str) -> Result<Vec<usize>> {
        let c = self.condition_index(condition)?;
        Ok((0..self.n_patients())
            .filter(|&p| {
                self.state1(p, c) == ConditionState::Absent
                    && self.state2(p, c) != ConditionState::NotObserved
            })
            .collect())
    }
}

/// Runs the full transformation over a stream set. Streams are expected to
/// have passed inclusion; event condition ids must resolve in the catalog.
pub fn transform(
    streams: &[EventStream],
    spec: &CrossSectionSpec,
    catalog: &ConditionCatalog,
) -> Result<TransformedDataset> {
    let conditions = catalog.condition_ids();
    let nc = conditions.len();
    for s in streams {
        for (id, _) in &s.events {
            if !catalog.contains(id) {
                return Err(Error::UnknownCondition(format!(
                    "{id} (patient `{}`)",
                    s.patient_id
                )));
            }
        }
    }
    let mut state1 = Vec::with_capacity(streams.len() * nc);
    let mut state2 = Vec::with_capacity(streams.len() * nc);
    let mut common = Vec::with_capacity(streams.len());
    for s in streams {
        for c in &conditions {
            state1.push(classify_state(s, catalog, c, spec, Section::Cs1)?);
            state2.push(classify_state(s, catalog, c, spec, Section::Cs2)?);
        }
        // Observation in both sections; an encounter before window1 is also
        // before window2, so one check suffices.
        common.push(s.encounters.iter().any(|&t| t < spec.window1.0));
    }
    TransformedDataset::from_states(
        streams.iter().map(|s| s.patient_id.clone()).collect(),
        conditions,
        state1,
        state2,
        common,
        streams.iter().map(|s| s.demographics).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::parse_catalog_str;

    fn tiny_catalog() -> ConditionCatalog {
        parse_catalog_str(
            "category: C\nlabel: C\n\ncondition: x\nlabel: x\nkind: diagnosis\ncategory: C\n\ncondition: y\nlabel: y\nkind: diagnosis\ncategory: C\n",
            "<test>",
        )
        .unwrap()
    }

    fn spec() -> CrossSectionSpec {
        CrossSectionSpec::new(0, (100, 200), (200, 300)).unwrap()
    }

    fn demo() -> Demographics {
        Demographics {
            age: Some(50.0),
            sex: Some(Sex::Female),
        }
    }

    fn stream(id: &str, events: Vec<(&str, i64)>, encounters: Vec<i64>) -> EventStream {
        EventStream::new(
            id,
            demo(),
            events.into_iter().map(|(c, d)| (c.to_string(), d)).collect(),
            encounters,
        )
    }

    #[test]
    fn spec_validation() {
        assert!(CrossSectionSpec::new(0, (100, 200), (150, 300)).is_err());
        assert!(CrossSectionSpec::new(150, (100, 200), (200, 300)).is_err());
        assert!(CrossSectionSpec::new(0, (200, 100), (200, 300)).is_err());
        // Zero-length windows and gaps are fine.
        assert!(CrossSectionSpec::new(0, (100, 100), (200, 300)).is_ok());
    }

    #[test]
    fn classify_basic_cases() {
        let cat = tiny_catalog();
        let sp = spec();
        // Event during window1: pre-existing at section 2.
        let s = stream("p", vec![("x", 150)], vec![10, 310]);
        assert_eq!(
            classify_state(&s, &cat, "x", &sp, Section::Cs2).unwrap(),
            ConditionState::PreExisting
        );
        assert_eq!(
            classify_state(&s, &cat, "x", &sp, Section::Cs1).unwrap(),
            ConditionState::Incident
        );
        // First event during window2, encounter during window1: incident.
        let s = stream("p", vec![("x", 250)], vec![150, 310]);
        assert_eq!(
            classify_state(&s, &cat, "x", &sp, Section::Cs2).unwrap(),
            ConditionState::Incident
        );
        // No event, no encounter before window2: not observed.
        let s = stream("p", vec![], vec![250, 310]);
        assert_eq!(
            classify_state(&s, &cat, "x", &sp, Section::Cs2).unwrap(),
            ConditionState::NotObserved
        );
        assert!(classify_state(&s, &cat, "zzz", &sp, Section::Cs1).is_err());
    }

    #[test]
    fn history_horizon_is_respected() {
        let cat = tiny_catalog();
        let sp = CrossSectionSpec::new(50, (100, 200), (200, 300)).unwrap();
        // Event before history_start is invisible.
        let s = stream("p", vec![("x", 20)], vec![10, 310]);
        assert_eq!(
            classify_state(&s, &cat, "x", &sp, Section::Cs1).unwrap(),
            ConditionState::Absent
        );
    }

    #[test]
    fn boundary_event_belongs_to_later_window() {
        let cat = tiny_catalog();
        let sp = spec();
        let s = stream("p", vec![("x", 200)], vec![10, 310]);
        // Day 200 is the window2 start: not pre-existing there, incident.
        assert_eq!(
            classify_state(&s, &cat, "x", &sp, Section::Cs2).unwrap(),
            ConditionState::Incident
        );
        assert_eq!(
            classify_state(&s, &cat, "x", &sp, Section::Cs1).unwrap(),
            ConditionState::Absent
        );
    }

    #[test]
    fn inclusion_criteria() {
        let sp = spec();
        let crit = InclusionCriteria::default();
        let streams = vec![
            // Encounters only inside window1: fails both bracketing criteria.
            stream("a", vec![], vec![120, 150]),
            // Under 18 at window1 end.
            EventStream::new(
                "b",
                Demographics {
                    age: Some(17.0),
                    sex: Some(Sex::Male),
                },
                vec![],
                vec![10, 310],
            ),
            // Meets all criteria.
            stream("c", vec![], vec![10, 310]),
            // Missing sex.
            EventStream::new(
                "d",
                Demographics {
                    age: Some(40.0),
                    sex: None,
                },
                vec![],
                vec![10, 310],
            ),
        ];
        let (kept, report) = apply_inclusion(streams, &sp, &crit);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].patient_id, "c");
        assert_eq!(report.examined, 4);
        assert_eq!(report.excluded, 3);
        assert_eq!(report.count(ExclusionReason::NoPostWindow2Encounter), 1);
        assert_eq!(report.count(ExclusionReason::NoPreWindow1Encounter), 1);
        assert_eq!(report.count(ExclusionReason::UnderMinAge), 1);
        assert_eq!(report.count(ExclusionReason::MissingDemographics), 1);
        let a = report
            .excluded_patients
            .iter()
            .find(|(id, _)| id == "a")
            .unwrap();
        assert!(a.1.contains(&ExclusionReason::NoPostWindow2Encounter));
    }

    /// Six-patient fixture worked by hand against the state definitions.
    #[test]
    fn transform_matches_hand_worked_table() {
        use ConditionState::*;
        let cat = tiny_catalog();
        let sp = spec();
        let streams = vec![
            stream("p1", vec![("x", 50)], vec![10, 310]),
            stream("p2", vec![("x", 150)], vec![10, 310]),
            stream("p3", vec![("x", 250)], vec![10, 310]),
            stream("p4", vec![], vec![10, 310]),
            stream("p5", vec![("x", 250)], vec![150, 310]),
            stream("p6", vec![], vec![250, 310]),
        ];
        let data = transform(&streams, &sp, &cat).unwrap();
        let x = data.condition_index("x").unwrap();
        let expected = [
            (PreExisting, PreExisting), // p1: event in history
            (Incident, PreExisting),    // p2: onset in window1
            (Absent, Incident),         // p3: onset in window2
            (Absent, Absent),           // p4: never
            (NotObserved, Incident),    // p5: first encounter inside window1
            (NotObserved, NotObserved), // p6: first encounter inside window2
        ];
        for (p, (s1, s2)) in expected.iter().enumerate() {
            assert_eq!(data.state1(p, x), *s1, "patient {p} cs1");
            assert_eq!(data.state2(p, x), *s2, "patient {p} cs2");
        }
        // y never occurs: absent wherever observed.
        let y = data.condition_index("y").unwrap();
        assert_eq!(data.state1(0, y), Absent);
        assert_eq!(data.state2(5, y), NotObserved);
        // Patients observed in both sections: p1..p4 (encounter before 100).
        assert_eq!(data.n_common(), 4);
        assert!(data.is_common(0));
        assert!(!data.is_common(4));
    }

    #[test]
    fn empty_input() {
        let cat = tiny_catalog();
        let data = transform(&[], &spec(), &cat).unwrap();
        assert_eq!(data.n_patients(), 0);
        assert_eq!(data.n_common(), 0);
        assert_eq!(data.conditions().len(), 2);
    }

    #[test]
    fn at_risk_set_rules() {
        let cat = tiny_catalog();
        let sp = spec();
        let streams = vec![
            stream("pre", vec![("x", 50)], vec![10, 310]),     // pre-existing at cs1
            stream("inc", vec![("x", 250)], vec![10, 310]),    // absent cs1, incident cs2
            stream("not", vec![], vec![250, 310]),             // not observed
            stream("none", vec![], vec![10, 310]),             // absent both
        ];
        let data = transform(&streams, &sp, &cat).unwrap();
        let at_risk = data.at_risk_set("x").unwrap();
        let ids: Vec<&str> = at_risk.iter().map(|&p| data.patients()[p].as_str()).collect();
        assert_eq!(ids, vec!["inc", "none"]);
        assert!(data.at_risk_set("zzz").is_err());
    }

    #[test]
    fn chronicity_invariant_enforced() {
        let res = TransformedDataset::from_states(
            vec!["p".into()],
            vec!["x".into()],
            vec![ConditionState::Incident],
            vec![ConditionState::Absent],
            vec![true],
            vec![],
        );
        assert!(res.is_err());
    }

    #[test]
    fn zero_length_windows_never_incident() {
        let cat = tiny_catalog();
        let sp = CrossSectionSpec::new(0, (100, 100), (200, 200)).unwrap();
        let streams = vec![
            stream("a", vec![("x", 50)], vec![10, 310]),
            stream("b", vec![("x", 150)], vec![10, 310]),
            stream("c", vec![("x", 250)], vec![10, 310]),
        ];
        let data = transform(&streams, &sp, &cat).unwrap();
        for p in 0..3 {
            for c in 0..2 {
                assert_ne!(data.state1(p, c), ConditionState::Incident);
                assert_ne!(data.state2(p, c), ConditionState::Incident);
            }
        }
    }
}
