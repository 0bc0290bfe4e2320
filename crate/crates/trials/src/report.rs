//! Study report over completed sessions.
//!
//! Raters are screened first (catch trials, zero rating variance, median
//! response time under one second). Each remaining rater's test ratings are
//! Z-scored over that rater's own ratings, then fed to the human hit rate,
//! the pairwise κ summary and the AUC of mean Z per shown video.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use voe_core::eval::{auc_roc, human_hit_rate, pairwise_kappa, z_label, z_normalize, HumanHitRate, HumanTrial, KappaSummary, RaterLabels};
use voe_core::scenario::{EventCategory, Version};

use crate::study::{Session, StudyError, StudyState};

pub const MIN_MEDIAN_RESPONSE_MS: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportFilters {
    /// Restrict trial statistics to one category; Z-scores still use all of
    /// a rater's test ratings.
    pub category: Option<EventCategory>,
    /// Apply the catch-trial and response-time screens.
    pub exclusions: bool,
}

impl Default for ReportFilters {
    fn default() -> Self {
        Self { category: None, exclusions: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Exclusion {
    CatchFailed { trial_id: String, version: Version, rating: u8 },
    ZeroVariance,
    FastResponses { median_ms: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaterSummary {
    pub session_id: String,
    pub alias: String,
    pub responses: usize,
    pub included: bool,
    pub exclusions: Vec<Exclusion>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub human_hit_rate: Option<HumanHitRate>,
    pub auc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub filters: ReportFilters,
    pub sessions_total: usize,
    pub sessions_completed: usize,
    pub raters_included: usize,
    pub raters: Vec<RaterSummary>,
    pub human_hit_rate: Option<HumanHitRate>,
    pub kappa: KappaSummary,
    pub auc: Option<f64>,
    pub per_category: BTreeMap<EventCategory, CategoryReport>,
}

fn median(xs: &mut [u64]) -> f64 {
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2] as f64
    } else {
        (xs[n / 2 - 1] as f64 + xs[n / 2] as f64) / 2.0
    }
}

fn screen(s: &Session, cfg: &crate::study::StudyConfig, exclusions: bool) -> Vec<Exclusion> {
    let mut out = Vec::new();
    let test: Vec<f64> =
        s.assignment.iter().zip(&s.responses).filter(|(a, _)| !a.catch).map(|(_, r)| f64::from(r.rating)).collect();
    if exclusions {
        for (a, r) in s.assignment.iter().zip(&s.responses).filter(|(a, _)| a.catch) {
            let item = cfg.catch_trials.iter().find(|c| c.trial_id == a.trial_id && c.version == a.version);
            if item.is_none_or(|c| !c.passed(r.rating)) {
                out.push(Exclusion::CatchFailed { trial_id: a.trial_id.clone(), version: a.version, rating: r.rating });
            }
        }
    }
    if z_normalize(&test).is_err() {
        out.push(Exclusion::ZeroVariance);
    }
    if exclusions {
        let mut times: Vec<u64> = s.responses.iter().map(|r| r.elapsed_ms).collect();
        let m = median(&mut times);
        if m < MIN_MEDIAN_RESPONSE_MS as f64 {
            out.push(Exclusion::FastResponses { median_ms: m });
        }
    }
    out
}

/// One rater's Z-scored test ratings keyed by `(trial_id, version)`.
fn z_scores(s: &Session) -> BTreeMap<(String, Version), f64> {
    let items: Vec<(String, Version, f64)> = s
        .assignment
        .iter()
        .zip(&s.responses)
        .filter(|(a, _)| !a.catch)
        .map(|(a, r)| (a.trial_id.clone(), a.version, f64::from(r.rating)))
        .collect();
    let raw: Vec<f64> = items.iter().map(|x| x.2).collect();
    let z = z_normalize(&raw).expect("screened for variance");
    items.into_iter().zip(z).map(|((id, v, _), z)| ((id, v), z)).collect()
}

fn stats(
    raters: &[(String, BTreeMap<(String, Version), f64>)],
    trials: &[&str],
) -> (Option<HumanHitRate>, Option<f64>) {
    let mut human = Vec::new();
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for &id in trials {
        let mut t = HumanTrial { trial_id: id.to_string(), ..Default::default() };
        for (_, zs) in raters {
            if let Some(z) = zs.get(&(id.to_string(), Version::Expected)) {
                t.expected.push(*z);
            }
            if let Some(z) = zs.get(&(id.to_string(), Version::Surprising)) {
                t.surprising.push(*z);
            }
        }
        for (v, xs) in [(false, &t.expected), (true, &t.surprising)] {
            if !xs.is_empty() {
                scores.push(xs.iter().sum::<f64>() / xs.len() as f64);
                labels.push(v);
            }
        }
        human.push(t);
    }
    (human_hit_rate(&human).ok(), auc_roc(&scores, &labels).ok())
}

pub fn compute_report(state: &StudyState, filters: &ReportFilters) -> Result<StudyReport, StudyError> {
    let cfg = state.config()?;
    let completed: Vec<&Session> = state.sessions.values().filter(|s| s.is_complete()).collect();
    if completed.is_empty() {
        return Err(StudyError::NoData);
    }
    let mut summaries = Vec::new();
    let mut raters = Vec::new();
    for s in &completed {
        let exclusions = screen(s, cfg, filters.exclusions);
        let included = exclusions.is_empty();
        if included {
            raters.push((s.session_id.clone(), z_scores(s)));
        }
        summaries.push(RaterSummary {
            session_id: s.session_id.clone(),
            alias: s.alias.clone(),
            responses: s.responses.len(),
            included,
            exclusions,
        });
    }
    let in_scope = |c: EventCategory| filters.category.is_none_or(|f| f == c);
    let trials: Vec<&str> =
        cfg.test_trials.iter().filter(|t| in_scope(t.category)).map(|t| t.trial_id.as_str()).collect();
    let (human, auc) = stats(&raters, &trials);
    let labels: Vec<RaterLabels> = raters
        .iter()
        .map(|(id, zs)| {
            let mut items: Vec<(String, bool)> = zs
                .iter()
                .filter(|((t, _), _)| cfg.category_of(t).is_some_and(in_scope))
                .map(|((t, v), z)| (format!("{t}:{v}"), z_label(*z)))
                .collect();
            items.sort();
            RaterLabels { rater_id: id.clone(), items }
        })
        .collect();
    let mut per_category = BTreeMap::new();
    for c in EventCategory::ALL.into_iter().filter(|c| in_scope(*c)) {
        let ids: Vec<&str> = cfg.test_trials.iter().filter(|t| t.category == c).map(|t| t.trial_id.as_str()).collect();
        if ids.is_empty() {
            continue;
        }
        let (h, a) = stats(&raters, &ids);
        per_category.insert(c, CategoryReport { human_hit_rate: h, auc: a });
    }
    Ok(StudyReport {
        filters: *filters,
        sessions_total: state.sessions.len(),
        sessions_completed: completed.len(),
        raters_included: raters.len(),
        raters: summaries,
        human_hit_rate: human,
        kappa: pairwise_kappa(&labels),
        auc,
        per_category,
    })
}

impl StudyReport {
    pub fn render(&self) -> String {
        let f = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
        let mut s = format!(
            "sessions: {} total, {} completed, {} raters included\n",
            self.sessions_total, self.sessions_completed, self.raters_included
        );
        for r in self.raters.iter().filter(|r| !r.included) {
            let reasons: Vec<String> = r
                .exclusions
                .iter()
                .map(|e| match e {
                    Exclusion::CatchFailed { trial_id, rating, .. } => format!("catch {trial_id} rated {rating}"),
                    Exclusion::ZeroVariance => "constant ratings".into(),
                    Exclusion::FastResponses { median_ms } => format!("median response {median_ms:.0} ms"),
                })
                .collect();
            s += &format!("excluded {} ({}): {}\n", r.session_id, r.alias, reasons.join(", "));
        }
        s += &format!("human H_r: {}\n", f(self.human_hit_rate.map(|h| h.value)));
        s += &format!(
            "kappa: mean {} median {} over {} of {} pairs\n",
            f(self.kappa.mean),
            f(self.kappa.median),
            self.kappa.pairs_with_overlap,
            self.kappa.pairs_total
        );
        s += &format!("AUC of mean Z: {}\n", f(self.auc));
        for (c, r) in &self.per_category {
            s += &format!(
                "  {} {:<12} H_r {}  AUC {}\n",
                c.letter(),
                c.name(),
                f(r.human_hit_rate.map(|h| h.value)),
                f(r.auc)
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::tests_support::config;
    use crate::study::{Event, ResponseRequest};

    /// Runs one session with ratings chosen from the assigned version.
    fn run(st: &mut StudyState, rate: impl Fn(usize, Version, bool) -> (i64, u64)) -> String {
        let s = st.plan_session("r", 0).unwrap();
        let id = s.session_id.clone();
        st.apply(&Event::SessionCreated { session: s.clone() }).unwrap();
        st.apply(&Event::FamiliarizationCompleted { session_id: id.clone(), at_ms: 0 }).unwrap();
        for (i, a) in s.assignment.iter().enumerate() {
            let (rating, elapsed_ms) = rate(i, a.version, a.catch);
            let req = ResponseRequest {
                session_id: id.clone(),
                index: i,
                trial_id: a.trial_id.clone(),
                rating,
                elapsed_ms,
                client_timestamp_ms: 0,
            };
            let r = st.plan_response(&req).unwrap();
            st.apply(&Event::ResponseRecorded { record: r }).unwrap();
        }
        id
    }

    fn truthful(i: usize, v: Version, _: bool) -> (i64, u64) {
        match v {
            Version::Expected => (10 + (i % 5) as i64, 2000),
            Version::Surprising => (80 + (i % 7) as i64, 2000),
        }
    }

    fn studied(n: usize) -> StudyState {
        let mut st = StudyState::default();
        st.apply(&Event::StudyInitialized { config: config(n) }).unwrap();
        st
    }

    #[test]
    fn empty_study_is_no_data() {
        assert_eq!(compute_report(&studied(4), &ReportFilters::default()), Err(StudyError::NoData));
        assert_eq!(compute_report(&StudyState::default(), &ReportFilters::default()), Err(StudyError::NotInitialized));
    }

    #[test]
    fn perfect_raters_give_hit_rate_one() {
        let mut st = studied(20);
        for _ in 0..4 {
            run(&mut st, truthful);
        }
        let r = compute_report(&st, &ReportFilters::default()).unwrap();
        assert_eq!(r.raters_included, 4);
        assert_eq!(r.human_hit_rate.unwrap().value, 1.0);
        assert_eq!(r.auc, Some(1.0));
        assert_eq!(r.kappa.pairs_total, 6);
        assert_eq!(r.kappa.mean, Some(1.0));
        assert!(r.render().contains("human H_r: 1.000"));
    }

    #[test]
    fn screens_exclude_raters_from_all_statistics() {
        let mut st = studied(20);
        let good = run(&mut st, truthful);
        run(&mut st, truthful);
        let catch_fail = run(&mut st, |i, v, c| if c { (50, 2000) } else { truthful(i, v, c) });
        let constant = run(&mut st, |_, _, c| if c { (0, 2000) } else { (40, 2000) });
        let fast = run(&mut st, |i, v, c| (truthful(i, v, c).0, 300));
        // An inverted rater who would drag every statistic down if counted.
        let inverted = run(&mut st, |i, v, c| if c { truthful(i, v, c) } else { truthful(i, v.other(), c) });
        let r = compute_report(&st, &ReportFilters::default()).unwrap();
        let find = |id: &str| r.raters.iter().find(|x| x.session_id == id).unwrap();
        assert!(find(&good).included);
        assert!(matches!(find(&catch_fail).exclusions[..], [Exclusion::CatchFailed { .. }, ..]));
        assert!(find(&constant).exclusions.contains(&Exclusion::ZeroVariance));
        assert!(matches!(find(&fast).exclusions[..], [Exclusion::FastResponses { .. }]));
        assert!(find(&inverted).included);
        assert_eq!(r.raters_included, 3);
        assert_eq!(r.kappa.pairs_total, 3);
        let loose = compute_report(&st, &ReportFilters { exclusions: false, ..Default::default() }).unwrap();
        assert_eq!(loose.raters_included, 5);
        assert!(loose.raters.iter().find(|x| x.session_id == constant).is_some_and(|x| !x.included));
    }

    #[test]
    fn category_filter_restricts_trials() {
        let mut st = studied(6);
        run(&mut st, truthful);
        run(&mut st, truthful);
        let r = compute_report(&st, &ReportFilters { category: Some(EventCategory::Barrier), ..Default::default() })
            .unwrap();
        assert!(r.human_hit_rate.is_none());
        assert!(r.per_category.is_empty());
        let all = compute_report(&st, &ReportFilters::default()).unwrap();
        assert_eq!(all.per_category.keys().copied().collect::<Vec<_>>(), vec![EventCategory::Support]);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3, 1, 2]), 2.0);
        assert_eq!(median(&mut [4, 1, 3, 2]), 2.5);
    }
}
