use super::*;

fn cfg(s: &str) -> ChannelConfig {
    s.parse().unwrap()
}

fn rates(s: &str) -> RateTuple {
    s.parse().unwrap()
}

fn run(r: &str, n: &str) -> Result<Schedule, Box<InfeasibilityReport>> {
    schedule(&rates(r), &cfg(n), SchedulerOptions::default())
}

fn snapshot(trace: &GosTrace, stage: StageId) -> &StageSnapshot {
    trace.residuals.iter().find(|s| s.stage == stage).unwrap()
}

#[test]
fn mixed_tuple_on_654_trace() {
    let s = run("1,1,1,1,0,2,0,0,2", "6,5,4").unwrap();
    let t = &s.trace;
    assert_eq!(t.a, [1, 0, 0]);
    assert_eq!(t.b, 1);
    assert_eq!(
        t.c_amounts,
        vec![TemplateAmount {
            template: "c:2|p:1>3|c:3".into(),
            kind: None,
            amount: 1
        }]
    );
    assert!(t.d_amounts.is_empty() && t.e_amounts.is_empty() && t.f_amounts.is_empty());
    assert_eq!(t.final_residual(), Some(&RateTuple::ZERO));
    s.plan.check_invariants().unwrap();
}

#[test]
fn max_gain_uses_named_level() {
    let s = run("1,1,1,1,0,2,0,0,2", "6,5,4").unwrap();
    let mg: Vec<u32> = s
        .plan
        .uplink
        .iter()
        .filter(|(_, u)| u.stage == StageId::MaxGain)
        .map(|(l, _)| l.0)
        .collect();
    assert_eq!(mg, vec![5]);
    let snap = snapshot(&s.trace, StageId::MaxGain);
    assert_eq!(snap.uplink_free, [5, 4, 4]);
    assert_eq!(snap.downlink_free, [5, 4, 4]);
}

#[test]
fn max_gain_residual_direction() {
    let s = run("2,0,0,3,0,0,0,0,0", "4,4,4").unwrap();
    assert_eq!(s.trace.a, [2, 0, 0]);
    assert_eq!(
        snapshot(&s.trace, StageId::MaxGain).rates,
        rates("0,0,0,1,0,0,0,0,0")
    );
}

#[test]
fn no_pairs_leaves_state_unchanged() {
    let s = run("1,0,1,0,1,0,0,0,0", "3,3,3").unwrap();
    assert_eq!(s.trace.a, [0, 0, 0]);
    let snap = snapshot(&s.trace, StageId::MaxGain);
    assert_eq!(snap.rates, rates("1,0,1,0,1,0,0,0,0"));
    assert_eq!(snap.uplink_free, [3, 3, 3]);
}

#[test]
fn full_common_two_units() {
    let s = run("0,0,2,0,0,2,0,0,2", "6,6,6").unwrap();
    assert_eq!(s.trace.b, 2);
    let levels: Vec<u32> = s
        .plan
        .downlink
        .iter()
        .filter(|(_, d)| d.stage == StageId::FullCommon)
        .map(|(l, _)| l.0)
        .collect();
    assert_eq!(levels, vec![1, 2, 3, 4]);
}

#[test]
fn full_common_single_unit_consumes_two_levels() {
    let s = run("1,0,1,1,0,1,0,0,1", "6,5,4").unwrap();
    assert_eq!(s.trace.b, 1);
    assert_eq!(
        snapshot(&s.trace, StageId::FullCommon).downlink_free,
        [3, 2, 2]
    );
}

#[test]
fn full_common_skipped_without_all_commons() {
    let s = run("0,0,1,0,0,1,0,0,0", "2,2,2").unwrap();
    assert_eq!(s.trace.b, 0);
}

#[test]
fn two_common_template_clears_residual() {
    let s = run("0,1,0,0,0,1,0,0,1", "3,2,2").unwrap();
    assert_eq!(s.trace.c_amounts.len(), 1);
    assert_eq!(s.trace.c_amounts[0].template, "c:2|p:1>3|c:3");
    assert_eq!(
        snapshot(&s.trace, StageId::TwoCommonOnePrivate).rates,
        RateTuple::ZERO
    );
}

#[test]
fn two_common_hub_from_user_one() {
    // r2c = 0, r21 > 0: z1c hub pairs with z21 and z3c
    let s = run("0,0,1,1,0,0,0,0,1", "3,3,3").unwrap();
    let templates: Vec<&str> = s
        .trace
        .c_amounts
        .iter()
        .map(|t| t.template.as_str())
        .collect();
    assert_eq!(templates, vec!["c:1|p:2>1|c:3"]);
}

#[test]
fn one_common_d2_example() {
    let s = run("0,0,2,2,0,0,0,1,0", "5,5,5").unwrap();
    assert_eq!(s.trace.d2, 1);
    assert_eq!(s.trace.d3, 0);
    assert_eq!(s.trace.d1, 0);
    assert_eq!(
        snapshot(&s.trace, StageId::OneCommonTwoPrivate).rates,
        rates("0,0,1,1,0,0,0,0,0")
    );
}

#[test]
fn one_common_no_hub_is_noop() {
    let s = run("1,0,0,0,1,0,1,0,0", "3,3,3").unwrap();
    assert!(s.trace.d_amounts.is_empty());
}

#[test]
fn cyclic_three_bits_on_two_levels() {
    let s = run("1,0,0,0,1,0,1,0,0", "3,3,3").unwrap();
    assert_eq!((s.trace.e1, s.trace.e2), (1, 0));
    let snap = snapshot(&s.trace, StageId::Cyclic);
    assert_eq!(snap.rates, RateTuple::ZERO);
    assert_eq!(snap.uplink_free, [1, 1, 1]);
    assert_eq!(snap.downlink_free, [1, 1, 1]);
}

#[test]
fn cyclic_reverse_orientation() {
    let s = run("0,1,0,1,0,0,0,1,0", "2,2,2").unwrap();
    assert_eq!((s.trace.e1, s.trace.e2), (0, 1));
}

#[test]
fn min_gain_single_common() {
    let s = run("0,0,1,0,0,0,0,0,0", "1,1,1").unwrap();
    assert_eq!(s.trace.f_amounts, vec![("c:1".parse().unwrap(), 1)]);
}

#[test]
fn blocked_common_on_654_without_repair() {
    let r = run("1,0,4,2,0,0,1,0,0", "6,5,4").unwrap_err();
    assert_eq!(r.reason, InfeasibilityReason::Lemma1Violated);
    assert_eq!(r.cause, InfeasibilityReason::NoDownlinkLevelForCommon);
    assert_eq!(r.failing_stage, StageId::MinGain);
    assert!(r.blocked[0].message.is_common());
    assert_eq!(r.lemma1_value, 6);
}

#[test]
fn outside_outer_region_fails_cleanly() {
    let r = run("1,0,0,0,0,0,0,0,0", "0,0,0").unwrap_err();
    assert_eq!(r.reason, InfeasibilityReason::NoUplinkLevel);
    assert_eq!(r.blocked.len(), 1);
}

#[test]
fn zero_tuple_on_zero_channel() {
    let s = run("0,0,0,0,0,0,0,0,0", "0,0,0").unwrap();
    assert!(s.plan.uplink.is_empty());
}

#[test]
fn closed_form_agrees_on_examples() {
    for (r, n) in [
        ("1,1,1,1,0,2,0,0,2", "6,5,4"),
        ("0,0,2,2,0,0,0,1,0", "5,5,5"),
        ("1,0,0,0,1,0,1,0,0", "3,3,3"),
    ] {
        let s = run(r, n).unwrap();
        let predicted = closed_form_levels(&cfg(n), &s.trace);
        for (snap, (up, down)) in s.trace.residuals.iter().zip(predicted) {
            assert_eq!(snap.uplink_free.map(i64::from), up, "{r} {:?}", snap.stage);
            assert_eq!(
                snap.downlink_free.map(i64::from),
                down,
                "{r} {:?}",
                snap.stage
            );
        }
    }
}

#[test]
fn pipeline_registry() {
    assert_eq!(Pipeline::gos(SchedulerOptions::default()).ids().len(), 6);
    assert_eq!(
        Pipeline::gos(SchedulerOptions { repair: true })
            .ids()
            .last(),
        Some(&StageId::Repair)
    );
    assert!(Pipeline::from_names(&["max-gain", "nope"]).is_none());
    let p = Pipeline::from_names(&["min-gain"]).unwrap();
    assert!(p
        .run(
            &rates("1,1,0,0,0,0,0,0,0"),
            &cfg("2,2,2"),
            SchedulerOptions::default()
        )
        .is_ok());
}
