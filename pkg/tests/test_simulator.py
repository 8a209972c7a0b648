import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bruteforce import sweep
from cbdc_pki import mutations
from cbdc_pki.planner import plan_schedule
from cbdc_pki.simulator import (
    ManufacturePolicy,
    PaymentPolicy,
    Report,
    Scenario,
    ScenarioError,
    ScheduleRejected,
    replay_counterexample,
    run,
)
from cbdc_pki.types import Role


@pytest.fixture(scope="module")
def small():
    return plan_schedule(6, 36)


def scenario(schedule, **kw):
    kw.setdefault("manufacturers", ("m1", "m2"))
    kw.setdefault("fsps", ())
    return Scenario(schedule, **kw)


def test_empty_scenario(small):
    report = run(Scenario.empty(small))
    assert report.all_passed
    assert all(r.counterexamples == 0 for r in report.requirements.values())
    assert "cards_manufactured" not in report.events
    assert len(report.ticks) == small.horizon


def test_small_valid_schedule_passes(small):
    report = run(scenario(small))
    assert report.all_passed, report.summary()
    assert report.events["cards_manufactured"] == 2 * 36
    assert report.events["issuance_probes"] == 36
    assert report.ticks[0]["active"]["RootCA"] == 1


@pytest.fixture(scope="module")
def cr_mutation():
    s = mutations.short_service_ramp(plan_schedule(12, 144), Role.CENTRAL_REGISTER)
    return s, run(scenario(s, strict=False, payments=PaymentPolicy(3, max_pairs=50)))


def test_central_register_mutation_fails_r1_r3(cr_mutation):
    schedule, report = cr_mutation
    assert [v.constraint for v in report.schedule_violations] == ["d"]
    v = report.verdicts()
    assert not v["R1"] and not v["R3"]
    cx = report.requirements["R1"].first
    bad = next(g for g in schedule.generations(Role.CENTRAL_REGISTER) if g.plan.ramp_up == 6)
    # the offending card predates the new register generation
    assert cx.tick < bad.verify_from
    assert f"creg-g{bad.index}" in cx.entities


def test_replay_ends_in_untrusted_signer(cr_mutation):
    _, report = cr_mutation
    trace = replay_counterexample(report, "R3")
    assert trace[-1].startswith(f"t={report.requirements['R3'].first.tick} ")
    assert trace[-1].endswith("is not pinned on " + report.requirements["R3"].first.entities[0])
    assert "reject(untrusted-signer)" in trace[-1]
    assert any("manufacture" in line for line in trace[:-1])


def test_replay_of_passing_requirement_fails(cr_mutation):
    _, report = cr_mutation
    with pytest.raises(ValueError, match="passed"):
        replay_counterexample(report, "R2")
    with pytest.raises(ValueError):
        replay_counterexample(report, "R9")


def test_deterministic(small):
    bad = mutations.short_manufacturer_passive(small)
    a = run(scenario(bad, strict=False, seed=4, payments=PaymentPolicy(2, max_pairs=10)))
    b = run(scenario(bad, strict=False, seed=4, payments=PaymentPolicy(2, max_pairs=10)))
    assert a.dumps() == b.dumps()
    assert replay_counterexample(a, "R3") == replay_counterexample(b, "R3")


def test_strict_refuses_invalid_schedule(small):
    with pytest.raises(ScheduleRejected) as exc:
        run(scenario(mutations.manufacturer_gap(small)))
    assert {v.constraint for v in exc.value.violations} == {"c"}


def test_fail_iff_counterexample(cr_mutation):
    _, report = cr_mutation
    for res in report.requirements.values():
        assert res.passed == (res.counterexamples == 0) == (res.first is None)


def test_report_round_trip(cr_mutation):
    _, report = cr_mutation
    doc = json.loads(report.dumps())
    assert doc["requirements"]["R1"]["passed"] is False
    again = Report.from_dict(doc)
    assert again.verdicts() == report.verdicts()
    assert again.requirements["R3"].first == report.requirements["R3"].first


@pytest.mark.parametrize("name", sorted(mutations.CANONICAL))
def test_mutations_match_brute_force(small, name):
    bad = mutations.CANONICAL[name](small)
    report = run(scenario(bad, strict=False))
    assert report.verdicts() == sweep(bad)
    assert not report.all_passed


@settings(max_examples=15)
@given(st.sets(st.integers(0, 35), max_size=6), st.sets(st.integers(0, 35), max_size=6), st.sampled_from(sorted(mutations.CANONICAL)))
def test_monotone_failure(base, more, name):
    bad = mutations.CANONICAL[name](plan_schedule(6, 36))
    common = dict(strict=False, manufacture=None, issuance_probes=False, payments=PaymentPolicy(1))
    few = run(scenario(bad, manufacture_events=tuple((t, "m1") for t in sorted(base)), **common))
    many = run(scenario(bad, manufacture_events=tuple((t, "m1") for t in sorted(base | more)), **common))
    for key, passed in many.verdicts().items():
        if not few.verdicts()[key]:
            assert not passed


def test_explicit_payment_events(small):
    sc = scenario(
        small, manufacture=None, payments=None, issuance_probes=False,
        manufacture_events=((3, "m1"), (5, "m2")), payment_events=((6, "card-0", "card-1"), (30, "card-0", "card-1")),
    )
    report = run(sc)
    assert report.all_passed
    assert report.events["authentications"] == 1
    assert report.events["payments_skipped"] == 1


def test_online_fsps_and_revocation(small):
    sc = scenario(
        small, manufacture=None, payments=None, issuance_probes=False,
        fsps=((0, "fsp-1"), (0, "fsp-2")), revocations=((7, "fsp-2"),), sync_every={"fsp-1": 100},
    )
    report = run(sc)
    assert report.events["revocations"] == 1
    # fsp-1 synced only at tick 0, so it never sees the revocation
    assert "online_rejects_revoked" not in report.events
    sc2 = Scenario(**{**sc.__dict__, "sync_every": {}})
    assert run(sc2).events["online_rejects_revoked"] > 0


def test_max_pairs_caps_authentications(small):
    report = run(scenario(small, payments=PaymentPolicy(1, max_pairs=3)))
    assert report.events["authentications"] <= 3 * 36


def test_scenario_file_forms(tmp_path, small):
    sched = tmp_path / "s.json"
    sched.write_text(small.dumps())
    by_file = tmp_path / "a.json"
    by_file.write_text(json.dumps({"schedule_file": "s.json", "manufacturers": ["x"]}))
    assert Scenario.load(by_file).schedule == small
    inline = Scenario.from_dict({"schedule": small.to_dict(), "payments": None})
    assert inline.payments is None
    planned = Scenario.from_dict({"plan": {"u": 6, "horizon": 36}, "manufacture": {"every": 2}})
    assert planned.schedule == small and planned.manufacture == ManufacturePolicy(every=2)
    assert Scenario.from_dict(Scenario(small).to_dict()) == Scenario(small)


@pytest.mark.parametrize(
    "doc",
    [
        {},
        {"plan": {"u": 6}},
        {"plan": {"u": 6, "horizon": 36}, "manufacturers": []},
        {"plan": {"u": 6, "horizon": 36}, "manufacturers": ["a", "a"]},
        {"plan": {"u": 6, "horizon": 36}, "payments": {"stride": 0}},
        {"plan": {"u": 6, "horizon": 36}, "manufacture_events": [[1, "ghost"]]},
        {"plan": {"u": 6, "horizon": 36}, "manufacture": {"bogus": 1}},
    ],
)
def test_bad_scenarios(doc):
    with pytest.raises(ScenarioError):
        Scenario.from_dict(doc)


def test_default_fsps(small):
    sc = Scenario(small)
    assert len(sc.fsps) == 5 and len(sc.manufacturers) == 3
