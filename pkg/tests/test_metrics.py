import math

import pytest

from kepfair.colgen import Lottery, run_scheme
from kepfair.errors import UndefinedPofError, ValidationError
from kepfair.instance import Instance
from kepfair.metrics import (
    NEG_INF_SENTINEL,
    SchemeReport,
    build_report,
    fairness_value,
    lottery_text,
    min_support_fraction,
    parse_lottery,
    pof,
    read_reports_csv,
    relative_distances,
    write_reports_csv,
)
from kepfair.plans import Chain, Cycle, ExchangePlan
from kepfair.schemes import FairnessConcept, RefPoint, SchemeKind


@pytest.fixture
def two_plan_lottery():
    big = ExchangePlan(
        cycles=(Cycle(("v1", "v2", "v3")),), chains=(Chain(("v7", "v6", "v5")),)
    )
    small = ExchangePlan(cycles=(Cycle(("v1", "v4")),))
    return Lottery(support=((big, 0.75), (small, 0.25)))


class TestPof:
    def test_fig1_s2(self, fig1):
        s2 = ExchangePlan(
            cycles=(Cycle(("v1", "v4")),), chains=(Chain(("v7", "v6", "v5")),)
        )
        lot = Lottery(support=((s2, 1.0),))
        assert pof(lot.expected_value(fig1), 5.0) == pytest.approx(0.2, abs=1e-12)

    def test_zero_optimum_undefined(self):
        with pytest.raises(UndefinedPofError):
            pof(0.0, 0.0)

    def test_utilitarian_pof_zero(self):
        assert pof(5.0, 5.0) == 0.0


class TestFairnessValue:
    def test_rawls(self, fig1, two_plan_lottery):
        val = fairness_value(FairnessConcept("rawls"), two_plan_lottery, fig1, set())
        assert val == pytest.approx(0.25)  # v4 is covered only by the small plan

    def test_aristotle_counts_hard_mass(self, fig1, two_plan_lottery):
        val = fairness_value(
            FairnessConcept("aristotle"), two_plan_lottery, fig1, {"v1", "v4"}
        )
        assert val == pytest.approx(1.0 + 0.25)

    def test_nash_neg_inf_on_uncovered(self, fig1, two_plan_lottery):
        # v5 has probability 0.75 but nothing is 0... v4 only 0.25; check a lottery
        # leaving v4 uncovered entirely
        big = ExchangePlan(
            cycles=(Cycle(("v1", "v2", "v3")),), chains=(Chain(("v7", "v6", "v5")),)
        )
        lot = Lottery(support=((big, 1.0),))
        assert fairness_value(FairnessConcept("nash"), lot, fig1, set()) == -math.inf

    def test_if_zero_when_uniform(self, fig1):
        lot = Lottery(support=((ExchangePlan(), 1.0),))
        assert fairness_value(FairnessConcept("if"), lot, fig1, set()) == 0.0

    def test_utilitarian_is_expected_value(self, fig1, two_plan_lottery):
        val = fairness_value(
            FairnessConcept("utilitarian"), two_plan_lottery, fig1, set()
        )
        assert val == pytest.approx(two_plan_lottery.expected_value(fig1))


class TestDistances:
    def test_at_ideal(self):
        ref = RefPoint(d=(0.0, 0.0), i=(4.0, 2.0))
        assert relative_distances((4.0, 2.0), ref) == pytest.approx((0.0, 0.0))

    def test_at_reference(self):
        ref = RefPoint(d=(1.0, -3.0), i=(4.0, 2.0))
        assert relative_distances((1.0, -3.0), ref) == pytest.approx((1.0, 1.0))

    def test_zero_span_is_zero_distance(self):
        ref = RefPoint(d=(4.0, 0.0), i=(4.0, 2.0))
        assert relative_distances((4.0, 1.0), ref)[0] == 0.0


class TestSupport:
    def test_min_support_fraction(self, two_plan_lottery):
        assert min_support_fraction(two_plan_lottery) == 0.25


class TestReports:
    def make_report(self, fig1, caps):
        run = run_scheme(fig1, caps, FairnessConcept("rawls"), SchemeKind("single"))
        return build_report(run, 5.0)

    def test_report_values(self, fig1, caps):
        rep = self.make_report(fig1, caps)
        assert rep.fairness == pytest.approx(0.5, abs=1e-6)
        assert rep.converged
        assert rep.n_hard == 2

    def test_text_contains_key_lines(self, fig1, caps):
        text = self.make_report(fig1, caps).to_text()
        assert "price of fairness" in text
        assert "rawls x single" in text

    def test_csv_round_trip(self, fig1, caps):
        rep = self.make_report(fig1, caps)
        [back] = read_reports_csv(write_reports_csv([rep]))
        assert back == rep

    def test_neg_inf_sentinel_round_trip(self, fig1, caps):
        rep = self.make_report(fig1, caps)
        frozen = SchemeReport(**{**rep.__dict__, "fairness": -math.inf})
        [back] = read_reports_csv(write_reports_csv([frozen]))
        assert back.fairness == -math.inf
        assert NEG_INF_SENTINEL in write_reports_csv([frozen])

    def test_bad_header_rejected(self):
        with pytest.raises(ValidationError):
            read_reports_csv("wrong,header\n1,2\n")


class TestLotteryIo:
    def test_round_trip(self, two_plan_lottery):
        back = parse_lottery(lottery_text(two_plan_lottery))
        assert {p.serialize(): round(q, 9) for p, q in back.support} == {
            p.serialize(): round(q, 9) for p, q in two_plan_lottery.support
        }

    def test_bad_line(self):
        with pytest.raises(ValidationError):
            parse_lottery("not-a-prob  empty\n")
