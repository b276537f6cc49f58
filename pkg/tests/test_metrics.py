import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    ap_exhaustive,
    ctrv_cv_deviation,
    greedy_by_enumeration,
    max_cardinality_matching,
    random_eval_set,
)
from trajnas.exceptions import DegenerateTrack, LengthMismatch, UnsortedInput
from trajnas.metrics import (
    Detection,
    ForecastHypothesis,
    GroundTruth,
    ade_fde,
    average_precision,
    classify_motion,
    constant_velocity_predictor,
    forecasting_report,
    match_detections,
    mean_subclass_ap,
)
from trajnas.synthdata import AgentTrack, ctrv_positions


def make_track(positions, dt=0.5, history=4):
    poses = [(x, y, 0.0, 0.8) for x, y in positions]
    return AgentTrack(0, "car", "linear", poses[:history], poses[history:], (4, 2, 1.5), dt, poses[:history])


def ctrv_track(speed, rate, history=4, horizon=6, dt=0.5):
    t = np.arange(-(history - 1), horizon + 1) * dt
    x, y, _ = ctrv_positions(t, 0.0, 0.0, 0.0, speed, rate)
    return make_track(list(zip(x, y)), dt, history)


def det(center, conf, futures, scene=0):
    k = len(futures)
    return Detection(tuple(center), conf, tuple(ForecastHypothesis(tuple(map(tuple, f)), 1.0 / k) for f in futures),
                     scene)


def gt(center, future, subclass="linear", scene=0):
    return GroundTruth(scene, tuple(center), tuple(map(tuple, future)), subclass)


# -- subclasses ----------------------------------------------------------------------

def test_classify_static():
    assert classify_motion(make_track([(1.0, 2.0)] * 10)) == "static"


def test_classify_linear():
    assert classify_motion(make_track([(2.0 * 0.5 * i, 0.0) for i in range(10)])) == "linear"


def test_classify_ctrv_nonlinear():
    assert ctrv_cv_deviation(5.0, 0.3, 0.5, 4, 6) > 0.5
    assert classify_motion(ctrv_track(5.0, 0.3)) == "nonlinear"


def test_classify_degenerate():
    with pytest.raises(DegenerateTrack):
        classify_motion(make_track([(0, 0), (1, 0)], history=1))


# -- displacement errors ----------------------------------------------------------------

def test_ade_fde_examples():
    assert ade_fde([(0, 0), (1, 1)], [(0, 0), (1, 1)]) == (0.0, 0.0)
    assert ade_fde([(1, 0), (2, 0), (3, 0)], [(0, 0), (1, 0), (2, 0)]) == (1.0, 1.0)
    assert ade_fde([(0, 0), (1, 0)], [(0, 0), (0, 0)]) == (0.5, 1.0)
    with pytest.raises(LengthMismatch):
        ade_fde([(0, 0)], [(0, 0), (1, 1)])
    with pytest.raises(LengthMismatch):
        ade_fde([], [])


# -- AP ----------------------------------------------------------------------------------

def test_ap_examples():
    assert average_precision([True], 1) == 1.0
    assert average_precision([], 5) == 0.0
    assert average_precision([], 0) == 1.0
    assert average_precision([False], 0) == 0.0
    assert average_precision([True, False, True], 2) == pytest.approx(5 / 6, abs=1e-15)
    assert ap_exhaustive([True, False, True], 2) == Fraction(5, 6)


def test_ap_matches_exhaustive_reference_all_short_sequences():
    for n in range(0, 7):
        for seq in itertools.product((False, True), repeat=n):
            for n_gt in range(max(sum(seq), 0), 8):
                ref = float(ap_exhaustive(seq, n_gt))
                assert average_precision(seq, n_gt) == pytest.approx(ref, abs=1e-12), (seq, n_gt)


@given(st.lists(st.booleans(), max_size=40), st.integers(0, 30))
def test_ap_bounds(seq, extra):
    n_gt = sum(seq) + extra
    ap = average_precision(seq, n_gt)
    assert 0.0 <= ap <= 1.0
    assert ap == pytest.approx(float(ap_exhaustive(seq, n_gt)), abs=1e-12)


# -- matching -------------------------------------------------------------------------

FUT = [(0.0, 1.0), (0.0, 2.0)]


def test_perfect_detection_is_tp_in_both_modes():
    d = [det((0, 0), 0.9, [FUT])]
    g = [gt((0, 0), FUT)]
    for mode in ("detection", "forecasting"):
        r = match_detections(d, g, mode=mode)
        assert r.tp == [True] and r.n_fn == 0


def test_far_detection_is_fp():
    r = match_detections([det((3.0, 0), 0.9, [FUT])], [gt((0, 0), FUT)], 2.0)
    assert r.tp == [False] and r.n_fn == 1


def test_greedy_by_confidence_not_distance():
    dets = [det((1.0, 0), 0.9, [FUT]), det((0.5, 0), 0.8, [FUT])]
    r = match_detections(dets, [gt((0, 0), FUT)])
    assert r.tp == [True, False]
    # optimal assignment by distance would have matched the second detection instead
    pts = [(1.0, 0), (0.5, 0)]
    assert greedy_by_enumeration(pts, [(0, 0)], 2.0) == (0, None)


def test_forecast_miss_still_consumes_gt():
    bad = [(0.0, 1.0), (9.0, 9.0)]
    dets = [det((0, 0), 0.9, [bad]), det((0.2, 0), 0.8, [FUT])]
    r = match_detections(dets, [gt((0, 0), FUT)], mode="forecasting")
    assert r.tp == [False, False] and r.n_fn == 1


def test_best_of_k_forecast():
    bad = [(0.0, 1.0), (9.0, 9.0)]
    d = [det((0, 0), 0.9, [bad, FUT])]
    g = [gt((0, 0), FUT)]
    assert match_detections(d, g, mode="forecasting", k_used=1).tp == [False]
    assert match_detections(d, g, mode="forecasting", k_used=2).tp == [True]


def test_scenes_do_not_cross_match():
    r = match_detections([det((0, 0), 0.9, [FUT], scene=1)], [gt((0, 0), FUT, scene=2)])
    assert r.tp == [False] and r.n_fn == 1


def test_unsorted_input():
    with pytest.raises(UnsortedInput):
        match_detections([det((0, 0), 0.1, [FUT]), det((0, 0), 0.9, [FUT])], [])


# pinned cases: (detections in confidence order, GT centers, greedy matches, max-cardinality matches)
PINNED = [
    ([(1.0, 0.0), (0.5, 0.0)], [(0.0, 0.0)], (0, None), 1),
    ([(0.0, 0.0), (1.5, 0.0)], [(1.0, 0.0), (2.5, 0.0)], (0, 1), 2),
    ([(0.0, 0.0), (3.0, 0.0), (1.0, 1.0)], [(0.5, 0.0), (2.0, 0.0)], (0, 1, None), 2),
    ([(5.0, 5.0)], [(0.0, 0.0), (1.0, 1.0)], (None,), 0),
]


@pytest.mark.parametrize("dets,gts,greedy,max_card", PINNED)
def test_pinned_greedy_fixtures(dets, gts, greedy, max_card):
    assert greedy_by_enumeration(dets, gts, 2.0) == greedy
    assert max_cardinality_matching(dets, gts, 2.0) == max_card
    d = [det(c, 1.0 - 0.1 * i, [FUT]) for i, c in enumerate(dets)]
    g = [gt(c, FUT) for c in gts]
    r = match_detections(d, g, 2.0)
    assert tuple(j if j >= 0 else None for j in r.matched_gt) == greedy
    assert sum(r.tp) <= max_card


coords = st.tuples(st.integers(-6, 6), st.integers(-6, 6)).map(lambda p: (p[0] / 2, p[1] / 2))


@settings(max_examples=150)
@given(st.lists(coords, max_size=5), st.lists(coords, max_size=5, unique=True))
def test_greedy_equals_lexicographic_enumeration(dets, gts):
    expected = greedy_by_enumeration(dets, gts, 2.0)
    d = [det(c, 1.0 - 0.1 * i, [FUT]) for i, c in enumerate(dets)]
    g = [gt(c, FUT) for c in gts]
    r = match_detections(d, g, 2.0)
    got = tuple(j if j >= 0 else None for j in r.matched_gt)
    # equal-distance ties may legitimately resolve to either GT; compare distances then
    for i, (a, b) in enumerate(zip(got, expected)):
        if a is None or b is None:
            assert a == b
        else:
            da = math.dist(dets[i], gts[a])
            db = math.dist(dets[i], gts[b])
            assert da == pytest.approx(db)
    assert sum(r.tp) <= max_cardinality_matching(dets, gts, 2.0)
    assert r.n_fn == len(gts) - sum(r.tp)


# -- reports -------------------------------------------------------------------------

def test_map_from_table_values():
    assert mean_subclass_ap([0.656, 0.260, 0.103]) == pytest.approx(0.3397, abs=5e-5)
    assert round(100 * mean_subclass_ap([0.656, 0.260, 0.103])) == 34
    for x in (0.0, 0.37, 1.0):
        assert mean_subclass_ap([x, x, x]) == pytest.approx(x, abs=1e-15)


def test_perfect_predictions():
    gts = [gt((0, 0), FUT, "static"), gt((10, 0), [(10, 1), (10, 2)], "linear"),
           gt((20, 0), [(21, 1), (23, 2)], "nonlinear")]
    dets = [det(g.center, 0.9 - 0.1 * i, [g.future]) for i, g in enumerate(gts)]
    rep = forecasting_report(dets, gts)
    assert rep.map_det == rep.map_f == 1.0 and rep.ade_m == rep.fde_m == 0.0
    assert rep.counts["linear"]["f"] == {"tp": 1, "fp": 0, "fn": 0}
    assert set(rep.to_json()) == {"ap_det", "ap_f", "map_det", "map_f", "ade_m", "fde_m"}
    assert set(rep.to_json()["ap_f"]) == {"static", "linear", "nonlinear"}


def test_unmatched_detections_count_against_every_subclass():
    gts = [gt((0, 0), FUT, "static"), gt((10, 0), FUT, "linear")]
    dets = [det((50, 50), 0.95, [FUT]), det((0, 0), 0.9, [FUT]), det((10, 0), 0.8, [FUT])]
    rep = forecasting_report(dets, gts)
    assert rep.ap_det["static"] == pytest.approx(float(ap_exhaustive([False, True], 1)))
    assert rep.ap_det["linear"] == pytest.approx(float(ap_exhaustive([False, True], 1)))
    assert rep.ap_det["nonlinear"] == 0.0


def test_ade_scope_flag():
    bad = [(0.0, 1.0), (5.0, 2.0)]
    gts = [gt((0, 0), FUT), gt((10, 0), [(10, 1), (10, 2)])]
    dets = [det((0, 0), 0.9, [FUT]), det((10, 0), 0.8, [[(10, 1), (10, 7)]])]
    assert forecasting_report(dets, gts, ade_scope="forecast").ade_m == 0.0
    assert forecasting_report(dets, gts, ade_scope="detection").ade_m == pytest.approx(1.25)
    assert forecasting_report([det((0, 0), 0.9, [bad])], gts[:1]).ade_m is None


@settings(max_examples=50)
@given(st.integers(0, 10_000))
def test_report_invariants(seed):
    dets, gts = random_eval_set(seed)
    r1 = forecasting_report(dets, gts, k_used=1)
    r5 = forecasting_report(dets, gts, k_used=5)
    for m in ("static", "linear", "nonlinear"):
        assert r1.ap_f[m] <= r1.ap_det[m] + 1e-15
        assert r5.ap_f[m] <= r5.ap_det[m] + 1e-15
        assert r5.ap_f[m] >= r1.ap_f[m] - 1e-15
    for r in (r1, r5):
        assert r.map_f == sum(r.ap_f.values()) / 3.0
        assert r.map_det == sum(r.ap_det.values()) / 3.0


# -- constant velocity -------------------------------------------------------------

def test_cv_noiseless_linear_is_exact():
    track = make_track([(1.0 + 3.0 * i, 2.0 - 1.0 * i) for i in range(10)])
    d = constant_velocity_predictor(track)
    ade, fde = ade_fde(d.forecasts[0].future_centers, [p[:2] for p in track.future_poses])
    assert ade == pytest.approx(0.0, abs=1e-12) and fde == pytest.approx(0.0, abs=1e-12)
    assert d.confidence == 1.0


def test_cv_static_stays_put():
    track = make_track([(4.0, -2.0)] * 10)
    d = constant_velocity_predictor(track, k=3)
    assert len(d.forecasts) == 3
    assert all(c == pytest.approx((4.0, -2.0)) for h in d.forecasts for c in h.future_centers)
    assert sum(h.confidence for h in d.forecasts) == pytest.approx(1.0)


def test_cv_ctrv_fde_equals_analytic_deviation():
    track = ctrv_track(5.0, 0.3)
    d = constant_velocity_predictor(track)
    _, fde = ade_fde(d.forecasts[0].future_centers, [p[:2] for p in track.future_poses])
    assert fde == pytest.approx(ctrv_cv_deviation(5.0, 0.3, 0.5, 4, 6), rel=1e-9)


def test_cv_degenerate():
    with pytest.raises(DegenerateTrack):
        constant_velocity_predictor(make_track([(0, 0), (1, 1)], history=1))


def test_detection_dict_round_trip():
    d = det((1.5, -2.0), 0.7, [FUT, [(1, 1), (2, 2)]], scene=4)
    assert Detection.from_dict(d.to_dict()) == d
