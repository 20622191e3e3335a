import numpy as np
import pytest

from ieqdg.errors import ConfigurationError
from ieqdg.mms import (
    CASE_IDS,
    dw_1d_source,
    exact_solution,
    get_case,
    normalize_case_id,
    residual_oracle,
    source_term,
)


def test_case_ids_normalized():
    assert normalize_case_id("deg-fh-2d") == "deg_fh_2d"
    assert normalize_case_id(" DW_1D ") == "dw_1d"
    with pytest.raises(ConfigurationError):
        normalize_case_id("ac-2d")
    with pytest.raises(ConfigurationError):
        get_case("dw-1d", "neumann")


def test_exact_solution_examples():
    c = get_case("dw-1d")
    assert exact_solution(c, np.pi / 2, 0.0) == pytest.approx(1.0)
    fh = get_case("fh-2d")
    assert exact_solution(fh, (1.3, 2.1), 200.0) == pytest.approx(0.5, abs=1e-12)


def test_dw_1d_source_examples(rng):
    c = get_case("dw-1d", fast_source=False)
    assert source_term(c, np.pi / 2, 0.0) == pytest.approx(2.0)
    x = rng.uniform(0, 2 * np.pi, 1000)
    t = rng.uniform(0, 1, 1000)
    alt = -np.exp(-t) * np.sin(x) * (1 + 3 * np.exp(-2 * t) * (3 * np.cos(x) ** 2 - 1))
    np.testing.assert_allclose(dw_1d_source(x, t), alt, atol=1e-13)


@pytest.mark.parametrize("case_id", CASE_IDS)
def test_fast_and_pointwise_sources_agree(case_id, rng):
    bc = "periodic"
    fast = get_case(case_id, bc, fast_source=True)
    slow = get_case(case_id, bc, fast_source=False)
    pts = [rng.uniform(a, b, 200) for a, b in fast.intervals]
    t = rng.uniform(0, 0.5, 200)
    np.testing.assert_allclose(fast.source(*pts, t), slow.source(*pts, t), atol=1e-12)


@pytest.mark.parametrize("case_id, bc", [(c, "periodic") for c in CASE_IDS] + [(c, "neumann") for c in CASE_IDS[1:]])
def test_residual_oracle_validates_sources(case_id, bc, rng):
    case = get_case(case_id, bc)
    n = 1000 if case_id in ("fh_2d", "deg_fh_2d") else 100
    pts = []
    for a, b in case.intervals:
        w = b - a
        pts.append(rng.uniform(a + 0.01 * w, b - 0.01 * w, n))
    t = rng.uniform(0.0, case.final_time, n)
    res = residual_oracle(case, tuple(pts), t)
    assert np.max(np.abs(res)) <= 1e-6


def test_residual_oracle_negative_control(rng):
    case = get_case("dw-2d")
    pts = tuple(rng.uniform(1.0, 10.0, 50) for _ in range(2))
    res = residual_oracle(case, pts, 0.0, source=lambda *a: 0.0)
    assert np.max(np.abs(res)) > 1e-3
    wrong = get_case("fh-2d")
    res = residual_oracle(wrong, pts, 0.0, source=lambda x, y, t: wrong.source(x, y, t) + 1.0)
    assert np.max(np.abs(res)) == pytest.approx(1.0, rel=1e-4)


@pytest.mark.parametrize("case_id", CASE_IDS[1:])
def test_neumann_exact_solutions_have_zero_normal_derivative(case_id):
    case = get_case(case_id, "neumann")
    (a, b), (c, d) = case.intervals
    s = np.linspace(c, d, 37)
    h = 1e-6
    for x0 in (a, b):
        dx = (case.exact(x0 + h, s, 0.3) - case.exact(x0 - h, s, 0.3)) / (2 * h)
        assert np.max(np.abs(dx)) <= 1e-9
    # derivative of a separable product of sines: exact check with the closed form at the edge
    for y0 in (c, d):
        dy = (case.exact(s, y0 + h, 0.3) - case.exact(s, y0 - h, 0.3)) / (2 * h)
        assert np.max(np.abs(dy)) <= 1e-9


@pytest.mark.parametrize("case_id", CASE_IDS)
def test_periodic_exact_solutions_match_across_period(case_id, rng):
    case = get_case(case_id, "periodic")
    widths = [b - a for a, b in case.intervals]
    pts = [rng.uniform(a, b, 50) for a, b in case.intervals]
    for axis, w in enumerate(widths):
        shifted = list(pts)
        shifted[axis] = pts[axis] + w
        np.testing.assert_allclose(case.exact(*shifted, 0.2), case.exact(*pts, 0.2), atol=1e-12)


def test_degenerate_case_stays_inside_unit_interval(rng):
    case = get_case("deg-fh-2d")
    pts = [rng.uniform(a, b, 10_000) for a, b in case.intervals]
    u = case.exact(*pts, 0.0)
    assert u.min() >= 0.1 - 1e-12 and u.max() <= 0.9 + 1e-12
