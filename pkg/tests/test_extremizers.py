import json
import math

import numpy as np
import pytest

from jnbellman import (
    Params,
    bmo_norm,
    build_extremizer,
    classify_weak,
    delivery_curve,
    eval_b,
    moments,
    sample,
    superlevel_measure,
)
from jnbellman.extremizers import (
    from_json_dict,
    sample_rows,
    to_json_dict,
    verification_report,
)
from jnbellman.geometry import sample_strip_points

P = Params(3.0, 1.0)


def region_samples(rng, p, index, n):
    """n random strip points classifying into the requested region."""
    out = []
    span = p.lam + 2.0 * p.eps
    while len(out) < n:
        x1, x2 = sample_strip_points(rng, 512, p, -span, span)
        for a, b in zip(x1, x2):
            if classify_weak(a, b, p).index == index:
                out.append((a, b))
                if len(out) == n:
                    break
    return out


class TestShapes:
    def test_lower_boundary_constant(self):
        phi = build_extremizer(3.0, 9.0, P)
        assert len(phi.segments) == 1
        assert phi.segments[0].value == 3.0

    def test_omega3_two_steps(self):
        phi = build_extremizer(2.0, 4.5, P)
        assert [s.value for s in phi.segments] == [3.0, 1.5]
        assert phi.segments[0].t_hi == pytest.approx(1.0 / 3.0, abs=1e-14)

    def test_omega2_three_steps(self):
        phi = build_extremizer(3.0, 9.6, P)
        assert [s.value for s in phi.segments] == [1.0, 3.0, 5.0]
        assert phi.segments[0].t_hi == pytest.approx(0.075, abs=1e-14)
        assert phi.segments[2].t_lo == pytest.approx(0.925, abs=1e-14)

    def test_omega5_seven_pieces(self):
        phi = build_extremizer(0.0, 1.0, P)
        assert len(phi.segments) == 7
        b = 0.25
        a = 0.125 * math.exp(-1.0)
        knots = [0.0, a, 2 * a, b, 1 - b, 1 - 2 * a, 1 - a, 1.0]
        got = [phi.segments[0].t_lo] + [s.t_hi for s in phi.segments]
        assert got == pytest.approx(knots, abs=1e-14)
        assert phi.segments[0].value == -3.0
        assert phi.segments[3].value == 0.0
        assert phi.segments[6].value == 3.0

    def test_omega4_log_tail(self):
        phi = build_extremizer(1.2, 2.0, P)
        kinds = [s.kind for s in phi.segments]
        assert kinds == ["const", "const", "log", "const"]
        a = eval_b(1.2, 2.0, P)
        assert phi.segments[0].t_hi == pytest.approx(a, abs=1e-14)
        assert phi.segments[1].t_hi == pytest.approx(2 * a, abs=1e-14)
        # continuity of the log piece at t = 2a
        assert sample(phi, 2 * a + 1e-9) == pytest.approx(1.0, abs=1e-8)

    def test_upper_parabola_point_has_no_tail(self):
        phi = build_extremizer(1.5, 1.5 ** 2 + 1.0, P)
        assert phi.segments[-1].kind == "log"
        assert phi.segments[-1].t_hi == 1.0

    def test_negative_side_negated(self):
        phi = build_extremizer(-2.0, 4.5, P)
        assert [s.value for s in phi.segments] == [-3.0, -1.5]
        assert str(phi.region) == "Omega3-"
        assert phi.origin == (-2.0, 4.5)

    def test_wrong_regime_rejected(self):
        with pytest.raises(ValueError):
            build_extremizer(0.0, 0.5, Params(1.5, 1.0))

    def test_outside_strip_rejected(self):
        with pytest.raises(ValueError):
            build_extremizer(0.0, 1.5, P)

    def test_singular_point_constant(self):
        phi = build_extremizer(3.0, 9.0, P)
        assert superlevel_measure(phi, 3.0) == 1.0


class TestRoundtrip:
    @pytest.mark.parametrize("index", [1, 2, 3, 4, 5])
    def test_moments_and_sharpness_per_region(self, index):
        rng = np.random.default_rng(100 + index)
        for a, b in region_samples(rng, P, index, 1000):
            phi = build_extremizer(a, b, P)
            m1, m2 = moments(phi)
            assert abs(m1 - a) <= 1e-9
            assert abs(m2 - b) <= 1e-9
            assert abs(superlevel_measure(phi, P.lam) - eval_b(a, b, P)) <= 1e-9

    @pytest.mark.parametrize("index", [1, 2, 3, 4, 5])
    def test_norm_feasibility(self, index):
        rng = np.random.default_rng(200 + index)
        for a, b in region_samples(rng, P, index, 60):
            phi = build_extremizer(a, b, P)
            norm = bmo_norm(phi, resolution=128)
            assert norm <= P.eps + 1e-6
            if index == 1:
                assert norm >= P.eps - 1e-3

    @pytest.mark.parametrize("index", [1, 2, 3, 4, 5])
    def test_delivery_feasibility(self, index):
        rng = np.random.default_rng(300 + index)
        for a, b in region_samples(rng, P, index, 100):
            phi = build_extremizer(a, b, P)
            assert delivery_curve(phi, 128).max_violation <= 1e-9

    @pytest.mark.parametrize("index", [1, 2, 3, 4, 5])
    def test_subinterval_moment_pairs_stay_in_strip(self, index):
        # the (mean, second moment) pair over any subinterval is again a
        # strip point: the oscillation over [alpha, beta] never exceeds eps
        from jnbellman.piecewise import strip_violation
        rng = np.random.default_rng(500 + index)
        for a, b in region_samples(rng, P, index, 40):
            phi = build_extremizer(a, b, P)
            for _ in range(50):
                alpha, beta = np.sort(rng.uniform(0.0, 1.0, size=2))
                if beta - alpha < 1e-6:
                    continue
                m1, m2 = moments(phi, (alpha, beta))
                assert strip_violation(m1, m2, P.eps) <= 1e-9

    def test_omega4_parameter_equals_value(self):
        rng = np.random.default_rng(404)
        for a, b in region_samples(rng, P, 4, 300):
            phi = build_extremizer(abs(a), b, P)
            assert phi.segments[0].t_hi == pytest.approx(eval_b(a, b, P), abs=1e-12)

    def test_other_eps(self):
        p = Params(5.0, 1.7)
        rng = np.random.default_rng(55)
        x1, x2 = sample_strip_points(rng, 300, p, -(p.lam + 2 * p.eps), p.lam + 2 * p.eps)
        for a, b in zip(x1, x2):
            phi = build_extremizer(a, b, p)
            m1, m2 = moments(phi)
            assert abs(m1 - a) <= 1e-9
            assert abs(m2 - b) <= 1e-9
            assert abs(superlevel_measure(phi, p.lam) - eval_b(a, b, p)) <= 1e-9


class TestSerialization:
    def test_json_roundtrip(self):
        phi = build_extremizer(0.3, 1.05, P)
        data = json.loads(json.dumps(to_json_dict(phi)))
        back = from_json_dict(data)
        for t in np.linspace(0.013, 0.987, 97):
            assert back.segment_at(t).value_at(t) == pytest.approx(
                phi.segment_at(t).value_at(t), abs=1e-12)
        assert moments(back) == pytest.approx(moments(phi), abs=1e-12)

    def test_sample_rows(self):
        phi = build_extremizer(2.0, 4.5, P)
        rows = sample_rows(phi, 100)
        assert len(rows) == 100
        assert rows[0][1] == 3.0
        assert rows[-1][1] == 1.5

    def test_verification_report(self):
        rep = verification_report(build_extremizer(1.2, 2.0, P), norm_resolution=128,
                                  curve_samples=128)
        assert rep["moment_error"] <= 1e-9
        assert rep["sharpness_error"] <= 1e-9
        assert rep["norm_slack"] >= -1e-6
        assert rep["delivery_max_violation"] <= 1e-9
