import numpy as np
import pytest

from routeplan.errors import ConfigurationError, ValidationError
from routeplan.latency import (
    LatencyProfile,
    ProfileLibrary,
    latency_at,
    latency_slope,
    load_profiles,
    out_of_range,
    system_latency,
    system_latency_grad,
    write_profiles,
)
from routeplan.setup_search import ModelSetup, SystemSetup

HEADER = "model,tp,rho,metric,load_rps,latency_ms\n"


def prof(knots, model="A", tp=1, rho=1.0):
    x, y = zip(*knots)
    return LatencyProfile(model, tp, rho, "TTFT", np.array(x, float), np.array(y, float))


LINE = prof([(0, 100), (10, 200)])


def two_model(a_knots, b_knots):
    lib = ProfileLibrary([prof(a_knots, "A"), prof(b_knots, "B")])
    setup = SystemSetup([ModelSetup("A", 1, 1.0), ModelSetup("B", 1, 1.0)])
    return lib, setup


class TestLoadProfiles:
    def test_two_knot_profile(self, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text(HEADER + "A,1,1.0,TTFT,0,100\nA,1,1.0,TTFT,10,200\n")
        lib = load_profiles(p)
        assert len(lib) == 1
        np.testing.assert_array_equal(lib["A", 1, 1.0, "TTFT"].loads, [0, 10])

    def test_knots_sorted(self, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text(HEADER + "A,1,1.0,TTFT,10,200\nA,1,1.0,TTFT,0,100\n")
        prof_ = load_profiles(p)["A", 1, 1.0, "TTFT"]
        np.testing.assert_array_equal(prof_.loads, [0, 10])
        np.testing.assert_array_equal(prof_.latencies, [100, 200])

    def test_single_knot_rejected(self, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text(HEADER + "A,1,1.0,TTFT,0,100\n")
        with pytest.raises(ValidationError, match="fewer than 2"):
            load_profiles(p)

    def test_duplicate_load_rejected(self, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text(HEADER + "A,1,1.0,TTFT,0,100\nA,1,1.0,TTFT,0,120\nA,1,1.0,TTFT,5,130\n")
        with pytest.raises(ValidationError, match="duplicate"):
            load_profiles(p)

    def test_zero_knot_padded(self, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text(HEADER + "A,2,0.5,tpot,4,30\nA,2,0.5,tpot,8,40\n")
        prof_ = load_profiles(p)["A", 2, 0.5, "TPOT"]
        np.testing.assert_array_equal(prof_.loads, [0, 4, 8])
        np.testing.assert_array_equal(prof_.latencies, [30, 30, 40])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="nope.csv"):
            load_profiles(tmp_path / "nope.csv")

    def test_round_trip(self, tmp_path):
        lib = ProfileLibrary([prof([(0, 1.5), (3, 2.25), (7, 9.0)], "X", 2, 0.3)])
        write_profiles(lib, tmp_path / "p.csv")
        back = load_profiles(tmp_path / "p.csv")
        np.testing.assert_array_equal(back["X", 2, 0.3, "TTFT"].latencies, [1.5, 2.25, 9.0])

    def test_rho_keys_tolerate_float_noise(self):
        lib = ProfileLibrary([prof([(0, 1), (1, 2)], rho=0.3)])
        assert lib.get_profile("A", 1, 0.1 * 3, "ttft") is not None


class TestInterpolation:
    @pytest.mark.parametrize("load,expected", [(5, 150), (10, 200), (15, 250), (0, 100)])
    def test_latency_at(self, load, expected):
        assert latency_at(LINE, load) == pytest.approx(expected, abs=1e-12)

    def test_clamped_below_first_knot(self):
        p = prof([(2, 50), (4, 70)])
        assert latency_at(p, 1.0) == 50.0
        assert latency_slope(p, 1.0) == 0.0

    @pytest.mark.parametrize("load", [5, 0, 10, 30])
    def test_slope(self, load):
        assert latency_slope(LINE, load) == pytest.approx(10.0)

    def test_slope_at_inner_knot_uses_right_segment(self):
        p = prof([(0, 0), (1, 1), (2, 5)])
        assert latency_slope(p, 1.0) == 4.0
        assert latency_slope(p, 0.999) == 1.0

    def test_flat_profile(self):
        flat = prof([(0, 100), (10, 100)])
        assert all(latency_slope(flat, x) == 0 for x in (0, 3, 10, 50))

    def test_negative_load(self):
        with pytest.raises(ValidationError):
            latency_at(LINE, -1)
        with pytest.raises(ValidationError):
            latency_slope(LINE, -0.1)

    def test_piecewise_linear_inside_segment(self, rng):
        p = prof([(0, 10), (3, 40), (5, 45), (9, 120)])
        for _ in range(200):
            k = rng.integers(0, 3)
            lo, hi = p.loads[k], p.loads[k + 1]
            a, b = rng.uniform(lo, hi, 2)
            t = rng.random()
            assert latency_at(p, t * a + (1 - t) * b) == pytest.approx(
                t * latency_at(p, a) + (1 - t) * latency_at(p, b), abs=1e-9)


class TestSystemLatency:
    def test_constant_profiles(self):
        lib, setup = two_model([(0, 100), (20, 100)], [(0, 100), (20, 100)])
        assert system_latency(lib, setup, [0.5, 0.5], 10, "TTFT") == pytest.approx(100)
        np.testing.assert_allclose(system_latency_grad(lib, setup, [0.5, 0.5], 10, "TTFT"), [100, 100])

    def test_degenerate_split(self):
        lib, setup = two_model([(0, 100), (10, 200)], [(0, 1e6), (10, 1e6)])
        assert system_latency(lib, setup, [1, 0], 10, "TTFT") == pytest.approx(200)

    def test_hand_interpolated(self):
        lib, setup = two_model([(0, 100), (10, 200)], [(0, 50), (10, 150)])
        # each model sees load 5: 0.5 * 150 + 0.5 * 100
        assert system_latency(lib, setup, [0.5, 0.5], 10, "TTFT") == pytest.approx(125)

    def test_gradient_hand_evaluated(self):
        lib = ProfileLibrary([LINE])
        setup = SystemSetup([ModelSetup("A", 1, 1.0)])
        # 200 + 10 * 10
        assert system_latency_grad(lib, setup, [1.0], 10, "TTFT")[0] == pytest.approx(300)

    def test_gradient_at_zero_fraction_is_idle_latency(self):
        lib, setup = two_model([(0, 100), (10, 200)], [(0, 42), (10, 150)])
        assert system_latency_grad(lib, setup, [1, 0], 10, "TTFT")[1] == pytest.approx(42)

    def test_missing_profile_names_key(self):
        lib = ProfileLibrary([LINE])
        setup = SystemSetup([ModelSetup("A", 2, 1.0)])
        with pytest.raises(ConfigurationError, match="tp=2"):
            system_latency(lib, setup, [1.0], 1, "TTFT")

    def test_permutation_invariance(self, rng):
        a, b, c = ([(0, rng.uniform(10, 50)), (5, rng.uniform(60, 90)), (12, rng.uniform(100, 300))]
                   for _ in range(3))
        lib = ProfileLibrary([prof(a, "A"), prof(b, "B"), prof(c, "C")])
        ms = {k: ModelSetup(k, 1, 1.0) for k in "ABC"}
        w = dict(zip("ABC", rng.dirichlet(np.ones(3))))
        base = system_latency(lib, SystemSetup([ms[k] for k in "ABC"]), [w[k] for k in "ABC"], 9, "TTFT")
        perm = system_latency(lib, SystemSetup([ms[k] for k in "CAB"]), [w[k] for k in "CAB"], 9, "TTFT")
        assert perm == pytest.approx(base, rel=1e-14)

    def test_out_of_range_flag(self):
        lib, setup = two_model([(0, 100), (10, 200)], [(0, 50), (10, 150)])
        # last knot 10, kappa 1.25 => flag above 12.5 rps
        assert out_of_range(lib, setup, [0.6, 0.4], 20, "TTFT").tolist() == [False, False]
        assert out_of_range(lib, setup, [0.7, 0.3], 20, "TTFT").tolist() == [True, False]
