import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stackgame import (
    DemandResponse,
    GameParams,
    LogSatisfaction,
    QuadraticIncentive,
    RevenueDecoupling,
    SatisfactionPoly,
    Scenario,
    bundled_scenario,
    parse_scenario,
    render_scenario,
)
from stackgame.config import ConfigError
from stackgame.engine import Device

MINIMAL = """\
beta = 0.5
[device]
sat = log:3
gamma0 = (1, 0)
gamma1 = (2, 0)
"""


class TestParse:
    def test_bundled_log_scenario(self):
        s = bundled_scenario("log_aggregate")
        assert s.params == GameParams(p=1.0, ybar=100.0, vbar=100.0, beta=0.75)
        assert s.objective == RevenueDecoupling()
        (dev,) = s.devices
        assert dev.satisfaction == LogSatisfaction(10.0)
        assert dev.gamma0 == QuadraticIncentive(10.0, -1.0)
        assert dev.gamma1 == QuadraticIncentive(15.0, -1.0)

    def test_defaults(self):
        s = parse_scenario(MINIMAL)
        assert (s.params.p, s.params.ybar, s.params.vbar) == (1.0, 100.0, 100.0)
        assert (s.tol, s.fit_tol, s.max_iters, s.epsilon, s.seed) == (1e-6, 1e-8, 20, 0.0, 0)

    def test_comments_and_objective(self):
        s = parse_scenario("# header\nobjective = demresp:4  # steer\n" + MINIMAL)
        assert s.objective == DemandResponse(4.0)

    def test_poly_satisfaction(self):
        s = parse_scenario(MINIMAL.replace("log:3", "poly:6.5,-0.33"))
        assert s.devices[0].satisfaction == SatisfactionPoly((6.5, -0.33))

    def test_ten_device_scenario(self):
        s = bundled_scenario("quadratic_devices")
        assert s.n_devices == 10
        assert s.params.beta == 1.0

    @pytest.mark.parametrize("text,line,message", [
        ("beta = 0.5\n", 1, "no [device]"),
        ("beta = 0.5\nepsilon = -0.1\n[device]\nsat = log:3\ngamma0 = (1,0)\ngamma1 = (2,0)\n",
         2, "epsilon"),
        ("beta = 0.5\nfoo = 1\n", 2, "unknown key"),
        ("beta = abc\n" + MINIMAL.split("\n", 1)[1], 1, "expected a number"),
        ("beta = 0.5\nbeta = 0.6\n", 2, "duplicate"),
        ("p = 1\n[device]\nsat = log:3\ngamma0 = (1,0)\ngamma1 = (2,0)\n", 5, "beta"),
        ("beta = 0.5\n[device]\nsat = log:3\ngamma0 = (1,0)\n", 2, "gamma1"),
        ("beta = 0.5\n[device]\nsat = exp:3\ngamma0 = (1,0)\ngamma1 = (2,0)\n", 3, "sat"),
        ("beta = 0.5\n[device]\nsat = log:3\ngamma0 = (1,0,2)\ngamma1 = (2,0)\n", 4, "gamma0"),
        ("beta = 0.5\nmax_iters = 1\n" + MINIMAL.split("\n", 1)[1], 2, "max_iters"),
        ("beta = 0.5\nobjective = demresp:500\n" + MINIMAL.split("\n", 1)[1], 2, "reference"),
        ("beta = 0.5\n[devices]\n", 2, "unknown section"),
        ("beta 0.5\n", 1, "key = value"),
    ])
    def test_errors_carry_line(self, text, line, message):
        with pytest.raises(ConfigError) as info:
            parse_scenario(text)
        assert info.value.line == line
        assert message in str(info.value)
        assert str(info.value).startswith(f"line {line}:")


finite = st.floats(-50, 50, allow_nan=False)


@st.composite
def scenarios(draw):
    ybar = draw(st.floats(1, 200))
    params = GameParams(p=draw(st.floats(0.1, 5)), ybar=ybar, vbar=draw(st.floats(1, 200)),
                        beta=draw(st.floats(0, 2)))
    objective = draw(st.one_of(st.just(RevenueDecoupling()),
                               st.floats(0, ybar).map(DemandResponse)))
    sat = st.one_of(st.floats(0.1, 50).map(LogSatisfaction),
                    st.lists(finite, min_size=1, max_size=5).map(SatisfactionPoly))
    devices = draw(st.lists(
        st.builds(Device, sat, st.builds(QuadraticIncentive, finite, finite),
                  st.builds(QuadraticIncentive, finite, finite)),
        min_size=1, max_size=4))
    return Scenario(params, tuple(devices), objective,
                    max_iters=draw(st.integers(2, 100)), epsilon=draw(st.floats(0, 1)),
                    seed=draw(st.integers(0, 2**31)), fit_tol=draw(st.floats(1e-12, 1)),
                    tol=draw(st.floats(1e-9, 1e-2)),
                    max_order=draw(st.one_of(st.none(), st.integers(1, 6))))


class TestRender:
    @settings(max_examples=60)
    @given(scenarios())
    def test_round_trip(self, scenario):
        assert parse_scenario(render_scenario(scenario)) == scenario

    def test_bundled_round_trip(self):
        for name in ("log_aggregate", "quadratic_devices", "noisy_devices"):
            s = bundled_scenario(name)
            assert parse_scenario(render_scenario(s)) == s
