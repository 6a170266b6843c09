import hashlib
import json
import math

import numpy as np
import pytest

from uavfso.fluctuation_models import (
    CorrelatedGaussian,
    CorrelatedUniform,
    Degenerate,
    HalfNormal,
    Hoyt,
    IndependentGaussian,
    UniformU,
)
from uavfso.link_performance import gamma_thr_from_rate
from uavfso.scenario import ScenarioError, load, loads, parse_angle, preset_path, presets

MINIMAL = {"model": {"type": "correlated_uniform", "xi": 0.4, "v_direction": [3, 1, 2],
                     "tau_direction": [1, 2]}}


def doc(**overrides):
    d = json.loads(json.dumps(MINIMAL))
    d.update(overrides)
    return json.dumps(d)


class TestAngles:
    def test_degrees_and_radians(self):
        assert parse_angle("22.5deg", "x") == pytest.approx(math.pi / 8)
        assert parse_angle("0.5 rad", "x") == 0.5
        assert parse_angle("-90deg", "x") == pytest.approx(-math.pi / 2)

    @pytest.mark.parametrize("bad", [0.5, "0.5", "12 degrees", None])
    def test_unit_required(self, bad):
        with pytest.raises(ScenarioError, match="unit suffix"):
            parse_angle(bad, "geometry.alpha_d")


class TestParsing:
    def test_defaults(self):
        sc = loads(doc())
        assert sc.L == 500.0
        assert sc.alpha_d == pytest.approx(math.pi / 8)
        assert sc.beta_d == pytest.approx(5 * math.pi / 8)
        assert sc.w_L == 0.3
        assert sc.gamma_thr == pytest.approx(gamma_thr_from_rate(0.5))
        assert sc.gamma_bar_db == tuple(float(x) for x in range(0, 81, 5))
        assert isinstance(sc.model, CorrelatedUniform)

    def test_directions_normalised(self):
        sc = loads(doc())
        v = np.array([3, 1, 2]) / math.sqrt(14)
        tau = np.array([1, 2]) / math.sqrt(5) / 500.0
        np.testing.assert_allclose(sc.model.v, v, rtol=1e-15)
        np.testing.assert_allclose(sc.model.tau, tau, rtol=1e-15)

    def test_hash_of_text(self):
        text = doc()
        assert loads(text).source_hash == hashlib.sha256(text.encode()).hexdigest()

    def test_unknown_key_rejected_with_path(self):
        with pytest.raises(ScenarioError, match=r"geometry\.altitude: unknown key"):
            loads(doc(geometry={"altitude": 3}))
        with pytest.raises(ScenarioError, match="colour: unknown key"):
            loads(doc(colour="red"))

    def test_model_required(self):
        with pytest.raises(ScenarioError, match="model"):
            loads("{}")

    def test_unknown_model(self):
        with pytest.raises(ScenarioError, match="unknown model"):
            loads(json.dumps({"model": {"type": "brownian"}}))

    def test_json_error_location(self):
        with pytest.raises(ScenarioError, match="line 1, column"):
            loads('{"model": }')

    def test_type_errors(self):
        with pytest.raises(ScenarioError, match="geometry.L"):
            loads(doc(geometry={"L": "far"}))
        with pytest.raises(ScenarioError, match="sim.n_trials"):
            loads(doc(sim={"n_trials": 1.5}))
        with pytest.raises(ScenarioError, match="sim.include_turbulence"):
            loads(doc(sim={"include_turbulence": 1}))

    def test_conflicting_threshold(self):
        with pytest.raises(ScenarioError, match="r_thr or gamma_thr"):
            loads(doc(link={"r_thr": 0.5, "gamma_thr": 2.0}))

    def test_beam_narrower_than_lens(self):
        with pytest.raises(ScenarioError, match="beam"):
            loads(doc(beam={"w_L": 0.05}))

    def test_propagated_beam_width(self):
        sc = loads(doc(beam={"w0": 1e-3}))
        assert sc.beam.beam_width_override is None
        z_r = math.pi * 1e-3 ** 2 / 1.55e-6
        vacuum = 1e-3 * math.sqrt(1 + (500.0 / z_r) ** 2)
        # turbulence only widens the beam, and only slightly at this range
        assert vacuum < sc.w_L < 1.001 * vacuum

    def test_grid_forms(self):
        assert loads(doc(link={"gamma_bar_db": [10, 20]})).gamma_bar_db == (10.0, 20.0)
        sc = loads(doc(link={"gamma_bar_db": {"start": 0, "stop": 10, "step": 2.5}}))
        assert sc.gamma_bar_db == (0.0, 2.5, 5.0, 7.5, 10.0)

    def test_independent_forms(self):
        sc = loads(json.dumps({"model": {"type": "independent_gaussian",
                                         "sigma_r": [0.1, 0.2, 0.3], "sigma_omega": [1e-4, 2e-4]}}))
        assert sc.model == IndependentGaussian(0.1, 0.2, 0.3, 1e-4, 2e-4)
        with pytest.raises(ScenarioError, match="scale"):
            loads(json.dumps({"model": {"type": "independent_gaussian", "scale": 0.1,
                                        "sigma_r": [0, 0, 0], "v_direction": [1, 0, 0],
                                        "tau_direction": [1, 0]}}))

    def test_bad_mode(self):
        with pytest.raises(ScenarioError):
            loads(doc(sim={"mode": "fast"}))


class TestPresets:
    def test_all_load(self):
        names = presets()
        assert len(names) == 21
        for name in names:
            sc = load(name)
            assert sc.name == name
            assert sc.sim.seed == 20240601

    def test_expected_laws(self):
        assert isinstance(load("fig3").dist.mis, Degenerate)
        assert isinstance(load("fig4_oblique_s1").dist.mis, Hoyt)
        assert isinstance(load("fig5_cg").dist.mis, HalfNormal)
        assert isinstance(load("fig6_w3_xi4").dist.mis, UniformU)
        assert isinstance(load("fig8_cg").model, CorrelatedGaussian)

    def test_fig5_density_regimes(self):
        # q * varpi < 1 makes the density diverge at h -> 0
        both = load("fig5_both").dist
        ig = load("fig5_ig").dist
        assert both.q * both.varpi < 1 < ig.q * ig.varpi

    def test_load_from_path(self, tmp_path):
        p = tmp_path / "mine.json"
        p.write_text(doc(), encoding="utf-8")
        assert load(p).name == "mine"
        assert load(str(preset_path("fig3"))).name == "fig3"

    def test_missing(self):
        with pytest.raises(ScenarioError, match="no such file"):
            load("does_not_exist")

    def test_file_errors_carry_path(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(doc(extra=1), encoding="utf-8")
        with pytest.raises(ScenarioError, match="bad.json"):
            load(p)
