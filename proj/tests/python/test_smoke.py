import json
import math

import numpy as np
import pytest

import cooptrack as ct


def test_predict_quarter_turn_rate():
    out = ct.predict_state([0, 0, 0, math.pi / 2, 2], 0.02)
    np.testing.assert_allclose(out, [0.039993, 0.000628, 0.031416, math.pi / 2, 2], atol=1e-6)


def test_jacobian_and_gain_shapes():
    s = [0, 0, 0.3, 0.7, 1.5]
    F = ct.jacobian_f(s)
    G = ct.noise_gain(s)
    assert F.shape == (5, 5)
    assert G.shape == (5, 2)
    np.testing.assert_allclose(G[3], [1, 0])
    np.testing.assert_allclose(G[4], [0, 0.02])
    Q = ct.process_noise_cov(s)
    np.testing.assert_allclose(Q, G @ np.diag([1.5**2, 2.5**2]) @ G.T, atol=1e-12)


def test_ekf_round():
    P = np.eye(5)
    s, P1 = ct.ekf_predict([0, 0, 0, 0, 1], P)
    s2, P2 = ct.ekf_update(s, P1, position=[0.03, 0.0], device=[0.0, 1.0, 0.3])
    assert np.trace(P2) < np.trace(P1)
    np.testing.assert_allclose(P2, P2.T, atol=1e-12)
    with pytest.raises(ValueError):
        ct.ekf_update(s, P1)


def test_munkres_and_distance():
    assert ct.munkres_solve(np.array([[0.0, 9.0], [9.0, 0.0]])) == [(0, 0), (1, 1)]
    forbidden = np.array([[True, False], [False, False]])
    assert ct.munkres_solve(np.array([[0.0, 1.0], [1.0, 100.0]]), forbidden) == [(0, 1), (1, 0)]
    d = ct.penalized_mahalanobis([2, 1], np.diag([4.0, 1.0]))
    assert d == pytest.approx(math.sqrt(2 + math.log(4)))


def test_metrics():
    motp, mota = ct.motp_mota([0.2, 0.3, 1.5, 0.4, None])
    assert motp == pytest.approx(0.475)
    assert mota == pytest.approx(0.4)
    assert ct.motap(0.95, 0.1, 0.9, 0.1) == 1
    assert ct.motap(0.9, 0.1, 0.95, 0.1) == 0
    with pytest.raises(ArithmeticError):
        ct.motp_mota([None, None])


def test_features():
    x = np.cos(2 * np.pi * 3 * np.arange(256) / 256)
    c = ct.dft_features(x.tolist())
    assert c[3] == pytest.approx(1.0)
    coeffs = ct.orthopoly_coeffs([2.0] * 10, 3)
    assert coeffs[0] == pytest.approx(2 * math.sqrt(10))
    with pytest.raises(ValueError):
        ct.dft_features([1.0] * 10)


def test_scene_track_evaluate(tmp_path):
    scene = ct.generate_scene({"seed": 5}, "turning_x", occlusions=[{"start_offset": 5.0, "duration": 2.0}])
    arrays = scene.arrays()
    assert arrays["ground_truth"].shape[1] == 6
    assert int(np.sum(arrays["occlusion_mask"])) == 100
    ct.write_scene(str(tmp_path / "s"), scene)
    back = ct.read_scene(str(tmp_path / "s"))
    assert back.id == "turning_x"
    report_c = ct.track_and_evaluate(back, "C")
    report_p = ct.track_and_evaluate(back, "P")
    assert report_c["model_id"] == "C"
    assert report_c["frame_counts"]["dm"] <= report_p["frame_counts"]["dm"]
    with pytest.raises(ValueError):
        ct.read_scene(str(tmp_path / "missing"))


def test_compare_is_deterministic():
    cfg = {"scenes": {"n_starting": 2, "n_turning": 2}, "compare": {"occlusion_durations": [0.0, 2.0]}}
    a = ct.compare(cfg)
    b = ct.compare(cfg, jobs=2)
    assert a == b
    assert "motap_P_C" in a["motap"]
    with pytest.raises(ValueError):
        ct.compare({"unknown": 1})


def test_default_config_values():
    cfg = json.loads(ct.default_config())
    assert cfg["filter"]["T"] == 0.02
    assert cfg["manager"]["coop"]["gate_distance"] == 2.0
    assert cfg["metrics"]["alpha"] == 0.025
