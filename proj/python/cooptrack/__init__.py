"""Cooperative cyclist tracking: bike-model EKF, association, metrics and simulation."""

import json

from ._cooptrack import (
    ConfigError,
    DataError,
    Error,
    InvalidArgument,
    NumericalError,
    Scene,
    UndefinedMetric,
    default_config,
    default_scene_spec,
    dft_features,
    ekf_predict,
    ekf_update,
    jacobian_f,
    motap,
    motp_mota,
    munkres_solve,
    noise_gain,
    orthopoly_coeffs,
    penalized_mahalanobis,
    predict_state,
    process_noise_cov,
    read_scene,
    write_scene,
)
from . import _cooptrack

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "InvalidArgument",
    "NumericalError",
    "Scene",
    "UndefinedMetric",
    "compare",
    "default_config",
    "default_scene_spec",
    "dft_features",
    "ekf_predict",
    "ekf_update",
    "generate_scene",
    "jacobian_f",
    "motap",
    "motp_mota",
    "munkres_solve",
    "noise_gain",
    "orthopoly_coeffs",
    "penalized_mahalanobis",
    "predict_state",
    "process_noise_cov",
    "read_scene",
    "track_and_evaluate",
    "write_scene",
]


def _merge(base, overrides):
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value
    return base


def generate_scene(spec=None, scene_id="scene", **overrides):
    """Simulate a scene from a spec dict; missing keys take the defaults."""
    full = _merge(json.loads(default_scene_spec()), dict(spec or {}))
    _merge(full, overrides)
    return _cooptrack.generate_scene(json.dumps(full), scene_id)


def track_and_evaluate(scene, model="C", config=None):
    """Run model "P" or "C" over a scene and return its metric report."""
    return json.loads(_cooptrack.track_and_evaluate(scene, model, json.dumps(config or {})))


def compare(config=None, jobs=1):
    """Batch P/C comparison; returns the per-scene, summary and MOTAP CSV texts."""
    return _cooptrack.compare(json.dumps(config or {}), jobs)
