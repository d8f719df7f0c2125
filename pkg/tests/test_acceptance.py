"""Full-length training runs at the default learning rate and architecture.

These take minutes to hours and are deselected by default; run with ``pytest -m slow``.
Training is stochastic, so each case asks for a majority of seeds.
"""
import pytest

from app.models.experiment import ExperimentConfig
from app.services.runner import run_experiment

pytestmark = pytest.mark.slow


def _run(tmp_path, **payload):
    return run_experiment(ExperimentConfig(**payload), tmp_path)


@pytest.mark.parametrize("method", ["pinn", "vpinn_strong", "vpinn_weak", "vpinn_both"])
def test_trained_1d_methods_on_adapted_points(tmp_path, method):
    reports = [
        _run(tmp_path, method=method, dimension=1, eps=0.001, seed=seed,
             mesh={"kind": "adaptive", "n_points": 100})
        for seed in (1, 2, 3, 4)
    ]
    good = [r for r in reports if r.status == "ok" and r.max_error_outside_layer < 0.1 and r.mse < 0.01]
    assert len(good) >= 3


def test_pinn_fails_on_uniform_points_for_thin_layer(tmp_path):
    report = _run(tmp_path, method="pinn", dimension=1, eps=0.001, mesh={"kind": "uniform", "n_points": 100})
    assert report.mse > 0.05


@pytest.mark.parametrize("method", ["pinn", "vpinn_strong"])
def test_uniform_points_suffice_for_moderate_layer(tmp_path, method):
    report = _run(tmp_path, method=method, dimension=1, eps=0.01, mesh={"kind": "uniform", "n_points": 100})
    assert report.mse < 0.02


@pytest.mark.parametrize("method,eps,reference", [
    ("pinn", 0.1, 0.05), ("pinn", 0.01, 0.18), ("pinn", 0.001, 0.15),
    ("vpinn_both", 0.1, 0.09), ("vpinn_both", 0.01, 0.06), ("vpinn_both", 0.001, 0.11),
])
def test_ej_tables_on_adapted_points(tmp_path, method, eps, reference):
    reports = [
        _run(tmp_path, method=method, dimension=2, eps=eps, seed=seed,
             mesh={"kind": "adaptive", "n_points": 50})
        for seed in (1, 2, 3)
    ]
    within = [r for r in reports if r.status == "ok" and reference / 3 <= r.mse <= reference * 3]
    assert len(within) >= 2
