import numpy as np
import pytest

from sarascc.errors import InputError
from sarascc.extraction import TABLE_PAIRS
from sarascc.pipeline import STAGES, PipelineConfig, random_scene, run_pipeline
from sarascc.scattering import AscParameterSet, RadarGrid


@pytest.fixture(scope="module")
def table_run():
    return run_pipeline(PipelineConfig(seed=1, mode="table"))


def test_stage_order_and_count(table_run):
    assert [s["name"] for s in table_run.report.stages] == list(STAGES)
    assert len(STAGES) == 5


def test_table_mode_reconstruction(table_run):
    m = table_run.report.metrics
    assert m["ssim"] >= 0.95
    assert {c.label for c in table_run.partition.components} <= {
        "Dihedral", "Trihedral", "Cylinder", "TopHat", "Sphere", "EdgeBroadside",
        "EdgeDiffraction", "CornerDiffraction"}


def test_component_shares_fit_inside_core(table_run):
    W1 = table_run.first_layer.W
    total = sum(c.data for c in table_run.components)
    assert np.all(total <= W1 * (1 + 1e-12))
    for layer in table_run.layers:
        # subtraction rounding only
        assert layer.violation_norm <= 1e-12 * np.linalg.norm(W1)
        assert layer.W_next.min() >= 0
    d = table_run.report.decomposition
    assert d["telescoping_residual"] <= 1e-12 * W1.max()
    assert len(d["layer_errors"]) == len(table_run.components)


def test_random_scene_is_on_lattice_and_table_consistent():
    cfg = PipelineConfig()
    scene = random_scene(RadarGrid.default(), cfg.dictionary, 10, seed=4)
    cells = {(p.x, p.y) for p in scene}
    assert len(cells) == 10
    assert all(x in cfg.dictionary.x and y in cfg.dictionary.y for x, y in cells)
    assert all((p.alpha, p.L > 1e-6) in TABLE_PAIRS for p in scene)
    assert all(0.5 <= p.A <= 1.5 for p in scene)


def test_explicit_scene():
    grid = RadarGrid.default()
    scene = [AscParameterSet(A=1.0, x=0.3, y=-0.3, alpha=1.0, L=0.5),
             AscParameterSet(A=0.8, x=-0.6, y=0.6)]
    res = run_pipeline(PipelineConfig(seed=0, rank=8, mode="table"), grid, scene)
    assert res.report.metrics["n_extracted"] >= 2
    assert res.report.metrics["ssim"] >= 0.95


def test_empty_scene_rejected():
    with pytest.raises(InputError):
        run_pipeline(PipelineConfig(seed=0), RadarGrid.default(M=32, N=32), [])


@pytest.mark.parametrize("kwargs", [{"k_asc": 0}, {"mode": "fuzzy"}, {"n_scatterers": -1}])
def test_config_validation(kwargs):
    with pytest.raises(InputError):
        PipelineConfig(**kwargs)
