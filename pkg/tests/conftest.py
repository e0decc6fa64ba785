import datetime

import numpy as np
import pytest

from depthscreen.ensemble import FacetMatrix, ScenarioEnsemble


def fm(values, entity="grid", facet="load"):
    return FacetMatrix(np.asarray(values, dtype=np.float64), entity, facet)


def random_instance(rng, n=None, t=None, integer=False):
    """Small random facet matrix; integer=True makes ties frequent."""
    n = int(rng.integers(3, 17)) if n is None else n
    t = int(rng.integers(1, 7)) if t is None else t
    if integer:
        values = rng.integers(0, 4, size=(n, t)).astype(np.float64)
    else:
        values = rng.standard_normal((n, t)) * 10.0
    return fm(values)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def small_ensemble():
    day = datetime.date(2018, 2, 13)
    base = {
        ("grid", "load"): [[5.0, 6.0], [7.0, 8.0], [9.0, 10.0]],
        ("grid", "solar"): [[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]],
        ("grid", "wind"): [[2.0, 2.0], [1.0, 1.0], [0.0, 3.0]],
    }
    return ScenarioEnsemble(day, base)
