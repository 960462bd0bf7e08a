from pathlib import Path
from textwrap import dedent

import numpy as np
import pytest

from specprep._commands.utils.matrix import FeatureMatrix


@pytest.fixture()
def write_file(tmp_path: Path):
    def _write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(dedent(text).lstrip(), encoding="utf-8")
        return path

    yield _write


@pytest.fixture()
def make_matrix():
    def _make(rows, labels=None, **kwargs) -> FeatureMatrix:
        values = np.asarray(rows, dtype=float)
        n, p = values.shape
        return FeatureMatrix(
            values=values,
            sample_ids=tuple(f"S{i + 1}" for i in range(n)),
            feature_labels=tuple(labels or (f"f{j + 1}" for j in range(p))),
            **kwargs,
        )

    yield _make


@pytest.fixture()
def positive_matrix(make_matrix):
    rng = np.random.default_rng(2024)
    yield make_matrix(np.exp(rng.normal(2.0, 1.0, size=(12, 5))))
