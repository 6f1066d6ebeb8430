"""The compiled and pure-Python kernels must agree bit for bit."""
import os
import subprocess
import sys

import numpy as np
import pytest

from pathorder import _backend
from pathorder._backend import pykernels

compiled = pytest.importorskip("pathorder._kernels")

CASES = [(0, 0.0), (1, 0.0), (2, 0.0), (2, 0.97), (2, 6.0)]


@pytest.mark.parametrize("code,K", CASES)
def test_iterate_identical(code, K):
    rng = np.random.default_rng(code * 10 + int(K))
    for q0, p0 in rng.random((20, 2)):
        a = compiled.iterate(code, K, q0, p0, 500)
        b = pykernels.iterate(code, K, q0, p0, 500)
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("code,K", CASES)
def test_first_passage_identical(code, K):
    rng = np.random.default_rng(99 + code)
    starts = np.ascontiguousarray(rng.random((300, 2)) / 8.0)
    args = (code, K, starts, 0.0, 0.0, 1.0, 1.0, 8, 8, 9, 40, 0.5)
    for got, want in zip(compiled.first_passage(*args), pykernels.first_passage(*args)):
        np.testing.assert_array_equal(got, want)


def test_edge_values_wrap_identically():
    for q0 in (0.0, np.nextafter(1.0, 0.0), 1e-300, 0.5):
        np.testing.assert_array_equal(compiled.iterate(2, 6.0, q0, q0, 50),
                                      pykernels.iterate(2, 6.0, q0, q0, 50))


def test_default_backend_is_compiled():
    assert _backend.BACKEND == "cython"


def test_pure_switch():
    env = {**os.environ, "PATHORDER_PURE": "1"}
    code = "from pathorder._backend import BACKEND; print(BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.strip()
    assert out == "python"


def test_pipeline_report_identical_across_backends(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"command": "pipeline", "system": {"map": "standard", "params": {"K": 6.0}},'
                   ' "partition": {"resolution": [8, 8]}, "source": 0, "target": 9,'
                   ' "L": 300, "horizon": 30, "seed": 5}')
    reports = []
    for pure in ("0", "1"):
        env = {**os.environ, "PATHORDER_PURE": pure}
        proc = subprocess.run([sys.executable, "-m", "pathorder.cli", "pipeline", "--config",
                               str(cfg)], env=env, capture_output=True, check=True)
        reports.append(proc.stdout)
    assert reports[0] == reports[1]
