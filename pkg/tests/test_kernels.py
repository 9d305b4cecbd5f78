import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hallmhd import _kernels_py, kernels
from hallmhd.field_core import Grid
from hallmhd.littlewood_paley import build_partition

compiled = pytest.importorskip("hallmhd._kernels")

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
fields = st.integers(1, 300).flatmap(lambda n: arrays(np.float64, (3, n), elements=finite))


def test_backend_reports_compiled():
    assert kernels.BACKEND == "compiled"


@settings(max_examples=40, deadline=None)
@given(fields, st.data())
def test_cross_matches(a, data):
    b = data.draw(arrays(np.float64, a.shape, elements=finite))
    assert np.array_equal(compiled.cross(a, b), _kernels_py.cross(a, b))


@settings(max_examples=40, deadline=None)
@given(fields, st.sampled_from([1.0, 2.0, 3.0, 2.5, 4.0]))
def test_power_sum_matches(a, p):
    ref = _kernels_py.power_sum(a, p)
    assert compiled.power_sum(a, p) == pytest.approx(ref, rel=1e-12, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(fields)
def test_max_magnitude_matches(a):
    assert compiled.max_magnitude(a) == pytest.approx(_kernels_py.max_magnitude(a), rel=1e-15)


@pytest.mark.parametrize("n", [16, 32])
def test_shell_energies_match(n):
    part = build_partition(Grid(n))
    power = np.random.default_rng(n).random(Grid(n).spectral_shape).ravel()
    args = (power, part._lo, part._w_lo, part._w_hi, part.nshells)
    assert np.allclose(compiled.shell_energies(*args), _kernels_py.shell_energies(*args), rtol=1e-13, atol=0)


def test_fallback_selected_by_environment():
    code = "from hallmhd.kernels import BACKEND; print(BACKEND)"
    env = dict(os.environ, HMHD_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_fallback_gives_same_besov_norm():
    code = (
        "import numpy as np\n"
        "from hallmhd.field_core import Grid\n"
        "from hallmhd.experiments.data import random_divfree\n"
        "from hallmhd.littlewood_paley import besov\n"
        "u = random_divfree(Grid(16), np.random.default_rng(3))\n"
        "print(repr(besov(u, 0.5, 2)), repr(besov(u, 0.5, 3)))\n"
    )
    vals = []
    for pure in ("0", "1"):
        env = dict(os.environ, HMHD_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        vals.append([float(v) for v in out.stdout.split()])
    assert vals[0] == pytest.approx(vals[1], rel=1e-13)


def test_thread_count_cap(monkeypatch):
    monkeypatch.setenv("HMHD_THREADS", "1")
    assert kernels.thread_count() == 1
