import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlab import kernels
from nlab._accel import HAS_NUMBA
from nlab.shiftspace import Alphabet, StarredPattern

from . import oracles

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba not available")


def _decode_table(table, b, k):
    offsets = kernels.table_offsets(b, k)
    out = {}
    for j in range(1, k + 1):
        alpha = Alphabet(b, j)
        for code in range(b ** j):
            c = int(table[offsets[j - 1] + code])
            if c:
                out[alpha.decode(code)] = c
    return out


@settings(max_examples=80)
@given(st.integers(2, 5), st.integers(1, 4), st.data())
def test_numpy_kernel_matches_oracle(b, k, data):
    digits = data.draw(st.lists(st.integers(0, b - 1), min_size=k, max_size=120))
    N = len(digits) - k + 1
    table = kernels.count_windows_numpy(np.array(digits), 0, N, b, k)
    assert _decode_table(table, b, k) == dict(oracles.window_counts(digits, N, k))


@needs_numba
@settings(max_examples=80)
@given(st.integers(2, 6), st.integers(1, 5), st.data())
def test_backends_agree_on_windows(b, k, data):
    digits = np.array(data.draw(st.lists(st.integers(0, b - 1), min_size=k, max_size=300)), dtype=np.int64)
    top = len(digits) - k + 1
    start = data.draw(st.integers(0, top))
    stop = data.draw(st.integers(start, top))
    a = kernels.count_windows_numpy(digits, start, stop, b, k)
    c = kernels.count_windows_numba(digits, start, stop, b, k)
    assert np.array_equal(a, c)


@needs_numba
@settings(max_examples=60)
@given(st.integers(2, 3), st.integers(1, 2), st.integers(1, 3), st.data())
def test_backends_agree_on_starred(b, K, m, data):
    entries = st.one_of(st.none(), st.integers(0, b - 1))
    sds = data.draw(st.lists(st.lists(entries, min_size=K, max_size=K).filter(lambda s: None in s),
                             min_size=m, max_size=m))
    p = StarredPattern(b, K, tuple(tuple(s) for s in sds))
    blocks = np.array(data.draw(st.lists(st.integers(0, b ** K - 1), min_size=m, max_size=200)), dtype=np.int64)
    n = len(blocks) - m + 1
    table = p.allowed_table()
    assert kernels.count_starred_numpy(blocks, n, table) == kernels.count_starred_numba(blocks, n, table)


def test_starred_kernel_counts_by_hand():
    p = StarredPattern.parse("0*|*1", 2)
    # blocks 00 01 11 01 -> codes 0 1 3 1; matches at t=0 (00,01) and t=1 (01,11)
    assert kernels.count_starred(np.array([0, 1, 3, 1]), 3, p.allowed_table()) == 2


def test_short_input_rejected():
    with pytest.raises(ValueError):
        kernels.count_windows(np.zeros(3, dtype=np.int64), 0, 3, 2, 2)


def test_env_flag_selects_numpy_fallback():
    env = dict(os.environ, NLAB_NUMBA="0")
    code = (
        "import numpy as np, nlab\n"
        "from nlab import kernels\n"
        "d = np.array([1,0,1,1,0,1,0,0,1])\n"
        "print(nlab.backend(), kernels.count_windows(d, 0, 8, 2, 2).tolist())\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    expected = kernels.count_windows_numpy(np.array([1, 0, 1, 1, 0, 1, 0, 0, 1]), 0, 8, 2, 2).tolist()
    assert out.stdout.split(" ", 1)[0] == "numpy"
    assert out.stdout.split(" ", 1)[1].strip() == str(expected)
