"""Both kernel backends against the brute-force oracle and each other."""

import os

import numpy as np
import pytest

import oracle
from prodspace import kernels
from prodspace.metrics import proximity_from_counts

BACKENDS = kernels.backends()


def test_compiled_backend_available():
    # the extension is built by `pip install -e .`; fallback stays usable without it
    assert "python" in BACKENDS
    if "compiled" not in BACKENDS:
        pytest.skip("compiled extension not built")
    want = "python" if os.environ.get("PRODSPACE_KERNELS") == "python" else "compiled"
    assert kernels.BACKEND == want


@pytest.mark.parametrize("backend", sorted(BACKENDS))
@pytest.mark.parametrize("seed", range(10))
def test_cooccurrence_matches_counting(backend, seed):
    rng = np.random.default_rng(seed)
    bits = (rng.random((int(rng.integers(1, 13)), int(rng.integers(1, 16)))) < 0.4).astype(np.uint8)
    counts = BACKENDS[backend].cooccurrence(bits)
    b = bits.tolist()
    n = bits.shape[1]
    want = [[sum(1 for row in b if row[i] and row[j]) for j in range(n)] for i in range(n)]
    assert counts.dtype == np.int64
    assert counts.tolist() == want
    assert proximity_from_counts(counts).tolist() == oracle.proximity(b)


@pytest.mark.parametrize("backend", sorted(BACKENDS))
@pytest.mark.parametrize("seed", range(10))
def test_density_matrix_matches_oracle(backend, seed):
    rng = np.random.default_rng(100 + seed)
    bits = (rng.random((int(rng.integers(1, 13)), int(rng.integers(1, 16)))) < 0.4).astype(np.uint8)
    phi = proximity_from_counts(BACKENDS[backend].cooccurrence(bits))
    omega, isolated = BACKENDS[backend].density_matrix(bits, phi)
    for c in range(bits.shape[0]):
        want, iso = oracle.density(bits[c].tolist(), phi.tolist())
        assert np.allclose(omega[c], want, rtol=0, atol=1e-12)
        assert isolated.tolist() == iso


def test_backends_agree_on_larger_input():
    if "compiled" not in BACKENDS:
        pytest.skip("compiled extension not built")
    rng = np.random.default_rng(3)
    bits = (rng.random((60, 400)) < 0.1).astype(np.uint8)
    cc = BACKENDS["compiled"].cooccurrence(bits)
    pc = BACKENDS["python"].cooccurrence(bits)
    assert np.array_equal(cc, pc)
    phi = proximity_from_counts(cc)
    oc, ic = BACKENDS["compiled"].density_matrix(bits, phi)
    op, ip = BACKENDS["python"].density_matrix(bits, phi)
    assert np.allclose(oc, op, rtol=0, atol=1e-12)
    assert np.array_equal(ic, ip)


def test_shape_mismatch_rejected():
    for mod in BACKENDS.values():
        with pytest.raises(ValueError):
            mod.density_matrix(np.zeros((2, 3), np.uint8), np.zeros((2, 2)))
