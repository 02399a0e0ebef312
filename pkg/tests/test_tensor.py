"""Contraction, QR, and truncated-SVD kernels."""

import numpy as np
import pytest

from evapchain.tensor import (
    EXACT,
    SvdResult,
    TruncationPolicy,
    contract,
    qr_split,
    svd_truncate,
)


def random_tensor(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def reassemble(res: SvdResult) -> np.ndarray:
    mid = res.u @ np.diag(res.s)
    k = res.s.size
    return np.tensordot(
        mid.reshape(-1, k), res.vdag.reshape(k, -1), axes=(1, 0)
    ).reshape(res.u.shape[:-1] + res.vdag.shape[1:])


def test_policy_validation():
    with pytest.raises(ValueError):
        TruncationPolicy(max_bond=0)
    with pytest.raises(ValueError):
        TruncationPolicy(cutoff=-1e-3)
    with pytest.raises(ValueError):
        TruncationPolicy(cutoff=1.0)
    assert EXACT.cutoff == 0.0


def test_policy_frozen():
    policy = TruncationPolicy()
    with pytest.raises(AttributeError):
        policy.cutoff = 0.5


def test_contract_matches_matmul():
    rng = np.random.default_rng(0)
    a = random_tensor(rng, (3, 4))
    b = random_tensor(rng, (4, 5))
    np.testing.assert_allclose(contract(a, b, [(1, 0)]), a @ b, atol=1e-13)


def test_contract_axis_order():
    """Unpaired axes of a come first, then unpaired axes of b."""
    rng = np.random.default_rng(1)
    a = random_tensor(rng, (2, 3, 4))
    b = random_tensor(rng, (4, 5, 3))
    out = contract(a, b, [(2, 0), (1, 2)])
    ref = np.einsum("abc,cdb->ad", a, b)
    np.testing.assert_allclose(out, ref, atol=1e-13)


def test_contract_extent_mismatch():
    a = np.zeros((2, 3))
    b = np.zeros((4, 2))
    with pytest.raises(ValueError, match="extent mismatch"):
        contract(a, b, [(1, 0)])


def test_svd_exact_reconstruction():
    rng = np.random.default_rng(2)
    t = random_tensor(rng, (3, 2, 2, 5))
    res = svd_truncate(t, 2, EXACT)
    assert res.discarded_weight == 0.0
    assert not res.degenerate
    np.testing.assert_allclose(reassemble(res), t, atol=1e-12)


def test_svd_split_validation():
    t = np.zeros((2, 2))
    with pytest.raises(ValueError):
        svd_truncate(t, 0, EXACT)
    with pytest.raises(ValueError):
        svd_truncate(t, 2, EXACT)


def test_svd_rejects_nonfinite():
    t = np.full((2, 2), np.nan)
    with pytest.raises(ValueError, match="non-finite"):
        svd_truncate(t, 1, EXACT)


def test_svd_known_spectrum_truncation():
    """A diagonal matrix makes the rank decision directly visible."""
    s = np.array([2.0, 1.0, 0.5])
    t = np.diag(s).astype(complex)
    total = np.sum(s**2)
    # weight of the smallest value is 0.25/5.25; a cutoff just above that
    # drops exactly one value, just below keeps all three
    frac = 0.25 / total
    res = svd_truncate(t, 1, TruncationPolicy(max_bond=10, cutoff=frac * 1.01))
    assert res.s.size == 2
    np.testing.assert_allclose(res.discarded_weight, frac, rtol=1e-12)
    res = svd_truncate(t, 1, TruncationPolicy(max_bond=10, cutoff=frac * 0.99))
    assert res.s.size == 3
    assert res.discarded_weight == 0.0


def test_svd_bond_cap():
    rng = np.random.default_rng(3)
    t = random_tensor(rng, (8, 8))
    res = svd_truncate(t, 1, TruncationPolicy(max_bond=3, cutoff=0.0))
    assert res.s.size == 3
    assert res.discarded_weight > 0.0
    full = np.linalg.svd(t, compute_uv=False)
    expected = np.sum(full[3:] ** 2) / np.sum(full**2)
    np.testing.assert_allclose(res.discarded_weight, expected, rtol=1e-10)


def test_svd_zero_cutoff_never_truncates():
    """At cutoff 0 the only losses allowed are exact zeros; random tensors
    must come back bit-faithful in weight."""
    rng = np.random.default_rng(4)
    for shape, split in [((2, 2, 4), 1), ((6, 3, 2), 2), ((2, 2, 2, 2), 2)]:
        t = random_tensor(rng, shape)
        res = svd_truncate(t, split, EXACT)
        assert res.discarded_weight == 0.0
        np.testing.assert_allclose(reassemble(res), t, atol=1e-12)


def test_svd_drops_exact_zero_tail():
    t = np.zeros((3, 3), dtype=complex)
    t[0, 0] = 2.0  # rank 1 embedded in a 3x3
    res = svd_truncate(t, 1, EXACT)
    assert res.s.size == 1
    assert res.discarded_weight == 0.0


def test_svd_zero_tensor_degenerate():
    res = svd_truncate(np.zeros((2, 3)), 1, EXACT)
    assert res.degenerate
    assert res.s.size == 1
    assert res.discarded_weight == 0.0
    assert res.u.shape == (2, 1)
    assert res.vdag.shape == (1, 3)


def test_svd_weight_within_cutoff():
    """When the cap does not bind, the relative discarded weight obeys the
    cutoff by construction."""
    rng = np.random.default_rng(5)
    policy = TruncationPolicy(max_bond=64, cutoff=1e-2)
    for _ in range(20):
        t = random_tensor(rng, (6, 6))
        res = svd_truncate(t, 1, policy)
        assert res.discarded_weight <= policy.cutoff


def test_qr_split_reconstructs():
    rng = np.random.default_rng(6)
    t = random_tensor(rng, (3, 2, 4))
    q, r = qr_split(t, 2)
    rebuilt = np.tensordot(q, r, axes=(2, 0))
    np.testing.assert_allclose(rebuilt, t, atol=1e-12)
    qmat = q.reshape(-1, q.shape[-1])
    np.testing.assert_allclose(
        qmat.conj().T @ qmat, np.eye(q.shape[-1]), atol=1e-12
    )
