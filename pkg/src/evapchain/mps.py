"""Open-boundary matrix product state for a chain of spin-1/2 sites.

Site tensors have axes (left bond, physical, right bond) with physical
dimension 2 and boundary bonds of size 1.  Site 0 maps to the most
significant bit of the statevector index, matching the row-major
linearization used by the dense reference code.

The class tracks an orthogonality center when one is known.  Gauge moves
(``canonicalize``, ``move_center``) rewrite tensors but leave the physical
state unchanged; two-site gate application truncates the bond per the given
policy and renormalizes the kept Schmidt spectrum, returning the relative
discarded weight so callers can keep an error budget.
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .tensor import EXACT, TruncationPolicy, contract, qr_split, svd_truncate

_UNITARY_TOL = 1e-10
_STATEVECTOR_MAX_SITES = 20


def entropy_from_spectrum(lambdas) -> float:
    """Von Neumann entropy -sum(l ln l) in nats, with 0 ln 0 = 0."""
    lam = np.asarray(lambdas, dtype=float)
    lam = lam[lam > 0.0]
    if lam.size == 0:
        return 0.0
    return float(-np.sum(lam * np.log(lam)))


@dataclass
class SchmidtSpectrum:
    """Squared Schmidt values across one bond, non-increasing, summing to 1.

    ``norm`` reports the state norm that was divided out; it is 1 for a
    normalized state.
    """

    lambdas: np.ndarray = field(default_factory=lambda: np.ones(1))
    norm: float = 1.0

    def entropy(self) -> float:
        return entropy_from_spectrum(self.lambdas)


def _check_unitary(gate: np.ndarray, dim: int) -> np.ndarray:
    g = np.asarray(gate, dtype=complex).reshape(dim, dim)
    defect = np.max(np.abs(g.conj().T @ g - np.eye(dim)))
    if defect > _UNITARY_TOL:
        raise ValueError(f"gate is not unitary: max |G^dag G - 1| = {defect:.3e}")
    return g


class MpsState:
    """Mutable MPS container; all tensor data is replaced, never edited in place."""

    def __init__(self, sites, ortho_center: int | None = None):
        self.sites: list[np.ndarray] = [np.asarray(t, dtype=complex) for t in sites]
        self.ortho_center = ortho_center
        self._check_shapes()

    # -- construction ----------------------------------------------------

    @classmethod
    def from_product(cls, bits) -> "MpsState":
        """Product state |b_0 b_1 ... b_{L-1}> with each b in {0, 1}."""
        sites = []
        for b in bits:
            if b not in (0, 1):
                raise ValueError(f"bits must be 0 or 1, got {b!r}")
            t = np.zeros((1, 2, 1), dtype=complex)
            t[0, b, 0] = 1.0
            sites.append(t)
        if not sites:
            raise ValueError("need at least one site")
        return cls(sites, ortho_center=0)

    @classmethod
    def from_statevector(cls, vec, policy: TruncationPolicy = EXACT) -> "MpsState":
        """Split a statevector into an MPS by successive SVDs, left to right."""
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        n = int(round(math.log2(vec.size)))
        if 2**n != vec.size:
            raise ValueError(f"statevector length {vec.size} is not a power of 2")
        if n > _STATEVECTOR_MAX_SITES:
            raise ValueError(f"refusing statevector conversion for {n} sites")
        sites = []
        bond = 1
        rem = vec.reshape(1, -1)
        for _ in range(n - 1):
            rem = rem.reshape(bond, 2, -1)
            res = svd_truncate(rem, 2, policy)
            sites.append(res.u)
            bond = res.s.size
            rem = res.s[:, None] * res.vdag.reshape(bond, -1)
        sites.append(rem.reshape(bond, 2, 1))
        return cls(sites, ortho_center=n - 1)

    # -- basic structure -------------------------------------------------

    @property
    def length(self) -> int:
        return len(self.sites)

    def bond_dims(self) -> list[int]:
        """Interior bond dimensions, length-1 entries for a product state."""
        return [t.shape[2] for t in self.sites[:-1]]

    def max_bond(self) -> int:
        return max(self.bond_dims(), default=1)

    def copy(self) -> "MpsState":
        return MpsState([t.copy() for t in self.sites], self.ortho_center)

    def _check_shapes(self) -> None:
        if not self.sites:
            raise ValueError("empty MPS")
        left = 1
        for k, t in enumerate(self.sites):
            if t.ndim != 3 or t.shape[1] != 2:
                raise ValueError(f"site {k} has shape {t.shape}, want (bond, 2, bond)")
            if t.shape[0] != left:
                raise ValueError(
                    f"bond mismatch entering site {k}: {t.shape[0]} != {left}"
                )
            left = t.shape[2]
        if left != 1:
            raise ValueError(f"right boundary bond must be 1, got {left}")
        if self.ortho_center is not None and not 0 <= self.ortho_center < self.length:
            raise ValueError(f"ortho center {self.ortho_center} out of range")

    # -- gauge moves -----------------------------------------------------

    def _push_right(self, k: int) -> None:
        q, r = qr_split(self.sites[k], 2)
        self.sites[k] = q
        self.sites[k + 1] = contract(r, self.sites[k + 1], [(1, 0)])

    def _push_left(self, k: int) -> None:
        a = self.sites[k]
        r, q = scipy.linalg.rq(a.reshape(a.shape[0], -1), mode="economic")
        kk = q.shape[0]
        self.sites[k] = np.asarray(q, dtype=complex).reshape(kk, a.shape[1], a.shape[2])
        self.sites[k - 1] = contract(self.sites[k - 1], np.asarray(r, dtype=complex), [(2, 0)])

    def canonicalize(self, center: int) -> None:
        """Bring the state to mixed-canonical form with the given center."""
        if not 0 <= center < self.length:
            raise ValueError(f"center {center} out of range")
        for k in range(center):
            self._push_right(k)
        for k in range(self.length - 1, center, -1):
            self._push_left(k)
        self.ortho_center = center

    def move_center(self, site: int) -> None:
        if not 0 <= site < self.length:
            raise ValueError(f"site {site} out of range")
        if self.ortho_center is None:
            self.canonicalize(site)
            return
        while self.ortho_center < site:
            self._push_right(self.ortho_center)
            self.ortho_center += 1
        while self.ortho_center > site:
            self._push_left(self.ortho_center)
            self.ortho_center -= 1

    # -- scalar quantities ----------------------------------------------

    def norm(self) -> float:
        if self.ortho_center is not None:
            return float(np.linalg.norm(self.sites[self.ortho_center]))
        return float(math.sqrt(max(inner(self, self).real, 0.0)))

    def normalize(self) -> float:
        """Scale the state to unit norm; returns the norm that was divided out."""
        if self.ortho_center is None:
            self.canonicalize(0)
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize a zero state")
        self.sites[self.ortho_center] = self.sites[self.ortho_center] / nrm
        return nrm

    def expect_single(self, op: np.ndarray, site: int) -> float:
        """Expectation value of a Hermitian one-site operator."""
        self.move_center(site)
        a = self.sites[site]
        val = np.einsum("asb,st,atb->", a.conj(), np.asarray(op, dtype=complex), a)
        return float(val.real)

    def to_statevector(self) -> np.ndarray:
        """Dense statevector in row-major order; guarded to small chains."""
        if self.length > _STATEVECTOR_MAX_SITES:
            raise ValueError(f"refusing dense conversion for {self.length} sites")
        v = np.ones((1, 1), dtype=complex)
        for t in self.sites:
            v = contract(v, t, [(1, 0)])
            v = v.reshape(-1, t.shape[2])
        return v.reshape(-1)

    # -- gates -----------------------------------------------------------

    def apply_single_site_gate(self, gate: np.ndarray, site: int) -> None:
        """Apply a unitary 2x2 gate; bonds and the ortho center are unchanged."""
        if not 0 <= site < self.length:
            raise ValueError(f"site {site} out of range")
        g = _check_unitary(gate, 2)
        a = self.sites[site]
        self.sites[site] = contract(g, a, [(1, 1)]).transpose(1, 0, 2)

    def apply_two_site_gate(
        self, gate: np.ndarray, site: int, policy: TruncationPolicy
    ) -> float:
        """Apply a unitary gate on (site, site+1) and truncate the bond.

        The gate may be 4x4 or (2,2,2,2) with axes (out_l, out_r, in_l,
        in_r).  The kept Schmidt spectrum is renormalized so a normalized
        state stays normalized; the relative discarded weight is returned.
        """
        if not 0 <= site < self.length - 1:
            raise ValueError(f"bond ({site}, {site + 1}) out of range")
        g = _check_unitary(gate, 4).reshape(2, 2, 2, 2)
        if self.ortho_center is None or not site <= self.ortho_center <= site + 1:
            self.move_center(site)
        theta = contract(self.sites[site], self.sites[site + 1], [(2, 0)])
        theta = contract(theta, g, [(1, 2), (2, 3)]).transpose(0, 2, 3, 1)
        res = svd_truncate(theta, 2, policy)
        kept = np.linalg.norm(res.s)
        if kept == 0.0:
            raise ValueError("state truncated to zero weight")
        s = res.s / kept
        self.sites[site] = res.u
        self.sites[site + 1] = s[:, None, None] * res.vdag
        self.ortho_center = site + 1
        return res.discarded_weight

    # -- entanglement ----------------------------------------------------

    def schmidt_at(self, bond: int) -> SchmidtSpectrum:
        """Squared Schmidt values across interior bond (bond, bond+1), 0-based.

        An unnormalized state is handled by dividing out its norm, which is
        reported in the result.
        """
        if not 0 <= bond <= self.length - 2:
            raise ValueError(f"bond {bond} out of range")
        self.move_center(bond)
        nrm = float(np.linalg.norm(self.sites[bond]))
        if nrm == 0.0:
            raise ValueError("zero state has no Schmidt spectrum")
        res = svd_truncate(self.sites[bond], 2, EXACT)
        lam = (res.s / nrm) ** 2
        return SchmidtSpectrum(lambdas=lam, norm=nrm)

    def entropy_at(self, bond: int) -> float:
        """Von Neumann entanglement entropy in nats across an interior bond."""
        return self.schmidt_at(bond).entropy()

    # -- snapshots -------------------------------------------------------

    def save(self, path) -> None:
        """Write site tensors (C-order) and the ortho center to an npz archive."""
        arrays = {f"site_{k:04d}": t for k, t in enumerate(self.sites)}
        center = -1 if self.ortho_center is None else self.ortho_center
        np.savez(path, ortho_center=np.int64(center), **arrays)

    @classmethod
    def load(cls, path) -> "MpsState":
        with np.load(path) as data:
            keys = sorted(k for k in data.files if k.startswith("site_"))
            if not keys:
                raise ValueError(f"no site tensors found in {path}")
            sites = [data[k] for k in keys]
            center = int(data["ortho_center"])
        return cls(sites, ortho_center=None if center < 0 else center)


def inner(a: MpsState, b: MpsState) -> complex:
    """Overlap <a|b> of two states of equal length."""
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} != {b.length}")
    env = np.ones((1, 1), dtype=complex)
    for x, y in zip(a.sites, b.sites):
        t = contract(env, y, [(1, 0)])
        env = contract(np.conj(x), t, [(0, 0), (1, 1)])
    return complex(env[0, 0])
