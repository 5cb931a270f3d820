"""Normal states as per-block density matrices with total trace one.

A state evaluates elements as rho(a) = sum_k Tr(D_k a_k).  Classical
probability vectors are simply states on abelian shapes; there is no separate
type for them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    AlgebraElement,
    AlgebraShape,
    ShapeError,
    _wrap,
    basis,
    multiply,
)

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10

#: Relative eigenvalue cutoff separating genuine rank deficiency from
#: floating-point noise: eigenvalues <= SUPPORT_RTOL * (max eigenvalue)
#: count as zero.
SUPPORT_RTOL = 1e-9


class StateValidationError(ValueError):
    """A density block fails Hermiticity/positivity, or total trace is off."""

    def __init__(self, message: str, block: int | None = None):
        super().__init__(message)
        self.block = block


@dataclass(frozen=True)
class NormalState:
    """Per-block densities D_k, each Hermitian PSD, with sum_k Tr(D_k) = 1."""

    shape: AlgebraShape
    densities: tuple[np.ndarray, ...]

    def block_eigenvalues(self) -> list[np.ndarray]:
        """Ascending eigenvalues of each density block."""
        return [np.linalg.eigvalsh((d + d.conj().T) / 2.0) for d in self.densities]


def mk_state(shape: AlgebraShape, densities) -> NormalState:
    """Validated normal state.

    Raises :class:`StateValidationError` naming the offending block when a
    density is not Hermitian PSD, or when the total trace is not one.
    """
    if len(densities) != shape.num_blocks:
        raise ShapeError(
            f"expected {shape.num_blocks} density blocks, got {len(densities)}"
        )
    mats = []
    for k, (n, d) in enumerate(zip(shape.blocks, densities)):
        arr = np.asarray(d, dtype=complex)
        if arr.shape != (n, n):
            raise ShapeError(f"density block {k} must be {n}x{n}, got {arr.shape}")
        herm_dev = float(np.max(np.abs(arr - arr.conj().T)))
        if herm_dev > HERMITIAN_TOL:
            raise StateValidationError(
                f"density block {k} not Hermitian (deviation {herm_dev:.3e})",
                block=k,
            )
        min_eig = float(np.linalg.eigvalsh((arr + arr.conj().T) / 2.0)[0])
        if min_eig < -PSD_TOL:
            raise StateValidationError(
                f"density block {k} not positive semidefinite "
                f"(min eigenvalue {min_eig:.3e})",
                block=k,
            )
        mats.append(arr)
    total = float(sum(np.trace(m).real for m in mats))
    if abs(total - 1.0) > TRACE_TOL:
        raise StateValidationError(f"total trace is {total!r}, expected 1")
    frozen = _wrap(shape, mats)
    return NormalState(shape, frozen.blocks)


def evaluate(rho: NormalState, a: AlgebraElement) -> complex:
    """rho(a) = sum_k Tr(D_k a_k)."""
    if rho.shape != a.shape:
        raise ShapeError(f"shape mismatch: {rho.shape} vs {a.shape}")
    return complex(
        sum(np.trace(d @ x) for d, x in zip(rho.densities, a.blocks))
    )


def support(rho: NormalState, tol: float = SUPPORT_RTOL) -> AlgebraElement:
    """Spectral projection onto eigenvalues above tol * (max eigenvalue)."""
    eigs = []
    vecs = []
    for d in rho.densities:
        w, v = np.linalg.eigh((d + d.conj().T) / 2.0)
        eigs.append(w)
        vecs.append(v)
    cutoff = tol * max(float(w[-1]) for w in eigs)
    mats = []
    for w, v in zip(eigs, vecs):
        keep = v[:, w > cutoff]
        mats.append(keep @ keep.conj().T)
    return _wrap(rho.shape, mats)


def is_faithful(rho: NormalState, tol: float = SUPPORT_RTOL) -> bool:
    """True iff every density block has full rank at the support cutoff."""
    eigs = rho.block_eigenvalues()
    cutoff = tol * max(float(w[-1]) for w in eigs)
    return all(float(w[0]) > cutoff for w in eigs)


def _is_tracial_scalar_blocks(rho: NormalState, tol: float) -> bool:
    for n, d in zip(rho.shape.blocks, rho.densities):
        mean = np.trace(d) / n
        if np.max(np.abs(d - mean * np.eye(n))) > tol:
            return False
    return True


def _is_tracial_commutator_sweep(rho: NormalState, tol: float) -> bool:
    es = basis(rho.shape)
    for i, a in enumerate(es):
        for b in es[i + 1:]:
            dev = abs(evaluate(rho, multiply(a, b)) - evaluate(rho, multiply(b, a)))
            if dev > tol:
                return False
    return True


def is_tracial(rho: NormalState, tol: float = 1e-9, method: str = "commutator") -> bool:
    """rho(ab) == rho(ba) for all a, b.

    ``method="commutator"`` sweeps all basis pairs; ``method="scalar"`` uses
    the equivalent criterion that every density block is a scalar multiple of
    the identity.  Both are implemented so they can be cross-checked.
    """
    if method == "commutator":
        return _is_tracial_commutator_sweep(rho, tol)
    if method == "scalar":
        return _is_tracial_scalar_blocks(rho, tol)
    raise ValueError(f"unknown method {method!r}")


def random_state(shape: AlgebraShape, faithful: bool = False, seed: int = 0) -> NormalState:
    """Deterministic Wishart-type random state.

    With ``faithful=True`` the state is mixed toward the normalized identity
    until its smallest eigenvalue is at least 1e-3.
    """
    rng = np.random.default_rng(seed)
    mats = []
    for n in shape.blocks:
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        mats.append(g @ g.conj().T)
    total = sum(np.trace(m).real for m in mats)
    mats = [m / total for m in mats]
    if faithful:
        floor = 1e-3
        min_eig = min(
            float(np.linalg.eigvalsh((m + m.conj().T) / 2.0)[0]) for m in mats
        )
        if min_eig < floor:
            N = shape.total_dim
            # mixing weight t gives min eigenvalue >= (1-t)*min_eig + t/N
            t = (floor - min_eig) / (1.0 / N - min_eig)
            mats = [
                (1.0 - t) * m + t * np.eye(n) / N
                for m, n in zip(mats, shape.blocks)
            ]
    return mk_state(shape, mats)


def random_tracial_state(shape: AlgebraShape, seed: int = 0) -> NormalState:
    """Random block-scalar (hence tracial) faithful state."""
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(shape.num_blocks))
    weights = 0.9 * weights + 0.1 / shape.num_blocks  # keep all blocks charged
    mats = [
        w / n * np.eye(n, dtype=complex) for w, n in zip(weights, shape.blocks)
    ]
    return mk_state(shape, mats)
