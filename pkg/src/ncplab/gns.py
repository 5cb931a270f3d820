"""GNS spaces for (algebra, state) pairs and the contractions induced by
state-preserving CPU maps.

Construction
------------
For a state rho with density blocks D_k, the pre-inner product
<x|y> = rho(x^dag y) has, in the matrix-unit coordinates of this package, the
exact block form ``G = (+)_k I_{n_k} (x) conj(D_k)``.  Its null space is the
Gelfand ideal, so the quotient is obtained by eigendecomposing each D_k and
dropping eigenvalues below a relative cutoff.  Coordinates are rescaled to be
orthonormal, ordered by descending Gram eigenvalue (ties broken by block and
position), and eigenvector phases are fixed so the first nonzero component is
real positive.  The result is reproducible run to run.

A morphism (A, rho) -> (B, sigma) induces the linear contraction
H_sigma -> H_rho, [b] -> [phi(b)], realized here as a matrix in orthonormal
coordinates.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .algebra import (
    AlgebraElement,
    AlgebraShape,
    ShapeError,
    _wrap,
    adjoint,
    identity,
    multiply,
)
from .channels import NcpMorphism, apply, compose, identity_morphism
from .states import NormalState, SUPPORT_RTOL, evaluate

WELL_DEFINED_TOL = 1e-8


class GnsQuotientError(RuntimeError):
    """An induced map does not respect the numerically identified quotient.

    Usually a sign that a density eigenvalue straddles the support cutoff;
    re-run with a tighter tolerance.
    """


def _phase_fix(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its first component above 1e-12 is real positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        anchor = col[idx[0]] if idx.size else None
        if anchor is not None and abs(anchor) > 0:
            out[:, j] = col * (anchor.conjugate() / abs(anchor))
    return out


class GnsSpace:
    """Orthonormalized quotient of an algebra by the Gelfand ideal of a state.

    Attributes
    ----------
    shape, state : the underlying object.
    dim : dimension of the quotient, sum_k n_k * rank(D_k).
    cyclic : coordinates of the class of the unit element; unit norm.
    """

    def __init__(self, shape: AlgebraShape, state: NormalState, tol: float = SUPPORT_RTOL):
        if shape != state.shape:
            raise ShapeError(f"shape {shape} does not match state shape {state.shape}")
        self.shape = shape
        self.state = state
        self.tol = tol

        eig_blocks = []
        for n, d in zip(shape.blocks, state.densities):
            if n == 1:
                w = np.array([float(d[0, 0].real)])
                v = np.ones((1, 1), dtype=complex)
            else:
                w, v = np.linalg.eigh((d + d.conj().T) / 2.0)
                w, v = w[::-1], _phase_fix(v[:, ::-1])
            eig_blocks.append((w, v))
        max_eig = max(float(w[0]) for w, _ in eig_blocks)
        cutoff = tol * max_eig
        # spectral data per block split at the cutoff, eigenvalues descending
        self._block_eigs: list[np.ndarray] = []
        self._block_vecs: list[np.ndarray] = []
        self._block_null_vecs: list[np.ndarray] = []
        for w, v in eig_blocks:
            keep = w > cutoff
            self._block_eigs.append(np.ascontiguousarray(w[keep], dtype=float))
            self._block_vecs.append(np.ascontiguousarray(v[:, keep]))
            self._block_null_vecs.append(np.ascontiguousarray(v[:, ~keep]))

        # Global coordinate order: descending eigenvalue, then block, row,
        # eigenvalue rank.  ``_perm[q]`` is the position in the block-major
        # raw layout (block k, row i, kept eigenvector r; r fastest).
        eigs, blocks_idx, rows_idx, ranks_idx = [], [], [], []
        for k, (w, n) in enumerate(zip(self._block_eigs, shape.blocks)):
            r = w.size
            eigs.append(np.repeat(w[None, :], n, axis=0).ravel())
            blocks_idx.append(np.full(n * r, k))
            rows_idx.append(np.repeat(np.arange(n), r))
            ranks_idx.append(np.tile(np.arange(r), n))
        eigs = np.concatenate(eigs)
        order_keys = (
            np.concatenate(ranks_idx),
            np.concatenate(rows_idx),
            np.concatenate(blocks_idx),
            -eigs,
        )
        self._perm = np.lexsort(order_keys)
        self.dim = int(eigs.size)
        self._sorted_eigs = eigs[self._perm]
        self.cyclic = embed(self, identity(shape))

    @property
    def base(self) -> tuple[AlgebraShape, NormalState]:
        return (self.shape, self.state)

    @property
    def gram_eigenvalues(self) -> np.ndarray:
        """Kept Gram eigenvalues in coordinate order (descending)."""
        return self._sorted_eigs.copy()

    def _raw_embed(self, a: AlgebraElement) -> np.ndarray:
        parts = []
        for x, w, v in zip(a.blocks, self._block_eigs, self._block_vecs):
            if w.size == 0:
                continue
            parts.append(((x @ v) * np.sqrt(w)[None, :]).ravel())
        if not parts:
            return np.zeros(0, dtype=complex)
        return np.concatenate(parts)

    @cached_property
    def iso_matrix(self) -> np.ndarray:
        """dim x element_dim matrix sending element coordinates to GNS coordinates."""
        offs = self.shape.block_offsets()
        rows = []
        for k, n in enumerate(self.shape.blocks):
            w, v = self._block_eigs[k], self._block_vecs[k]
            for i in range(n):
                for r in range(w.size):
                    row = np.zeros(self.shape.element_dim, dtype=complex)
                    row[offs[k] + i * n: offs[k] + (i + 1) * n] = np.sqrt(w[r]) * v[:, r]
                    rows.append(row)
        raw = np.array(rows)
        return raw[self._perm]

    @cached_property
    def rep_elements(self) -> list[AlgebraElement]:
        """Elements whose classes are the orthonormal coordinate basis."""
        raw = []
        for k, n in enumerate(self.shape.blocks):
            w, v = self._block_eigs[k], self._block_vecs[k]
            for i in range(n):
                for r in range(w.size):
                    mats = [np.zeros((m, m), dtype=complex) for m in self.shape.blocks]
                    mats[k][i, :] = v[:, r].conj() / np.sqrt(w[r])
                    raw.append(_wrap(self.shape, mats))
        return [raw[p] for p in self._perm]

    def null_elements(self) -> list[AlgebraElement]:
        """Basis of the numerically identified Gelfand ideal (unit HS norm)."""
        out = []
        for k, n in enumerate(self.shape.blocks):
            nulls = self._block_null_vecs[k]
            for r in range(nulls.shape[1]):
                for i in range(n):
                    mats = [np.zeros((m, m), dtype=complex) for m in self.shape.blocks]
                    mats[k][i, :] = nulls[:, r].conj()
                    out.append(_wrap(self.shape, mats))
        return out


def build_gns(shape: AlgebraShape, state: NormalState, tol: float = SUPPORT_RTOL) -> GnsSpace:
    """GNS space of (shape, state) with relative quotient cutoff ``tol``."""
    return GnsSpace(shape, state, tol)


def embed(space: GnsSpace, a: AlgebraElement) -> np.ndarray:
    """Coordinates of the class [a] in the orthonormal GNS basis."""
    if a.shape != space.shape:
        raise ShapeError(f"element shape {a.shape} != space shape {space.shape}")
    return space._raw_embed(a)[space._perm]


def inner(space: GnsSpace, a: AlgebraElement, b: AlgebraElement) -> complex:
    """The pre-inner product <a|b> = rho(a^dag b)."""
    return evaluate(space.state, multiply(adjoint(a), b))


class GnsContraction:
    """Induced linear map H_sigma -> H_rho in orthonormal coordinates."""

    def __init__(self, source_space: GnsSpace, target_space: GnsSpace, matrix: np.ndarray):
        self.source_space = source_space
        self.target_space = target_space
        self.matrix = matrix

    @property
    def operator_norm(self) -> float:
        if self.matrix.size == 0:
            return 0.0
        return float(np.linalg.svd(self.matrix, compute_uv=False)[0])


def induced_contraction(
    morphism: NcpMorphism,
    space_sigma: GnsSpace,
    space_rho: GnsSpace,
    tol: float = WELL_DEFINED_TOL,
) -> GnsContraction:
    """The map [b] -> [phi(b)] for a verified morphism (A, rho) -> (B, sigma).

    ``space_sigma`` belongs to the morphism target (B, sigma) and is the
    domain of the contraction; ``space_rho`` belongs to the source (A, rho).
    Well-definedness on the quotient is checked: basis elements of the
    sigma-null space must land in the rho-null space within ``tol``.
    """
    shape_a, rho = morphism.source
    shape_b, sigma = morphism.target
    if space_sigma.shape != shape_b or space_rho.shape != shape_a:
        raise ShapeError("GNS spaces do not match the morphism objects")
    if not all(
        np.array_equal(x, y)
        for x, y in zip(space_sigma.state.densities, sigma.densities)
    ) or not all(
        np.array_equal(x, y)
        for x, y in zip(space_rho.state.densities, rho.densities)
    ):
        raise ShapeError("GNS spaces were built for different states")
    for x in space_sigma.null_elements():
        leak = float(np.linalg.norm(embed(space_rho, apply(morphism.cpu, x))))
        if leak > tol:
            raise GnsQuotientError(
                f"null element maps outside the target null space (norm {leak:.3e}); "
                "re-run with a tighter support tolerance"
            )
    cols = [
        embed(space_rho, apply(morphism.cpu, rep))
        for rep in space_sigma.rep_elements
    ]
    matrix = (
        np.column_stack(cols)
        if cols
        else np.zeros((space_rho.dim, 0), dtype=complex)
    )
    return GnsContraction(space_sigma, space_rho, matrix)


def check_functor_laws(chains, tol: float = 1e-9) -> dict:
    """Verify identity and contravariant composition on morphism chains.

    ``chains`` is an iterable of lists of composable morphisms
    [F1: o1 -> o2, F2: o2 -> o3, ...].  For every adjacent pair and for each
    full chain the induced map of the composite is compared against the
    product of the induced maps in reversed order; identities are checked at
    every object.  Returns a report dict with the worst deviations.
    """
    max_id_dev = 0.0
    max_comp_dev = 0.0
    n_chains = 0
    for chain in chains:
        n_chains += 1
        objs = [chain[0].source] + [m.target for m in chain]
        spaces = [build_gns(o[0], o[1]) for o in objs]
        for obj, sp in zip(objs, spaces):
            ident = induced_contraction(identity_morphism(obj), sp, sp)
            max_id_dev = max(
                max_id_dev,
                float(np.max(np.abs(ident.matrix - np.eye(sp.dim)))) if sp.dim else 0.0,
            )
        mats = [
            induced_contraction(m, spaces[i + 1], spaces[i]).matrix
            for i, m in enumerate(chain)
        ]
        # adjacent pairs
        for i in range(len(chain) - 1):
            comp = compose(chain[i + 1], chain[i])
            direct = induced_contraction(comp, spaces[i + 2], spaces[i]).matrix
            max_comp_dev = max(
                max_comp_dev, float(np.max(np.abs(direct - mats[i] @ mats[i + 1])))
            )
        # full chain
        if len(chain) > 1:
            total = chain[0]
            for m in chain[1:]:
                total = compose(m, total)
            direct = induced_contraction(total, spaces[-1], spaces[0]).matrix
            prod = mats[0]
            for m in mats[1:]:
                prod = prod @ m
            max_comp_dev = max(max_comp_dev, float(np.max(np.abs(direct - prod))))
    return {
        "n_chains": n_chains,
        "max_identity_deviation": max_id_dev,
        "max_composition_deviation": max_comp_dev,
        "tol": tol,
        "passed": max_id_dev <= tol and max_comp_dev <= tol,
    }
