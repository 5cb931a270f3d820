"""Parametrized families of states and the Riemannian metrics they inherit
from covariance products.

Pullback procedure
------------------
At a parameter point the differential of the state along each coordinate is a
Hermitian trace-zero element dD_i.  Its score v_i is the Riesz representative
of the real functional a -> Re Tr(dD_i a) on self-adjoint classes, taken with
respect to the real part of the chosen covariance product; the metric is
g_ij = Re <v_i, v_j>.  With the GNS product this reproduces the classical
Fisher information matrix on abelian algebras and the symmetric-logarithmic-
derivative quantum Fisher information on faithful matrix states.

Normalization: the quantum Fisher information convention is used throughout
(no 1/4), so the pure-qubit family below carries the round unit-sphere metric,
i.e. four times the Fubini-Study metric.

The covariance pairing and the Riesz systems decompose block by block, so
pullbacks stay cheap even for finely discretized abelian models.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .algebra import (
    AlgebraElement,
    AlgebraShape,
    ShapeError,
    _wrap,
    hermitian_matrix_basis,
    mk_shape,
)
from .channels import CpuMap, markov_from_stochastic, predual, predual_apply
from .covariance import CovarianceKind, block_form, gns_kind
from .gns import build_gns, embed
from .states import NormalState, mk_state


class ModelDomainError(ValueError):
    """Parameters outside the chart of a model."""


class ScoreNotRepresentableError(RuntimeError):
    """A differential has no Riesz representative at the requested state."""

    def __init__(self, message: str, param_index: int):
        super().__init__(message)
        self.param_index = param_index


RESIDUAL_TOL = 1e-8


@dataclass
class StatModel:
    """A chart theta -> state on a fixed ambient algebra.

    ``derivative_mode`` selects analytic per-parameter closures when available
    or central finite differences with step ``fd_step``.
    """

    name: str
    shape: AlgebraShape
    param_dim: int
    domain: Callable[[np.ndarray], bool]
    _state_fn: Callable[[np.ndarray], NormalState]
    _deriv_fn: Callable[[np.ndarray], list[AlgebraElement]] | None = None
    derivative_mode: str = "analytic"
    fd_step: float = 1e-5
    _domain_message: Callable[[np.ndarray], str] | None = None

    def state_at(self, theta) -> NormalState:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.param_dim,):
            raise ModelDomainError(
                f"{self.name}: expected {self.param_dim} parameters, got {theta.shape}"
            )
        if not self.domain(theta):
            msg = (
                self._domain_message(theta)
                if self._domain_message is not None
                else f"{self.name}: parameters {theta.tolist()} outside the chart domain"
            )
            raise ModelDomainError(msg)
        return self._state_fn(theta)

    def derivatives(self, theta) -> list[AlgebraElement]:
        """Hermitian trace-zero differentials dD_i, one per parameter."""
        theta = np.asarray(theta, dtype=float)
        if self.derivative_mode == "analytic" and self._deriv_fn is not None:
            return self._deriv_fn(theta)
        h = self.fd_step
        out = []
        for i in range(self.param_dim):
            step = np.zeros(self.param_dim)
            step[i] = h
            plus = self.state_at(theta + step)
            minus = self.state_at(theta - step)
            mats = [
                (p - m) / (2.0 * h)
                for p, m in zip(plus.densities, minus.densities)
            ]
            out.append(_wrap(self.shape, mats))
        return out


# ---------------------------------------------------------------------------
# Concrete models
# ---------------------------------------------------------------------------


def simplex_model(n: int, derivative_mode: str = "analytic", fd_step: float = 1e-5) -> StatModel:
    """Open probability simplex on n+1 outcomes, coordinates p_1..p_n."""
    if n < 1:
        raise ValueError("simplex needs at least one free coordinate")
    shape = mk_shape([1] * (n + 1))

    def domain(theta):
        return bool(np.all(theta > 0.0) and float(np.sum(theta)) < 1.0)

    def probs(theta):
        return np.concatenate([theta, [1.0 - float(np.sum(theta))]])

    def state_fn(theta):
        return mk_state(shape, [np.array([[p]]) for p in probs(theta)])

    def deriv_fn(theta):
        out = []
        for i in range(n):
            mats = [np.zeros((1, 1), dtype=complex) for _ in range(n + 1)]
            mats[i][0, 0] = 1.0
            mats[n][0, 0] = -1.0
            out.append(_wrap(shape, mats))
        return out

    return StatModel(
        f"simplex:{n}", shape, n, domain, state_fn, deriv_fn, derivative_mode, fd_step
    )


_PAULI = (
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)


def _bloch_vectors(th: float, ph: float):
    n_hat = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
    d_th = np.array([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)])
    d_ph = np.array([-np.sin(th) * np.sin(ph), np.sin(th) * np.cos(ph), 0.0])
    return n_hat, d_th, d_ph


def _pauli_dot(vec) -> np.ndarray:
    return sum(c * s for c, s in zip(vec, _PAULI))


def qubit_faithful_model(derivative_mode: str = "analytic", fd_step: float = 1e-5) -> StatModel:
    """Full-rank qubit states in spherical Bloch coordinates (r, theta, phi).

    The chart is the punctured open ball: r in (0, 1), theta in (0, pi).
    """
    shape = mk_shape([2])

    def domain(theta):
        r, th, _ = theta
        return bool(0.0 < r < 1.0 and 0.0 < th < np.pi)

    def state_fn(theta):
        r, th, ph = theta
        n_hat, _, _ = _bloch_vectors(th, ph)
        return mk_state(shape, [(np.eye(2) + r * _pauli_dot(n_hat)) / 2.0])

    def deriv_fn(theta):
        r, th, ph = theta
        n_hat, d_th, d_ph = _bloch_vectors(th, ph)
        return [
            _wrap(shape, [_pauli_dot(n_hat) / 2.0]),
            _wrap(shape, [r * _pauli_dot(d_th) / 2.0]),
            _wrap(shape, [r * _pauli_dot(d_ph) / 2.0]),
        ]

    return StatModel(
        "qubit-faithful", shape, 3, domain, state_fn, deriv_fn, derivative_mode, fd_step
    )


def qubit_pure_model(derivative_mode: str = "analytic", fd_step: float = 1e-5) -> StatModel:
    """Rank-one qubit states on the Bloch sphere, coordinates (theta, phi)."""
    shape = mk_shape([2])

    def domain(theta):
        th, _ = theta
        return bool(0.0 <= th <= np.pi)

    def state_fn(theta):
        th, ph = theta
        n_hat, _, _ = _bloch_vectors(th, ph)
        return mk_state(shape, [(np.eye(2) + _pauli_dot(n_hat)) / 2.0])

    def deriv_fn(theta):
        th, ph = theta
        _, d_th, d_ph = _bloch_vectors(th, ph)
        return [
            _wrap(shape, [_pauli_dot(d_th) / 2.0]),
            _wrap(shape, [_pauli_dot(d_ph) / 2.0]),
        ]

    return StatModel(
        "qubit-pure", shape, 2, domain, state_fn, deriv_fn, derivative_mode, fd_step
    )


MASS_LEAK_TOL = 1e-6


def gaussian_model(
    n_bins: int,
    x_min: float,
    x_max: float,
    derivative_mode: str = "analytic",
    fd_step: float = 1e-5,
) -> StatModel:
    """Normal densities binned on a uniform grid, parameters (mu, sigma).

    Bin masses are exact CDF differences, renormalized; the chart requires at
    least 1 - 1e-6 of the mass inside [x_min, x_max].
    """
    if n_bins < 2:
        raise ValueError("need at least two bins")
    if not x_min < x_max:
        raise ValueError("empty bin range")
    shape = mk_shape([1] * n_bins)
    edges = np.linspace(x_min, x_max, n_bins + 1)

    def contained(theta):
        mu, sig = theta
        return float(ndtr((x_max - mu) / sig) - ndtr((x_min - mu) / sig))

    def domain(theta):
        if theta[1] <= 0.0:
            return False
        return contained(theta) >= 1.0 - MASS_LEAK_TOL

    def domain_message(theta):
        if theta[1] <= 0.0:
            return f"gaussian: sigma must be positive, got {theta[1]}"
        leak = 1.0 - contained(theta)
        return (
            f"gaussian: {leak:.3e} of the mass leaks outside "
            f"[{x_min}, {x_max}] (limit {MASS_LEAK_TOL:.1e})"
        )

    def raw_probs(theta):
        mu, sig = theta
        return np.diff(ndtr((edges - mu) / sig))

    def state_fn(theta):
        p = raw_probs(theta)
        p = p / p.sum()
        return mk_state(shape, [np.array([[x]]) for x in p])

    def deriv_fn(theta):
        mu, sig = theta
        z = (edges - mu) / sig
        pdf = np.exp(-z * z / 2.0) / np.sqrt(2.0 * np.pi)
        p = raw_probs(theta)
        total = p.sum()
        d_mu = -np.diff(pdf) / sig
        d_sig = -np.diff(z * pdf) / sig
        out = []
        for d_raw in (d_mu, d_sig):
            d_norm = (d_raw * total - p * d_raw.sum()) / total**2
            out.append(
                _wrap(shape, [np.array([[x]]) for x in d_norm])
            )
        return out

    return StatModel(
        f"gaussian:{n_bins}",
        shape,
        2,
        domain,
        state_fn,
        deriv_fn,
        derivative_mode,
        fd_step,
        domain_message,
    )


# ---------------------------------------------------------------------------
# Affine group action on the Gaussian family
# ---------------------------------------------------------------------------


def affine_identity() -> tuple[float, float]:
    return (0.0, 1.0)


def affine_compose(xi, xi2) -> tuple[float, float]:
    """Composition of x -> sigma x + mu maps: (mu, s) o (mu', s') = (mu + s mu', s s')."""
    mu, s = xi
    mu2, s2 = xi2
    if s <= 0.0 or s2 <= 0.0:
        raise ValueError("affine scale must be positive")
    return (mu + s * mu2, s * s2)


def _normal_pdf(x, mu, sig):
    z = (np.asarray(x, dtype=float) - mu) / sig
    return np.exp(-z * z / 2.0) / (sig * np.sqrt(2.0 * np.pi))


def affine_pushforward_check(xi, xi2, grid) -> dict:
    """Pointwise identity p_{xi o xi'}(x) = p_{xi'}((x - mu)/sigma) / sigma.

    Checked on analytic normal densities over the supplied grid; this is the
    density form of pushing the law at xi' forward through the affine map xi.
    """
    mu, s = xi
    comp = affine_compose(xi, xi2)
    grid = np.asarray(grid, dtype=float)
    lhs = _normal_pdf(grid, comp[0], comp[1])
    rhs = _normal_pdf((grid - mu) / s, xi2[0], xi2[1]) / s
    dev = float(np.max(np.abs(lhs - rhs)))
    return {
        "xi": list(map(float, xi)),
        "xi_prime": list(map(float, xi2)),
        "composed": list(map(float, comp)),
        "grid_points": int(grid.size),
        "max_abs_deviation": dev,
        "passed": dev < 1e-12,
    }


@dataclass
class GroupActionModel:
    """A model together with a compatible group of channel automorphisms."""

    base: StatModel
    act_on_params: Callable
    automorphism_at: Callable[[tuple], CpuMap]

    def equivariance_deviation(self, g, theta, interior: int = 0) -> float:
        """Worst bin deviation between the pushed state and the state at g o theta.

        ``interior`` drops that many bins at each edge of the grid before
        comparing, to separate discretization edge effects.
        """
        rho = self.base.state_at(theta)
        pushed = predual(self.automorphism_at(g), rho)
        direct = self.base.state_at(self.act_on_params(g, theta))
        p = np.array([m[0, 0].real for m in pushed.densities])
        q = np.array([m[0, 0].real for m in direct.densities])
        if interior:
            p, q = p[interior:-interior], q[interior:-interior]
        return float(np.max(np.abs(p - q)))

    def composition_deviation(self, g, g2, theta) -> float:
        """Total-variation gap, on the state at theta, between the channel at
        g o g2 and the chained channels at g and g2."""
        rho = self.base.state_at(theta)
        direct = predual(self.automorphism_at(self.act_on_params(g, g2)), rho)
        chained_action = (
            self.automorphism_at(g2).linear_action
            @ self.automorphism_at(g).linear_action
        )
        shape = self.base.shape
        chained = predual(
            CpuMap(shape, shape, chained_action), rho
        )
        p = np.array([m[0, 0].real for m in direct.densities])
        q = np.array([m[0, 0].real for m in chained.densities])
        return float(np.sum(np.abs(p - q)))


def _affine_bin_overlap_stochastic(edges: np.ndarray, mu: float, s: float) -> np.ndarray:
    """Column-stochastic matrix S with S[j, i] = share of bin i's image
    (under x -> s x + mu) that lands in bin j; out-of-range mass is clamped
    to the boundary bins."""
    n = edges.size - 1
    lo = s * edges[:-1] + mu
    hi = s * edges[1:] + mu
    width = hi - lo
    left = np.maximum(lo[:, None], edges[None, :-1])
    right = np.minimum(hi[:, None], edges[None, 1:])
    overlap = np.clip(right - left, 0.0, None) / width[:, None]  # (i, j)
    covered = overlap.sum(axis=1)
    below = np.clip(edges[0] - lo, 0.0, None) / width
    overlap[:, 0] += np.minimum(below, 1.0 - covered)
    overlap[:, -1] += 1.0 - covered - np.minimum(below, 1.0 - covered)
    return overlap.T  # (j, i): columns indexed by source bin


def gaussian_group_model(n_bins: int, x_min: float, x_max: float) -> GroupActionModel:
    """Binned Gaussian family with the affine group acting by bin-overlap
    Markov maps.  Equivariance holds up to discretization error that
    decreases with the number of bins."""
    base = gaussian_model(n_bins, x_min, x_max)
    edges = np.linspace(x_min, x_max, n_bins + 1)

    def automorphism_at(g) -> CpuMap:
        mu, s = g
        if s <= 0.0:
            raise ValueError("affine scale must be positive")
        return markov_from_stochastic(_affine_bin_overlap_stochastic(edges, mu, s))

    return GroupActionModel(base, affine_compose, automorphism_at)


# ---------------------------------------------------------------------------
# Scores and metric pullback
# ---------------------------------------------------------------------------


def _riesz_solve(model: StatModel, theta, kind: CovarianceKind):
    state = model.state_at(theta)
    space = build_gns(model.shape, state)
    derivs = model.derivatives(theta)
    p = model.param_dim
    score_blocks: list[list[np.ndarray]] = [[] for _ in range(p)]
    forms = []
    worst_resid = np.zeros(p)
    t_scale = 1.0
    for k, n in enumerate(model.shape.blocks):
        b = block_form(kind, space, k)
        forms.append(b)
        if n == 1:
            # one real coordinate; solve directly
            bb = float(b[0, 0].real)
            t = np.array([float(d.blocks[k][0, 0].real) for d in derivs])
            t_scale = max(t_scale, float(np.max(np.abs(t))))
            if bb > 0.0:
                c = t / bb
                resid = np.zeros(p)
            else:
                c = np.zeros(p)
                resid = np.abs(t)
            worst_resid = np.maximum(worst_resid, resid)
            for i in range(p):
                score_blocks[i].append(np.array([[c[i]]], dtype=complex))
            continue
        hmats = hermitian_matrix_basis(n)
        h = np.column_stack([m.ravel() for m in hmats])
        a = (h.conj().T @ b @ h).real
        t = np.column_stack(
            [(d.blocks[k].ravel().conj() @ h).real for d in derivs]
        )
        t_scale = max(t_scale, float(np.max(np.abs(t))) if t.size else 1.0)
        c, *_ = np.linalg.lstsq(a, t, rcond=None)
        resid = np.max(np.abs(a @ c - t), axis=0)
        worst_resid = np.maximum(worst_resid, resid)
        for i in range(p):
            score_blocks[i].append((h @ c[:, i]).reshape(n, n))
    for i in range(p):
        if worst_resid[i] > RESIDUAL_TOL * t_scale:
            raise ScoreNotRepresentableError(
                f"{model.name}: differential {i} is not representable at "
                f"theta={np.asarray(theta).tolist()} "
                f"(residual {worst_resid[i]:.3e})",
                param_index=i,
            )
    scores = [_wrap(model.shape, blocks) for blocks in score_blocks]
    return space, scores, forms


def riesz_score(model: StatModel, theta, kind: CovarianceKind | None = None) -> list[np.ndarray]:
    """GNS coordinates of the score vectors v_1..v_p at theta."""
    kind = kind if kind is not None else gns_kind()
    space, scores, _ = _riesz_solve(model, theta, kind)
    return [embed(space, v) for v in scores]


def metric_pullback(model: StatModel, theta, kind: CovarianceKind | None = None) -> np.ndarray:
    """Metric matrix g_ij = Re <v_i, v_j> of the pulled-back covariance."""
    kind = kind if kind is not None else gns_kind()
    _, scores, forms = _riesz_solve(model, theta, kind)
    p = model.param_dim
    g = np.zeros((p, p))
    for k, b in enumerate(forms):
        vecs = np.column_stack([v.blocks[k].ravel() for v in scores])
        g += (vecs.conj().T @ b @ vecs).real
    return (g + g.T) / 2.0


# ---------------------------------------------------------------------------
# Closed-form reference metrics
# ---------------------------------------------------------------------------


def fisher_rao_simplex_metric(theta) -> np.ndarray:
    """Fisher-Rao matrix in the first-n coordinates of the simplex."""
    theta = np.asarray(theta, dtype=float)
    p_last = 1.0 - float(np.sum(theta))
    return np.diag(1.0 / theta) + 1.0 / p_last


def gaussian_fisher_rao_metric(mu: float, sigma: float) -> np.ndarray:
    """Fisher-Rao matrix of the normal family in (mu, sigma)."""
    del mu
    return np.diag([1.0 / sigma**2, 2.0 / sigma**2])


def qubit_qfi_metric(r: float, theta: float, phi: float) -> np.ndarray:
    """Quantum Fisher information of the faithful qubit family in
    spherical Bloch coordinates."""
    del phi
    return np.diag([1.0 / (1.0 - r**2), r**2, r**2 * np.sin(theta) ** 2])


def pure_qubit_sphere_metric(theta: float, phi: float) -> np.ndarray:
    """Round unit-sphere metric (four times Fubini-Study)."""
    del phi
    return np.diag([1.0, np.sin(theta) ** 2])


def analytic_references() -> dict[str, Callable]:
    """Bundle of the closed-form metrics used as oracles."""
    return {
        "simplex": fisher_rao_simplex_metric,
        "gaussian": gaussian_fisher_rao_metric,
        "qubit-faithful": qubit_qfi_metric,
        "qubit-pure": pure_qubit_sphere_metric,
    }


# ---------------------------------------------------------------------------
# Congruence invariance
# ---------------------------------------------------------------------------


def embedded_model(model: StatModel, embedding: CpuMap) -> StatModel:
    """Compose an abelian model with the predual of a congruent embedding."""
    if not model.shape.is_abelian:
        raise ShapeError("only abelian models can be congruently embedded")
    if embedding.target_shape != model.shape:
        raise ShapeError(
            f"embedding codomain {embedding.target_shape} must equal the "
            f"model ambient {model.shape}"
        )
    new_shape = embedding.source_shape

    def state_fn(theta):
        return predual(embedding, model.state_at(theta))

    def deriv_fn(theta):
        out = []
        for d in model.derivatives(theta):
            mats = predual_apply(embedding, d.blocks)
            out.append(_wrap(new_shape, mats))
        return out

    return StatModel(
        f"{model.name}+embedded",
        new_shape,
        model.param_dim,
        model.domain,
        state_fn,
        deriv_fn,
        model.derivative_mode,
        model.fd_step,
    )


def congruence_invariance_check(
    model: StatModel,
    embedding: CpuMap,
    theta_samples,
    kind: CovarianceKind | None = None,
    tol: float = 1e-9,
) -> dict:
    """Pullback metric before and after a congruent embedding must agree."""
    kind = kind if kind is not None else gns_kind()
    refined = embedded_model(model, embedding)
    samples = [np.asarray(t, dtype=float) for t in theta_samples]
    worst = 0.0
    for theta in samples:
        g0 = metric_pullback(model, theta, kind)
        g1 = metric_pullback(refined, theta, kind)
        worst = max(worst, float(np.max(np.abs(g0 - g1))))
    return {
        "model": model.name,
        "n_samples": len(samples),
        "kind": kind.label,
        "max_metric_deviation": worst,
        "tol": tol,
        "passed": worst <= tol,
    }
