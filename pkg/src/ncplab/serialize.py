"""JSON wire formats for shapes, elements, states, channels, and morphisms.

Complex entries are written as ``{"re": x, "im": y}``; plain numbers are
accepted on input.  See docs/schemas.md for the full schemas.
"""

from __future__ import annotations

import numpy as np

from .algebra import AlgebraElement, AlgebraShape, mk_element, mk_shape
from .channels import (
    CpuMap,
    NcpMorphism,
    from_kraus,
    from_linear,
    markov_from_stochastic,
    mk_morphism,
)
from .states import NormalState, mk_state


class SerializationError(ValueError):
    """Malformed or inconsistent JSON payload."""


def _complex_to_json(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def _complex_from_json(obj) -> complex:
    if isinstance(obj, dict):
        try:
            return complex(float(obj["re"]), float(obj.get("im", 0.0)))
        except (KeyError, TypeError) as exc:
            raise SerializationError(f"bad complex entry {obj!r}") from exc
    if isinstance(obj, (int, float)):
        return complex(obj)
    raise SerializationError(f"bad complex entry {obj!r}")


def matrix_to_json(mat: np.ndarray) -> list:
    mat = np.asarray(mat, dtype=complex)
    return [[_complex_to_json(z) for z in row] for row in mat]


def matrix_from_json(obj) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise SerializationError("matrix must be a nonempty list of rows")
    rows = [[_complex_from_json(z) for z in row] for row in obj]
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise SerializationError("matrix rows have unequal lengths")
    return np.array(rows, dtype=complex)


def shape_to_json(shape: AlgebraShape) -> dict:
    return {"blocks": list(shape.blocks)}


def shape_from_json(obj) -> AlgebraShape:
    try:
        return mk_shape(obj["blocks"])
    except (KeyError, TypeError) as exc:
        raise SerializationError(f"bad shape payload {obj!r}") from exc


def element_to_json(a: AlgebraElement) -> dict:
    return {"blocks": [matrix_to_json(b) for b in a.blocks]}


def element_from_json(obj) -> AlgebraElement:
    try:
        mats = [matrix_from_json(b) for b in obj["blocks"]]
    except (KeyError, TypeError) as exc:
        raise SerializationError("bad element payload") from exc
    shape = mk_shape([m.shape[0] for m in mats])
    return mk_element(shape, mats)


def state_to_json(state: NormalState) -> dict:
    return {
        "shape": shape_to_json(state.shape),
        "densities": [matrix_to_json(d) for d in state.densities],
    }


def state_from_json(obj) -> NormalState:
    if "prob" in obj:
        p = [float(x) for x in obj["prob"]]
        shape = mk_shape([1] * len(p))
        return mk_state(shape, [np.array([[x]]) for x in p])
    try:
        shape = shape_from_json(obj["shape"])
        mats = [matrix_from_json(d) for d in obj["densities"]]
    except (KeyError, TypeError) as exc:
        raise SerializationError("state payload needs 'shape' and 'densities', or 'prob'") from exc
    return mk_state(shape, mats)


def cpumap_to_json(phi: CpuMap) -> dict:
    out = {
        "source": shape_to_json(phi.source_shape),
        "target": shape_to_json(phi.target_shape),
    }
    if phi.kraus is not None:
        out["kraus"] = [matrix_to_json(k) for k in phi.kraus]
    else:
        out["linear"] = matrix_to_json(phi.linear_action)
    return out


def cpumap_from_json(obj) -> CpuMap:
    if "stochastic" in obj:
        s = np.array([[float(x) for x in row] for row in obj["stochastic"]])
        return markov_from_stochastic(s)
    try:
        src = shape_from_json(obj["source"])
        dst = shape_from_json(obj["target"])
    except KeyError as exc:
        raise SerializationError("channel payload needs 'source' and 'target' shapes") from exc
    if "kraus" in obj:
        return from_kraus(src, dst, [matrix_from_json(k) for k in obj["kraus"]])
    if "linear" in obj:
        return from_linear(src, dst, matrix_from_json(obj["linear"]))
    raise SerializationError("channel payload needs 'kraus', 'linear', or 'stochastic'")


def morphism_to_json(m: NcpMorphism) -> dict:
    return {
        "source": state_to_json(m.source[1]),
        "target": state_to_json(m.target[1]),
        "cpu": cpumap_to_json(m.cpu),
    }


def morphism_from_json(obj, tol: float = 1e-9, verify: bool = True) -> NcpMorphism:
    """Load a morphism; with ``verify=False`` the carrier map is trusted."""
    try:
        rho = state_from_json(obj["source"])
        sigma = state_from_json(obj["target"])
        cpu = cpumap_from_json(obj["cpu"])
    except KeyError as exc:
        raise SerializationError("morphism payload needs 'source', 'target', 'cpu'") from exc
    if verify:
        return mk_morphism((rho.shape, rho), (sigma.shape, sigma), cpu, tol=tol)
    return NcpMorphism((rho.shape, rho), (sigma.shape, sigma), cpu)
