"""Unit-sphere composition kernels.

All functions operate on 1-D float64 numpy arrays. Anything returned as a
"unit vector" has Euclidean norm 1 within 1e-9 and is safe to compare by
plain dot product. Inputs are never mutated.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AntipodalVectors,
    DegenerateVector,
    DimensionMismatch,
    NonPositiveWeight,
)

# Norm below this is treated as a fully cancelled combination.
EPS_ZERO = 1e-9
# Angular window (radians) around 0 and pi where the slerp form degenerates.
EPS_ANGLE = 1e-6

Vector = np.ndarray
WeightedVector = tuple[Vector, float]


def as_vector(values: Sequence[float] | Vector) -> Vector:
    """Coerce to a contiguous float64 array and reject non-finite entries."""
    vec = np.ascontiguousarray(values, dtype=np.float64)
    if vec.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise DegenerateVector("vector contains NaN or Inf components")
    return vec


def check_unit(vec: Vector, tol: float = 1e-6) -> Vector:
    """Assert the unit-norm invariant at a module boundary."""
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > tol:
        raise DegenerateVector(f"expected unit norm, got {norm!r}")
    return vec


def normalize(raw: Sequence[float] | Vector) -> Vector:
    """Scale to unit length.

    Raises DegenerateVector when the input norm is at or below EPS_ZERO,
    which downstream signals a fully cancelling weighted combination.
    """
    vec = as_vector(raw)
    norm = float(np.linalg.norm(vec))
    if norm <= EPS_ZERO:
        raise DegenerateVector(f"cannot normalize vector with norm {norm!r}")
    return vec / norm


def cosine(a: Vector, b: Vector) -> float:
    """Dot product of two unit vectors, clamped to [-1, 1] for arccos safety."""
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


def _check_same_dim(vectors: Iterable[Vector]) -> int:
    dim = -1
    for vec in vectors:
        if dim == -1:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise DimensionMismatch(f"dimension mismatch: {vec.shape[0]} vs {dim}")
    return dim


def lerp_combine(items: Sequence[WeightedVector]) -> Vector:
    """Signed weighted sum of vectors, renormalized to the sphere.

    Weights may be negative; equal-and-opposite terms cancel and raise
    DegenerateVector. Result is invariant under permutation of items.
    """
    if not items:
        raise DegenerateVector("lerp_combine requires at least one item")
    vectors = [as_vector(vec) for vec, _ in items]
    _check_same_dim(vectors)
    for _, weight in items:
        if not math.isfinite(weight):
            raise DegenerateVector(f"weight {weight!r} is not finite")
    acc = np.zeros(vectors[0].shape[0], dtype=np.float64)
    for vec, (_, weight) in zip(vectors, items):
        acc += weight * vec
    return normalize(acc)


def slerp2(v0: Vector, v1: Vector, t: float) -> Vector:
    """Interpolate along the great circle from v0 (t=0) to v1 (t=1).

    Angular velocity is constant in t. Near-parallel inputs fall back to
    normalized linear interpolation, which is the limit of the closed form
    and avoids the 0/0 in sin(omega). Antipodal inputs have no preferred
    geodesic and raise.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"interpolation parameter must be in [0, 1], got {t!r}")
    omega = math.acos(cosine(v0, v1))
    if omega < EPS_ANGLE:
        return normalize((1.0 - t) * v0 + t * v1)
    if omega > math.pi - EPS_ANGLE:
        raise AntipodalVectors(f"angle {omega!r} too close to pi")
    sin_omega = math.sin(omega)
    out = (math.sin((1.0 - t) * omega) / sin_omega) * v0 + (
        math.sin(t * omega) / sin_omega
    ) * v1
    # The closed form is unit-norm analytically; renormalize to pin the
    # invariant against float drift.
    return normalize(out)


def hierarchical_slerp(items: Sequence[WeightedVector]) -> Vector:
    """Merge n weighted unit vectors by repeated pairwise slerp.

    Each round merges adjacent pairs (left, right) at t = w_right / (w_left +
    w_right) with new weight (w_left + w_right) / 2; an odd trailing element
    is carried unchanged to the next round. Order-sensitive by construction:
    callers must not assume permutation invariance.
    """
    if not items:
        raise DegenerateVector("hierarchical_slerp requires at least one item")
    vectors = [as_vector(vec) for vec, _ in items]
    _check_same_dim(vectors)
    weights = []
    for _, weight in items:
        if not math.isfinite(weight) or weight <= 0.0:
            raise NonPositiveWeight(f"slerp weights must be positive, got {weight!r}")
        weights.append(float(weight))

    while len(vectors) > 1:
        merged_vectors: list[Vector] = []
        merged_weights: list[float] = []
        for left in range(0, len(vectors) - 1, 2):
            w_sum = weights[left] + weights[left + 1]
            t = weights[left + 1] / w_sum
            merged_vectors.append(slerp2(vectors[left], vectors[left + 1], t))
            merged_weights.append(w_sum / 2.0)
        if len(vectors) % 2 == 1:
            merged_vectors.append(vectors[-1])
            merged_weights.append(weights[-1])
        vectors = merged_vectors
        weights = merged_weights
    return vectors[0]
