"""Dense tensor primitives: mode permutation, generalized unfolding, contraction.

Conventions used throughout the package:

* modes are 0-based;
* linearization is first-index-fastest (column-major), so an unfolding is a
  permute followed by an ``order='F'`` reshape;
* a permutation materializes an F-contiguous copy, which makes every
  downstream unfolding a metadata-only reshape;
* contraction cost is metered on the global ``FLOPS`` counter, with one
  multiply-add pair counted as 2 FLOPs.
"""
from __future__ import annotations

import contextlib
import math

import numpy as np

__all__ = [
    "FLOPS",
    "FlopCounter",
    "contract",
    "gfold",
    "gunfold",
    "mode_fold",
    "mode_unfold",
    "transpose",
]


class FlopCounter:
    """Cumulative multiply-add meter with an optional label stack.

    ``add`` attributes FLOPs to the innermost active label (or "unlabeled").
    The counter is process-global and single-threaded by design; callers that
    want per-phase deltas snapshot ``total`` / ``by_label`` around the phase.
    """

    def __init__(self) -> None:
        self.total = 0
        self.by_label: dict[str, int] = {}
        self._stack: list[str] = []

    def add(self, n: int) -> None:
        label = self._stack[-1] if self._stack else "unlabeled"
        self.total += n
        self.by_label[label] = self.by_label.get(label, 0) + n

    @contextlib.contextmanager
    def scoped(self, label: str):
        self._stack.append(label)
        try:
            yield self
        finally:
            self._stack.pop()

    def labeled(self, label: str) -> int:
        return self.by_label.get(label, 0)

    def snapshot(self) -> dict[str, int]:
        snap = dict(self.by_label)
        snap["total"] = self.total
        return snap

    def reset(self) -> None:
        self.total = 0
        self.by_label.clear()
        self._stack.clear()


FLOPS = FlopCounter()


# ---------- permutation and (un)folding ---------- #


def _check_perm(perm, ndim: int) -> tuple[int, ...]:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(ndim)):
        raise ValueError(f"perm {perm} is not a permutation of range({ndim})")
    return perm


def _as_array(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 0:
        raise ValueError("order-0 input; tensors here have at least one mode")
    return a


def transpose(x: np.ndarray, perm) -> np.ndarray:
    """Permute modes and materialize the result F-contiguously."""
    x = _as_array(x)
    perm = _check_perm(perm, x.ndim)
    return np.asfortranarray(np.transpose(x, perm))


def gunfold(x: np.ndarray, perm, split: int) -> np.ndarray:
    """Generalized unfolding: permute by ``perm``, then map the first
    ``split`` permuted modes to rows and the rest to columns, both linearized
    first-index-fastest."""
    x = _as_array(x)
    perm = _check_perm(perm, x.ndim)
    if not 1 <= split < x.ndim:
        raise ValueError(f"split must be in [1, {x.ndim - 1}], got {split}")
    xt = np.asfortranarray(np.transpose(x, perm))
    rows = math.prod(xt.shape[:split])
    cols = math.prod(xt.shape[split:])
    return xt.reshape((rows, cols), order="F")


def gfold(mat: np.ndarray, perm, split: int, extents) -> np.ndarray:
    """Inverse of :func:`gunfold` for a tensor with the given ``extents``."""
    mat = np.asarray(mat, dtype=np.float64)
    extents = tuple(int(e) for e in extents)
    perm = _check_perm(perm, len(extents))
    if not 1 <= split < len(extents):
        raise ValueError(f"split must be in [1, {len(extents) - 1}], got {split}")
    pshape = tuple(extents[p] for p in perm)
    rows = math.prod(pshape[:split])
    cols = math.prod(pshape[split:])
    if mat.shape != (rows, cols):
        raise ValueError(f"matrix shape {mat.shape} does not match ({rows}, {cols})")
    xt = mat.reshape(pshape, order="F")
    inv = np.argsort(perm)
    return np.asfortranarray(np.transpose(xt, inv))


def mode_unfold(x: np.ndarray, mode: int) -> np.ndarray:
    """Classical mode unfolding: rows are mode ``mode``, columns the remaining
    modes in ascending order, linearized first-index-fastest."""
    x = _as_array(x)
    if not 0 <= mode < x.ndim:
        raise ValueError(f"mode {mode} out of range for order {x.ndim}")
    if x.ndim == 1:
        return x.reshape((x.shape[0], 1), order="F")
    rest = [m for m in range(x.ndim) if m != mode]
    return gunfold(x, (mode, *rest), 1)


def mode_fold(mat: np.ndarray, mode: int, extents) -> np.ndarray:
    """Inverse of :func:`mode_unfold`."""
    extents = tuple(int(e) for e in extents)
    if not 0 <= mode < len(extents):
        raise ValueError(f"mode {mode} out of range for order {len(extents)}")
    if len(extents) == 1:
        return np.asarray(mat, dtype=np.float64).reshape(extents, order="F")
    rest = [m for m in range(len(extents)) if m != mode]
    return gfold(mat, (mode, *rest), 1, extents)


# ---------- contraction ---------- #


def contract(x: np.ndarray, y: np.ndarray, x_modes, y_modes) -> np.ndarray:
    """Contract ``x`` and ``y`` over the paired mode sequences.

    Pair t matches ``x_modes[t]`` with ``y_modes[t]``; the result keeps x's
    free modes (ascending original order) followed by y's free modes
    (ascending original order).  Adds ``2 * rows * shared * cols`` to
    ``FLOPS``.
    """
    x = _as_array(x)
    y = _as_array(y)
    xm = [int(m) for m in x_modes]
    ym = [int(m) for m in y_modes]
    if len(xm) != len(ym) or not xm:
        raise ValueError("x_modes and y_modes must have equal nonzero length")
    if len(set(xm)) != len(xm) or len(set(ym)) != len(ym):
        raise ValueError("contracted mode lists must not repeat modes")
    if not all(0 <= m < x.ndim for m in xm) or not all(0 <= m < y.ndim for m in ym):
        raise ValueError("contracted mode out of range")
    for a, b in zip(xm, ym):
        if x.shape[a] != y.shape[b]:
            raise ValueError(
                f"extent mismatch: x mode {a} has {x.shape[a]}, y mode {b} has {y.shape[b]}"
            )
    x_free = [m for m in range(x.ndim) if m not in xm]
    y_free = [m for m in range(y.ndim) if m not in ym]
    shared = math.prod(x.shape[m] for m in xm)
    rows = math.prod(x.shape[m] for m in x_free)
    cols = math.prod(y.shape[m] for m in y_free)

    if x_free:
        xa = gunfold(x, (*x_free, *xm), len(x_free))
    else:
        xa = np.asfortranarray(np.transpose(x, xm)).reshape((1, shared), order="F")
    if y_free:
        ya = gunfold(y, (*ym, *y_free), len(ym))
    else:
        ya = np.asfortranarray(np.transpose(y, ym)).reshape((shared, 1), order="F")

    # (ya.T @ xa.T).T is F-contiguous, so the final reshape is metadata-only.
    mat = (ya.T @ xa.T).T
    FLOPS.add(2 * rows * shared * cols)
    out_shape = tuple(x.shape[m] for m in x_free) + tuple(y.shape[m] for m in y_free)
    if not out_shape:
        return np.asarray(mat.reshape(()), dtype=np.float64)
    return mat.reshape(out_shape, order="F")
