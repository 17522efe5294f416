"""Fully-connected tensor network of order-N factors.

Factor ``k`` is an order-N array whose mode ``k`` is the physical mode (extent
``I_k``) and whose mode ``j != k`` is the bond shared with factor ``j`` (extent
``R[j,k]``).  Composing all factors (contracting every bond) yields the dense
order-N tensor.  The partial network around ``k`` (everything contracted except
factor ``k``) is the workhorse of the alternating solver; building it with and
without reuse of shared intermediate contractions is what separates the two
solver variants.

Modes inside a labeled intermediate are tracked by label, not position:
``('i', k)`` is the physical mode of factor ``k`` and ``('r', a, b)`` with
``a < b`` is the bond between factors ``a`` and ``b``.
"""
from __future__ import annotations

import math

import numpy as np

from .tensor import FLOPS, contract, gunfold, transpose

__all__ = [
    "FctnFactors",
    "FctnRank",
    "ReuseCache",
    "compose",
    "compose_except",
    "compose_except_cached",
    "compose_from_partial",
    "factor_labels",
    "partial_labels",
    "property1_unfold",
    "shuffle_order",
]


# ---------- rank table ---------- #


class FctnRank:
    """Symmetric bond-size table.

    Stores the strict upper triangle row-major: ``(R[0,1], R[0,2], ...,
    R[0,n-1], R[1,2], ..., R[n-2,n-1])``, ``n*(n-1)/2`` entries, every entry a
    positive int.  Indexing is symmetric: ``rank[i, j] == rank[j, i]``.
    """

    __slots__ = ("n", "_tri")

    def __init__(self, n: int, entries) -> None:
        n = int(n)
        if n < 2:
            raise ValueError("a network needs at least two factors")
        tri = tuple(int(e) for e in entries)
        need = n * (n - 1) // 2
        if len(tri) != need:
            raise ValueError(f"expected {need} rank entries for n={n}, got {len(tri)}")
        if any(e < 1 for e in tri):
            raise ValueError("rank entries must be >= 1")
        self.n = n
        self._tri = tri

    @classmethod
    def uniform(cls, n: int, r: int) -> "FctnRank":
        return cls(n, [r] * (n * (n - 1) // 2))

    @classmethod
    def from_spec(cls, n: int, value) -> "FctnRank":
        """Accept an int (broadcast) or a full upper-triangle sequence."""
        if isinstance(value, FctnRank):
            if value.n != n:
                raise ValueError(f"rank table is for n={value.n}, need n={n}")
            return value
        if np.isscalar(value):
            return cls.uniform(n, int(value))
        return cls(n, value)

    def _idx(self, i: int, j: int) -> int:
        if i == j:
            raise KeyError("diagonal has no bond")
        i, j = (i, j) if i < j else (j, i)
        if not 0 <= i < j < self.n:
            raise KeyError(f"bond ({i}, {j}) out of range for n={self.n}")
        return i * (self.n - 1) - i * (i - 1) // 2 + (j - i - 1)

    def __getitem__(self, key) -> int:
        i, j = key
        return self._tri[self._idx(int(i), int(j))]

    @property
    def entries(self) -> tuple:
        return self._tri

    def to_vector(self) -> list[int]:
        return list(self._tri)

    def factor_shape(self, k: int, dims) -> tuple:
        """Shape of factor ``k``: bonds in slot order, physical extent at slot k."""
        dims = tuple(int(d) for d in dims)
        if len(dims) != self.n:
            raise ValueError("dims length does not match table size")
        return tuple(
            dims[k] if j == k else self[min(j, k), max(j, k)] for j in range(self.n)
        )

    def bond_product(self, k: int) -> int:
        """Product of all bond sizes at factor k (row size of its mode unfolding)."""
        return math.prod(self[min(j, k), max(j, k)] for j in range(self.n) if j != k)

    def increment_below(self, cap: "FctnRank") -> "FctnRank":
        """Bump every entry that is still below its cap by one."""
        if cap.n != self.n:
            raise ValueError("cap table size mismatch")
        return FctnRank(
            self.n, [min(e + 1, c) for e, c in zip(self._tri, cap._tri)]
        )

    def any_below(self, cap: "FctnRank") -> bool:
        if cap.n != self.n:
            raise ValueError("cap table size mismatch")
        return any(e < c for e, c in zip(self._tri, cap._tri))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FctnRank) and other.n == self.n and other._tri == self._tri
        )

    def __hash__(self):
        return hash((self.n, self._tri))

    def __repr__(self) -> str:
        return f"FctnRank(n={self.n}, entries={self._tri})"


# ---------- factors ---------- #


class FctnFactors:
    """Ordered list of network factors with per-factor version stamps.

    Versions start at zero and bump on :meth:`replace`; the reuse cache keys
    its entries on them, so stale cached contractions are never served.
    """

    def __init__(self, factors) -> None:
        arrays = [np.asfortranarray(np.asarray(a, dtype=np.float64)) for a in factors]
        n = len(arrays)
        if n < 2:
            raise ValueError("need at least two factors")
        for k, a in enumerate(arrays):
            if a.ndim != n:
                raise ValueError(f"factor {k} has order {a.ndim}, expected {n}")
        for i in range(n):
            for j in range(i + 1, n):
                if arrays[i].shape[j] != arrays[j].shape[i]:
                    raise ValueError(
                        f"bond ({i}, {j}) disagrees: {arrays[i].shape[j]} vs {arrays[j].shape[i]}"
                    )
        self._arrays = arrays
        self.versions = [0] * n

    @classmethod
    def random(cls, dims, rank: FctnRank, rng: np.random.Generator) -> "FctnFactors":
        """Standard-normal factors for the given dims and rank table."""
        dims = tuple(int(d) for d in dims)
        return cls(
            [rng.standard_normal(rank.factor_shape(k, dims)) for k in range(len(dims))]
        )

    @property
    def n(self) -> int:
        return len(self._arrays)

    @property
    def dims(self) -> tuple:
        return tuple(a.shape[k] for k, a in enumerate(self._arrays))

    @property
    def rank(self) -> FctnRank:
        n = self.n
        tri = [
            self._arrays[i].shape[j] for i in range(n) for j in range(i + 1, n)
        ]
        return FctnRank(n, tri)

    def factor(self, k: int) -> np.ndarray:
        return self._arrays[k]

    def __getitem__(self, k: int) -> np.ndarray:
        return self._arrays[k]

    def replace(self, k: int, arr: np.ndarray) -> None:
        arr = np.asfortranarray(np.asarray(arr, dtype=np.float64))
        if arr.shape != self._arrays[k].shape:
            raise ValueError(
                f"replacement for factor {k} has shape {arr.shape}, expected {self._arrays[k].shape}"
            )
        self._arrays[k] = arr
        self.versions[k] += 1

    def copy(self) -> "FctnFactors":
        dup = FctnFactors([a.copy(order="F") for a in self._arrays])
        dup.versions = list(self.versions)
        return dup

    def grow(self, new_rank: FctnRank) -> "FctnFactors":
        """Zero-padded embedding into a larger rank table (entrywise >= current)."""
        old = self.rank
        if new_rank.n != self.n:
            raise ValueError("rank table size mismatch")
        if any(a < b for a, b in zip(new_rank.entries, old.entries)):
            raise ValueError("new rank table must dominate the current one")
        dims = self.dims
        grown = []
        for k in range(self.n):
            shape = new_rank.factor_shape(k, dims)
            a = np.zeros(shape, order="F")
            a[tuple(slice(0, s) for s in self._arrays[k].shape)] = self._arrays[k]
            grown.append(a)
        out = FctnFactors(grown)
        out.versions = [v + 1 for v in self.versions]
        return out


# ---------- labeled contraction helpers ---------- #


def factor_labels(k: int, n: int) -> list:
    """Mode labels of factor k in slot order."""
    return [("i", k) if j == k else ("r", min(j, k), max(j, k)) for j in range(n)]


def partial_labels(k: int, n: int) -> list:
    """Canonical mode order of the partial network around k: for each remaining
    factor j ascending, the pair (physical, bond-to-k) when j < k and
    (bond-to-k, physical) when j > k."""
    out = []
    for j in range(n):
        if j == k:
            continue
        if j < k:
            out += [("i", j), ("r", j, k)]
        else:
            out += [("r", k, j), ("i", j)]
    return out


def _contract_labeled(a, la, b, lb):
    """Contract over every label shared by the two operands."""
    shared = [lab for lab in la if lab in lb]
    if not shared:
        raise ValueError("operands share no bond")
    am = [la.index(lab) for lab in shared]
    bm = [lb.index(lab) for lab in shared]
    z = contract(a, b, am, bm)
    lz = [lab for lab in la if lab not in shared] + [lab for lab in lb if lab not in shared]
    return z, lz


def _to_label_order(arr, labels, target):
    if labels == list(target):
        return np.asfortranarray(arr)
    perm = [labels.index(lab) for lab in target]
    return transpose(arr, perm)


# ---------- composition ---------- #


def compose(f: FctnFactors) -> np.ndarray:
    """Contract the whole network into the dense tensor (modes 0..n-1)."""
    n = f.n
    with FLOPS.scoped("compose"):
        arr, labels = f.factor(0), factor_labels(0, n)
        for k in range(1, n):
            arr, labels = _contract_labeled(arr, labels, f.factor(k), factor_labels(k, n))
        return _to_label_order(arr, labels, [("i", k) for k in range(n)])


def compose_except(f: FctnFactors, k: int) -> np.ndarray:
    """Partial network around factor k, modes in canonical pair order.

    Plain left-to-right chain over the remaining factors in ascending index
    order; no intermediate is kept.
    """
    n = f.n
    rest = [j for j in range(n) if j != k]
    with FLOPS.scoped("mk"):
        arr, labels = f.factor(rest[0]), factor_labels(rest[0], n)
        for j in rest[1:]:
            arr, labels = _contract_labeled(arr, labels, f.factor(j), factor_labels(j, n))
        return _to_label_order(arr, labels, partial_labels(k, n))


def compose_from_partial(partial: np.ndarray, a_k: np.ndarray, k: int) -> np.ndarray:
    """Dense tensor from the partial network around k and factor k itself.

    One contraction over all n-1 bonds of factor k: 2 * I^n * R^(n-1) FLOPs in
    the uniform case, versus the full chain for :func:`compose`.
    """
    n = a_k.ndim
    lm = partial_labels(k, n)
    if partial.ndim != len(lm):
        raise ValueError(
            f"partial network has order {partial.ndim}, expected {len(lm)}"
        )
    with FLOPS.scoped("compose"):
        z, lz = _contract_labeled(partial, lm, a_k, factor_labels(k, n))
        return _to_label_order(z, lz, [("i", j) for j in range(n)])


def _compose_from_partial_view(arr, labels, a_k: np.ndarray, k: int) -> np.ndarray:
    """Dense tensor from a labeled partial network and factor k itself.

    Accepts the partial in any labeled mode order and returns the composed
    tensor in canonical mode order; only mode k needs moving after the
    product, the remaining reordering is folded into the operand unfolding.
    Same arithmetic (and FLOP count) as :func:`compose_from_partial`.
    """
    n = a_k.ndim
    rest = [j for j in range(n) if j != k]
    phys = [labels.index(("i", j)) for j in rest]
    bonds = [labels.index(("r", min(j, k), max(j, k))) for j in rest]
    with FLOPS.scoped("compose"):
        xa = gunfold(arr, phys + bonds, n - 1)
        ak = gunfold(a_k, rest + [k], n - 1)
        FLOPS.add(2 * xa.shape[0] * xa.shape[1] * ak.shape[1])
        mat = (ak.T @ xa.T).T
    rest_dims = tuple(arr.shape[p] for p in phys)
    core = mat.reshape(rest_dims + (ak.shape[1],), order="F")
    return np.asfortranarray(np.moveaxis(core, -1, k))


def property1_unfold(partial: np.ndarray, k: int, n: int) -> np.ndarray:
    """Matricize the canonical partial network so that rows run over factor
    k's bond modes (ascending partner) and columns over the remaining physical
    modes (ascending factor), both first-index-fastest.

    With ``X_(k)`` the mode-k unfolding of the composed tensor and ``A_(k)``
    that of factor k, the network identity reads ``X_(k) = A_(k) @ result``.
    """
    if partial.ndim != 2 * (n - 1):
        raise ValueError(
            f"partial network has order {partial.ndim}, expected {2 * (n - 1)}"
        )
    return _unfold_from_labels(partial, partial_labels(k, n), k, n)


def _unfold_from_labels(arr, labels, k: int, n: int) -> np.ndarray:
    """Same matrix as :func:`property1_unfold` but from a partial network whose
    modes sit in an arbitrary labeled order, absorbing the reordering into the
    unfolding permutation (one data pass instead of two)."""
    rest = [j for j in range(n) if j != k]
    rows = [labels.index(("r", min(j, k), max(j, k))) for j in rest]
    cols = [labels.index(("i", j)) for j in rest]
    return gunfold(arr, rows + cols, n - 1)


def _solve_unfold_from_labels(arr, labels, k: int, n: int):
    """Row-compatible variant of :func:`_unfold_from_labels` whose columns run
    over the remaining physical modes in their stored order instead of
    ascending factor order.  Returns ``(matrix, phys)`` where ``phys`` lists
    the factor indices in that column order; the factor subproblem is
    invariant under a simultaneous column permutation of its data matrix and
    network matrix, so callers only need the two to agree.
    """
    rows = [labels.index(("r", min(j, k), max(j, k))) for j in range(n) if j != k]
    phys = [lab[1] for lab in labels if lab[0] == "i"]
    cols = [labels.index(("i", j)) for j in phys]
    return gunfold(arr, rows + cols, n - 1), phys


# ---------- reuse cache and the accelerated partial build ---------- #


class ReuseCache:
    """Byte-budgeted store of labeled partial contractions.

    Keyed by the sorted factor subset; an entry is served only when every
    stamped factor version still matches, so updates to any member invalidate
    it (stale entries are evicted lazily on lookup).  When storing would
    exceed the budget the entry is simply not kept: the solver silently falls
    back to recomputation, never to a wrong value.
    """

    def __init__(self, budget_bytes: int = 1 << 30) -> None:
        self.budget_bytes = int(budget_bytes)
        self.hits = 0
        self.misses = 0
        self._store: dict[tuple, tuple] = {}
        self._bytes = 0

    @property
    def nbytes(self) -> int:
        return self._bytes

    def lookup(self, subset: tuple, versions: tuple):
        entry = self._store.get(subset)
        if entry is not None and entry[0] == versions:
            self.hits += 1
            return entry[1], entry[2]
        if entry is not None:
            self._bytes -= entry[1].nbytes
            del self._store[subset]
        self.misses += 1
        return None

    def store(self, subset: tuple, versions: tuple, arr: np.ndarray, labels: list) -> None:
        old = self._store.get(subset)
        if old is not None:
            self._bytes -= old[1].nbytes
            del self._store[subset]
        if self._bytes + arr.nbytes > self.budget_bytes:
            return
        self._store[subset] = (versions, arr, labels)
        self._bytes += arr.nbytes


def _subset_key(f: FctnFactors, members) -> tuple[tuple, tuple]:
    subset = tuple(sorted(int(m) for m in members))
    stamps = tuple(f.versions[m] for m in subset)
    return subset, stamps


def _chain_partial(f: FctnFactors, seq, cache: ReuseCache | None, suffix_style: bool):
    """Contract the factors listed in ``seq`` into one labeled tensor.

    ``suffix_style=False`` folds left to right (intermediates are prefixes of
    ``seq``); ``suffix_style=True`` folds right to left (intermediates are
    suffixes), which is what lets consecutive sweep positions share work.  In
    suffix mode each newly absorbed factor leads the result's mode order, so
    that either chain keeps its factors' free modes in sequence order.

    Multi-factor intermediates are offered to the cache except those spanning
    all but one factor: only shorter prefix/suffix runs of the same sweep can
    be asked for again before the next factor update goes stale, so storing
    the full-size ones would only churn memory.
    """
    n = f.n
    m = len(seq)
    if m == 0:
        return None, None
    if m == 1:
        j = seq[0]
        return f.factor(j), factor_labels(j, n)
    # growing subsets, smallest (2 factors) first
    if suffix_style:
        subsets = [seq[i:] for i in range(m - 2, -1, -1)]
    else:
        subsets = [seq[: i + 2] for i in range(m - 1)]
    # start from the largest cached intermediate, if any
    base = len(subsets)
    arr = labels = None
    if cache is not None:
        for idx in range(len(subsets) - 1, -1, -1):
            got = cache.lookup(*_subset_key(f, subsets[idx]))
            if got is not None:
                arr, labels = got
                base = idx + 1
                break
    if arr is None:
        first = seq[-1] if suffix_style else seq[0]
        arr, labels = f.factor(first), factor_labels(first, n)
        base = 0
    for idx in range(base, len(subsets)):
        if suffix_style:
            nxt = subsets[idx][0]
            arr, labels = _contract_labeled(f.factor(nxt), factor_labels(nxt, n), arr, labels)
        else:
            nxt = subsets[idx][-1]
            arr, labels = _contract_labeled(arr, labels, f.factor(nxt), factor_labels(nxt, n))
        if cache is not None and len(subsets[idx]) < n - 1:
            cache.store(*_subset_key(f, subsets[idx]), arr, labels)
    return arr, labels


def _compose_except_cached_labeled(
    f: FctnFactors, k: int, order=None, cache: ReuseCache | None = None
):
    """Cached partial network around k in as-built mode order, with labels."""
    n = f.n
    if order is None:
        order = tuple(range(n))
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(n)):
        raise ValueError(f"order {order} is not a permutation of range({n})")
    pos = order.index(k)
    with FLOPS.scoped("mk"):
        left, llab = _chain_partial(f, order[:pos], cache, suffix_style=False)
        right, rlab = _chain_partial(f, order[pos + 1 :], cache, suffix_style=True)
        if left is None:
            arr, labels = right, rlab
        elif right is None:
            arr, labels = left, llab
        else:
            arr, labels = _contract_labeled(left, llab, right, rlab)
        return arr, labels


def compose_except_cached(
    f: FctnFactors, k: int, order=None, cache: ReuseCache | None = None
) -> np.ndarray:
    """Partial network around k, reusing cached intermediates where possible.

    ``order`` is the sweep's visiting order; factors before k in it are
    folded as a prefix chain, factors after it as a suffix chain, and the two
    halves are joined last.  Matches :func:`compose_except` to within
    contraction reassociation roundoff (1e-12 relative).
    """
    arr, labels = _compose_except_cached_labeled(f, k, order, cache)
    return _to_label_order(arr, labels, partial_labels(k, f.n))


def shuffle_order(prev, rng: np.random.Generator) -> tuple:
    """Fresh uniformly random visiting order (prev only fixes the length)."""
    return tuple(int(v) for v in rng.permutation(len(prev)))


# ---------- contraction cost model (uniform extents and ranks) ---------- #


def compose_flops(n: int, i: int, r: int) -> int:
    """Chain composition of the full network: sum of the n-1 merge steps."""
    return sum(2 * i ** (t + 1) * r ** (t * (n - t) + n - 1 - t) for t in range(1, n))


def compose_from_partial_flops(n: int, i: int, r: int) -> int:
    return 2 * i**n * r ** (n - 1)


def partial_chain_flops(n: int, i: int, r: int) -> int:
    """One plain partial network around a factor (n-2 merge steps)."""
    return sum(2 * i ** (t + 1) * r ** (t * (n - t) + n - 1 - t) for t in range(1, n - 1))


def partial_sweep_flops(n: int, i: int, r: int) -> int:
    """All n partial networks, no reuse."""
    return n * partial_chain_flops(n, i, r)


def partial_sweep_flops_cached(n: int, i: int, r: int) -> int:
    """All n partial networks in one sweep with prefix/suffix reuse, cold cache:
    one full prefix chain, one full suffix chain, and n-2 cross joins."""
    cross = sum(
        2 * i ** (n - 1) * r ** (n - 1 + p * (n - 1 - p)) for p in range(1, n - 1)
    )
    return 2 * partial_chain_flops(n, i, r) + cross


def factor_matmul_flops(n: int, i: int, r: int) -> int:
    """Per-sweep cost of the two big factor-update products: the data term
    X_(k) M^T and the Gram matrix M M^T, summed over all n factors."""
    return n * (2 * i**n * r ** (n - 1) + 2 * i ** (n - 1) * r ** (2 * (n - 1)))
