"""Minimal reverse-mode differentiation over dense numpy arrays.

Each op records its parents and a vector-Jacobian closure on the result
Tensor; `backward()` replays the recording in reverse topological order. The
recording is per-result (one forward/backward pass owns its graph), there is
no global tape, and ops that need randomness (dropout) take an explicit
generator, so runs are deterministic end to end.

Every forward op checks its output for NaN/Inf and raises NumericalFault
rather than letting a poisoned value propagate.
"""

import numpy as np

from .errors import NumericalFault, ShapeMismatch


class Tensor:
    """Dense real array plus gradient slot and the local backward rule."""

    __slots__ = ("values", "requires_grad", "grad", "_parents", "_vjp")

    def __init__(self, values, requires_grad: bool = False,
                 _parents: tuple = (), _vjp=None):
        self.values = np.asarray(values, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self._parents = _parents
        self._vjp = _vjp

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def item(self) -> float:
        return float(self.values)

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.values)
        self.grad += g

    def backward(self, seed: np.ndarray | None = None) -> None:
        """Accumulate d(self)/d(leaf) into every reachable requires_grad leaf.

        For non-scalar outputs an explicit seed gradient is required.
        """
        if seed is None:
            if self.values.size != 1:
                raise ShapeMismatch("backward() without seed needs a scalar output")
            seed = np.ones_like(self.values)
        topo: list[Tensor] = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self.accumulate_grad(np.asarray(seed, dtype=np.float64))
        for node in reversed(topo):
            if node._vjp is not None and node.grad is not None:
                node._vjp(node.grad)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _result(values: np.ndarray, parents: tuple, vjp) -> Tensor:
    if not np.all(np.isfinite(values)):
        raise NumericalFault("op produced non-finite values")
    if any(p.requires_grad for p in parents):
        return Tensor(values, requires_grad=True, _parents=parents, _vjp=vjp)
    return Tensor(values)


def constant(values) -> Tensor:
    return Tensor(values)


def parameter(values) -> Tensor:
    return Tensor(values, requires_grad=True)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum g down to `shape` (reverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _binary_shapes(a: Tensor, b: Tensor, opname: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeMismatch(f"{opname}: cannot broadcast {a.shape} with {b.shape}") from exc


def add(a: Tensor, b: Tensor) -> Tensor:
    _binary_shapes(a, b, "add")

    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g, b.shape))

    return _result(a.values + b.values, (a, b), vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _binary_shapes(a, b, "sub")

    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g, b.shape))

    return _result(a.values - b.values, (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _binary_shapes(a, b, "mul")

    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g * b.values, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g * a.values, b.shape))

    return _result(a.values * b.values, (a, b), vjp)


def div(a: Tensor, b: Tensor) -> Tensor:
    _binary_shapes(a, b, "div")

    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g / b.values, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g * a.values / (b.values * b.values), b.shape))

    return _result(a.values / b.values, (a, b), vjp)


def scale(a: Tensor, c: float) -> Tensor:
    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(g * c)

    return _result(a.values * c, (a,), vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.values.ndim != 2 or b.values.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")

    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(g @ b.values.T)
        if b.requires_grad:
            b.accumulate_grad(a.values.T @ g)

    return _result(a.values @ b.values, (a, b), vjp)


def transpose(a: Tensor) -> Tensor:
    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(g.T)

    return _result(a.values.T, (a,), vjp)


def relu(a: Tensor) -> Tensor:
    mask = a.values > 0

    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(g * mask)

    return _result(np.where(mask, a.values, 0.0), (a,), vjp)


def abs_(a: Tensor) -> Tensor:
    sign = np.sign(a.values)

    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(g * sign)

    return _result(np.abs(a.values), (a,), vjp)


def dropout(a: Tensor, rate: float, rng: np.random.Generator, training: bool = True) -> Tensor:
    """Inverted dropout: mask drawn from rng, kept entries scaled by 1/(1-rate).

    Identity (and no generator draw) when rate is 0 or training is off.
    """
    if not 0.0 <= rate < 1.0:
        raise ShapeMismatch(f"dropout rate must be in [0,1), got {rate}")
    if not training or rate == 0.0:
        return a
    keep = rng.random(a.shape) >= rate
    factor = keep / (1.0 - rate)

    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(g * factor)

    return _result(a.values * factor, (a,), vjp)


def trace(a: Tensor) -> Tensor:
    if a.values.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"trace needs a square matrix, got {a.shape}")
    n = a.shape[0]

    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(float(g) * np.eye(n))

    return _result(np.trace(a.values), (a,), vjp)


def frobenius_norm(a: Tensor) -> Tensor:
    norm = float(np.sqrt(np.sum(a.values * a.values)))

    def vjp(g):
        if a.requires_grad:
            if norm > 0.0:
                a.accumulate_grad(float(g) * a.values / norm)
            else:
                a.accumulate_grad(np.zeros_like(a.values))  # subgradient at 0

    return _result(norm, (a,), vjp)


def mean(a: Tensor) -> Tensor:
    size = a.values.size

    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(np.full(a.shape, float(g) / size))

    return _result(a.values.mean(), (a,), vjp)


def sum_(a: Tensor) -> Tensor:
    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(np.full(a.shape, float(g)))

    return _result(a.values.sum(), (a,), vjp)


def reshape(a: Tensor, shape: tuple) -> Tensor:
    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(g.reshape(a.shape))

    return _result(a.values.reshape(shape), (a,), vjp)


def concat_rows(tensors: list[Tensor]) -> Tensor:
    if not tensors:
        raise ShapeMismatch("concat_rows of nothing")
    widths = {t.shape[1] for t in tensors}
    if len(widths) != 1:
        raise ShapeMismatch(f"concat_rows column counts differ: {sorted(widths)}")
    offsets = np.cumsum([0] + [t.shape[0] for t in tensors])

    def vjp(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                t.accumulate_grad(g[lo:hi])

    return _result(np.concatenate([t.values for t in tensors], axis=0),
                   tuple(tensors), vjp)


def concat_cols(tensors: list[Tensor]) -> Tensor:
    if not tensors:
        raise ShapeMismatch("concat_cols of nothing")
    heights = {t.shape[0] for t in tensors}
    if len(heights) != 1:
        raise ShapeMismatch(f"concat_cols row counts differ: {sorted(heights)}")
    offsets = np.cumsum([0] + [t.shape[1] for t in tensors])

    def vjp(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                t.accumulate_grad(g[:, lo:hi])

    return _result(np.concatenate([t.values for t in tensors], axis=1),
                   tuple(tensors), vjp)


def zero_pad_rows(a: Tensor, total_rows: int) -> Tensor:
    n = a.shape[0]
    if total_rows < n:
        raise ShapeMismatch(f"cannot pad {n} rows down to {total_rows}")
    pad = np.zeros((total_rows - n, a.shape[1]))

    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(g[:n])

    return _result(np.concatenate([a.values, pad], axis=0), (a,), vjp)


def slice_rows(a: Tensor, start: int, stop: int) -> Tensor:
    if not (0 <= start <= stop <= a.shape[0]):
        raise ShapeMismatch(f"slice [{start}:{stop}] outside {a.shape[0]} rows")

    def vjp(g):
        if a.requires_grad:
            full = np.zeros_like(a.values)
            full[start:stop] = g
            a.accumulate_grad(full)

    return _result(a.values[start:stop].copy(), (a,), vjp)


def column_scale(a: Tensor, factors: np.ndarray) -> Tensor:
    """Scale column j by the constant factors[j] (i.e. A @ diag(factors))."""
    factors = np.asarray(factors, dtype=np.float64)
    if a.values.ndim != 2 or factors.shape != (a.shape[1],):
        raise ShapeMismatch(f"column_scale: {a.shape} with factors {factors.shape}")

    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(g * factors[None, :])

    return _result(a.values * factors[None, :], (a,), vjp)


def sum_neighbors(a: Tensor, adjacency: np.ndarray) -> Tensor:
    """Row v of the result is the sum of a's rows over v's neighbors."""
    adjacency = np.asarray(adjacency, dtype=np.float64)
    if a.values.ndim != 2 or adjacency.shape != (a.shape[0], a.shape[0]):
        raise ShapeMismatch(f"sum_neighbors: {a.shape} with adjacency {adjacency.shape}")

    def vjp(g):
        if a.requires_grad:
            a.accumulate_grad(adjacency.T @ g)

    return _result(adjacency @ a.values, (a,), vjp)
