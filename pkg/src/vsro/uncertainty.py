"""Uncertainty-set shapes and their worst-case objective values.

A shape ``B`` defines the family ``U(lam) = {c_hat} + lam * B``.  For a binary
``x`` the inner maximisation ``max_{c in U(lam)} c^T x`` has a closed form for
every shape here, which is what :func:`worst_case_value` evaluates.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

RIDGE = 1e-6


class ShapeError(ValueError):
    pass


def _vec(d, name="d") -> np.ndarray:
    v = np.array(d, dtype=float).ravel()
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise ShapeError(f"{name}: need a nonempty finite vector")
    if np.any(v < 0):
        raise ShapeError(f"{name}: entries must be nonnegative")
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class Shape:
    variant: str = field(init=False, default="")

    def f2(self, x: np.ndarray, c_hat: np.ndarray | None = None) -> float:
        raise NotImplementedError

    def dim(self) -> int | None:
        return None


@dataclass(frozen=True)
class ProportionalBox(Shape):
    """``B = prod [-c_hat_i, c_hat_i]``."""

    variant: str = field(init=False, default="proportional")

    def f2(self, x, c_hat=None):
        if c_hat is None:
            raise ShapeError("proportional growth needs c_hat")
        return float(np.asarray(c_hat) @ x)


@dataclass(frozen=True)
class ConstantBox(Shape):
    variant: str = field(init=False, default="constant")

    def f2(self, x, c_hat=None):
        return float(np.abs(x).sum())


@dataclass(frozen=True, eq=False)
class ArbitraryBox(Shape):
    d: np.ndarray
    variant: str = field(init=False, default="arbitrary")

    def __post_init__(self):
        object.__setattr__(self, "d", _vec(self.d))

    def f2(self, x, c_hat=None):
        return float(self.d @ x)

    def dim(self):
        return self.d.size


@dataclass(frozen=True, eq=False)
class InfinityBall(ArbitraryBox):
    """Unit ball of ``max_i |c_i| / d_i``; the same hyperbox as :class:`ArbitraryBox`."""

    variant: str = field(init=False, default="infinity")


@dataclass(frozen=True, eq=False)
class ManhattanBall(Shape):
    d: np.ndarray
    variant: str = field(init=False, default="manhattan")

    def __post_init__(self):
        object.__setattr__(self, "d", _vec(self.d))

    def f2(self, x, c_hat=None):
        x = np.asarray(x, dtype=float)
        return float(np.max(self.d * x)) if x.size else 0.0

    def dim(self):
        return self.d.size


@dataclass(frozen=True, eq=False)
class EuclideanBall(Shape):
    d: np.ndarray
    variant: str = field(init=False, default="euclidean")

    def __post_init__(self):
        object.__setattr__(self, "d", _vec(self.d))

    def f2(self, x, c_hat=None):
        # sqrt(sum d_i x_i^2) == sqrt(d^T x) for binary x
        return math.sqrt(max(float(self.d @ np.asarray(x, dtype=float)), 0.0))

    def dim(self):
        return self.d.size


@dataclass(frozen=True, eq=False)
class Ellipsoid(Shape):
    Q: np.ndarray
    variant: str = field(init=False, default="ellipsoid")

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.size == 0:
            raise ShapeError("Q must be a square matrix")
        if not np.all(np.isfinite(Q)):
            raise ShapeError("Q: non-finite entries")
        if not np.allclose(Q, Q.T, atol=1e-12, rtol=0):
            raise ShapeError("Q must be symmetric")
        try:
            np.linalg.cholesky(Q)
        except np.linalg.LinAlgError:
            raise ShapeError("Q must be positive definite") from None
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)

    def quad(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.Q @ x)

    def f2(self, x, c_hat=None):
        return math.sqrt(max(self.quad(x), 0.0))

    def dim(self):
        return self.Q.shape[0]


@dataclass(frozen=True, eq=False)
class GeneralInterval:
    """Intervals ``[c_hat - d_minus, c_hat + d_plus]`` with per-coordinate caps."""

    d_plus: np.ndarray
    d_minus: np.ndarray
    M_plus: np.ndarray | None = None
    M_minus: np.ndarray | None = None

    def __post_init__(self):
        dp = _vec(self.d_plus, "d_plus")
        dm = _vec(self.d_minus, "d_minus")
        if dp.size != dm.size:
            raise ShapeError("d_plus and d_minus differ in length")
        caps = []
        for M in (self.M_plus, self.M_minus):
            M = np.full(dp.size, np.inf) if M is None else np.array(M, dtype=float).ravel()
            if M.size != dp.size or np.any(np.isnan(M)) or np.any(M < 0):
                raise ShapeError("caps must be nonnegative vectors of matching length")
            M.setflags(write=False)
            caps.append(M)
        if np.any(dp > caps[0] + 1e-9) or np.any(dm > caps[1] + 1e-9):
            raise ShapeError("deviation exceeds its cap")
        object.__setattr__(self, "d_plus", dp)
        object.__setattr__(self, "d_minus", dm)
        object.__setattr__(self, "M_plus", caps[0])
        object.__setattr__(self, "M_minus", caps[1])

    @property
    def size(self) -> float:
        return float(self.d_plus.sum() + self.d_minus.sum())

    @classmethod
    def symmetric(cls, d, cap=None) -> "GeneralInterval":
        d = np.asarray(d, dtype=float)
        M = None if cap is None else np.broadcast_to(np.asarray(cap, dtype=float), d.shape)
        return cls(d, d, M, M)


def worst_case_value(shape: Shape, lam: float, c_hat, x) -> float:
    """``max_{c in c_hat + lam*B} c^T x`` for binary ``x``."""
    c_hat = np.asarray(c_hat, dtype=float)
    x = np.asarray(x, dtype=float)
    if c_hat.shape != x.shape:
        raise ShapeError(f"dimension mismatch: c_hat {c_hat.shape} vs x {x.shape}")
    if shape.dim() is not None and shape.dim() != x.size:
        raise ShapeError(f"dimension mismatch: shape has {shape.dim()} coordinates, x has {x.size}")
    if lam < 0:
        raise ShapeError("lambda must be >= 0")
    return float(c_hat @ x) + lam * shape.f2(x, c_hat)


def second_criterion(shape: Shape, x, c_hat=None) -> float:
    """``f2(x) = max_{c in B} c^T x``; ``c_hat`` is only needed for proportional growth."""
    x = np.asarray(x, dtype=float)
    if shape.dim() is not None and shape.dim() != x.size:
        raise ShapeError(f"dimension mismatch: shape has {shape.dim()} coordinates, x has {x.size}")
    return shape.f2(x, c_hat)


def ellipsoid_from_factors(L) -> Ellipsoid:
    """Ellipsoid of the factor model ``c = c_hat + L xi``, i.e. ``Q = L L^T``.

    A singular product (fewer factors than coordinates) gets a ``1e-6 * I``
    ridge and a warning.
    """
    L = np.array(L, dtype=float)
    if L.ndim == 1:
        L = L[:, None]
    if L.ndim != 2 or L.size == 0:
        raise ShapeError("L must be an n x k matrix")
    if not np.all(np.isfinite(L)):
        raise ShapeError("L: non-finite entries")
    if not np.any(L):
        raise ShapeError("L is the zero matrix")
    Q = L @ L.T
    Q = (Q + Q.T) / 2
    eig = np.linalg.eigvalsh(Q)
    if eig[0] <= 1e-12 * max(1.0, eig[-1]):
        warnings.warn("L L^T is singular; adding a 1e-6 ridge", RuntimeWarning, stacklevel=2)
        Q = Q + RIDGE * np.eye(Q.shape[0])
    return Ellipsoid(Q)


_BY_NAME = {
    "proportional": ProportionalBox, "constant": ConstantBox, "arbitrary": ArbitraryBox,
    "infinity": InfinityBall, "manhattan": ManhattanBall, "euclidean": EuclideanBall,
    "ellipsoid": Ellipsoid,
}


def shape_from_dict(data: dict) -> Shape:
    """Parse ``{"variant", "d" | "Q" | "L"}``."""
    variant = data.get("variant")
    if variant not in _BY_NAME:
        raise ShapeError(f"field 'variant': unknown value {variant!r}")
    if variant in ("proportional", "constant"):
        return _BY_NAME[variant]()
    if variant == "ellipsoid":
        if "Q" in data:
            return Ellipsoid(np.asarray(data["Q"], dtype=float))
        if "L" in data:
            return ellipsoid_from_factors(data["L"])
        raise ShapeError("field 'Q' or 'L' required for ellipsoid")
    if "d" not in data:
        raise ShapeError(f"field 'd' required for {variant}")
    return _BY_NAME[variant](np.asarray(data["d"], dtype=float))


def shape_to_dict(shape: Shape) -> dict:
    out: dict = {"variant": shape.variant}
    if hasattr(shape, "d"):
        out["d"] = shape.d.tolist()
    if isinstance(shape, Ellipsoid):
        out["Q"] = shape.Q.tolist()
    return out
