"""Discretized operators under a single coefficient convention.

A function on ``(0, L)`` is represented on ``n`` uniform cells of width
``h = L / n`` by coefficients ``c[i] = sqrt(h) * value_i``, so the Euclidean
norm of ``c`` equals the L2 norm of the piecewise-constant function.  For an
operator L2 -> L2 the two ``sqrt(h)`` factors cancel and matrix singular
values approximate the continuous ones directly.  Sequence-space factors
(the Hausdorff output, diagonal operators) carry no scaling.
"""

from dataclasses import dataclass, field
import math
import numbers

import numpy as np

from . import _kernels
from .errors import GridMismatch, InvalidOrder, InvalidSpec, DimensionMismatch

L2_NOTE = "L2(0,1) coefficients c_i = sqrt(h) * f(cell i); matrix maps coefficients to coefficients"
SEQ_NOTE = "sequence space l2, truncated; no scaling"


@dataclass
class DiscretizedOperator:
    matrix: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)
    grid_n: int = 0
    scaling_note: str = ""

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def T(self):
        return DiscretizedOperator(
            self.matrix.T.copy(),
            f"{self.kind}_transpose" if not self.kind.endswith("_transpose") else self.kind[: -len("_transpose")],
            dict(self.params),
            self.grid_n,
            self.scaling_note,
        )

    def __matmul__(self, other):
        if isinstance(other, GridFunction):
            if self.matrix.shape[1] != other.coeffs.shape[0]:
                raise GridMismatch("operator and grid function sizes differ")
            return GridFunction(self.matrix @ other.coeffs, self.matrix.shape[0], other.domain_length)
        if isinstance(other, DiscretizedOperator):
            other = other.matrix
        return self.matrix @ other

    def describe(self):
        return {"kind": self.kind, "params": dict(self.params), "grid_n": self.grid_n,
                "shape": list(self.matrix.shape), "scaling_note": self.scaling_note}


def as_operator(A, kind="custom"):
    if isinstance(A, DiscretizedOperator):
        return A
    M = np.asarray(A, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {M.shape}")
    return DiscretizedOperator(M, kind, {}, 0, "")


def as_array(A):
    return A.matrix if isinstance(A, DiscretizedOperator) else np.asarray(A, dtype=np.float64)


@dataclass
class GridFunction:
    """Piecewise-constant function stored in the sqrt(h) coefficient convention."""

    coeffs: np.ndarray
    grid_n: int
    domain_length: float = 1.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.coeffs.shape != (self.grid_n,):
            raise GridMismatch(f"expected {self.grid_n} coefficients, got shape {self.coeffs.shape}")

    @property
    def h(self):
        return self.domain_length / self.grid_n

    @property
    def midpoints(self):
        return (np.arange(self.grid_n) + 0.5) * self.h

    @classmethod
    def from_values(cls, values, domain_length=1.0):
        values = np.asarray(values, dtype=np.float64)
        n = values.shape[0]
        return cls(np.sqrt(domain_length / n) * values, n, domain_length)

    @classmethod
    def from_function(cls, f, grid_n, domain_length=1.0):
        t = (np.arange(grid_n) + 0.5) * (domain_length / grid_n)
        return cls.from_values(np.broadcast_to(f(t), (grid_n,)), domain_length)

    @classmethod
    def constant(cls, c, grid_n, domain_length=1.0):
        return cls.from_values(np.full(grid_n, float(c)), domain_length)

    @classmethod
    def zeros(cls, grid_n, domain_length=1.0):
        return cls(np.zeros(grid_n), grid_n, domain_length)

    def values(self):
        return self.coeffs / np.sqrt(self.h)

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def _check(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        if other.grid_n != self.grid_n or other.domain_length != self.domain_length:
            raise GridMismatch(f"grids differ: {self.grid_n} vs {other.grid_n} cells")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return GridFunction(self.coeffs + other.coeffs, self.grid_n, self.domain_length)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return GridFunction(self.coeffs - other.coeffs, self.grid_n, self.domain_length)

    def __mul__(self, scalar):
        if not isinstance(scalar, numbers.Real):
            return NotImplemented
        return GridFunction(float(scalar) * self.coeffs, self.grid_n, self.domain_length)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(-self.coeffs, self.grid_n, self.domain_length)


# -- sequence rules -----------------------------------------------------------


def sequence_values(spec, m):
    """Evaluate a sequence rule at ``j = 1..m``.

    ``spec`` is ``"harmonic"`` (1/j), ``"power<p>"`` or ``("power", p)``
    (j**-p), ``"geometric<r>"`` or ``("geometric", r)`` (r**(j-1)), or an
    explicit sequence of at least ``m`` values.
    """
    if m < 1:
        raise InvalidSpec(f"length must be >= 1, got {m}")
    j = np.arange(1, m + 1, dtype=np.float64)
    if isinstance(spec, str):
        name = spec.strip().lower()
        if name == "harmonic":
            vals = 1.0 / j
        elif name.startswith("power"):
            vals = j ** -_param(name, "power")
        elif name.startswith("geometric"):
            r = _param(name, "geometric")
            if not 0.0 < r:
                raise InvalidSpec(f"geometric ratio must be positive, got {r}")
            vals = r ** (j - 1.0)
        else:
            raise InvalidSpec(f"unknown sequence rule {spec!r}")
    elif isinstance(spec, tuple) and len(spec) == 2 and isinstance(spec[0], str):
        return sequence_values(f"{spec[0]}{spec[1]}", m)
    else:
        vals = np.asarray(spec, dtype=np.float64).ravel()
        if vals.shape[0] < m:
            raise InvalidSpec(f"explicit sequence has {vals.shape[0]} entries, need {m}")
        vals = vals[:m].copy()
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0.0):
        raise InvalidSpec("sequence entries must be finite and positive")
    return vals


def _param(name, prefix):
    text = name[len(prefix):].lstrip(":(").rstrip(")")
    try:
        return float(text)
    except ValueError:
        raise InvalidSpec(f"cannot parse parameter of {name!r}") from None


def _spec_label(spec):
    if isinstance(spec, str):
        return spec
    if isinstance(spec, tuple) and len(spec) == 2 and isinstance(spec[0], str):
        return f"{spec[0]}{spec[1]}"
    return [float(v) for v in np.asarray(spec, dtype=np.float64).ravel()]


# -- linear operators ---------------------------------------------------------


def _integration_order1(grid_n):
    h = 1.0 / grid_n
    M = np.tril(np.full((grid_n, grid_n), h), -1)
    M[np.diag_indices(grid_n)] = 0.5 * h
    return M


def build_integration(order, grid_n):
    """Discretized (fractional) integration ``f -> int_0^x f`` on ``L2(0,1)``.

    Order 1 is midpoint collocation: ``h`` below the diagonal and ``h/2`` on
    it.  Integer orders ``k > 1`` are the ``k``-th power of that matrix.
    Other orders use the Riemann-Liouville kernel ``(x-t)**(a-1)/Gamma(a)``
    with midpoint quadrature off the diagonal and exact integration of the
    singular diagonal cell.
    """
    order = float(order)
    if not math.isfinite(order) or order <= 0.0:
        raise InvalidOrder(f"integration order must be positive, got {order}")
    if grid_n < 1:
        raise InvalidSpec(f"grid_n must be >= 1, got {grid_n}")
    if order.is_integer():
        M = np.linalg.matrix_power(_integration_order1(grid_n), int(order))
    else:
        M = _kernels.rl_matrix(order, grid_n, math.gamma(order), math.gamma(order + 1.0))
    return DiscretizedOperator(M, "integration", {"order": order}, grid_n, L2_NOTE)


def build_hausdorff(grid_n, moments=None):
    """Moment operator ``[Hx]_j = int_0^1 x(t) t**(j-1) dt`` as a ``moments x grid_n`` matrix.

    Cellwise integrals are exact.  ``moments`` defaults to ``grid_n``.  The
    adjoint ``H*`` is the transpose.
    """
    if moments is None:
        moments = grid_n
    if grid_n < 1 or moments < 1:
        raise InvalidSpec("grid_n and moments must be >= 1")
    M = _kernels.hausdorff_matrix(int(grid_n), int(moments))
    return DiscretizedOperator(
        M, "hausdorff", {"moments": int(moments)}, grid_n,
        "L2(0,1) coefficients -> l2 moments (no output scaling)",
    )


def build_cesaro(grid_n, adjoint=False):
    """Cesaro mean ``(1/s) int_0^s x`` by midpoint collocation at ``s_i = (i - 1/2) h``.

    Constants are reproduced exactly.  ``adjoint=True`` returns the
    transpose, which discretizes ``int_t^1 x(s)/s ds`` in the same convention.
    """
    if grid_n < 1:
        raise InvalidSpec(f"grid_n must be >= 1, got {grid_n}")
    h = 1.0 / grid_n
    s = (np.arange(grid_n) + 0.5) * h
    M = _integration_order1(grid_n) / s[:, None]
    if adjoint:
        return DiscretizedOperator(M.T.copy(), "cesaro_adjoint", {}, grid_n, L2_NOTE)
    return DiscretizedOperator(M, "cesaro", {}, grid_n, L2_NOTE)


def build_diagonal(sigma_spec, m):
    """Diagonal sequence-space operator ``diag(s_1, ..., s_m)`` (stored in the given order)."""
    vals = sequence_values(sigma_spec, m)
    return DiscretizedOperator(np.diag(vals), "diagonal", {"spec": _spec_label(sigma_spec)}, 0, SEQ_NOTE)


def build_mimic(sigma_sq_spec, cells, subgrid):
    """Multiplication by ``sum_n s_n chi_[n-1,n)`` on ``[0, cells)``.

    Each unit cell carries ``subgrid`` piecewise-constant coefficients, so
    the matrix is block diagonal with blocks ``s_n * I(subgrid)``.  The
    half-line is truncated to ``[0, cells)``.
    """
    if cells < 1 or subgrid < 1:
        raise InvalidSpec("cells and subgrid must be >= 1")
    vals = sequence_values(sigma_sq_spec, cells)
    M = np.diag(np.repeat(vals, subgrid))
    return DiscretizedOperator(
        M, "mimic", {"spec": _spec_label(sigma_sq_spec), "cells": int(cells), "subgrid": int(subgrid)},
        cells * subgrid,
        f"L2([0,{cells})) truncated half-line; {subgrid} coefficients per unit cell, c = sqrt(1/{subgrid}) * value",
    )


def build_embedding(cells, subgrid):
    """Isometric embedding ``z -> sum_n z_n chi_[n-1,n)`` of l2 into ``L2([0, cells))``."""
    if cells < 1 or subgrid < 1:
        raise InvalidSpec("cells and subgrid must be >= 1")
    M = np.zeros((cells * subgrid, cells))
    w = 1.0 / math.sqrt(subgrid)
    for n in range(cells):
        M[n * subgrid:(n + 1) * subgrid, n] = w
    return DiscretizedOperator(
        M, "embedding", {"cells": int(cells), "subgrid": int(subgrid)}, cells * subgrid,
        "l2 -> L2([0, cells)) coefficients",
    )


# -- autoconvolution ----------------------------------------------------------
#
# F(x) = B(x, x) and F'(x) v = 2 B(x, v) for the symmetric bilinear stencil
#   B(c, d)_i = sqrt(h)/2 * (sum_{j+k=i} c_j d_k + sum_{j+k=i-1} c_j d_k),
# which makes F(x + v) - F(x) - F'(x) v = F(v) an algebraic identity and
# gives F'(1) = 2 * build_integration(1, n).


def _grid_of(x):
    if not isinstance(x, GridFunction):
        raise GridMismatch("expected a GridFunction")
    return x


def autoconv_bilinear(x, v):
    x, v = _grid_of(x), _grid_of(v)
    x._check(v)
    out = (0.5 * math.sqrt(x.h)) * _kernels.autoconv_stencil(x.coeffs, v.coeffs)
    return GridFunction(out, x.grid_n, x.domain_length)


def autoconv_apply(x):
    """Discrete autoconvolution ``F(x)(s) = int_0^s x(s-t) x(t) dt``."""
    return autoconv_bilinear(x, x)


def autoconv_frechet(x):
    """Matrix of ``F'(x) v = 2 int_0^s x(s-t) v(t) dt`` (lower-triangular Toeplitz)."""
    x = _grid_of(x)
    M = math.sqrt(x.h) * _kernels.autoconv_jacobian(x.coeffs)
    return DiscretizedOperator(M, "frechet_autoconv", {}, x.grid_n, L2_NOTE)

