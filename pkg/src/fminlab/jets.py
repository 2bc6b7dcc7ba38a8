"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` stores the Taylor coefficients ``coeffs[k] = d^beta f / beta!``
of a scalar function at an expansion point, one coefficient per multi-index
``beta`` of total degree <= ``order`` in ``n_vars`` variables (at most 4
variables, order at most 4).  Multi-indices are enumerated in
graded-lexicographic order, so truncating a jet to a lower order is a prefix
slice of its coefficient array.

Jets are immutable values and every operation is a pure function; evaluation
parallelizes across sample points with no shared state.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .errors import ArgumentError, SingularityError

MAX_VARS = 4
MAX_ORDER = 4

# Division and sqrt treat constant terms below this as exact zeros; geometric
# degeneracies are the caller's job.
_ZERO_GUARD = 1e-300


@lru_cache(maxsize=64)
def jet_table(n_vars: int, order: int) -> "JetTable":
    if not (1 <= n_vars <= MAX_VARS):
        raise ArgumentError(f"n_vars must be in 1..{MAX_VARS}, got {n_vars}")
    if not (0 <= order <= MAX_ORDER):
        raise ArgumentError(f"order must be in 0..{MAX_ORDER}, got {order}")
    return JetTable(n_vars, order)


class JetTable:
    """Precomputed index tables for one (n_vars, order) combination."""

    def __init__(self, n_vars: int, order: int):
        self.n_vars = n_vars
        self.order = order
        exps = sorted(
            (e for e in itertools.product(range(order + 1), repeat=n_vars)
             if sum(e) <= order),
            key=lambda e: (sum(e), tuple(-x for x in e)),
        )
        self.exponents = tuple(exps)
        self.size = len(exps)
        self.index = {e: i for i, e in enumerate(exps)}
        self.degrees = np.array([sum(e) for e in exps])
        # factorial(beta) per slot, for true-partial extraction
        self.beta_factorials = np.array(
            [math.prod(math.factorial(x) for x in e) for e in exps], float
        )

        # Cauchy-product gather/scatter: all coefficient pairs whose exponent
        # sum stays inside the truncation.
        mi, mj, mk = [], [], []
        for i, ei in enumerate(exps):
            for j, ej in enumerate(exps):
                s = tuple(a + b for a, b in zip(ei, ej))
                if sum(s) <= order:
                    mi.append(i)
                    mj.append(j)
                    mk.append(self.index[s])
        self.mul_i = np.array(mi)
        self.mul_j = np.array(mj)
        self.mul_k = np.array(mk)

        # Triangular pair lists for division: for each target index k, the
        # (numerator-excluded) pairs b[i]*c[j] with exp_i + exp_j = exp_k and
        # i != 0.  Graded order makes every such j precede k.
        pairs: list[list[tuple[int, int]]] = [[] for _ in range(self.size)]
        for i, j, k in zip(mi, mj, mk):
            if i != 0:
                pairs[k].append((i, j))
        self.div_pairs = [
            (np.array([p[0] for p in ps], dtype=int),
             np.array([p[1] for p in ps], dtype=int))
            for ps in pairs
        ]

        # Partial-derivative maps: coefficients of d/du_v live in the table
        # one order lower; coeff_gamma(d_v a) = (gamma_v + 1) * a[gamma + e_v].
        self._deriv_maps: list[tuple[np.ndarray, np.ndarray]] | None = None

    def deriv_map(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        if self._deriv_maps is None:
            maps = []
            lower = jet_table(self.n_vars, self.order - 1) if self.order > 0 else None
            for var in range(self.n_vars):
                if lower is None:
                    maps.append((np.zeros(0, dtype=int), np.zeros(0)))
                    continue
                src, fac = [], []
                for g in lower.exponents:
                    shifted = tuple(
                        x + (1 if i == var else 0) for i, x in enumerate(g)
                    )
                    src.append(self.index[shifted])
                    fac.append(g[var] + 1)
                maps.append((np.array(src, dtype=int), np.array(fac, float)))
            self._deriv_maps = maps
        return self._deriv_maps[v]


class Jet:
    __slots__ = ("table", "coeffs")

    def __init__(self, table: JetTable, coeffs: np.ndarray):
        self.table = table
        self.coeffs = coeffs

    @property
    def n_vars(self) -> int:
        return self.table.n_vars

    @property
    def order(self) -> int:
        return self.table.order

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def truncate(self, order: int) -> "Jet":
        """Drop coefficients above ``order`` (prefix slice in graded order)."""
        if order == self.order:
            return self
        if order > self.order:
            raise ArgumentError("cannot truncate upward")
        t = jet_table(self.n_vars, order)
        return Jet(t, self.coeffs[: t.size].copy())

    def partial_jet(self, v: int) -> "Jet":
        """Jet of d/du_v, one order lower."""
        if not (0 <= v < self.n_vars):
            raise ArgumentError(f"variable index {v} out of range")
        if self.order == 0:
            raise ArgumentError("cannot differentiate an order-0 jet")
        src, fac = self.table.deriv_map(v)
        t = jet_table(self.n_vars, self.order - 1)
        return Jet(t, self.coeffs[src] * fac)

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.table is not self.table:
                raise ArgumentError(
                    "jet shape mismatch: "
                    f"({other.n_vars} vars, order {other.order}) vs "
                    f"({self.n_vars} vars, order {self.order})"
                )
            return other
        return jet_constant(float(other), self.n_vars, self.order)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            c = self.coeffs.copy()
            c[0] += other
            return Jet(self.table, c)
        other = self._coerce(other)
        return Jet(self.table, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.table, -self.coeffs)

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            c = self.coeffs.copy()
            c[0] -= other
            return Jet(self.table, c)
        other = self._coerce(other)
        return Jet(self.table, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Jet(self.table, self.coeffs * other)
        other = self._coerce(other)
        t = self.table
        return Jet(t, np.bincount(
            t.mul_k,
            weights=self.coeffs[t.mul_i] * other.coeffs[t.mul_j],
            minlength=t.size,
        ))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            if abs(other) < _ZERO_GUARD:
                raise SingularityError("division by zero scalar")
            return Jet(self.table, self.coeffs / other)
        other = self._coerce(other)
        return Jet(self.table, _div_coeffs(self.table, self.coeffs, other.coeffs))

    def __rtruediv__(self, other):
        num = jet_constant(float(other), self.n_vars, self.order)
        return num / self

    def __repr__(self):
        return f"Jet(n_vars={self.n_vars}, order={self.order}, coeffs={self.coeffs})"


def _div_coeffs(t: JetTable, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    b0 = b[0]
    if abs(b0) < _ZERO_GUARD:
        raise SingularityError("division by a jet with zero constant term")
    c = np.zeros(t.size)
    c[0] = a[0] / b0
    for k in range(1, t.size):
        bi, cj = t.div_pairs[k]
        acc = float(np.dot(b[bi], c[cj])) if len(bi) else 0.0
        c[k] = (a[k] - acc) / b0
    return c


# -- constructors ----------------------------------------------------------

def jet_constant(value: float, n_vars: int, order: int) -> Jet:
    t = jet_table(n_vars, order)
    c = np.zeros(t.size)
    c[0] = value
    return Jet(t, c)


def jet_variable(value: float, var_index: int, n_vars: int, order: int) -> Jet:
    """Jet of the coordinate function u -> u[var_index] at the given value."""
    t = jet_table(n_vars, order)
    if not (0 <= var_index < n_vars):
        raise ArgumentError(f"var_index {var_index} out of range for {n_vars} vars")
    c = np.zeros(t.size)
    c[0] = value
    if order >= 1:
        unit = tuple(1 if i == var_index else 0 for i in range(n_vars))
        c[t.index[unit]] = 1.0
    return Jet(t, c)


def jet_arith(op: str, a: Jet, b: Jet) -> Jet:
    """Named arithmetic entry point: op in {add, sub, mul, div}."""
    if not isinstance(a, Jet) or not isinstance(b, Jet):
        raise ArgumentError("jet_arith expects two jets")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ArgumentError(f"unknown jet operation {op!r}")


# -- elementary functions ---------------------------------------------------

def _compose_series(a: Jet, coef: list[float]) -> Jet:
    """Evaluate sum_k coef[k] * (a - a0)^k by Horner; exact under truncation
    because (a - a0)^(order+1) vanishes."""
    hat_c = a.coeffs.copy()
    hat_c[0] = 0.0
    a_hat = Jet(a.table, hat_c)
    out = jet_constant(coef[-1], a.n_vars, a.order)
    for c in reversed(coef[:-1]):
        out = out * a_hat + c
    return out


def jet_exp(a: Jet) -> Jet:
    e = math.exp(a.value)
    return _compose_series(a, [e / math.factorial(k) for k in range(a.order + 1)])


def jet_log(a: Jet) -> Jet:
    a0 = a.value
    if a0 <= _ZERO_GUARD:
        raise SingularityError("log of a jet with non-positive constant term")
    coef = [math.log(a0)]
    for k in range(1, a.order + 1):
        coef.append((-1.0) ** (k - 1) / (k * a0 ** k))
    return _compose_series(a, coef)


def jet_sqrt(a: Jet) -> Jet:
    a0 = a.value
    if a0 <= _ZERO_GUARD:
        raise SingularityError("sqrt of a jet with non-positive constant term")
    coef, binom = [], 1.0
    for k in range(a.order + 1):
        coef.append(binom * a0 ** (0.5 - k))
        binom *= (0.5 - k) / (k + 1)
    return _compose_series(a, coef)


def jet_sin(a: Jet) -> Jet:
    a0 = a.value
    return _compose_series(
        a, [math.sin(a0 + 0.5 * math.pi * k) / math.factorial(k)
            for k in range(a.order + 1)]
    )


def jet_cos(a: Jet) -> Jet:
    a0 = a.value
    return _compose_series(
        a, [math.cos(a0 + 0.5 * math.pi * k) / math.factorial(k)
            for k in range(a.order + 1)]
    )


def jet_pow(a: Jet, r: float) -> Jet:
    """a**r; integer exponents by repeated multiplication (any constant term),
    fractional ones by the binomial series (positive constant term)."""
    if float(r).is_integer():
        r = int(r)
        if r == 0:
            return jet_constant(1.0, a.n_vars, a.order)
        base = a if r > 0 else 1.0 / a
        out = base
        for _ in range(abs(r) - 1):
            out = out * base
        return out
    a0 = a.value
    if a0 <= _ZERO_GUARD:
        raise SingularityError("fractional power of a non-positive constant term")
    coef, binom = [], 1.0
    for k in range(a.order + 1):
        coef.append(binom * a0 ** (r - k))
        binom *= (r - k) / (k + 1)
    return _compose_series(a, coef)


_ELEMENTARY = {
    "sin": jet_sin,
    "cos": jet_cos,
    "exp": jet_exp,
    "log": jet_log,
    "sqrt": jet_sqrt,
}


def jet_elementary(f: str, a: Jet, r: float | None = None) -> Jet:
    """Apply an elementary function by its Taylor recurrence.

    ``f`` is one of sin, cos, exp, log, sqrt, pow; ``pow`` takes the exponent
    through ``r``.
    """
    if f == "pow":
        if r is None:
            raise ArgumentError("pow requires the exponent r")
        return jet_pow(a, r)
    try:
        fn = _ELEMENTARY[f]
    except KeyError:
        raise ArgumentError(f"unknown elementary function {f!r}") from None
    return fn(a)


def extract_partial(a: Jet, beta: tuple[int, ...]) -> float:
    """True partial derivative d^beta f = beta! * coeffs[beta]."""
    beta = tuple(int(b) for b in beta)
    if len(beta) != a.n_vars or any(b < 0 for b in beta):
        raise ArgumentError(f"bad multi-index {beta} for {a.n_vars} variables")
    if sum(beta) > a.order:
        raise ArgumentError(
            f"|beta|={sum(beta)} exceeds jet order {a.order}"
        )
    idx = a.table.index[beta]
    return float(a.coeffs[idx] * a.table.beta_factorials[idx])
