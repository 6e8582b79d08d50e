"""Demand families and the g-kernel.

For a demand curve ``D`` the kernel is ``g(P) = -D(P) / D'(P)`` (price over
elasticity).  The equilibrium condition weights path counts by the sequence
``g_1 = g`` and ``g_{k+1} = -g_k' g``; :func:`gk_table` builds that sequence
from derivative arrays of ``g`` with the Leibniz rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import InputError, OrderUnsupported, OutOfDomain

_EPS = np.finfo(float).eps


class Demand:
    """Common interface of the demand families."""

    family = "abstract"

    @property
    def p_bar(self) -> float:
        """Saturation point: lowest price with zero demand (may be inf)."""
        return math.inf

    def _check(self, P):
        if not (0.0 <= P < self.p_bar):
            raise OutOfDomain(f"price {P!r} outside [0, {self.p_bar!r}) for {self.family} demand")

    def demand(self, P: float) -> float:
        raise NotImplementedError

    def g_derivs(self, P: float, m: int) -> np.ndarray:
        raise NotImplementedError

    def cs(self, P: float) -> float:
        """Consumer surplus, the integral of demand from ``P`` to saturation."""
        P = float(P)
        if P >= self.p_bar:
            return 0.0
        val, _ = integrate.quad(self.demand, P, self.p_bar, epsabs=0.0, epsrel=1e-10, limit=200)
        return val

    def slope(self, P: float) -> float:
        """D'(P), recovered from the kernel as -D/g."""
        self._check(P)
        return -self.demand(P) / self.g_derivs(P, 0)[0]

    def params(self) -> dict:
        raise NotImplementedError

    def scaled(self, factor):
        """Same demand with quantities multiplied by ``factor``."""
        raise NotImplementedError


def _num(x):
    return float(x)


@dataclass(frozen=True)
class Linear(Demand):
    """``D(P) = a - bP``."""

    a: float = 1.0
    b: float = 1.0
    family = "linear"

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InputError("linear demand needs a > 0 and b > 0")

    @property
    def p_bar(self):
        return _num(self.a) / _num(self.b)

    def demand(self, P):
        return max(_num(self.a) - _num(self.b) * float(P), 0.0)

    def g_derivs(self, P, m):
        self._check(P)
        out = np.zeros(m + 1)
        out[0] = self.p_bar - P
        if m >= 1:
            out[1] = -1.0
        return out

    def cs(self, P):
        q = self.demand(P)
        return q * q / (2.0 * _num(self.b))

    def params(self):
        return {"a": self.a, "b": self.b}

    def scaled(self, factor):
        return Linear(self.a * factor, self.b * factor)


@dataclass(frozen=True)
class Power(Demand):
    """``D(P) = d (a - bP)^(1/beta)``; ``beta = 1`` is linear demand."""

    d: float = 1.0
    a: float = 1.0
    b: float = 1.0
    beta: float = 1.0
    family = "power"

    def __post_init__(self):
        if not (self.d > 0 and self.a > 0 and self.b > 0 and self.beta > 0):
            raise InputError("power demand needs d, a, b, beta > 0")

    @property
    def p_bar(self):
        return _num(self.a) / _num(self.b)

    def demand(self, P):
        base = _num(self.a) - _num(self.b) * float(P)
        if base <= 0:
            return 0.0
        return _num(self.d) * base ** (1.0 / _num(self.beta))

    def g_derivs(self, P, m):
        self._check(P)
        beta = _num(self.beta)
        out = np.zeros(m + 1)
        out[0] = beta * (self.p_bar - P)
        if m >= 1:
            out[1] = -beta
        return out

    def cs(self, P):
        base = _num(self.a) - _num(self.b) * float(P)
        if base <= 0:
            return 0.0
        e = 1.0 / _num(self.beta) + 1.0
        return _num(self.d) * base**e / (_num(self.b) * e)

    def params(self):
        return {"d": self.d, "a": self.a, "b": self.b, "beta": self.beta}

    def scaled(self, factor):
        return Power(self.d * factor, self.a, self.b, self.beta)


@dataclass(frozen=True)
class Logit(Demand):
    """``D(P) = d e^(-alpha P) / (1 + e^(-alpha P))``."""

    d: float = 1.0
    alpha: float = 1.0
    family = "logit"

    def __post_init__(self):
        if not (self.d > 0 and self.alpha > 0):
            raise InputError("logit demand needs d > 0 and alpha > 0")

    def demand(self, P):
        # d / (1 + e^{alpha P}) without overflow
        x = _num(self.alpha) * float(P)
        if x > 0:
            e = math.exp(-x)
            return _num(self.d) * e / (1.0 + e)
        return _num(self.d) / (1.0 + math.exp(x))

    def g_derivs(self, P, m):
        self._check(P)
        alpha = _num(self.alpha)
        e = math.exp(-alpha * P)
        out = np.empty(m + 1)
        out[0] = (1.0 + e) / alpha
        for k in range(1, m + 1):
            out[k] = (-1) ** k * alpha ** (k - 1) * e
        return out

    def cs(self, P):
        alpha = _num(self.alpha)
        return _num(self.d) / alpha * math.log1p(math.exp(-alpha * float(P)))

    def params(self):
        return {"d": self.d, "alpha": self.alpha}

    def scaled(self, factor):
        return Logit(self.d * factor, self.alpha)


@dataclass(frozen=True)
class Exponential(Demand):
    """``D(P) = a - b e^(alpha P)`` with ``a > b > 0``.

    Here ``g(P) = ((a/b) e^(-alpha P) - 1) / alpha``; the saturation point is
    ``ln(a/b) / alpha`` and differs from the constant ``a/b`` inside ``g``.
    """

    a: float = 2.0
    b: float = 1.0
    alpha: float = 1.0
    family = "exponential"

    def __post_init__(self):
        if not (self.a > self.b > 0 and self.alpha > 0):
            raise InputError("exponential demand needs a > b > 0 and alpha > 0")

    @property
    def p_bar(self):
        return math.log(_num(self.a) / _num(self.b)) / _num(self.alpha)

    def demand(self, P):
        if P >= self.p_bar:
            return 0.0
        return _num(self.a) - _num(self.b) * math.exp(_num(self.alpha) * float(P))

    def g_derivs(self, P, m):
        self._check(P)
        alpha = _num(self.alpha)
        ratio_e = _num(self.a) / _num(self.b) * math.exp(-alpha * P)
        out = np.empty(m + 1)
        out[0] = (ratio_e - 1.0) / alpha
        for k in range(1, m + 1):
            out[k] = (-1) ** k * alpha ** (k - 1) * ratio_e
        return out

    def cs(self, P):
        P = float(P)
        if P >= self.p_bar:
            return 0.0
        a, b, alpha = _num(self.a), _num(self.b), _num(self.alpha)
        return a * (self.p_bar - P) - (a - b * math.exp(alpha * P)) / alpha

    def params(self):
        return {"a": self.a, "b": self.b, "alpha": self.alpha}

    def scaled(self, factor):
        return Exponential(self.a * factor, self.b * factor, self.alpha)


def _fd_weights(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Central stencil (offsets, weights) for ``order``-th derivative, 4th-order accurate."""
    r = (order + 1) // 2 + 1
    offsets = np.arange(-r, r + 1, dtype=float)
    size = offsets.size
    vander = np.vander(offsets, size, increasing=True).T
    rhs = np.zeros(size)
    rhs[order] = math.factorial(order)
    return offsets, np.linalg.solve(vander, rhs)


@dataclass(frozen=True)
class Custom(Demand):
    """User supplied demand curve, differentiated numerically.

    Derivatives of ``D`` come from central finite differences, so results are
    approximate.  ``step=None`` picks a per-order step near the round-off
    optimum; a number fixes the step (scaled by ``max(1, P)``) for every order.
    """

    func: Callable[[float], float]
    max_order: int = 4
    step: float | None = None
    saturation: float = math.inf
    family = "custom"

    @property
    def p_bar(self):
        return self.saturation

    def demand(self, P):
        if P >= self.p_bar:
            return 0.0
        return float(self.func(float(P)))

    def _derivative(self, P, order):
        if order == 0:
            return self.demand(P)
        scale = max(1.0, abs(P))
        h = self.step * scale if self.step is not None else _EPS ** (1.0 / (order + 4)) * scale
        offsets, weights = _fd_weights(order)
        values = np.array([self.func(P + o * h) for o in offsets], dtype=float)
        return float(weights @ values) / h**order

    def g_derivs(self, P, m):
        self._check(P)
        if m > self.max_order:
            raise OrderUnsupported(f"custom demand supports derivatives up to order {self.max_order}, asked {m}")
        d = [self._derivative(P, q) for q in range(m + 2)]
        # g D' = -D, differentiated l times with the Leibniz rule
        out = np.empty(m + 1)
        for l in range(m + 1):
            acc = -d[l]
            for j in range(l):
                acc -= math.comb(l, j) * out[j] * d[l - j + 1]
            out[l] = acc / d[1]
        return out

    def params(self):
        return {"max_order": self.max_order, "step": self.step, "saturation": self.saturation}

    def scaled(self, factor):
        f = self.func
        return Custom(lambda P: factor * f(P), self.max_order, self.step, self.saturation)


FAMILIES = {"linear": Linear, "power": Power, "logit": Logit, "exponential": Exponential}


def _parse_number(x):
    if isinstance(x, bool):
        raise InputError(f"expected a number, got {x!r}")
    if isinstance(x, (int, float, Fraction)):
        return x
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError:
            pass
    raise InputError(f"expected a number or rational string, got {x!r}")


def from_dict(data: dict) -> Demand:
    """Build a demand from ``{"family": "logit", "d": 1.0, "alpha": 1.0}``.

    Parameters may be numbers or rational strings such as ``"4/3"``.
    """
    if not isinstance(data, dict) or "family" not in data:
        raise InputError("demand must be an object with a 'family' key")
    family = data["family"]
    if family not in FAMILIES:
        raise InputError(f"unknown demand family {family!r} (custom demand is library-only)")
    cls = FAMILIES[family]
    names = set(cls.__dataclass_fields__)
    unknown = set(data) - names - {"family"}
    if unknown:
        raise InputError(f"unknown {family} demand parameters: {sorted(unknown)}")
    kwargs = {k: _parse_number(v) for k, v in data.items() if k != "family"}
    return cls(**kwargs)


def to_dict(d: Demand) -> dict:
    out = {"family": d.family}
    for k, v in d.params().items():
        out[k] = str(v) if isinstance(v, Fraction) and v.denominator != 1 else (
            int(v) if isinstance(v, Fraction) else v)
    return out


@dataclass(frozen=True)
class GkTable:
    """Values ``g_1..g_K`` at ``P`` and, optionally, their first derivatives."""

    P: float
    values: np.ndarray
    derivs: np.ndarray | None = None

    @property
    def K(self):
        return len(self.values)


def g_derivs(d: Demand, P: float, m: int) -> np.ndarray:
    """``[g(P), g'(P), ..., g^(m)(P)]``."""
    if m < 0:
        raise ValueError("derivative order must be non-negative")
    return d.g_derivs(float(P), int(m))


def gk_table(d: Demand, P: float, K: int, with_derivs: bool = False) -> GkTable:
    """Compute ``g_1..g_K`` (and ``g_k'``) at ``P``.

    ``g_{k+1}^(l) = -sum_j C(l, j) g_k^(l-j+1) g^(j)``; each level needs one
    fewer derivative than the one before it.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    extra = 1 if with_derivs else 0
    base = g_derivs(d, P, K - 1 + extra)
    level = base.copy()
    values = np.empty(K)
    derivs = np.empty(K) if with_derivs else None
    for k in range(K):
        values[k] = level[0]
        if with_derivs:
            derivs[k] = level[1]
        if k == K - 1:
            break
        size = len(level) - 1
        nxt = np.empty(size)
        for l in range(size):
            acc = 0.0
            for j in range(l + 1):
                acc += math.comb(l, j) * level[l - j + 1] * base[j]
            nxt[l] = -acc
        level = nxt
    return GkTable(float(P), values, derivs)


def demand(d: Demand, P: float) -> float:
    if P < 0:
        raise OutOfDomain(f"negative price {P!r}")
    return d.demand(P)


def cs(d: Demand, P: float) -> float:
    if P < 0:
        raise OutOfDomain(f"negative price {P!r}")
    return d.cs(P)


def dwl(d: Demand, P: float, C: float) -> float:
    """Surplus lost relative to pricing at marginal cost ``C``."""
    if P < C:
        raise OutOfDomain(f"price {P!r} below cost {C!r}")
    if C < 0:
        raise OutOfDomain(f"negative cost {C!r}")
    return d.cs(C) - d.cs(P) - (P - C) * d.demand(P)
