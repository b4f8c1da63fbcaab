"""Multivariate truncated power series anchored at an expansion center.

Coefficients are exact (Fraction/Exact) or numeric (float/complex); a series
is stored in the local offsets x_i = v_i - center_i.  Truncation is by
weighted degree, and arithmetic treats the cutoff as an ideal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .closedform import ClosedForm, NeedsFloatError
from .exact import Exact, as_exact_scalar, scalar_is_exact, sqrt_fraction
from .linalg import SingularMatrixError, mat_inv, sdiv

__all__ = [
    "Grading", "TruncSeries", "SeriesMap",
    "SingularCenterError", "SingularJacobianError", "CenterMismatchError",
    "localize", "invert_map",
]


class SingularCenterError(ArithmeticError):
    pass


class SingularJacobianError(ArithmeticError):
    pass


class CenterMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grading:
    weights: tuple[Fraction, ...]
    order: Fraction

    @staticmethod
    def total_degree(nvars: int, order) -> "Grading":
        return Grading(tuple([Fraction(1)] * nvars), Fraction(order))

    def wdeg(self, idx: tuple[int, ...]) -> Fraction:
        return sum((w * k for w, k in zip(self.weights, idx)), Fraction(0))

    def is_uniform(self) -> bool:
        return all(w == self.weights[0] for w in self.weights)


class TruncSeries:
    """Series sum_idx c_idx * prod (v_i - center_i)^{idx_i}, wdeg(idx) <= order."""

    __slots__ = ("vars", "center", "coeffs", "grading")

    def __init__(self, vars: tuple[str, ...], center: tuple, coeffs: dict, grading: Grading,
                 _clean: bool = False):
        object.__setattr__(self, "vars", tuple(vars))
        object.__setattr__(self, "center", tuple(center))
        object.__setattr__(self, "grading", grading)
        if _clean:
            object.__setattr__(self, "coeffs", coeffs)
            return
        clean = {}
        for idx, c in coeffs.items():
            if grading.wdeg(idx) <= grading.order:
                c = as_exact_scalar(c)
                if c:
                    clean[idx] = c
        object.__setattr__(self, "coeffs", clean)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("TruncSeries is immutable")

    # -- helpers -------------------------------------------------------
    @property
    def nvars(self) -> int:
        return len(self.vars)

    def is_exact(self) -> bool:
        return all(scalar_is_exact(c) for c in self.coeffs.values())

    def same_frame(self, other: "TruncSeries") -> bool:
        return (self.vars == other.vars and self.center == other.center
                and self.grading == other.grading)

    @staticmethod
    def constant(value, vars, center, grading) -> "TruncSeries":
        return TruncSeries(vars, center, {tuple([0] * len(vars)): value}, grading)

    @staticmethod
    def coordinate(i: int, vars, center, grading) -> "TruncSeries":
        """The local offset x_i (zero constant term)."""
        idx = tuple(int(j == i) for j in range(len(vars)))
        return TruncSeries(vars, center, {idx: Fraction(1)}, grading)

    def constant_term(self):
        return self.coeffs.get(tuple([0] * self.nvars), Fraction(0))

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, Fraction, Exact, float, complex)):
            other = TruncSeries.constant(other, self.vars, self.center, self.grading)
        if not isinstance(other, TruncSeries):
            return NotImplemented
        if not self.same_frame(other):
            raise CenterMismatchError("series frames differ")
        out = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            s = out.get(idx, Fraction(0)) + c
            s = as_exact_scalar(s) if not isinstance(s, (float, complex)) else s
            if s:
                out[idx] = s
            else:
                out.pop(idx, None)
        return TruncSeries(self.vars, self.center, out, self.grading, _clean=True)

    __radd__ = __add__

    def __neg__(self):
        return TruncSeries(self.vars, self.center,
                           {i: -c for i, c in self.coeffs.items()}, self.grading, _clean=True)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, Exact, float, complex)):
            other = TruncSeries.constant(other, self.vars, self.center, self.grading)
        if not isinstance(other, TruncSeries):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Exact, float, complex)):
            if not other:
                return TruncSeries(self.vars, self.center, {}, self.grading, _clean=True)
            return TruncSeries(self.vars, self.center,
                               {i: c * other for i, c in self.coeffs.items()},
                               self.grading, _clean=False)
        if not isinstance(other, TruncSeries):
            return NotImplemented
        if not self.same_frame(other):
            raise CenterMismatchError("series frames differ")
        g = self.grading
        out: dict = {}
        for i1, c1 in self.coeffs.items():
            w1 = g.wdeg(i1)
            for i2, c2 in other.coeffs.items():
                if w1 + g.wdeg(i2) > g.order:
                    continue
                idx = tuple(a + b for a, b in zip(i1, i2))
                s = out.get(idx, Fraction(0)) + c1 * c2
                if isinstance(s, Exact):
                    s = as_exact_scalar(s)
                if s:
                    out[idx] = s
                else:
                    out.pop(idx, None)
        return TruncSeries(self.vars, self.center, out, self.grading, _clean=True)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        out = TruncSeries.constant(Fraction(1), self.vars, self.center, self.grading)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def reciprocal(self) -> "TruncSeries":
        return series_reciprocal(self)

    def diff(self, var: str) -> "TruncSeries":
        i = self.vars.index(var)
        out: dict = {}
        for idx, c in self.coeffs.items():
            k = idx[i]
            if k:
                nidx = idx[:i] + (k - 1,) + idx[i + 1:]
                out[nidx] = out.get(nidx, Fraction(0)) + c * k
        return TruncSeries(self.vars, self.center, out, self.grading)

    def truncate(self, order) -> "TruncSeries":
        g = Grading(self.grading.weights, Fraction(order))
        return TruncSeries(self.vars, self.center, dict(self.coeffs), g)

    def drop_low_degree(self, below) -> "TruncSeries":
        """Remove terms of weighted degree < below (e.g. modulo-quadratic compares)."""
        out = {i: c for i, c in self.coeffs.items() if self.grading.wdeg(i) >= below}
        return TruncSeries(self.vars, self.center, out, self.grading, _clean=True)

    def homogeneous_part(self, deg) -> "TruncSeries":
        deg = Fraction(deg)
        out = {i: c for i, c in self.coeffs.items() if self.grading.wdeg(i) == deg}
        return TruncSeries(self.vars, self.center, out, self.grading, _clean=True)

    def max_abs_coeff(self) -> float:
        return max((abs(complex(c)) for c in self.coeffs.values()), default=0.0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other):
        if not isinstance(other, TruncSeries):
            return NotImplemented
        return self.same_frame(other) and (self - other).is_zero()

    def evaluate(self, point: dict[str, complex]) -> complex:
        total = 0j
        offs = [complex(point[v]) - complex(c) for v, c in zip(self.vars, self.center)]
        for idx, c in self.coeffs.items():
            val = complex(c)
            for x, k in zip(offs, idx):
                val *= x ** k
            total += val
        return total

    def to_json_obj(self) -> dict:
        return {
            "vars": list(self.vars),
            "center": [str(c) for c in self.center],
            "grading": {"weights": [str(w) for w in self.grading.weights],
                        "order": str(self.grading.order)},
            "coeffs": [[list(i), str(c)] for i, c in sorted(self.coeffs.items())],
        }

    def __repr__(self):
        parts = [f"{c}*x^{idx}" for idx, c in sorted(self.coeffs.items())]
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class SeriesMap:
    """Component series share source frame; constant terms are the target center."""
    components: tuple[TruncSeries, ...]

    @property
    def source_vars(self):
        return self.components[0].vars

    def target_center(self):
        return tuple(c.constant_term() for c in self.components)

    def jacobian(self):
        """Linear-part matrix J[i][j] = d comp_i / d x_j at the center."""
        n = len(self.components)
        src = self.source_vars
        jac = []
        for comp in self.components:
            row = []
            for j in range(len(src)):
                idx = tuple(int(k == j) for k in range(len(src)))
                row.append(comp.coeffs.get(idx, Fraction(0)))
            jac.append(row)
        return jac


def compose(f: TruncSeries, m: SeriesMap) -> TruncSeries:
    """f after m; m's constant terms must match f's center."""
    if len(m.components) != f.nvars:
        raise CenterMismatchError("component count differs from variable count")
    for comp, c in zip(m.components, f.center):
        d = comp.constant_term() - c
        if isinstance(d, (float, complex)):
            if abs(complex(d)) > 1e-12:
                raise CenterMismatchError("map constant terms do not hit f's center")
        elif d:
            raise CenterMismatchError("map constant terms do not hit f's center")
    frame = m.components[0]
    offsets = [comp - comp.constant_term() for comp in m.components]
    zero = tuple([0] * f.nvars)
    # cache powers of each offset
    pow_cache: list[dict[int, TruncSeries]] = [dict() for _ in offsets]

    def offset_pow(i: int, k: int) -> TruncSeries:
        if k == 0:
            return TruncSeries.constant(Fraction(1), frame.vars, frame.center, frame.grading)
        if k not in pow_cache[i]:
            pow_cache[i][k] = offset_pow(i, k - 1) * offsets[i]
        return pow_cache[i][k]

    total = TruncSeries(frame.vars, frame.center, {}, frame.grading, _clean=True)
    for idx, c in sorted(f.coeffs.items()):
        term = TruncSeries.constant(c, frame.vars, frame.center, frame.grading)
        for i, k in enumerate(idx):
            if k:
                term = term * offset_pow(i, k)
        total = total + term
    return total


def invert_map(m: SeriesMap) -> SeriesMap:
    """Compositional inverse of an analytic map with invertible linear part.

    Works order by order in total degree; requires a uniform grading.
    """
    frame = m.components[0]
    g = frame.grading
    if not g.is_uniform():
        raise ValueError("invert_map requires uniform weights")
    n = len(m.components)
    if n != frame.nvars:
        raise CenterMismatchError("map must be square")
    jac = m.jacobian()
    try:
        jinv = mat_inv(jac) if all(scalar_is_exact(x) for row in jac for x in row) else None
    except SingularMatrixError:
        raise SingularJacobianError("Jacobian is singular at the center")
    if jinv is None:
        import numpy as np
        a = np.array([[complex(x) for x in row] for row in jac])
        if abs(np.linalg.det(a)) < 1e-13:
            raise SingularJacobianError("Jacobian is numerically singular at the center")
        jinv = np.linalg.inv(a).tolist()

    tgt_center = m.target_center()
    tgt_vars = tuple(f"y{i+1}" for i in range(n))
    tgt_grading = Grading(tuple([g.weights[0]] * n), g.order)

    def y_offset(i):
        return TruncSeries.coordinate(i, tgt_vars, tgt_center, tgt_grading)

    # linear seed: x = center_x + Jinv (y - y0)
    comps = []
    for i in range(n):
        s = TruncSeries.constant(frame.center[i], tgt_vars, tgt_center, tgt_grading)
        for j in range(n):
            if jinv[i][j]:
                s = s + y_offset(j) * jinv[i][j]
        comps.append(s)

    # strip of m: m~ = m - center as series, for composition into candidate inverse
    max_deg = int(math.floor(float(g.order / g.weights[0])))
    for deg in range(2, max_deg + 1):
        # e = (inv o m) - id, in source frame
        err = []
        for i in range(n):
            e = compose(comps[i], m) - TruncSeries.constant(frame.center[i], frame.vars,
                                                            frame.center, frame.grading)
            e = e - TruncSeries.coordinate(i, frame.vars, frame.center, frame.grading)
            err.append(e.homogeneous_part(deg * g.weights[0]))
        if all(e.is_zero() for e in err):
            continue
        # correction: P_deg(y) = -err_deg composed with Jinv*(y - y0)
        lin_comps = []
        for i in range(n):
            s = TruncSeries.constant(frame.center[i], tgt_vars, tgt_center, tgt_grading)
            for j in range(n):
                if jinv[i][j]:
                    s = s + y_offset(j) * jinv[i][j]
            lin_comps.append(s)
        lin_map = SeriesMap(tuple(lin_comps))
        for i in range(n):
            if not err[i].is_zero():
                comps[i] = comps[i] - compose(err[i], lin_map)
    return SeriesMap(tuple(comps))


def series_reciprocal(f: TruncSeries) -> TruncSeries:
    c0 = f.constant_term()
    if not c0:
        raise SingularCenterError("reciprocal of series with zero constant term")
    inv0 = sdiv(Fraction(1), c0)
    g = f * inv0 - 1
    out = TruncSeries.constant(Fraction(1), f.vars, f.center, f.grading)
    term = TruncSeries.constant(Fraction(1), f.vars, f.center, f.grading)
    max_pow = int(math.floor(float(f.grading.order / min(f.grading.weights)))) + 1
    for _ in range(max_pow):
        term = term * g * Fraction(-1)
        if term.is_zero():
            break
        out = out + term
    return out * inv0


def _binomial_series(q: Fraction, nterms: int) -> list[Fraction]:
    """Coefficients of (1+t)^q up to t^{nterms}."""
    out = [Fraction(1)]
    for j in range(1, nterms + 1):
        out.append(out[-1] * (q - (j - 1)) / j)
    return out


def _value_pow(c, q: Fraction):
    """c^q exactly if possible, else float/complex."""
    if isinstance(c, (float, complex)):
        import cmath
        return cmath.exp(float(q) * cmath.log(c)) if c != 0 else 0.0
    cf = Fraction(c) if not isinstance(c, Exact) else None
    if cf is not None:
        if q.denominator == 1:
            return cf ** q.numerator if q >= 0 else Fraction(1) / cf ** (-q.numerator)
        if q.denominator == 2 and cf > 0:
            v = sqrt_fraction(cf) ** q.numerator
            return as_exact_scalar(v)
    raise NeedsFloatError(f"cannot take exact {c}^{q}")


def localize(f: ClosedForm, vars: tuple[str, ...], center: tuple, grading: Grading,
             allow_float: bool = True) -> TruncSeries:
    """Taylor-expand a closed form at a center, to the grading cutoff.

    Exact scalars where possible; falls back to float scalars when a factor
    evaluates outside the rational-radical field (or raises if not allowed).
    """
    import cmath
    cmap = dict(zip(vars, center))
    nmax = {v: int(math.floor(float(grading.order / w))) for v, w in zip(vars, grading.weights)}
    total = TruncSeries(vars, center, {}, grading, _clean=True)

    def const_series(value):
        return TruncSeries.constant(value, vars, center, grading)

    def coord(i):
        return TruncSeries.coordinate(i, vars, center, grading)

    for mono, coeff in f.terms.items():
        term = const_series(coeff)
        for v, q in mono.powers:
            i = vars.index(v)
            c = cmap[v]
            zero_c = (abs(complex(c)) == 0)
            if zero_c:
                if q.denominator != 1 or q < 0:
                    raise SingularCenterError(f"{v}^{q} at center {v}=0")
                term = term * coord(i) ** int(q)
                continue
            try:
                cq = _value_pow(c, q)
            except NeedsFloatError:
                if not allow_float:
                    raise
                cq = cmath.exp(float(q) * cmath.log(complex(c)))
            n = nmax[v]
            coefs = _binomial_series(q, n)
            s = const_series(coefs[0])
            xc = coord(i) * sdiv(Fraction(1), c)
            p = const_series(Fraction(1))
            for j in range(1, n + 1):
                p = p * xc
                if p.is_zero():
                    break
                s = s + p * coefs[j]
            term = term * s * cq
        for v, k in mono.logs:
            i = vars.index(v)
            c = cmap[v]
            if abs(complex(c)) == 0:
                raise SingularCenterError(f"log {v} at center {v}=0")
            if scalar_is_exact(c) and Fraction(c) == 1:
                logc = Fraction(0)
            else:
                if not allow_float:
                    raise NeedsFloatError(f"log({c}) is not exact")
                logc = cmath.log(complex(c))
            n = nmax[v]
            xc = coord(i) * sdiv(Fraction(1), c)
            s = const_series(logc)
            p = const_series(Fraction(1))
            for j in range(1, n + 1):
                p = p * xc
                if p.is_zero():
                    break
                s = s + p * (Fraction((-1) ** (j + 1), j))
            term = term * s ** k
        for v, e in mono.exps:
            i = vars.index(v)
            c = cmap[v]
            if scalar_is_exact(c) and e * Fraction(c) == 0:
                e0 = Fraction(1)
            else:
                if not allow_float:
                    raise NeedsFloatError(f"exp({e}*{c}) is not exact")
                e0 = cmath.exp(float(e) * complex(c))
            n = nmax[v]
            s = const_series(Fraction(1))
            p = const_series(Fraction(1))
            for j in range(1, n + 1):
                p = p * coord(i) * (Fraction(e) / j)
                if p.is_zero():
                    break
                s = s + p
            term = term * s * e0
        total = total + term
    return total
