"""Exact closed forms: finite sums of generalized monomials.

A generalized monomial is a product of rational powers v^q, nonnegative
integer powers of log(v), and exponentials e^{c v} with rational c, over a
set of named variables.  Coefficients are Fraction or Exact (rational plus
square roots).  The ring is closed under +, *, and partial differentiation,
and under antidifferentiation for the shapes that occur here (power, power
times log^k, polynomial times exponential).
"""

from __future__ import annotations

import cmath
import json
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Callable, Iterable, NamedTuple

from .exact import Exact, as_exact_scalar, nth_root_fraction, sqrt_fraction

__all__ = [
    "Mono", "ClosedForm", "BranchPointError", "NotIntegrableError", "NeedsFloatError",
    "cf_var", "cf_const", "cf_log", "cf_exp", "cf_mono",
]


class BranchPointError(ArithmeticError):
    """Evaluation requested at a log/power branch point."""


class NotIntegrableError(ArithmeticError):
    """Antiderivative leaves the closed-form ring."""


class NeedsFloatError(ArithmeticError):
    """Exact evaluation would leave the rational-radical field."""


class Mono(NamedTuple):
    powers: tuple[tuple[str, Fraction], ...]
    logs: tuple[tuple[str, int], ...]
    exps: tuple[tuple[str, Fraction], ...]

    @staticmethod
    def make(powers=None, logs=None, exps=None) -> "Mono":
        def clean(d, cast):
            if not d:
                return ()
            items = [(v, cast(e)) for v, e in d.items() if e]
            return tuple(sorted(items))
        return Mono(clean(powers, Fraction), clean(logs, int), clean(exps, Fraction))

    def pow_of(self, var: str) -> Fraction:
        for v, e in self.powers:
            if v == var:
                return e
        return Fraction(0)

    def log_of(self, var: str) -> int:
        for v, e in self.logs:
            if v == var:
                return e
        return 0

    def exp_of(self, var: str) -> Fraction:
        for v, e in self.exps:
            if v == var:
                return e
        return Fraction(0)

    def variables(self) -> set[str]:
        return {v for v, _ in self.powers} | {v for v, _ in self.logs} | {v for v, _ in self.exps}

    def mul(self, other: "Mono") -> "Mono":
        p = dict(self.powers)
        for v, e in other.powers:
            p[v] = p.get(v, Fraction(0)) + e
        l = dict(self.logs)
        for v, e in other.logs:
            l[v] = l.get(v, 0) + e
        x = dict(self.exps)
        for v, e in other.exps:
            x[v] = x.get(v, Fraction(0)) + e
        return Mono.make(p, l, x)

    def with_pow(self, var: str, e: Fraction) -> "Mono":
        p = dict(self.powers)
        if e:
            p[var] = e
        else:
            p.pop(var, None)
        return Mono.make(p, dict(self.logs), dict(self.exps))

    def with_log(self, var: str, k: int) -> "Mono":
        l = dict(self.logs)
        if k:
            l[var] = k
        else:
            l.pop(var, None)
        return Mono.make(dict(self.powers), l, dict(self.exps))

    def sort_key(self):
        return (self.powers, self.logs, self.exps)


_ONE = Mono((), (), ())


def _scalar_add(a, b):
    if isinstance(a, (float, complex)) or isinstance(b, (float, complex)):
        return complex(a) + complex(b)
    if isinstance(a, Exact) or isinstance(b, Exact):
        ae = a if isinstance(a, Exact) else Exact.rational(a)
        be = b if isinstance(b, Exact) else Exact.rational(b)
        return as_exact_scalar(ae + be)
    return a + b


def _scalar_mul(a, b):
    if isinstance(a, (float, complex)) or isinstance(b, (float, complex)):
        return complex(a) * complex(b)
    if isinstance(a, Exact) or isinstance(b, Exact):
        ae = a if isinstance(a, Exact) else Exact.rational(a)
        be = b if isinstance(b, Exact) else Exact.rational(b)
        return as_exact_scalar(ae * be)
    return a * b


class ClosedForm:
    """Immutable normal-form sum {monomial: coefficient}; zero coeffs dropped."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Mono, object] | None = None, _clean: bool = False):
        if _clean:
            object.__setattr__(self, "terms", terms or {})
            return
        clean: dict[Mono, object] = {}
        if terms:
            for m, c in terms.items():
                c = as_exact_scalar(c)
                if c:
                    clean[m] = c
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("ClosedForm is immutable")

    # -- constructors -------------------------------------------------
    @staticmethod
    def zero() -> "ClosedForm":
        return ClosedForm({})

    @staticmethod
    def const(c) -> "ClosedForm":
        return ClosedForm({_ONE: Fraction(c) if isinstance(c, int) else c})

    # -- basic ring ops ------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, Fraction, Exact)):
            other = ClosedForm.const(other)
        if not isinstance(other, ClosedForm):
            return NotImplemented
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = _scalar_add(out.get(m, Fraction(0)), c)
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return ClosedForm(out, _clean=True)

    __radd__ = __add__

    def __neg__(self):
        return ClosedForm({m: _scalar_mul(-1, c) for m, c in self.terms.items()}, _clean=True)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, Exact)):
            other = ClosedForm.const(other)
        if not isinstance(other, ClosedForm):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Exact)):
            if not other:
                return ClosedForm.zero()
            return ClosedForm({m: _scalar_mul(c, other) for m, c in self.terms.items()}, _clean=True)
        if not isinstance(other, ClosedForm):
            return NotImplemented
        out: dict[Mono, object] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1.mul(m2)
                s = _scalar_add(out.get(m, Fraction(0)), _scalar_mul(c1, c2))
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return ClosedForm(out, _clean=True)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "ClosedForm":
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            if len(self.terms) == 1:
                return self.mono_pow(Fraction(n))
            raise NotIntegrableError("negative power of a non-monomial closed form")
        out = ClosedForm.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def mono_pow(self, q: Fraction) -> "ClosedForm":
        """Raise a single-monomial form (no logs) to a rational power."""
        if len(self.terms) != 1:
            raise ValueError("mono_pow needs a single-term form")
        (m, c), = self.terms.items()
        if m.logs:
            raise ValueError("mono_pow cannot handle log factors")
        q = Fraction(q)
        if q.denominator == 1:
            cq = (c if isinstance(c, Exact) else Exact.rational(c)) ** q.numerator
        elif not isinstance(c, Exact) and (root := nth_root_fraction(Fraction(c), q.denominator)) is not None:
            cq = Exact.rational(root) ** q.numerator
        elif q.denominator == 2 and not isinstance(c, Exact) and Fraction(c) > 0:
            cq = sqrt_fraction(Fraction(c)) ** q.numerator
        else:
            raise NeedsFloatError(f"cannot take exact power {q} of coefficient {c}")
        mono = Mono.make({v: e * q for v, e in m.powers}, None,
                         {v: e * q for v, e in m.exps})
        return ClosedForm({mono: as_exact_scalar(cq)})

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Exact)):
            other = ClosedForm.const(other)
        if not isinstance(other, ClosedForm):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        return hash(tuple(sorted((m, str(c)) for m, c in self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def variables(self) -> set[str]:
        out: set[str] = set()
        for m in self.terms:
            out |= m.variables()
        return out

    def constant_term(self):
        return self.terms.get(_ONE, Fraction(0))

    def filter(self, keep: Callable[[Mono], bool]) -> "ClosedForm":
        return ClosedForm({m: c for m, c in self.terms.items() if keep(m)}, _clean=True)

    # -- calculus -------------------------------------------------------
    def diff(self, var: str) -> "ClosedForm":
        out: dict[Mono, object] = {}

        def acc(m, c):
            if c:
                s = _scalar_add(out.get(m, Fraction(0)), c)
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)

        for m, c in self.terms.items():
            q = m.pow_of(var)
            k = m.log_of(var)
            e = m.exp_of(var)
            if q:
                acc(m.with_pow(var, q - 1), _scalar_mul(c, q))
            if k:
                acc(m.with_pow(var, q - 1).with_log(var, k - 1), _scalar_mul(c, k))
            if e:
                acc(m, _scalar_mul(c, e))
        return ClosedForm(out, _clean=True)

    def diff_multi(self, variables: Iterable[str]) -> "ClosedForm":
        f = self
        for v in variables:
            f = f.diff(v)
        return f

    def antiderivative(self, var: str) -> "ClosedForm":
        """Formal antiderivative in var (no integration constant)."""
        out = ClosedForm.zero()
        for m, c in self.terms.items():
            out = out + _integrate_term(m, c, var)
        return out

    # -- evaluation -------------------------------------------------------
    def evaluate(self, point: dict[str, complex]) -> complex:
        """Numeric evaluation, principal branches (cmath conventions)."""
        total = 0.0 + 0.0j
        for m, c in self.terms.items():
            val = complex(c)
            for v, q in m.powers:
                z = complex(point[v])
                if z == 0:
                    if q.denominator == 1 and q > 0:
                        val = 0.0j
                        continue
                    raise BranchPointError(f"{v}^{q} at {v}=0")
                if q.denominator == 1:
                    val *= z ** int(q)
                else:
                    val *= cmath.exp(float(q) * cmath.log(z))
            for v, k in m.logs:
                z = complex(point[v])
                if z == 0:
                    raise BranchPointError(f"log {v} at {v}=0")
                val *= cmath.log(z) ** k
            for v, e in m.exps:
                val *= cmath.exp(float(e) * complex(point[v]))
            total += val
        return total

    def evaluate_exact(self, point: dict[str, Fraction]):
        """Exact evaluation; raises NeedsFloatError outside the radical field."""
        total = Exact.zero()
        for m, c in self.terms.items():
            val = c if isinstance(c, Exact) else Exact.rational(c)
            for v, q in m.powers:
                z = Fraction(point[v])
                if z == 0:
                    if q.denominator == 1 and q > 0:
                        val = Exact.zero()
                        continue
                    raise BranchPointError(f"{v}^{q} at {v}=0")
                if q.denominator == 1:
                    val = val * (Exact.rational(z) ** int(q))
                elif q.denominator == 2 and z > 0:
                    val = val * (sqrt_fraction(z) ** q.numerator if q.numerator >= 0
                                 else (sqrt_fraction(z) ** (-q.numerator)).inverse())
                else:
                    raise NeedsFloatError(f"{v}^{q} at {v}={z}")
            for v, k in m.logs:
                if Fraction(point[v]) == 1:
                    val = Exact.zero()
                else:
                    raise NeedsFloatError(f"log {v} at {v}={point[v]}")
            for v, e in m.exps:
                if e * Fraction(point[v]) != 0:
                    raise NeedsFloatError(f"exp({e}{v}) at {v}={point[v]}")
            total = total + val
        return as_exact_scalar(total)

    def substitute_monomials(self, table: dict[str, "ClosedForm"]) -> "ClosedForm":
        """Substitute vars by closed forms; non-integer powers and exp/log factors
        require the replacement to be a single log-free monomial."""
        out = ClosedForm.zero()
        for m, c in self.terms.items():
            term = ClosedForm.const(c)
            for v, q in m.powers:
                if v not in table:
                    term = term * ClosedForm({Mono.make({v: q}): Fraction(1)})
                    continue
                g = table[v]
                if q.denominator == 1 and q >= 0:
                    term = term * g ** int(q)
                else:
                    term = term * g.mono_pow(q)
            for v, k in m.logs:
                if v in table:
                    raise NotIntegrableError(f"cannot substitute into log {v}")
                term = term * ClosedForm({Mono.make(None, {v: k}): Fraction(1)})
            for v, e in m.exps:
                if v in table:
                    raise NotIntegrableError(f"cannot substitute into exp factor of {v}")
                term = term * ClosedForm({Mono.make(None, None, {v: e}): Fraction(1)})
            out = out + term
        return out

    # -- serialization ----------------------------------------------------
    def to_json_obj(self) -> dict:
        entries = []
        for m in sorted(self.terms, key=Mono.sort_key):
            c = self.terms[m]
            comps = c.terms.items() if isinstance(c, Exact) else [(1, Fraction(c))]
            for rad, q in sorted(comps):
                entries.append({
                    "coeff": f"{q.numerator}/{q.denominator}",
                    "radical": rad,
                    "powers": {v: str(e) for v, e in m.powers},
                    "logs": {v: e for v, e in m.logs},
                    "exps": {v: str(e) for v, e in m.exps},
                })
        return {"terms": entries}

    @staticmethod
    def from_json_obj(obj: dict) -> "ClosedForm":
        out = ClosedForm.zero()
        for t in obj["terms"]:
            c = Fraction(t["coeff"])
            rad = int(t.get("radical", 1))
            coeff = as_exact_scalar(Exact({rad: c}))
            m = Mono.make({v: Fraction(e) for v, e in t.get("powers", {}).items()},
                          {v: int(e) for v, e in t.get("logs", {}).items()},
                          {v: Fraction(e) for v, e in t.get("exps", {}).items()})
            out = out + ClosedForm({m: coeff})
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms, key=Mono.sort_key):
            c = self.terms[m]
            bits = [f"({c})"]
            for v, e in m.powers:
                bits.append(f"{v}^{e}" if e != 1 else v)
            for v, e in m.logs:
                bits.append(f"log({v})^{e}" if e != 1 else f"log({v})")
            for v, e in m.exps:
                bits.append(f"e^({e}{v})")
            parts.append("*".join(bits))
        return " + ".join(parts)


def _integrate_term(m: Mono, c, var: str) -> ClosedForm:
    q = m.pow_of(var)
    k = m.log_of(var)
    e = m.exp_of(var)
    rest = Mono.make({v: p for v, p in m.powers if v != var},
                     {v: p for v, p in m.logs if v != var},
                     {v: p for v, p in m.exps if v != var})
    rest_cf = ClosedForm({rest: c})

    if e:
        if k or q < 0 or q.denominator != 1:
            raise NotIntegrableError(f"cannot integrate {var}^{q} log^{k} e^({e}{var})")
        # repeated integration by parts of x^n e^{ex}
        n = int(q)
        acc = ClosedForm.zero()
        coeff = Fraction(1, 1) / e
        for j in range(n, -1, -1):
            mono = Mono.make({var: Fraction(j)}, None, {var: e})
            acc = acc + ClosedForm({mono: coeff})
            if j:
                coeff = -coeff * j / e
        return rest_cf * acc

    if k:
        if q == -1:
            mono = Mono.make({var: Fraction(0)}, {var: k + 1})
            return rest_cf * ClosedForm({mono: Fraction(1, k + 1)})
        # int x^q log^k = x^{q+1} log^k/(q+1) - k/(q+1) int x^q log^{k-1}
        lead = ClosedForm({Mono.make({var: q + 1}, {var: k}): Fraction(1) / (q + 1)})
        tail = _integrate_term(Mono.make({var: q}, {var: k - 1}), Fraction(1), var)
        return rest_cf * (lead - tail * (Fraction(k) / (q + 1)))

    if q == -1:
        return rest_cf * ClosedForm({Mono.make(None, {var: 1}): Fraction(1)})
    return rest_cf * ClosedForm({Mono.make({var: q + 1}): Fraction(1) / (q + 1)})


# -- convenience builders --------------------------------------------------

def cf_var(name: str, power=1) -> ClosedForm:
    return ClosedForm({Mono.make({name: Fraction(power)}): Fraction(1)})


def cf_const(c) -> ClosedForm:
    return ClosedForm.const(c)


def cf_log(name: str, k: int = 1) -> ClosedForm:
    return ClosedForm({Mono.make(None, {name: k}): Fraction(1)})


def cf_exp(name: str, c=1) -> ClosedForm:
    return ClosedForm({Mono.make(None, None, {name: Fraction(c)}): Fraction(1)})


def cf_mono(coeff, powers=None, logs=None, exps=None) -> ClosedForm:
    return ClosedForm({Mono.make(powers, logs, exps): coeff})


def mono_exp_degree(m: Mono) -> Fraction:
    """Sum of exponential multipliers of a monomial (grading for truncated specs)."""
    return sum((e for _, e in m.exps), Fraction(0))


def equal_mod_quadratic(f: ClosedForm, g: ClosedForm, variables: Iterable[str],
                        keep: Callable[[Mono], bool] | None = None) -> bool:
    """True iff all third partials of f - g vanish (optionally after a filter)."""
    d = f - g
    for trip in combinations_with_replacement(sorted(set(variables)), 3):
        third = d.diff_multi(trip)
        if keep is not None:
            third = third.filter(keep)
        if not third.is_zero():
            return False
    return True
