"""Legendre-type transformations: new flat coordinates from second derivatives
of the potential, transport of potentials, calibrations and two-point tables,
and the structural verifications (metric transport, Euler data, round trip).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .calibration import Calibration, TwoPointTable, solve_calibration, two_point_table
from .closedform import ClosedForm
from .core import FrobeniusSpec, Tensors, build_tensors
from .linalg import sdiv
from .series import Grading, SeriesMap, TruncSeries, compose, invert_map, localize

__all__ = [
    "LegendreResult", "transform", "transform_series", "transport_calibration",
    "verify_omega_transport", "verify_euler_hat", "round_trip", "verify_pointwise",
    "series_equal_mod_quadratic", "hat_tensors_series", "check_metric_transport",
    "check_gradient_identity", "check_unity_rule", "localize_hat", "pullback",
    "hat_omega_from_thetas", "check_structure_transport", "check_product_identity",
]

F = Fraction


@dataclass
class LegendreResult:
    spec: FrobeniusSpec
    tensors: Tensors
    cal: Calibration
    table: TwoPointTable
    kappa: int
    center: tuple
    grading: Grading
    hat_center: tuple
    hat_vars: tuple
    hat_map: SeriesMap          # components: upper hat coordinates as series in v - center
    inverse_map: SeriesMap      # v as series in hat coordinates
    hat_potential: TruncSeries
    hat_charge: Fraction
    hat_shifts: tuple

    def hat_lower_forms(self) -> list[ClosedForm]:
        """Lowered hat coordinates as closed forms of the straight variables."""
        return [self.table.entry(a, 0, self.kappa, 0) for a in range(1, self.spec.n + 1)]

    def hat_upper_forms(self) -> list[ClosedForm]:
        low = self.hat_lower_forms()
        t = self.tensors
        out = []
        for a in range(self.spec.n):
            s = ClosedForm.zero()
            for b in range(self.spec.n):
                if t.eta_inv[a][b]:
                    s = s + low[b] * t.eta_inv[a][b]
            out.append(s)
        return out


def _hessian_series(f: TruncSeries, varnames) -> list:
    return [[f.diff(x).diff(y) for y in varnames] for x in varnames]


def _potential_from_hessian_series(w, vars, center, grading) -> TruncSeries:
    """Series F with d2 F = w, vanishing constant and linear part; asserts the
    mixed-derivative consistency of the input."""
    n = len(vars)
    coeffs = {}
    degree_cap = grading.order
    # collect candidate indices from all entries
    for a in range(n):
        for b in range(n):
            for idx, c in w[a][b].coeffs.items():
                target = list(idx)
                target[a] += 1
                target[b] += 1
                if grading.wdeg(tuple(target)) > degree_cap:
                    continue
                coeffs.setdefault(tuple(target), None)
    for idx in list(coeffs):
        val = None
        for a in range(n):
            if idx[a] == 0:
                continue
            ia = list(idx)
            ia[a] -= 1
            for b in range(n):
                if ia[b] == 0:
                    continue
                ib = list(ia)
                ib[b] -= 1
                c = w[a][b].coeffs.get(tuple(ib), F(0))
                cand = sdiv(c, F(idx[a] * ia[b])) if c else (
                    F(0) if not isinstance(c, (float, complex)) else 0.0)
                if val is None:
                    val = cand
                else:
                    d = val - cand
                    bad = (abs(complex(d)) > 1e-9) if isinstance(d, (float, complex)) else bool(d)
                    if bad:
                        raise ArithmeticError(
                            f"inconsistent Hessian data at {idx}: {val} vs {cand}")
        coeffs[idx] = val
    coeffs = {i: c for i, c in coeffs.items() if c}
    return TruncSeries(vars, center, coeffs, grading)


def transform_series(fhat_source: TruncSeries, eta, eta_inv, kappa: int):
    """Series-level transform: hat coordinates from second derivatives, inverse
    map, and the transported potential.  Works modulo quadratic."""
    vars = fhat_source.vars
    n = len(vars)
    w = _hessian_series(fhat_source, vars)
    low = [w[kappa - 1][a] for a in range(n)]
    upper = []
    for a in range(n):
        s = TruncSeries(vars, fhat_source.center, {}, fhat_source.grading, _clean=True)
        for b in range(n):
            if eta_inv[a][b]:
                s = s + low[b] * eta_inv[a][b]
        upper.append(s)
    hat_map = SeriesMap(tuple(upper))
    inv = invert_map(hat_map)
    hat_vars = inv.components[0].vars
    hat_center = hat_map.target_center()
    grading = Grading(tuple([fhat_source.grading.weights[0]] * n), fhat_source.grading.order)
    what = [[compose(w[a][b], inv) for b in range(n)] for a in range(n)]
    fhat = _potential_from_hessian_series(what, hat_vars, hat_center, grading)
    return hat_map, inv, fhat


def transform(spec: FrobeniusSpec, kappa: int, center: Sequence, order,
              cal: Calibration | None = None, m_max: int = 4,
              tensors: Tensors | None = None) -> LegendreResult:
    """Build the kappa-direction transform at a center, as exact series data.

    Generator-backed truncated specs are re-materialized deep enough for the
    requested series order; the Hessian cross-consistency check acts as the
    accuracy gate, and failing it triggers a deeper retry."""
    if spec.exp_cutoff is not None and spec.generator is not None:
        from .specs import deepen_spec
        depth = _needed_depth(spec, center, order, m_max)
        last_exc = None
        for attempt in range(3):
            deeper = deepen_spec(spec, depth + 6 * attempt)
            try:
                return _transform_impl(deeper, kappa, center, order, None, m_max, None)
            except ArithmeticError as exc:
                last_exc = exc
        raise last_exc
    return _transform_impl(spec, kappa, center, order, cal, m_max, tensors)


def _needed_depth(spec: FrobeniusSpec, center, order, m_max,
                  threshold: float = 1e-15, max_extra: int = 16) -> int:
    """Smallest materialization degree whose next term no longer moves the
    low-order Hessian series at this center (successive-term convergence test).

    Each calibration level converts a derivative pair back into an integration
    pair, so the probe window is widened by two per transported level."""
    from .specs import generator_potential
    base = int(spec.exp_cutoff)
    fcenter = tuple(complex(c) for c in center)
    window = Fraction(order) + 2 * max(0, m_max - 1)
    grading = Grading.total_degree(spec.n, window)
    prev = generator_potential(spec.generator[0], base)
    depth = base
    for d in range(base + 1, base + max_extra + 1):
        nxt = generator_potential(spec.generator[0], d)
        delta = nxt - prev
        impact = 0.0
        for a in spec.varnames:
            for b in spec.varnames:
                s = localize(delta.diff(a).diff(b), spec.varnames, fcenter, grading)
                impact = max(impact, s.max_abs_coeff())
        prev = nxt
        if impact < threshold:
            break
        depth = d
    return depth


def _transform_impl(spec: FrobeniusSpec, kappa: int, center: Sequence, order,
                    cal: Calibration | None, m_max: int,
                    tensors: Tensors | None) -> LegendreResult:
    t = tensors or build_tensors(spec)
    cal = cal or solve_calibration(spec, max(m_max, 1), t)
    table = two_point_table(cal, min(cal.m_max - 1, 3))
    n = spec.n
    center = tuple(F(c) if isinstance(c, int) else c for c in center)
    if spec.exp_cutoff is not None:
        # a finite exponential truncation is only approximately integrable, so
        # series transport runs on the float path with its tolerance
        center = tuple(complex(c) for c in center)
    grading = Grading.total_degree(n, order)

    low_forms = [table.entry(a, 0, kappa, 0) for a in range(1, n + 1)]
    upper_forms = []
    for a in range(n):
        s = ClosedForm.zero()
        for b in range(n):
            if t.eta_inv[a][b]:
                s = s + low_forms[b] * t.eta_inv[a][b]
        upper_forms.append(s)

    comps = tuple(localize(f, spec.varnames, center, grading) for f in upper_forms)
    hat_map = SeriesMap(comps)
    inverse = invert_map(hat_map)   # raises SingularJacobianError if not invertible
    hat_vars = inverse.components[0].vars
    hat_center = hat_map.target_center()

    w = [[localize(table.entry(a + 1, 0, b + 1, 0), spec.varnames, center, grading)
          for b in range(n)] for a in range(n)]
    what = [[compose(w[a][b], inverse) for b in range(n)] for a in range(n)]
    hat_grading = Grading(tuple([grading.weights[0]] * n), grading.order)
    fhat = _potential_from_hessian_series(what, hat_vars, hat_center, hat_grading)

    hat_charge = -2 * spec.mu[kappa - 1]
    hat_shifts = tuple(spec.r_entry(1, b, kappa) for b in range(1, n + 1))
    return LegendreResult(
        spec=spec, tensors=t, cal=cal, table=table, kappa=kappa, center=center,
        grading=grading, hat_center=hat_center, hat_vars=hat_vars, hat_map=hat_map,
        inverse_map=inverse, hat_potential=fhat, hat_charge=hat_charge,
        hat_shifts=hat_shifts)


def series_equal_mod_quadratic(a: TruncSeries, b: TruncSeries) -> bool:
    return (a - b).drop_low_degree(3).is_zero()


def _vanishes(s: TruncSeries, tol: float = 1e-8) -> bool:
    """Exact-zero for exact scalars; below tolerance on the float path."""
    if s.is_zero():
        return True
    if s.is_exact():
        return False
    return s.max_abs_coeff() < tol


def localize_hat(result: LegendreResult, f: ClosedForm) -> TruncSeries:
    """Expand a closed form written in hat variables at the hat center."""
    return localize(f, result.hat_vars, result.hat_center, result.hat_potential.grading)


def pullback(result: LegendreResult, f: ClosedForm) -> TruncSeries:
    """Expand a straight-variable closed form and transport it to hat series."""
    s = localize(f, result.spec.varnames, result.center, result.grading)
    return compose(s, result.inverse_map)


def transport_calibration(result: LegendreResult, m_max: int) -> dict:
    """Hat calibration theta-hat_{a,m} = Omega_{a,m;kappa,0} o (inverse map)."""
    if m_max + 1 > result.cal.m_max:
        from .calibration import OrderExceededError
        raise OrderExceededError(f"transport needs calibration to level {m_max + 1}")
    out = {}
    for a in range(1, result.spec.n + 1):
        for m in range(m_max + 1):
            om = result.table.entry(a, m, result.kappa, 0)
            out[(a, m)] = pullback(result, om)
    return out


def check_gradient_identity(result: LegendreResult, hat_thetas: dict) -> dict:
    """Hat gradients of the transported calibration match the straight gradients;
    the derivative loses one order at the series cutoff."""
    failures = []
    for (a, m), th in sorted(hat_thetas.items()):
        for b in range(1, result.spec.n + 1):
            lhs = th.diff(result.hat_vars[b - 1])
            rhs = pullback(result, result.cal.grad(a, m, b))
            diff = (lhs - rhs).truncate(lhs.grading.order - 1)
            if not _vanishes(diff):
                failures.append((a, m, b))
    return {"pass": not failures, "failures": failures}


def check_unity_rule(result: LegendreResult, hat_thetas: dict) -> dict:
    """d theta-hat_{a,m+1} / d vhat^kappa = theta-hat_{a,m}."""
    failures = []
    kap = result.hat_vars[result.kappa - 1]
    for (a, m), th in sorted(hat_thetas.items()):
        if (a, m + 1) not in hat_thetas:
            continue
        lhs = hat_thetas[(a, m + 1)].diff(kap)
        diff = (lhs - th).truncate(lhs.grading.order - 1)
        if not _vanishes(diff):
            failures.append((a, m))
    return {"pass": not failures, "failures": failures}


def hat_omega_from_thetas(result: LegendreResult, hat_thetas: dict,
                          a: int, m1: int, b: int, m2: int) -> TruncSeries:
    """Two-point entry of the hat structure computed from hat data only."""
    t = result.tensors
    n = result.spec.n
    total = None
    for j in range(m2 + 1):
        part = None
        for rho in range(n):
            for sig in range(n):
                e = t.eta_inv[rho][sig]
                if not e:
                    continue
                term = (hat_thetas[(a, m1 + j + 1)].diff(result.hat_vars[rho])
                        * hat_thetas[(b, m2 - j)].diff(result.hat_vars[sig])) * e
                part = term if part is None else part + term
        part = part * F((-1) ** j)
        total = part if total is None else total + part
    return total


def verify_omega_transport(result: LegendreResult, order: int, m_max: int) -> dict:
    """Hat two-point functions equal the straight ones after the coordinate map."""
    hat_thetas = transport_calibration(result, m_max)
    failures = []
    checked = 0
    for m1 in range(order + 1):
        for m2 in range(order + 1 - m1):
            if m1 + m2 + 1 > m_max:
                continue
            for a in range(1, result.spec.n + 1):
                for b in range(1, result.spec.n + 1):
                    lhs = hat_omega_from_thetas(result, hat_thetas, a, m1, b, m2)
                    rhs = pullback(result, result.table.entry(a, m1, b, m2))
                    diff = (lhs - rhs).truncate(lhs.grading.order - 1)
                    checked += 1
                    if not _vanishes(diff):
                        failures.append((a, m1, b, m2))
    return {"pass": not failures, "failures": failures, "checked": checked}


def verify_euler_hat(result: LegendreResult) -> dict:
    """Exact identity: the Euler field in hat coordinates is linear-plus-shift
    with the transformed charge and with shifts from the nilpotent block."""
    spec = result.spec
    keep = spec.exp_filter()
    upper = result.hat_upper_forms()
    failures = []
    for b in range(1, spec.n + 1):
        lhs = spec.euler_apply(upper[b - 1])
        rhs = upper[b - 1] * (1 - result.hat_charge / 2 - spec.mu[b - 1])
        shift = result.hat_shifts[b - 1]
        if shift:
            rhs = rhs + ClosedForm.const(shift)
        diff = lhs - rhs
        if keep:
            diff = diff.filter(keep)
        if not diff.is_zero():
            failures.append(b)
    return {"pass": not failures, "failures": failures,
            "hat_charge": result.hat_charge, "hat_shifts": result.hat_shifts}


def check_metric_transport(result: LegendreResult) -> dict:
    """Jacobian identity: the hat-coordinate differentials pair to the same
    constant metric (equivalently d vhat_a / dv_b = c^b_{kappa a})."""
    spec, t = result.spec, result.tensors
    n = spec.n
    low = result.hat_lower_forms()
    failures = []
    for a in range(n):
        for b in range(n):
            # d vhat_a / d v^rho eta^{rho b} = c^b_{kappa a}
            lhs = ClosedForm.zero()
            for rho in range(n):
                if t.eta_inv[rho][b]:
                    lhs = lhs + low[a].diff(spec.varnames[rho]) * t.eta_inv[rho][b]
            rhs = t.c_mixed[b][result.kappa - 1][a]
            keep = spec.exp_filter()
            diff = lhs - rhs
            if keep:
                diff = diff.filter(keep)
            if not diff.is_zero():
                failures.append((a + 1, b + 1))
    return {"pass": not failures, "failures": failures}


def hat_tensors_series(result: LegendreResult) -> list:
    """Hat structure constants as series: chat^g_{ab} = (dv^rho/dvhat^a) c^g_{rho b}."""
    spec, t = result.spec, result.tensors
    n = spec.n
    inv = result.inverse_map
    dv = [[inv.components[r].diff(result.hat_vars[a]) for a in range(n)] for r in range(n)]
    out = []
    for g in range(n):
        blk = []
        for a in range(n):
            row = []
            for b in range(n):
                s = None
                for rho in range(n):
                    cmix = pullback(result, t.c_mixed[g][rho][b])
                    term = dv[rho][a] * cmix
                    s = term if s is None else s + term
                row.append(s)
            blk.append(row)
        out.append(blk)
    return out


def check_structure_transport(result: LegendreResult) -> dict:
    """The hat structure constants computed two ways agree: third derivatives of
    the transported potential versus the chain-rule transport of c."""
    n = result.spec.n
    t = result.tensors
    chat = hat_tensors_series(result)
    order_guard = result.grading.order - 3
    failures = []
    for g in range(n):
        lowered = None
        for a in range(n):
            for b in range(n):
                # lower the transported mixed tensor with eta and compare with
                # the third derivatives of the hat potential
                s = None
                for rho in range(n):
                    if t.eta[g][rho]:
                        term = chat[rho][a][b] * t.eta[g][rho]
                        s = term if s is None else s + term
                third = result.hat_potential.diff(result.hat_vars[a]) \
                    .diff(result.hat_vars[b]).diff(result.hat_vars[g])
                if not _vanishes((s - third).truncate(order_guard)):
                    failures.append((a + 1, b + 1, g + 1))
    return {"pass": not failures, "failures": failures}


def check_product_identity(result: LegendreResult) -> dict:
    """Multiplication by the transform direction sends hat coordinate fields to
    the lowered straight ones:  sum_s c^g_{kappa s} dv^s/dvhat_a = eta^{g a}."""
    spec, t = result.spec, result.tensors
    n = spec.n
    inv = result.inverse_map
    order_guard = result.grading.order - 2
    failures = []
    for a in range(n):
        for g in range(n):
            s = None
            for sig in range(n):
                cmix = pullback(result, t.c_mixed[g][result.kappa - 1][sig])
                # d v^sig / d vhat_a = eta^{b a} d inv^sig / d yhat^b
                dv = None
                for b in range(n):
                    if t.eta_inv[b][a]:
                        term = inv.components[sig].diff(result.hat_vars[b]) * t.eta_inv[b][a]
                        dv = term if dv is None else dv + term
                term = cmix * dv
                s = term if s is None else s + term
            diff = (s - t.eta_inv[g][a]).truncate(order_guard)
            if not _vanishes(diff):
                failures.append((a + 1, g + 1))
    return {"pass": not failures, "failures": failures}


def round_trip(result: LegendreResult) -> dict:
    """Transforming the hat potential in the original unity direction recovers
    the straight potential modulo quadratic, in the original coordinates."""
    spec = result.spec
    t = result.tensors
    _, inv_back, f_back = transform_series(result.hat_potential, t.eta, t.eta_inv,
                                           spec.unity)
    f_orig = localize(spec.potential, spec.varnames, result.center, result.grading)
    # the doubled-hat offsets coincide with the straight offsets; compare cubic on
    back = TruncSeries(f_orig.vars, f_orig.center,
                       {idx: c for idx, c in f_back.coeffs.items()}, f_orig.grading)
    diff = (back - f_orig).drop_low_degree(3)
    diff = diff.truncate(result.grading.order - 2)
    return {"pass": _vanishes(diff), "exact": diff.is_zero(),
            "max_residual": diff.max_abs_coeff()}


def verify_pointwise(spec: FrobeniusSpec, kappa: int, hat_potential: ClosedForm,
                     points: list, tol: float = 1e-8,
                     hessian_offset=None, tensors: Tensors | None = None,
                     workers: int | None = None) -> dict:
    """Numeric check of the defining Hessian identity at sample points: the hat
    Hessian of a closed-form candidate equals the straight Hessian of F.

    Points are independent; `workers` (default: FROBWDVV_THREADS) caps how many
    are verified concurrently.  Results merge in input order."""
    t = tensors or build_tensors(spec)
    n = spec.n
    names = spec.varnames
    hat_names = [f"h{i+1}" for i in range(n)]
    if set(hat_potential.variables()) - set(hat_names):
        raise ValueError("hat potential must use variables h1..hn")
    sec = [[spec.potential.diff(names[a]).diff(names[b]) for b in range(n)]
           for a in range(n)]
    hat_sec = [[hat_potential.diff(hat_names[a]).diff(hat_names[b]) for b in range(n)]
               for a in range(n)]

    def check_point(pt):
        vpt = dict(zip(names, [complex(x) for x in pt]))
        low = [sec[kappa - 1][a].evaluate(vpt) for a in range(n)]
        hat_pt = {}
        for a in range(n):
            hat_pt[hat_names[a]] = sum(complex(t.eta_inv[a][b]) * low[b] for b in range(n))
        worst_pt = 0.0
        fails = []
        for a in range(n):
            for b in range(n):
                want = sec[a][b].evaluate(vpt)
                got = hat_sec[a][b].evaluate(hat_pt)
                if hessian_offset is not None:
                    got += complex(hessian_offset[a][b])
                err = abs(got - want) / max(1.0, abs(want))
                worst_pt = max(worst_pt, err)
                if err > tol:
                    fails.append((pt, a + 1, b + 1, err))
        return worst_pt, fails

    if workers is None:
        import os
        try:
            workers = max(1, int(os.environ.get("FROBWDVV_THREADS", "1")))
        except ValueError:
            workers = 1
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(check_point, points))
    else:
        results = [check_point(pt) for pt in points]
    worst = max((w for w, _ in results), default=0.0)
    failures = [f for _, fs in results for f in fs]
    return {"pass": not failures, "max_residual": worst, "failures": failures[:5],
            "points": len(points)}
