"""Small dense linear algebra over exact scalars (Fraction or Exact)."""

from __future__ import annotations

from fractions import Fraction

from .exact import Exact, as_exact_scalar

__all__ = ["sdiv", "mat_mul", "mat_vec", "mat_inv", "mat_identity", "SingularMatrixError", "kron"]


class SingularMatrixError(ArithmeticError):
    pass


def sdiv(a, b):
    if isinstance(a, (float, complex)) or isinstance(b, (float, complex)):
        return complex(a) / complex(b)
    if isinstance(a, Exact) or isinstance(b, Exact):
        ae = a if isinstance(a, Exact) else Exact.rational(a)
        be = b if isinstance(b, Exact) else Exact.rational(b)
        return as_exact_scalar(ae / be)
    return Fraction(a) / Fraction(b)


def mat_identity(n):
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            s = a[i][0] * b[0][j]
            for l in range(1, k):
                s = s + a[i][l] * b[l][j]
            row.append(as_exact_scalar(s))
        out.append(row)
    return out


def mat_vec(a, v):
    out = []
    for row in a:
        s = row[0] * v[0]
        for x, y in zip(row[1:], v[1:]):
            s = s + x * y
        out.append(as_exact_scalar(s))
    return out


def mat_inv(a):
    """Gauss-Jordan inverse over an exact field; raises SingularMatrixError."""
    n = len(a)
    m = [list(map(as_exact_scalar, row)) + ident for row, ident in zip(a, mat_identity(n))]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if m[r][col]:
                piv = r
                break
        if piv is None:
            raise SingularMatrixError("matrix is singular")
        m[col], m[piv] = m[piv], m[col]
        inv_p = sdiv(Fraction(1), m[col][col])
        m[col] = [as_exact_scalar(x * inv_p) for x in m[col]]
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [as_exact_scalar(x - f * y) for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def kron(a, b):
    """Kronecker product of exact matrices, row-major double labels."""
    na, ma = len(a), len(a[0])
    nb, mb = len(b), len(b[0])
    out = [[None] * (ma * mb) for _ in range(na * nb)]
    for i in range(na):
        for j in range(ma):
            for k in range(nb):
                for l in range(mb):
                    out[i * nb + k][j * mb + l] = as_exact_scalar(a[i][j] * b[k][l])
    return out
