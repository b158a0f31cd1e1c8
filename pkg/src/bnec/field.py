"""Finite field arithmetic for prime fields F_p and binary extensions GF(2^m).

Elements are plain integers in ``[0, q)``.  For GF(2^m) the integer is the
bit pattern of the polynomial (bit ``i`` is the coefficient of ``x**i``).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import DivideByZero, NotPrimePower, TooLarge

MAX_Q = 1 << 16
_FULL_TABLE_Q = 256  # full q*q multiplication table below this size


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _pmod(a: int, b: int) -> int:
    """Remainder of binary polynomial division a mod b."""
    db = b.bit_length()
    while a.bit_length() >= db:
        a ^= b << (a.bit_length() - db)
    return a


def is_irreducible(poly: int) -> bool:
    """Trial division by every polynomial of degree 1..deg/2 over F_2."""
    deg = poly.bit_length() - 1
    if deg < 1:
        return False
    for d in range(2, 1 << (deg // 2 + 1)):
        if _pmod(poly, d) == 0:
            return False
    return True


@lru_cache(maxsize=None)
def default_poly(m: int) -> int:
    """Smallest irreducible polynomial of degree m (as an integer)."""
    for poly in range(1 << m, 1 << (m + 1)):
        if is_irreducible(poly):
            return poly
    raise AssertionError(f"no irreducible polynomial of degree {m}")


def poly_mulmod(a: int, b: int, poly: int) -> int:
    """Schoolbook carry-less multiply followed by reduction."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return _pmod(r, poly)


def _factor_prime_power(q: int) -> tuple[int, int]:
    if q < 2:
        raise NotPrimePower(f"q={q} is not a prime power")
    if is_prime(q):
        return q, 1
    if q & (q - 1) == 0:
        return 2, q.bit_length() - 1
    raise NotPrimePower(f"q={q} is neither prime nor a power of two")


def is_supported_size(q: int) -> bool:
    return 2 <= q <= MAX_Q and (is_prime(q) or q & (q - 1) == 0)


def next_supported_size(n: int) -> int:
    """Smallest supported field size >= n."""
    q = max(n, 2)
    while not is_supported_size(q):
        q += 1
        if q > MAX_Q:
            raise TooLarge(f"no supported field size >= {n} below {MAX_Q}")
    return q


class FieldSpec:
    """The field F_q with table-backed arithmetic.  Immutable after construction."""

    __slots__ = ("q", "p", "m", "poly", "_exp", "_log", "_inv", "_mt", "_np_exp", "_np_log")

    def __init__(self, q: int, poly: int | None = None):
        if q > MAX_Q:
            raise TooLarge(f"q={q} exceeds {MAX_Q}")
        p, m = _factor_prime_power(q)
        self.q, self.p, self.m = q, p, m
        self._mt = None
        if p == 2 and m > 1:
            poly = default_poly(m) if poly is None else poly
            if poly.bit_length() - 1 != m or not is_irreducible(poly):
                raise ValueError(f"generator polynomial {poly:#x} is not irreducible of degree {m}")
            self.poly = poly
            self._build_log_tables()
            self._inv = [0] + [self._exp[(q - 1 - self._log[a]) % (q - 1)] for a in range(1, q)]
            if q <= _FULL_TABLE_Q:
                self._mt = [[self._mul_log(a, b) for b in range(q)] for a in range(q)]
        else:
            self.poly = None
            self._exp = self._log = None
            self._inv = [0] + [pow(a, q - 2, q) for a in range(1, q)]
        self._np_exp = self._np_log = None

    def _build_log_tables(self):
        q = self.q
        for g in range(2, q):
            exp = [0] * (2 * q)
            log = [0] * q
            x = 1
            for i in range(q - 1):
                if i and x == 1:
                    break
                exp[i] = x
                log[x] = i
                x = poly_mulmod(x, g, self.poly)
            else:
                for i in range(q - 1, 2 * q):
                    exp[i] = exp[i - (q - 1)]
                self._exp, self._log = exp, log
                return
        raise AssertionError("no primitive element found")

    def _mul_log(self, a, b):
        if a == 0 or b == 0:
            return 0
        return self._exp[self._log[a] + self._log[b]]

    def __repr__(self):
        if self.poly is None:
            return f"FieldSpec(q={self.q})"
        return f"FieldSpec(q={self.q}, poly={self.poly:#x})"

    def __eq__(self, other):
        return isinstance(other, FieldSpec) and (self.q, self.poly) == (other.q, other.poly)

    def __hash__(self):
        return hash((self.q, self.poly))

    @property
    def is_binary(self) -> bool:
        return self.p == 2

    @property
    def characteristic(self) -> int:
        return self.p

    @property
    def degree(self) -> int:
        return self.m

    def elements(self) -> range:
        return range(self.q)

    def check(self, a: int) -> int:
        if not 0 <= a < self.q:
            raise ValueError(f"{a} is not an element of F_{self.q}")
        return a

    # scalar arithmetic
    def add(self, a: int, b: int) -> int:
        if self.p == 2:
            return a ^ b
        s = a + b
        return s - self.q if s >= self.q else s

    def sub(self, a: int, b: int) -> int:
        if self.p == 2:
            return a ^ b
        s = a - b
        return s + self.q if s < 0 else s

    def neg(self, a: int) -> int:
        if self.p == 2 or a == 0:
            return a
        return self.q - a

    def mul(self, a: int, b: int) -> int:
        if self._mt is not None:
            return self._mt[a][b]
        if self._exp is None:
            return a * b % self.q
        if a == 0 or b == 0:
            return 0
        return self._exp[self._log[a] + self._log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise DivideByZero("inverse of zero")
        return self._inv[a]

    def div(self, a: int, b: int) -> int:
        if b == 0:
            raise DivideByZero(f"{a} / 0")
        return self.mul(a, self._inv[b])

    def pow(self, a: int, n: int) -> int:
        r = 1
        for _ in range(n):
            r = self.mul(r, a)
        return r

    # vector helpers on plain sequences
    def dot(self, xs, ys) -> int:
        acc = 0
        mul = self.mul
        if self.p == 2:
            for x, y in zip(xs, ys):
                if x and y:
                    acc ^= mul(x, y)
            return acc
        for x, y in zip(xs, ys):
            acc += x * y
        return acc % self.q

    def vadd(self, xs, ys) -> tuple:
        if self.p == 2:
            return tuple(x ^ y for x, y in zip(xs, ys))
        q = self.q
        return tuple((x + y) % q for x, y in zip(xs, ys))

    def vsub(self, xs, ys) -> tuple:
        if self.p == 2:
            return tuple(x ^ y for x, y in zip(xs, ys))
        q = self.q
        return tuple((x - y) % q for x, y in zip(xs, ys))

    def vscale(self, c: int, xs) -> tuple:
        mul = self.mul
        return tuple(mul(c, x) for x in xs)

    # numpy helpers (integer arrays of element codes)
    def _np_tables(self):
        if self._np_exp is None:
            self._np_exp = np.asarray(self._exp, dtype=np.int64)
            self._np_log = np.asarray(self._log, dtype=np.int64)
        return self._np_exp, self._np_log

    def np_mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self._exp is None:
            return a * b % self.q
        exp, log = self._np_tables()
        out = exp[log[a] + log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def np_add(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.p == 2:
            return a ^ b
        return (a + b) % self.q

    def np_neg(self, a):
        a = np.asarray(a, dtype=np.int64)
        if self.p == 2:
            return a
        return (-a) % self.q

    def np_sub(self, a, b):
        return self.np_add(a, self.np_neg(b))

    def np_sum(self, a, axis=-1):
        a = np.asarray(a, dtype=np.int64)
        if self.p == 2:
            return np.bitwise_xor.reduce(a, axis=axis)
        return a.sum(axis=axis) % self.q

    def np_matvec(self, mat, vec):
        """Product of an (r, n) array with a length-n vector (or (N, n) batch -> (N, r))."""
        mat = np.asarray(mat, dtype=np.int64)
        vec = np.asarray(vec, dtype=np.int64)
        if vec.ndim == 1:
            return self.np_sum(self.np_mul(mat, vec[None, :]), axis=1)
        return self.np_sum(self.np_mul(mat[None, :, :], vec[:, None, :]), axis=2)


def make_field(q: int, poly: int | None = None) -> FieldSpec:
    """Build F_q; raises NotPrimePower or TooLarge for unsupported sizes."""
    return FieldSpec(q, poly)


_OPS = {"add", "sub", "mul", "div", "inv", "neg"}


def field_arith(spec: FieldSpec, op: str, a: int, b: int | None = None) -> int:
    if op not in _OPS:
        raise ValueError(f"unknown field operation {op!r}")
    spec.check(a)
    if op in ("inv", "neg"):
        return getattr(spec, op)(a)
    if b is None:
        raise ValueError(f"{op} needs two operands")
    spec.check(b)
    return getattr(spec, op)(a, b)
