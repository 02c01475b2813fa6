"""Exact arithmetic for values of the form  q + sum_p c_p * log2(p).

The clustering potential charges cross-cluster edges with terms
``4 * alpha * log2(h)``, which are irrational whenever ``h`` is not a power
of two.  Plain rationals therefore cannot represent potentials exactly.  By
unique factorization, ``{1} + {log2 p : p odd prime}`` is linearly
independent over the rationals, so every potential value has a unique
canonical form: a rational part plus a finite map from odd primes to
rational coefficients (the ``log2 2`` contribution folds into the rational
part).  Equality is exact coefficient comparison; order comparisons are
decided by high-precision interval evaluation with the exact-equality case
short-circuited.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import mpmath

_PRECISION_DPS = 60
_DECISION_EPS = mpmath.mpf("1e-45")


@lru_cache(maxsize=None)
def _factorize(h: int) -> tuple[tuple[int, int], ...]:
    assert h >= 1
    out = []
    e2 = 0
    while h % 2 == 0:
        h //= 2
        e2 += 1
    if e2:
        out.append((2, e2))
    if h > 10 ** 12:
        raise ValueError("log argument too large for exact factorization")
    d = 3
    while d * d <= h:
        if h % d == 0:
            e = 0
            while h % d == 0:
                h //= d
                e += 1
            out.append((d, e))
        d += 2
    if h > 1:
        out.append((h, 1))
    return tuple(sorted(out))


class LogRational:
    """Immutable exact value  rational + sum over odd primes of c_p*log2(p)."""

    __slots__ = ("rat", "logs")

    def __init__(self, rat: Fraction = Fraction(0), logs: dict[int, Fraction] | None = None):
        self.rat = Fraction(rat)
        self.logs = {p: c for p, c in (logs or {}).items() if c != 0}

    @staticmethod
    def log2_of(h: int, coeff: Fraction = Fraction(1)) -> "LogRational":
        """coeff * log2(h) for integer h >= 1."""
        if h < 1:
            raise ValueError("log2 argument must be >= 1")
        rat = Fraction(0)
        logs: dict[int, Fraction] = {}
        for p, e in _factorize(h):
            if p == 2:
                rat += coeff * e
            else:
                logs[p] = logs.get(p, Fraction(0)) + coeff * e
        return LogRational(rat, logs)

    def __add__(self, other):
        if isinstance(other, LogRational):
            logs = dict(self.logs)
            for p, c in other.logs.items():
                logs[p] = logs.get(p, Fraction(0)) + c
            return LogRational(self.rat + other.rat, logs)
        return LogRational(self.rat + Fraction(other), self.logs)

    __radd__ = __add__

    def __neg__(self):
        return LogRational(-self.rat, {p: -c for p, c in self.logs.items()})

    def __sub__(self, other):
        if not isinstance(other, LogRational):
            other = LogRational(Fraction(other))
        return self + (-other)

    def __rsub__(self, other):
        return LogRational(Fraction(other)) - self

    def __mul__(self, scalar):
        s = Fraction(scalar)
        return LogRational(self.rat * s, {p: c * s for p, c in self.logs.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, LogRational):
            return self.rat == other.rat and self.logs == other.logs
        return self.rat == Fraction(other) and not self.logs

    def __hash__(self):
        return hash((self.rat, tuple(sorted(self.logs.items()))))

    def _mp(self, dps: int) -> mpmath.mpf:
        with mpmath.workdps(dps):
            total = mpmath.mpf(self.rat.numerator) / self.rat.denominator
            for p, c in self.logs.items():
                total += (mpmath.mpf(c.numerator) / c.denominator) * mpmath.log(p, 2)
            return total

    def sign(self) -> int:
        if self == 0:
            return 0
        val = self._mp(_PRECISION_DPS)
        if abs(val) > _DECISION_EPS:
            return 1 if val > 0 else -1
        # escalate precision; a nonzero linear form in logs of bounded
        # height cannot hide below this magnitude at desk scale
        val = self._mp(4 * _PRECISION_DPS)
        return 1 if val > 0 else (-1 if val < 0 else 0)

    def __lt__(self, other):
        if not isinstance(other, LogRational):
            other = LogRational(Fraction(other))
        return (self - other).sign() < 0

    def __le__(self, other):
        if not isinstance(other, LogRational):
            other = LogRational(Fraction(other))
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return not self.__le__(other)

    def __ge__(self, other):
        return not self.__lt__(other)

    def __float__(self):
        return float(self._mp(30))

    def __repr__(self):
        parts = [str(self.rat)] if self.rat or not self.logs else []
        for p, c in sorted(self.logs.items()):
            parts.append(f"{c}*log2({p})")
        return " + ".join(parts) if parts else "0"


ZERO = LogRational()
