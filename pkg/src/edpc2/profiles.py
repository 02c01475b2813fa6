"""Named parameter profiles.

Two presets are shipped.  The ``paper`` preset reproduces the asymptotic
parameter relations (meant for symbolic arithmetic checks; the regime is far
beyond desk scale).  The ``desk`` preset keeps the structural relations the
algorithms actually rely on (``r = 8 * cmg_rounds``, ``gamma > r``) while
replacing the asymptotic constants by small workable values.  Profiles can
also be loaded from ``key=value`` files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from fractions import Fraction

from .errors import InvalidInstance


@dataclass(frozen=True)
class ParamProfile:
    """All named constants used by the pipeline.

    ``alpha`` is the well-linked decomposition threshold, ``alpha_wl`` the
    certification level (``alpha / alpha_arv``).  ``k1`` is the large-cluster
    boundary threshold.  ``k2 .. k6`` and ``k_star`` size the iteration's
    intermediate objects; at desk scale they are floors (``max(1, ...)`` is
    applied where the construction would otherwise starve).
    """

    name: str = "desk"
    cmg_rounds: int = 1                      # clusters consumed by the cut-matching game
    gamma: int = 10                          # sets in the random partition
    gamma_prime: int = 8                     # leaf threshold separating the two tree cases
    r: int = 8                               # size of the chained cluster family
    alpha: Fraction = Fraction(1, 64)
    alpha_arv: Fraction = Fraction(1)        # effective sparsest-cut oracle factor
    k1: int = 16
    k_prime: int = 2                         # direct-connectivity threshold for the cluster graph
    k2: int = 24                             # bundle size cap per tree edge
    k2_min: int = 2                          # bundles below this abort the iteration
    k3: int = 2
    k4: int = 4
    k5: int = 2
    k6: int = 1
    k_star: int = 1
    q: int = 8                               # default grouping granularity (even)
    step2_q: int = 4                         # terminal grouping size in the connection step
    lp_epsilon: float = 0.05
    oracle: str = "exact"                    # exact | spectral
    exact_wl_limit: int = 18                 # brute-force well-linkedness size limit
    split_verify_limit: int = 60             # full pairwise flow verification limit
    rep_retry_factor: int = 200              # representative selection retries = factor * r
    partition_retry: int = 400               # random gamma-partition resampling budget
    max_phase_iterations: int = 400
    route_retries: int = 40                  # expander-routing restarts

    @property
    def alpha_wl(self) -> Fraction:
        return self.alpha / self.alpha_arv

    @property
    def eta(self) -> int:
        """Integral congestion bound standing in for 1/alpha flows."""
        return math.ceil(1 / self.alpha)

    def validate(self, strict: bool = False) -> None:
        """Check consistency.  ``strict`` additionally enforces the
        asymptotic relations (k1 > 4/alpha etc.) which desk-scale presets
        deliberately relax."""
        if self.q % 2 != 0 or self.q < 2:
            raise InvalidInstance("q must be a positive even integer")
        if not (0 < self.alpha <= 1):
            raise InvalidInstance("alpha must lie in (0, 1]")
        if self.r != 8 * self.cmg_rounds:
            raise InvalidInstance("r must equal 8 * cmg_rounds")
        if self.gamma < self.r + 2:
            raise InvalidInstance("gamma must exceed r + 1")
        if strict:
            if self.k1 <= 4 / self.alpha:
                raise InvalidInstance("paper regime requires k1 > 4/alpha")
            if self.gamma_prime ** 4 != self.gamma:
                raise InvalidInstance("paper regime requires gamma_prime = gamma^(1/4)")

    def replace(self, **kw) -> "ParamProfile":
        return replace(self, **kw)

    def describe(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = str(v) if isinstance(v, Fraction) else v
        out["alpha_wl"] = str(self.alpha_wl)
        return out


def desk_profile() -> ParamProfile:
    p = ParamProfile()
    p.validate()
    return p


def paper_profile(k: int) -> ParamProfile:
    """Asymptotic preset for a (power-of-two) pair count ``k``.

    Only meaningful for astronomically large ``k``; used by the symbolic
    arithmetic tests, never for actual runs.
    """
    if k < 4:
        raise InvalidInstance("paper profile needs k >= 4")
    log_k = max(1, math.ceil(math.log2(k)))
    cmg = log_k * log_k
    gamma = (2 ** 24) * cmg ** 4
    gamma_prime = round(gamma ** 0.25)
    alpha = Fraction(1, (2 ** 11) * gamma * log_k)
    alpha_arv = Fraction(max(1, math.isqrt(log_k)))
    log_gamma = max(1, math.ceil(math.log2(gamma)))
    k1 = k // (192 * gamma ** 3 * log_gamma)
    k_prime = k1 // (6 * gamma ** 2)
    alpha_wl = alpha / alpha_arv
    # gamma = 2^24 * cmg^4 so sqrt(gamma) = 2^12 * cmg^2 exactly
    gamma_35 = gamma ** 3 * (2 ** 12) * cmg ** 2
    k2 = int(Fraction(k1) * alpha * alpha_wl / gamma_35)
    r = 8 * cmg
    k3 = int(Fraction(k_prime) * alpha * alpha_wl / r ** 3)
    k4 = k2 // (r * r)
    k5 = int(alpha_wl ** 2 * k2)
    k6 = int(alpha_wl ** 2 * k4)
    q = int(4 / alpha)
    q += q % 2
    prof = ParamProfile(
        name="paper",
        cmg_rounds=cmg,
        gamma=gamma,
        gamma_prime=gamma_prime,
        r=r,
        alpha=alpha,
        alpha_arv=alpha_arv,
        k1=k1,
        k_prime=k_prime,
        k2=k2,
        k3=k3,
        k4=k4,
        k5=k5,
        k6=max(k6, 0),
        k_star=max(k6 // 6, 0),
        q=q,
    )
    return prof


def parse_profile_file(text: str) -> ParamProfile:
    """TOML-like ``key=value`` overrides applied to the desk preset."""
    prof = desk_profile()
    overrides = {}
    valid = {f.name: f.type for f in fields(ParamProfile)}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInstance(f"profile line {lineno}: expected key=value")
        key, val = (x.strip() for x in line.split("=", 1))
        if key not in valid:
            raise InvalidInstance(f"profile line {lineno}: unknown key {key!r}")
        current = getattr(prof, key)
        if isinstance(current, Fraction):
            overrides[key] = Fraction(val)
        elif isinstance(current, bool):
            overrides[key] = val.lower() in ("1", "true", "yes")
        elif isinstance(current, int):
            overrides[key] = int(val)
        elif isinstance(current, float):
            overrides[key] = float(val)
        else:
            overrides[key] = val
    prof = prof.replace(**overrides)
    prof.validate()
    return prof


def load_profile(spec: str) -> ParamProfile:
    """Resolve a ``--profile`` argument: ``desk``, ``paper`` or ``file:<path>``."""
    if spec == "desk":
        return desk_profile()
    if spec == "paper":
        # concrete paper-regime instantiation at a symbolic k
        return paper_profile(2 ** 500)
    if spec.startswith("file:"):
        with open(spec[5:], "r", encoding="utf-8") as fh:
            return parse_profile_file(fh.read())
    raise InvalidInstance(f"unknown profile {spec!r}")


# ---------------------------------------------------------------------------
# Claim arithmetic under the paper relations (symbolic checks)
# ---------------------------------------------------------------------------

def partition_min_drop(alpha: Fraction, k1: int) -> Fraction:
    """Guaranteed potential drop of the large-cluster partition action:
    the boundary term contributes at least 2*alpha*k1 and the new cut edges
    cost at most alpha*k1."""
    return Fraction(alpha) * k1


def separate_min_drop(k1: int, phi_cap: Fraction) -> Fraction:
    """Guaranteed potential drop of the separation action: the separated
    cluster's boundary loses k1 units while the new cut pays at most
    (1 + 2*phi_cap) per edge on fewer than k1/2 edges."""
    per_edge = 1 + 2 * Fraction(phi_cap)
    return k1 - per_edge * Fraction(k1 - 1, 2)


def phi_value_cap(alpha: Fraction, k1: int) -> Fraction:
    """Upper bound 8*alpha*log2(k1) on the vertex-side potential values
    (valid once k1 >= 4; log2 rounded up for safety)."""
    return 8 * Fraction(alpha) * max(1, math.ceil(math.log2(max(2, k1))))
