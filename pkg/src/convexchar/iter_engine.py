"""Index iteration for closed characteristics with a prescribed monodromy profile.

A profile fixes the first Maslov-type index i(y, 1) and the normal-form blocks
of the monodromy (always led by N1(1, 1)).  From these, the iterated indices
i(y, m), nullities nu(y, m), the mean index and the minimal period K(y) follow
from closed formulas.  Rotation angles may be declared rational, in which case
theta / 2pi is carried as an exact Fraction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .sp_core import BlockLabel, as_array, assemble

R_FAMILY = "R_FAMILY"
CASE3 = "CASE3"
CASE2 = "CASE2"
DOUBLE_N1MINUS = "DOUBLE_N1MINUS"
FAMILIES = (R_FAMILY, CASE3, CASE2, DOUBLE_N1MINUS)

INTEGRAL_TOL = 1e-9
HALF = Fraction(1, 2)


class ProfileError(ValueError):
    """Block multiset does not fit the declared family."""


class UnsupportedFamilyError(ValueError):
    """The family carries no index formula for the requested operation."""


class FormulaDispatchError(RuntimeError):
    pass


class JumpSearchExhausted(RuntimeError):
    def __init__(self, msg, near_miss=None):
        super().__init__(msg)
        self.near_miss = near_miss


class NearIntegerWarning(UserWarning):
    pass


# -- integer parts -----------------------------------------------------------

def floor_int(a) -> int:
    """[a] = max{k in Z : k <= a}."""
    return math.floor(a)


def ceil_int(a) -> int:
    """E(a) = min{k in Z : k >= a}."""
    return math.ceil(a)


def phi(a) -> int:
    """0 if a is an integer, else 1.

    Exact for Fractions and ints.  A float within 1e-9 of an integer is
    still treated as non-integral (the caller should have declared the angle
    rational), but a NearIntegerWarning is raised.
    """
    if isinstance(a, (int, Fraction)):
        return 0 if Fraction(a).denominator == 1 else 1
    a = float(a)
    if a == math.floor(a):
        return 0
    if abs(a - round(a)) < INTEGRAL_TOL:
        warnings.warn(
            f"{a!r} is within {INTEGRAL_TOL:g} of an integer; declare the angle rational "
            "to resolve it exactly",
            NearIntegerWarning,
            stacklevel=2,
        )
    return 1


def _ceil_exact(a) -> int:
    if isinstance(a, Fraction):
        return -((-a.numerator) // a.denominator)
    return math.ceil(a)


# -- profiles ----------------------------------------------------------------

def _turn(block: BlockLabel):
    """theta / 2pi, exact when the block carries a Fraction."""
    if block.frac is not None:
        return block.frac
    return block.theta / (2 * math.pi)


@dataclass(frozen=True)
class MonodromyProfile:
    """First Maslov-type index plus normal-form blocks of a monodromy.

    In R_FAMILY, N1(-1, 0) and N1(-1, -1) iterate like R(pi) for the index;
    they are kept as N1 labels so the nullity stays right at even m.
    """

    i1: int
    blocks: tuple
    family: str = R_FAMILY
    n: int = 3
    notes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if self.family not in FAMILIES:
            raise ProfileError(f"unknown family {self.family!r}")
        dim = sum(b.dim for b in self.blocks)
        if dim != 2 * self.n:
            raise ProfileError(f"blocks span {dim} dimensions, expected {2 * self.n}")
        lead = self.blocks[0] if self.blocks else None
        if lead is None or lead.kind != "N1" or (lead.eig, lead.b) != (1, 1):
            raise ProfileError("the first block must be N1(1, 1)")
        rest = self.blocks[1:]
        check = {
            R_FAMILY: self._check_r,
            CASE3: self._check_case3,
            CASE2: self._check_case2,
            DOUBLE_N1MINUS: self._check_double,
        }[self.family]
        check(rest)

    def _check_r(self, rest):
        for b in rest:
            if b.kind in ("R", "hyp", "quad"):
                continue
            if b.kind == "N1" and b.eig == -1 and b.b in (0, -1):
                continue
            raise ProfileError(f"block {b} not allowed in {R_FAMILY}")

    def _check_case3(self, rest):
        kinds = sorted((b.kind, b.eig, b.b) for b in rest)
        if len(rest) != 2 or kinds[0] != ("N1", -1, 1) or kinds[1][0] != "R":
            raise ProfileError(f"{CASE3} needs exactly R(theta) and N1(-1, 1) after N1(1, 1)")

    def _check_case2(self, rest):
        if not any(b.kind == "N1" and b.eig == 1 for b in rest):
            raise ProfileError(f"{CASE2} needs a trailing N1(1, b) block")

    def _check_double(self, rest):
        if len(rest) != 2 or any((b.kind, b.eig, b.b) != ("N1", 1, -1) for b in rest):
            raise ProfileError(f"{DOUBLE_N1MINUS} needs exactly two N1(1, -1) after N1(1, 1)")

    # rotation-like blocks for the index formula
    def index_turns(self) -> list:
        out = []
        for b in self.blocks[1:]:
            if b.kind == "R":
                out.append(_turn(b))
            elif b.kind == "N1" and b.eig == -1:
                out.append(HALF)
        return out

    @property
    def r(self) -> int:
        return len(self.index_turns())

    @property
    def elliptic_height(self) -> int:
        return sum(b.elliptic_dim for b in self.blocks)

    @property
    def convex_provenance(self) -> bool:
        return self.i1 >= 3

    def matrix(self) -> np.ndarray:
        return assemble(self.blocks)

    def to_json(self) -> dict:
        return {
            "i1": self.i1,
            "n": self.n,
            "family": self.family,
            "blocks": [b.to_json() for b in self.blocks],
        }


def r_profile(i1: int, turns=(), hyperbolic: Sequence[float] = (), n: int | None = None):
    """Convenience builder for an R_FAMILY profile.

    `turns` holds theta/2pi values; Fractions are kept exact.
    """
    blocks = [BlockLabel.N1(1, 1)]
    for t in turns:
        blocks.append(BlockLabel.R(0.0, frac=t) if isinstance(t, Fraction) else BlockLabel.R(2 * math.pi * t))
    blocks += [BlockLabel.hyp(lam) for lam in hyperbolic]
    if n is None:
        n = sum(b.dim for b in blocks) // 2
    return MonodromyProfile(i1, tuple(blocks), R_FAMILY, n)


def case3_profile(i1: int, turn) -> MonodromyProfile:
    rot = BlockLabel.R(0.0, frac=turn) if isinstance(turn, Fraction) else BlockLabel.R(2 * math.pi * turn)
    return MonodromyProfile(i1, (BlockLabel.N1(1, 1), rot, BlockLabel.N1(-1, 1)), CASE3, 3)


def double_profile(i1: int = 3) -> MonodromyProfile:
    m = BlockLabel.N1(1, -1)
    return MonodromyProfile(i1, (BlockLabel.N1(1, 1), m, m), DOUBLE_N1MINUS, 3)


# -- iteration ---------------------------------------------------------------

@dataclass(frozen=True)
class IterationResult:
    m: int
    i_maslov: "int | None"
    nu: int
    i_ekeland: "int | None"

    def to_json(self) -> dict:
        return {"m": self.m, "i_maslov": self.i_maslov, "nu": self.nu, "i_ekeland": self.i_ekeland}


def _block_nu(block: BlockLabel, m: int) -> int:
    """dim ker(B^m - I) for one normal-form block."""
    if block.kind == "N1":
        if block.eig == 1:
            return 2 if block.b == 0 else 1
        if m % 2:
            return 0
        return 2 if block.b == 0 else 1
    if block.kind == "R":
        return 2 * (1 - phi(m * _turn(block)))
    return 0


def _nu(p: MonodromyProfile, m: int) -> int:
    return sum(_block_nu(b, m) for b in p.blocks)


def _maslov(p: MonodromyProfile, m: int) -> int:
    if p.family == R_FAMILY:
        turns = p.index_turns()
        r = len(turns)
        return m * (p.i1 - r + 1) + sum(2 * _ceil_exact(m * t) for t in turns) - (r + 1)
    if p.family == CASE3:
        t = next(_turn(b) for b in p.blocks if b.kind == "R")
        return m * p.i1 + 2 * _ceil_exact(m * t) - 2
    if p.family == DOUBLE_N1MINUS:
        return m * (p.i1 + 1) - 1
    raise UnsupportedFamilyError(f"no index iteration formula for {p.family}")


def iterate(p: MonodromyProfile, m: int) -> IterationResult:
    """i(y, m), nu(y, m) and the Ekeland index i(y^m) = i(y, m) - n.

    CASE2 profiles get nu only; their index fields are None.
    """
    if m < 1:
        raise ValueError(f"iterate needs m >= 1, got {m}")
    nu = _nu(p, m)
    if p.family == CASE2:
        return IterationResult(m, None, nu, None)
    if _maslov(p, 1) != p.i1:
        raise FormulaDispatchError(f"{p.family} formula does not reproduce i1={p.i1} at m=1")
    i = _maslov(p, m)
    return IterationResult(m, i, nu, i - p.n)


def iterate_many(p: MonodromyProfile, m_max: int) -> list:
    return [iterate(p, m) for m in range(1, m_max + 1)]


def nu_from_matrix(m, power: int, tol: float = 1e-6) -> int:
    """Numerical dim ker(M^power - I), with singular values below tol counted as zero.

    Since x^p - 1 has simple roots, ker(M^p - I) is the direct sum of the
    kernels of M - w I over the p-th roots of unity w.  Counting those
    avoids forming M^p, whose hyperbolic part overflows the SVD's
    absolute accuracy for large p.
    """
    a = as_array(m).astype(complex)
    eye = np.eye(a.shape[0])
    lam = np.linalg.eigvals(a)
    total = 0
    close = []
    for k in range(power):
        w = np.exp(2j * math.pi * k / power)
        if np.min(np.abs(lam - w)) > math.sqrt(tol):
            continue
        s = np.linalg.svd(a - w * eye, compute_uv=False)
        close += list(s[(s >= tol / 10) & (s <= tol * 10)])
        total += int(np.sum(s < tol))
    if close:
        warnings.warn(
            f"singular values {close} are close to the kernel threshold {tol:g}",
            NearIntegerWarning,
            stacklevel=2,
        )
    return total


# -- mean index and period ---------------------------------------------------

@dataclass(frozen=True)
class MeanIndex:
    value: float
    exact: "Fraction | None" = None

    @property
    def rational(self) -> bool:
        return self.exact is not None

    def __float__(self):
        return self.value


def _rational_turn(t, q_max=10_000, tol=1e-10):
    if isinstance(t, Fraction):
        return t
    v = rationality_test(2 * float(t), q_max, tol)
    return v.value / 2 if v.rational else None


def mean_index(p: MonodromyProfile) -> MeanIndex:
    """Maslov-type mean index lim i(y, m)/m (equal to the Ekeland one).

    R_FAMILY: i1 - r + 1 + sum theta_j/pi; CASE3: i1 + theta/pi;
    DOUBLE_N1MINUS: i1 + 1.
    """
    if p.family == CASE2:
        raise UnsupportedFamilyError(f"no mean index formula for {CASE2}")
    if p.family == DOUBLE_N1MINUS:
        return MeanIndex(float(p.i1 + 1), Fraction(p.i1 + 1))
    if p.family == CASE3:
        turns = [_turn(b) for b in p.blocks if b.kind == "R"]
        base = p.i1
    else:
        turns = p.index_turns()
        base = p.i1 - len(turns) + 1
    value = base + sum(2 * float(t) for t in turns)
    exact_turns = [_rational_turn(t) for t in turns]
    exact = None
    if all(t is not None for t in exact_turns):
        exact = base + sum(2 * t for t in exact_turns)
    return MeanIndex(value, exact)


def _nu_period(p: MonodromyProfile) -> int:
    period = 1
    for b in p.blocks:
        if b.kind == "N1" and b.eig == -1:
            period = math.lcm(period, 2)
        elif b.kind == "R":
            t = _turn(b)
            if isinstance(t, Fraction):
                period = math.lcm(period, t.denominator)
    return period


def minimal_period_K(p: MonodromyProfile) -> int:
    """Smallest K with nu(y^{m+K}) = nu(y^m) and i(y^{m+K}) - i(y^m) even for all m.

    Checked over two full periods of the nullity pattern, which suffices
    because both conditions are periodic with period dividing 2 * lcm(denominators).
    Irrational angles never produce degenerate iterates and drop out.
    """
    if p.family == CASE2:
        raise UnsupportedFamilyError(f"{CASE2} has no index formula; K needs index parity")
    span = 2 * _nu_period(p)
    seq = [iterate(p, m) for m in range(1, 3 * span + 1)]
    for k in range(1, 2 * span + 1):
        if all(
            seq[m + k].nu == seq[m].nu and (seq[m + k].i_ekeland - seq[m].i_ekeland) % 2 == 0
            for m in range(len(seq) - k)
        ):
            return k
    raise FormulaDispatchError("no period found; the profile has an unexpected structure")


# -- rationality -------------------------------------------------------------

@dataclass(frozen=True)
class RationalityVerdict:
    rational: bool
    value: "Fraction | None"
    q_max: int

    def __str__(self):
        if self.rational:
            return f"rational({self.value})"
        return f"no-rational-below({self.q_max})"


def rationality_test(x: float, q_max: int = 10_000, tol: float = 1e-10) -> RationalityVerdict:
    """First continued-fraction convergent p/q with |x - p/q| < tol/q^2, q <= q_max.

    A negative verdict only excludes denominators up to q_max.
    """
    if q_max < 1 or tol <= 0:
        raise ValueError("q_max must be >= 1 and tol > 0")
    if isinstance(x, Fraction):
        if x.denominator <= q_max:
            return RationalityVerdict(True, x, q_max)
        x = float(x)
    target = Fraction(float(x))
    h_prev, h = 1, math.floor(target)
    k_prev, k = 0, 1
    frac = target - h
    while True:
        if k > q_max:
            break
        cand = Fraction(h, k)
        if abs(float(target - cand)) < tol / k**2:
            return RationalityVerdict(True, cand, q_max)
        if frac == 0:
            break
        rest = 1 / frac
        a = math.floor(rest)
        frac = rest - a
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
    return RationalityVerdict(False, None, q_max)


# -- monotonicity and common index jumps ------------------------------------

@dataclass(frozen=True)
class MonotonicityReport:
    holds: bool
    m_max: int
    first_violation: "int | None" = None
    detail: str = ""


def index_monotonicity_check(p: MonodromyProfile, m_max: int) -> MonotonicityReport:
    """i(y, m) < i(y, m+1) and i(y, m) + nu(y, m) <= i(y, m+1) - 1 for m <= m_max."""
    seq = iterate_many(p, m_max + 1)
    for a, b in zip(seq, seq[1:]):
        if not a.i_maslov < b.i_maslov:
            return MonotonicityReport(False, m_max, a.m, f"i({a.m})={a.i_maslov} >= i({b.m})={b.i_maslov}")
        if not a.i_maslov + a.nu <= b.i_maslov - 1:
            return MonotonicityReport(
                False, m_max, a.m, f"i({a.m})+nu({a.m})={a.i_maslov + a.nu} > i({b.m})-1={b.i_maslov - 1}"
            )
    return MonotonicityReport(True, m_max)


@dataclass(frozen=True)
class JumpCertificate:
    T: int
    m_list: tuple
    checks: tuple  # per profile: dict of four booleans

    @property
    def valid(self) -> bool:
        return all(all(c.values()) for c in self.checks)

    def to_json(self) -> dict:
        return {"T": self.T, "m_list": list(self.m_list), "checks": [dict(c) for c in self.checks]}


JUMP_CHECKS = ("lower_2m", "upper_2m", "above_2m", "below_2m")


def _check_jump(p: MonodromyProfile, T: int, m: int, window: int, cache: dict) -> dict:
    def it(k):
        if k not in cache:
            cache[k] = iterate(p, k)
        return cache[k]

    at = it(2 * m)
    out = {
        "lower_2m": at.i_maslov >= 2 * T - 3,
        "upper_2m": at.i_maslov + at.nu - 1 <= 2 * T + 1,
    }
    out["above_2m"] = out["lower_2m"] and out["upper_2m"] and all(
        it(2 * m + k).i_maslov >= 2 * T + 3 for k in range(1, window + 1)
    )
    out["below_2m"] = out["above_2m"] and all(
        it(2 * m - k).i_maslov + it(2 * m - k).nu - 1 <= 2 * T - 3 for k in range(1, 2 * m)
    )
    return out


def common_jump_search(profiles, t_max: int, window: int = 8) -> JumpCertificate:
    """Smallest T <= t_max with iterates 2m_j satisfying the four jump inequalities.

    For each profile, m_j is tried at round(T / mean index) and its two
    neighbours.  Every inequality is checked by direct calls to `iterate`:
    i(2m) >= 2T-3, i(2m)+nu(2m)-1 <= 2T+1, i(2m+k) >= 2T+3 for 1 <= k <= window
    (index monotonicity covers larger k), and i(2m-k)+nu(2m-k)-1 <= 2T-3 for
    all 1 <= k < 2m.
    """
    profiles = list(profiles)
    if not profiles:
        raise ValueError("common_jump_search needs at least one profile")
    means = [mean_index(p).value for p in profiles]
    caches = [dict() for _ in profiles]
    best = None
    for T in range(1, t_max + 1):
        chosen = []
        for p, mu, cache in zip(profiles, means, caches):
            hit = None
            seed = max(1, round(T / mu))
            for m in dict.fromkeys((seed, seed - 1, seed + 1)):
                if m < 1:
                    continue
                checks = _check_jump(p, T, m, window, cache)
                if all(checks.values()):
                    hit = (m, checks)
                    break
                score = sum(checks.values())
                if best is None or score > best[0]:
                    best = (score, T, m, checks)
            if hit is None:
                break
            chosen.append(hit)
        else:
            cert = JumpCertificate(T, tuple(m for m, _ in chosen), tuple(c for _, c in chosen))
            return cert
        if T % 64 == 0:
            # iterates far below the current T are never revisited
            for cache in caches:
                if len(cache) > 50_000:
                    cache.clear()
    raise JumpSearchExhausted(
        f"no common index jump found for T <= {t_max}",
        near_miss=None if best is None else {"T": best[1], "m": best[2], "checks": best[3]},
    )


def verify_certificate(profiles, cert: JumpCertificate, window: int = 8) -> bool:
    """Re-evaluate every inequality of a certificate from scratch."""
    return all(
        all(_check_jump(p, cert.T, m, window, {}).values()) for p, m in zip(profiles, cert.m_list)
    )

