"""Counting layer: critical type numbers, chi-hat, the mean index identity and
equivariant Morse counts against the Betti numbers of CP^infinity.

Critical type numbers k_l(y^m) are user data (they come from a variational
problem that is not modelled here); this module checks them against the
structural rules they must obey and does exact bookkeeping with them.
All Euler-characteristic arithmetic uses Fractions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import iter_engine as ie


class StructuralError(ValueError):
    pass


class InvalidKTypesError(ValueError):
    def __init__(self, violations):
        super().__init__("invalid critical type numbers: " + "; ".join(str(v) for v in violations))
        self.violations = list(violations)


class MissingKTypesError(ValueError):
    pass


class UnknownScenarioError(ValueError):
    pass


# -- critical type vectors ---------------------------------------------------

@dataclass(frozen=True)
class CriticalTypeVector:
    """k_l(y^m) for m = 1..K; `k[m-1][l]` is k_l(y^m), missing entries are 0."""

    nu: tuple
    k: tuple

    def __post_init__(self):
        object.__setattr__(self, "nu", tuple(int(v) for v in self.nu))
        object.__setattr__(self, "k", tuple(tuple(int(x) for x in row) for row in self.k))
        if len(self.nu) != len(self.k):
            raise StructuralError(f"{len(self.nu)} nullities but {len(self.k)} k-rows")
        if not self.nu:
            raise StructuralError("empty critical type vector")

    @property
    def K(self) -> int:
        return len(self.nu)

    def at(self, m: int) -> tuple:
        """k-row of iterate m, extended periodically with period K."""
        return self.k[(m - 1) % self.K]

    def kl(self, m: int, l: int) -> int:
        row = self.at(m)
        return row[l] if 0 <= l < len(row) else 0

    def to_json(self) -> dict:
        return {"nu": list(self.nu), "k": [list(r) for r in self.k]}


@dataclass(frozen=True)
class Violation:
    m: int
    rule: str
    detail: str

    def __str__(self):
        return f"m={self.m} [{self.rule}] {self.detail}"


def nondegenerate_row(i_m: int, i_1: int) -> tuple:
    """k-row of a non-degenerate iterate: k_0 = 1 exactly when i(y^m) - i(y) is even."""
    return (1,) if (i_m - i_1) % 2 == 0 else (0,)


def _row_violations(m, nu, row, parity_odd) -> list:
    out = []
    row = list(row)
    if any(v < 0 for v in row):
        out.append(Violation(m, "support", "negative entry"))
    outside = [l for l, v in enumerate(row) if v and l >= nu]
    if outside:
        out.append(Violation(m, "support", f"k_l nonzero for l={outside} outside [0, {nu - 1}]"))
    row = row[:nu] + [0] * max(0, nu - len(row))
    k0, top = row[0], row[nu - 1]
    if k0 not in (0, 1):
        out.append(Violation(m, "endpoint", f"k_0={k0} not in {{0, 1}}"))
    if top not in (0, 1):
        out.append(Violation(m, "endpoint", f"k_{nu - 1}={top} not in {{0, 1}}"))
    if nu > 1 and k0 == 1 and any(row[1:nu]):
        out.append(Violation(m, "i", "k_0 = 1 but some k_l with 1 <= l <= nu-1 is nonzero"))
    if nu > 1 and top == 1 and any(row[: nu - 1]):
        out.append(Violation(m, "ii", f"k_{nu - 1} = 1 but some k_l with l <= nu-2 is nonzero"))
    if nu > 2 and any(row[1 : nu - 1]) and (k0 or top):
        out.append(Violation(m, "iii", "interior k_l nonzero together with k_0 or k_{nu-1}"))
    if nu <= 3 and sum(1 for v in row if v) > 1:
        out.append(Violation(m, "iv", f"nu={nu} <= 3 but {sum(1 for v in row if v)} k_l are nonzero"))
    if parity_odd and k0:
        out.append(Violation(m, "v", "i(y^m) - i(y) odd but k_0 != 0"))
    if nu == 1 and not parity_odd and k0 != 1:
        out.append(Violation(m, "nondegenerate", "non-degenerate iterate with even index shift needs k_0 = 1"))
    return out


def validate_ktypes(ct: CriticalTypeVector, index_sequence: Sequence) -> list:
    """All rule violations of `ct` against i(y^m), nu(y^m) for m = 1..K.

    `index_sequence` holds IterationResults (Ekeland indices are used).
    Returns an empty list when `ct` is admissible.
    """
    seq = list(index_sequence)
    if len(seq) != ct.K:
        raise StructuralError(f"critical type vector has K={ct.K} rows, index sequence has {len(seq)}")
    i1 = seq[0].i_ekeland
    out = []
    for m, (res, nu, row) in enumerate(zip(seq, ct.nu, ct.k), start=1):
        if res.nu != nu:
            raise StructuralError(f"m={m}: nullity {nu} in the k-data but {res.nu} from the index sequence")
        out += _row_violations(m, nu, row, (res.i_ekeland - i1) % 2 == 1)
    return out


def nondegenerate_ktypes(index_sequence: Sequence) -> CriticalTypeVector:
    seq = list(index_sequence)
    if any(r.nu != 1 for r in seq):
        raise StructuralError("some iterate is degenerate; its k-data must be supplied")
    i1 = seq[0].i_ekeland
    return CriticalTypeVector(tuple(1 for _ in seq), tuple(nondegenerate_row(r.i_ekeland, i1) for r in seq))


def admissible_rows(nu: int, parity_odd: bool, k_max: int) -> list:
    """Every k-row for one iterate that passes all rules, interior entries up to k_max."""
    out = []
    ranges = [range(2)] + [range(k_max + 1)] * max(0, nu - 2) + ([range(2)] if nu > 1 else [])
    for row in itertools.product(*ranges):
        if not _row_violations(0, nu, row, parity_odd):
            out.append(tuple(row))
    return out


# -- chi-hat -----------------------------------------------------------------

@dataclass(frozen=True)
class ChiHatResult:
    value: Fraction
    K: int

    def to_json(self) -> dict:
        return {"value": str(self.value), "float": float(self.value), "K": self.K}


def chi_hat(ct: CriticalTypeVector, index_sequence: Sequence) -> ChiHatResult:
    """(1/K) sum over m <= K and l of (-1)^(i(y^m) + l) k_l(y^m), exactly."""
    bad = validate_ktypes(ct, index_sequence)
    if bad:
        raise InvalidKTypesError(bad)
    total = 0
    for res, row in zip(index_sequence, ct.k):
        for l, v in enumerate(row):
            total += (-1) ** ((res.i_ekeland + l) % 2) * v
    return ChiHatResult(Fraction(total, ct.K), ct.K)


def chi_hat_profile(p: ie.MonodromyProfile, degenerate_rows: "dict | None" = None) -> ChiHatResult:
    """chi-hat over one minimal period K(y) of a profile.

    Non-degenerate iterates use the standard rule; rows for degenerate
    iterates m <= K come from `degenerate_rows[m]`.
    """
    K = ie.minimal_period_K(p)
    seq = ie.iterate_many(p, K)
    i1 = seq[0].i_ekeland
    rows = []
    for r in seq:
        if r.nu == 1:
            rows.append(nondegenerate_row(r.i_ekeland, i1))
        elif degenerate_rows and r.m in degenerate_rows:
            rows.append(tuple(degenerate_rows[r.m]))
        else:
            raise MissingKTypesError(f"iterate m={r.m} is degenerate (nu={r.nu}); supply its k-row")
    return chi_hat(CriticalTypeVector(tuple(r.nu for r in seq), tuple(rows)), seq)


def chi_values(p: ie.MonodromyProfile, k_max: int = 8) -> dict:
    """Every attainable chi-hat of `p` over admissible k-data, mapped to the k-rows producing it.

    Degenerate iterates range over `admissible_rows` with interior entries
    up to k_max; the rest follow the non-degenerate rule.
    """
    K = ie.minimal_period_K(p)
    seq = ie.iterate_many(p, K)
    i1 = seq[0].i_ekeland
    choices = []
    for r in seq:
        odd = (r.i_ekeland - i1) % 2 == 1
        choices.append([nondegenerate_row(r.i_ekeland, i1)] if r.nu == 1 else admissible_rows(r.nu, odd, k_max))
    out: dict = {}
    for rows in itertools.product(*choices):
        ct = CriticalTypeVector(tuple(r.nu for r in seq), rows)
        val = chi_hat(ct, seq).value
        out.setdefault(val, []).append({r.m: row for r, row in zip(seq, rows) if r.nu > 1})
    return out


def forced_ktypes(p: ie.MonodromyProfile, target, k_max: int = 8) -> list:
    """k-rows at degenerate iterates that make chi-hat equal `target`."""
    return chi_values(p, k_max).get(Fraction(target), [])


# -- mean index identity -----------------------------------------------------

@dataclass(frozen=True)
class IdentityRow:
    chi: "Fraction | float"
    mean: "Fraction | float"
    ratio: "Fraction | float"


@dataclass(frozen=True)
class IdentityReport:
    rows: tuple
    total: "Fraction | float"
    residual: "Fraction | float"
    exact: bool

    def to_json(self) -> dict:
        fmt = (lambda v: {"value": str(v), "float": float(v)}) if self.exact else float
        return {
            "rows": [{"chi_hat": fmt(r.chi), "mean_index": fmt(r.mean), "ratio": fmt(r.ratio)} for r in self.rows],
            "total": fmt(self.total),
            "residual": fmt(self.residual),
            "exact": self.exact,
        }


def _as_exact(v):
    if isinstance(v, ChiHatResult):
        return v.value
    if isinstance(v, ie.MeanIndex):
        return v.exact if v.exact is not None else v.value
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    return float(v)


def identity_check(orbits: Iterable) -> IdentityReport:
    """sum chi_hat / mean_index over orbits, compared with 1/2.

    Exact (Fractions) when every input is rational; floating otherwise.
    The residual is reported, never thresholded.
    """
    pairs = [(_as_exact(c), _as_exact(m)) for c, m in orbits]
    for _, m in pairs:
        if m <= 0:
            raise ValueError(f"mean index must be positive, got {m}")
    exact = all(isinstance(c, Fraction) and isinstance(m, Fraction) for c, m in pairs)
    rows = []
    for c, m in pairs:
        if exact:
            rows.append(IdentityRow(c, m, c / m))
        else:
            rows.append(IdentityRow(float(c), float(m), float(c) / float(m)))
    if exact:
        total = sum((r.ratio for r in rows), Fraction(0))
        residual = abs(total - Fraction(1, 2))
    else:
        total = math.fsum(r.ratio for r in rows)
        residual = abs(total - 0.5)
    return IdentityReport(tuple(rows), total, residual, exact)


# -- Morse counts ------------------------------------------------------------

def betti(q: int) -> int:
    """Betti numbers of CP^infinity: 1 in even non-negative degrees."""
    return 1 if q >= 0 and q % 2 == 0 else 0


@dataclass(frozen=True)
class MorseTable:
    q_max: int
    M: tuple
    b: tuple
    contributions: tuple = field(default=(), compare=False)  # per orbit: tuple of (m, degree, dim)
    truncation: str = ""

    def to_json(self) -> dict:
        return {
            "q_max": self.q_max,
            "M": list(self.M),
            "b": list(self.b),
            "contributions": [[list(c) for c in orb] for orb in self.contributions],
            "truncation": self.truncation,
        }


def morse_counts(orbit_data: Sequence, q_max: int, n: int = 3) -> MorseTable:
    """M_q for q <= q_max from (profile, k-data or None) pairs.

    Iterate m of an orbit adds k_l(y^m) in degree i(y^m) + l; a
    non-degenerate iterate adds 1 in degree i(y^m) when i(y^m) - i(y) is
    even and nothing otherwise.  Iterates are followed while i(y^m) <= q_max + 2n.
    """
    M = [0] * (q_max + 1)
    contributions = []
    for j, (p, ct) in enumerate(orbit_data, start=1):
        if p.family == ie.CASE2:
            raise ie.UnsupportedFamilyError(f"orbit {j}: {ie.CASE2} profiles have no index iteration")
        i1 = ie.iterate(p, 1).i_ekeland
        contrib = []
        m = 1
        while True:
            r = ie.iterate(p, m)
            if r.i_ekeland > q_max + 2 * n:
                break
            if r.nu == 1 and ct is None:
                row = nondegenerate_row(r.i_ekeland, i1)
            elif ct is None:
                raise MissingKTypesError(f"orbit {j}, iterate m={m}: degenerate (nu={r.nu}) and no k-data given")
            else:
                row = ct.at(m)
                if ct.nu[(m - 1) % ct.K] != r.nu:
                    raise StructuralError(
                        f"orbit {j}, iterate m={m}: k-data nullity {ct.nu[(m - 1) % ct.K]} but nu={r.nu}"
                    )
            for l, v in enumerate(row):
                q = r.i_ekeland + l
                if v and 0 <= q <= q_max:
                    M[q] += v
                if v:
                    contrib.append((m, q, v))
            m += 1
        contributions.append(tuple(contrib))
    return MorseTable(
        q_max,
        tuple(M),
        tuple(betti(q) for q in range(q_max + 1)),
        tuple(contributions),
        f"iterates with i(y^m) <= q_max + 2n = {q_max + 2 * n}",
    )


@dataclass(frozen=True)
class MorseReport:
    strong_violations: tuple
    alternating_violations: tuple
    odd_vanishing: bool
    derived_equality: bool
    inconsistent: bool
    equality_range: int

    @property
    def ok(self) -> bool:
        return not self.strong_violations and not self.alternating_violations and not self.inconsistent

    def to_json(self) -> dict:
        return {
            "strong_violations": list(self.strong_violations),
            "alternating_violations": list(self.alternating_violations),
            "odd_vanishing": self.odd_vanishing,
            "derived_equality": self.derived_equality,
            "inconsistent": self.inconsistent,
            "equality_range": self.equality_range,
            "ok": self.ok,
        }


def morse_inequalities(table: MorseTable) -> MorseReport:
    """M_q >= b_q, the alternating partial sums, and the odd-vanishing mechanism.

    When M_q = 0 in every odd degree, the two families of inequalities pinch
    the even partial sums, so M_q = b_q must hold for q <= q_max - 1.  That is
    reported as derived equality; if the table disagrees it is flagged as
    inconsistent.
    """
    M, b = table.M, table.b
    strong = tuple(q for q in range(len(M)) if M[q] < b[q])
    alt = []
    for q in range(len(M)):
        lhs = sum((-1) ** (q - j) * M[j] for j in range(q + 1))
        rhs = sum((-1) ** (q - j) * b[j] for j in range(q + 1))
        if lhs < rhs:
            alt.append(q)
    odd = all(M[q] == 0 for q in range(1, len(M), 2))
    top = table.q_max - 1
    equal = odd and all(M[q] == b[q] for q in range(top + 1))
    return MorseReport(strong, tuple(alt), odd, equal, odd and not equal, top)


# -- scenario replay ---------------------------------------------------------

SCENARIOS = ("thm1.2-case1", "thm1.2-case2")


@dataclass(frozen=True)
class ScenarioReport:
    label: str
    chi1_values: tuple
    chi1_forced: Fraction
    chi_j_by_parity: dict
    parity_forced: str
    kvector_cases: tuple
    selected_k: tuple
    forced_pair: "tuple | None"
    pair_feasible_fraction: float
    grid_max: float
    supremum: Fraction
    subsidiary_bound: Fraction
    infeasible: bool
    notes: tuple = ()

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "chi1_values": [str(v) for v in self.chi1_values],
            "chi1_forced": str(self.chi1_forced),
            "chi_j_by_parity": {k: str(v) for k, v in self.chi_j_by_parity.items()},
            "parity_forced": self.parity_forced,
            "kvector_cases": [list(v) for v in self.kvector_cases],
            "selected_k": list(self.selected_k),
            "forced_pair": None if self.forced_pair is None else list(self.forced_pair),
            "pair_feasible_fraction": self.pair_feasible_fraction,
            "grid_max": self.grid_max,
            "supremum": str(self.supremum),
            "supremum_float": float(self.supremum),
            "subsidiary_bound": str(self.subsidiary_bound),
            "verdict": "infeasible" if self.infeasible else "feasible",
            "notes": list(self.notes),
        }


_IRR = math.sqrt(2) * 1e-3


def _rotation_hyp_profile(i_ek: int, turn: float) -> ie.MonodromyProfile:
    return ie.r_profile(i_ek + 3, [turn], [2.0])


def scenario_check(label: str, grid_step: float = 1e-3, max_index: int = 12, window: int = 7,
                   samples: int = 9) -> ScenarioReport:
    """Replay the three-orbit contradiction for one of the two k-vector cases.

    Orbit 1 has blocks N1(1,1), N1(1,-1), N1(1,-1) with i(y, 1) = 3; orbits
    2 and 3 each carry one irrational rotation and a hyperbolic pair.
    The chain is: attainable chi-hat of orbit 1; chi-hat of orbits 2, 3 by
    index parity; the forcing of chi-hat(y_1) = 1 and even indices; the two
    k-vectors with chi-hat 1; the low-degree Morse columns (q <= window) that
    pin the indices of orbits 2 and 3; and finally the identity sum, both on
    a theta grid and as an exact supremum.
    """
    if label not in SCENARIOS:
        raise UnknownScenarioError(f"unknown scenario {label!r}; choose from {', '.join(SCENARIOS)}")
    half = Fraction(1, 2)
    y1 = ie.double_profile(3)
    mean1 = ie.mean_index(y1).exact
    values1 = chi_values(y1, k_max=6)
    chi1_vals = tuple(sorted(values1))

    # chi-hat of a rotation+hyperbolic orbit depends only on the parity of i(y)
    chi_j = {}
    for i_ek in range(10):
        c = chi_hat_profile(_rotation_hyp_profile(i_ek, math.sqrt(2) - 1)).value
        chi_j.setdefault("odd" if i_ek % 2 else "even", set()).add(c)
    chi_odd, chi_even = chi_j["odd"].pop(), chi_j["even"].pop()
    chi_max = max(chi_odd, chi_even)

    # each of orbits 2, 3 has mean index > 3, so its ratio is < chi_max / 3
    subsidiary = 2 * chi_max / 3
    needed = (half - subsidiary) * mean1
    chi1 = [v for v in chi1_vals if v > needed]
    chi1_forced = chi1[0] if len(chi1) == 1 else None
    # an odd index makes that orbit's ratio negative
    odd_bound = chi1_forced / mean1 + chi_max / 3 if chi1_forced is not None else None
    parity = "even" if odd_bound is not None and odd_bound < half else "undetermined"

    kcases = tuple(tuple(rows[1]) for rows in values1.get(chi1_forced, []))
    select = {"thm1.2-case1": (1, 0, 0), "thm1.2-case2": (0, 0, 1)}[label]
    if select not in kcases:
        raise StructuralError(f"k-vector {select} is not among the forced cases {kcases}")
    ct1 = CriticalTypeVector((3,), (select,))

    turns = [(k + 0.5) / samples + _IRR for k in range(samples)]
    feasible = {}
    total = 0
    for i2 in range(0, max_index + 1, 2):
        for i3 in range(i2, max_index + 1, 2):
            for a2 in turns:
                for a3 in turns:
                    total += 1
                    table = morse_counts(
                        [(y1, ct1), (_rotation_hyp_profile(i2, a2), None), (_rotation_hyp_profile(i3, a3), None)],
                        window,
                    )
                    if table.M == table.b:
                        feasible[(i2, i3)] = feasible.get((i2, i3), 0) + 1
    pair = next(iter(feasible)) if len(feasible) == 1 else None
    notes = []
    if pair is None:
        notes.append(f"low-degree Morse columns allow index pairs {sorted(feasible)}")
        pairs = sorted(feasible) or [(0, 0)]
    else:
        pairs = [pair]

    # identity sum over the theta grid; the sum separates, but every grid point is evaluated
    grid = np.arange(grid_step, 2 * math.pi, grid_step)
    grid_max = -math.inf
    sup = None
    for i2, i3 in pairs:
        f2 = float(chi_even) / (i2 + 3 + grid / math.pi)
        f3 = float(chi_even) / (i3 + 3 + grid / math.pi)
        for start in range(0, len(grid), 512):
            block = float(chi1_forced / mean1) + f2[start : start + 512, None] + f3[None, :]
            grid_max = max(grid_max, float(block.max()))
        # ratios decrease in theta, so the supremum is the theta -> 0 limit
        s = chi1_forced / mean1 + chi_even / (i2 + 3) + chi_even / (i3 + 3)
        sup = s if sup is None else max(sup, s)
    infeasible = pair is not None and sup < half and grid_max < 0.5
    frac = feasible.get(pair, 0) / (samples * samples) if pair else 0.0
    return ScenarioReport(
        label, chi1_vals, chi1_forced, {"odd": chi_odd, "even": chi_even}, parity, kcases, select,
        pair, frac, grid_max, sup, subsidiary, infeasible, tuple(notes),
    )
