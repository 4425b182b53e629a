"""Symplectic linear algebra on R^{2n}.

Coordinates are ordered (x_1, ..., x_n, y_1, ..., y_n) and the standard form is
J = [[0, -I], [I, 0]], so that omega(u, v) = (J u) . v.  The diamond product
places a 2k x 2k block on the planes (x_i, y_i) it owns, which keeps 2 x 2
normal-form blocks on the coordinate planes (x_k, y_k).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

SYMPLECTIC_TOL = 1e-9
CLUSTER_TOL = 1e-7
CIRCLE_TOL = 1e-8
DET_TOL = 1e-7
COND_LIMIT = 1e12


class NotSymplecticError(ValueError):
    pass


class IllConditionedError(ValueError):
    pass


class UnsupportedBlockError(ValueError):
    pass


class SpectralAmbiguityWarning(UserWarning):
    pass


def standard_form(n: int) -> np.ndarray:
    """The 2n x 2n matrix [[0, -I_n], [I_n, 0]]."""
    if n < 1:
        raise ValueError(f"half-dimension must be positive, got {n}")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def omega(u, v) -> complex:
    """Standard symplectic pairing (J u) . v (bilinear, no conjugation)."""
    u = np.asarray(u)
    n = u.shape[0] // 2
    return (standard_form(n) @ u) @ np.asarray(v)


def symplectic_residual(a) -> float:
    a = np.asarray(a, dtype=float)
    j = standard_form(a.shape[0] // 2)
    return float(np.max(np.abs(a.T @ j @ a - j)))


@dataclass(frozen=True)
class SymplecticMatrix:
    """A real 2n x 2n matrix certified to satisfy M^T J M = J."""

    n: int
    entries: np.ndarray = field(repr=False)
    sympl_residual: float

    @classmethod
    def from_array(cls, a, tol: float = SYMPLECTIC_TOL) -> "SymplecticMatrix":
        a = np.array(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
            raise NotSymplecticError(f"expected a square matrix of even size, got shape {a.shape}")
        res = symplectic_residual(a)
        if not res <= tol:
            raise NotSymplecticError(f"symplecticity residual {res:.3e} exceeds {tol:.1e}")
        det = np.linalg.det(a)
        if abs(det - 1.0) > DET_TOL * max(1.0, np.linalg.norm(a, 2) ** 2 * 1e-6):
            raise NotSymplecticError(f"determinant {det!r} is not 1")
        a.setflags(write=False)
        return cls(a.shape[0] // 2, a, res)

    def __matmul__(self, other):
        other = other.entries if isinstance(other, SymplecticMatrix) else other
        return self.entries @ other

    def to_json(self) -> list:
        return self.entries.tolist()


def as_array(m) -> np.ndarray:
    if isinstance(m, SymplecticMatrix):
        return m.entries
    return np.asarray(m, dtype=float)


def as_symplectic(m, tol: float = SYMPLECTIC_TOL) -> SymplecticMatrix:
    if isinstance(m, SymplecticMatrix):
        return m
    return SymplecticMatrix.from_array(m, tol=tol)


# -- normal-form blocks ------------------------------------------------------

def diamond(*blocks) -> np.ndarray:
    """Symplectic direct sum of square blocks of even size."""
    mats = [as_array(b) for b in blocks]
    halves = [m.shape[0] // 2 for m in mats]
    n = sum(halves)
    out = np.zeros((2 * n, 2 * n))
    off = 0
    for m, k in zip(mats, halves):
        rows = np.r_[off:off + k, n + off:n + off + k]
        out[np.ix_(rows, rows)] = m
        off += k
    return out


def n1(eig: int, b: float) -> np.ndarray:
    """N_1(eig, b) = [[eig, b], [0, eig]]."""
    return np.array([[float(eig), float(b)], [0.0, float(eig)]])


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def hyperbolic(lam: float) -> np.ndarray:
    """D(lam) = diag(lam, 1/lam)."""
    return np.array([[lam, 0.0], [0.0, 1.0 / lam]])


def complex_quadruple(lam: complex) -> np.ndarray:
    """A 4 x 4 symplectic matrix with spectrum {lam, conj(lam), 1/lam, 1/conj(lam)}."""
    a = abs(lam) * rotation(np.angle(lam))
    return np.block([[a, np.zeros((2, 2))], [np.zeros((2, 2)), np.linalg.inv(a).T]])


def random_symplectic(n: int, rng: np.random.Generator, spread: float = 1.0) -> np.ndarray:
    """Random element of Sp(2n).

    Built as U @ [[I, S], [0, I]] @ [[I, 0], [T, I]] with U orthogonal
    symplectic and S, T symmetric of scale `spread`, so the condition number
    stays moderate for spread <= 1.
    """
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, _ = np.linalg.qr(z)
    u = np.block([[q.real, -q.imag], [q.imag, q.real]])
    s = rng.normal(scale=spread, size=(n, n))
    t = rng.normal(scale=spread, size=(n, n))
    eye, zero = np.eye(n), np.zeros((n, n))
    upper = np.block([[eye, (s + s.T) / 2], [zero, eye]])
    lower = np.block([[eye, zero], [(t + t.T) / 2, eye]])
    return u @ upper @ lower


@dataclass(frozen=True)
class BlockLabel:
    """One basic normal-form block.

    kind is 'N1' (eig in {+1, -1}, b in {+1, 0, -1}), 'R' (theta in (0, 2pi)
    minus {pi}; `frac` optionally pins theta / 2pi exactly), 'hyp' (real
    lam with |lam| > 1) or 'quad' (complex lam, |lam| > 1, Im lam > 0).
    """

    kind: str
    eig: int = 0
    b: int = 0
    theta: float = 0.0
    lam: complex = 0.0
    frac: "object | None" = None

    @classmethod
    def N1(cls, eig: int, b: int) -> "BlockLabel":
        if eig not in (1, -1) or b not in (1, 0, -1):
            raise ValueError(f"bad N1 parameters eig={eig}, b={b}")
        return cls("N1", eig=eig, b=b)

    @classmethod
    def R(cls, theta: float, frac=None) -> "BlockLabel":
        if frac is not None:
            from fractions import Fraction
            frac = Fraction(frac)
            if not 0 < frac < 1:
                raise ValueError(f"theta/2pi = {frac} outside (0, 1)")
            theta = 2 * math.pi * float(frac)
        if not 0.0 < theta < 2 * math.pi:
            raise ValueError(f"rotation angle {theta} outside (0, 2pi)")
        return cls("R", theta=float(theta), frac=frac)

    @classmethod
    def hyp(cls, lam: float) -> "BlockLabel":
        lam = float(lam)
        if abs(lam) <= 1:
            raise ValueError("hyperbolic block needs |lambda| > 1")
        return cls("hyp", lam=lam)

    @classmethod
    def quad(cls, lam: complex) -> "BlockLabel":
        lam = complex(lam)
        if abs(lam) <= 1 or lam.imag == 0:
            raise ValueError("complex quadruple needs |lambda| > 1 off the real axis")
        if lam.imag < 0:
            lam = lam.conjugate()
        return cls("quad", lam=lam)

    @property
    def dim(self) -> int:
        return 4 if self.kind == "quad" else 2

    @property
    def elliptic_dim(self) -> int:
        return 2 if self.kind in ("N1", "R") else 0

    def matrix(self) -> np.ndarray:
        if self.kind == "N1":
            return n1(self.eig, self.b)
        if self.kind == "R":
            return rotation(self.theta)
        if self.kind == "hyp":
            return hyperbolic(self.lam.real if isinstance(self.lam, complex) else self.lam)
        return complex_quadruple(self.lam)

    def matches(self, other: "BlockLabel", tol: float = CLUSTER_TOL) -> bool:
        if self.kind != other.kind:
            return False
        if self.kind == "N1":
            return (self.eig, self.b) == (other.eig, other.b)
        if self.kind == "R":
            return abs(self.theta - other.theta) <= tol
        return abs(complex(self.lam) - complex(other.lam)) <= tol * max(1.0, abs(self.lam))

    def sort_key(self):
        order = {"N1": 0, "R": 1, "hyp": 2, "quad": 3}[self.kind]
        lam = complex(self.lam)
        return (order, -self.eig, -self.b, self.theta, lam.real, lam.imag)

    def to_json(self) -> dict:
        if self.kind == "N1":
            return {"kind": "N1", "eig": self.eig, "b": self.b}
        if self.kind == "R":
            out = {"kind": "R", "theta": self.theta}
            if self.frac is not None:
                out["rational"] = [self.frac.numerator, self.frac.denominator]
            return out
        if self.kind == "hyp":
            return {"kind": "hyp", "lambda": float(complex(self.lam).real)}
        lam = complex(self.lam)
        return {"kind": "quad", "lambda": [lam.real, lam.imag]}

    def __str__(self) -> str:
        if self.kind == "N1":
            return f"N1({self.eig:+d},{self.b:+d})" if self.b else f"N1({self.eig:+d},0)"
        if self.kind == "R":
            return f"R({self.theta:.10g})"
        if self.kind == "hyp":
            return f"D({complex(self.lam).real:.10g})"
        return f"Q({complex(self.lam):.6g})"


def assemble(blocks) -> np.ndarray:
    """Diamond product of the matrices of a sequence of BlockLabels."""
    return diamond(*[blk.matrix() for blk in blocks])


def same_multiset(a, b, tol: float = CLUSTER_TOL) -> bool:
    left = list(a)
    right = list(b)
    if len(left) != len(right):
        return False
    for blk in left:
        for k, other in enumerate(right):
            if blk.matches(other, tol):
                del right[k]
                break
        else:
            return False
    return True


# -- spectra -----------------------------------------------------------------

def floquet_multipliers(m) -> np.ndarray:
    """Eigenvalues of a symplectic matrix, repeated by algebraic multiplicity.

    Sorted by (argument, modulus) so output order is deterministic.
    """
    a = as_symplectic(m).entries
    s = np.linalg.svd(a, compute_uv=False)
    cond = s[0] / s[-1]
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedError(f"condition number {cond:.3e} exceeds {COND_LIMIT:.0e}")
    lam = np.linalg.eigvals(a)
    order = np.lexsort((np.abs(lam), np.round(np.angle(lam), 12)))
    return lam[order]


def _jordan_radius(tol: float) -> float:
    # eigenvalues of a perturbed 2x2 Jordan block split by ~sqrt(perturbation)
    return math.sqrt(tol)


def spectral_clusters(lam, tol: float = CLUSTER_TOL) -> list[tuple[complex, int]]:
    """Group eigenvalues into (centroid, multiplicity) clusters.

    Eigenvalues within sqrt(tol) of +1 or -1 are pooled with that point;
    the rest are joined by single linkage at distance tol.
    """
    lam = np.asarray(lam, dtype=complex)
    rad = _jordan_radius(tol)
    clusters: list[list[complex]] = []
    rest = []
    for s in (1.0, -1.0):
        near = [z for z in lam if abs(z - s) < rad]
        if near:
            clusters.append(near)
    rest = [z for z in lam if abs(z - 1) >= rad and abs(z + 1) >= rad]
    groups: list[list[complex]] = []
    for z in rest:
        hits = [g for g in groups if min(abs(z - w) for w in g) < tol]
        merged = [z]
        for g in hits:
            merged.extend(g)
            groups.remove(g)
        groups.append(merged)
    clusters.extend(groups)
    out = []
    for g in clusters:
        c = complex(np.mean(g))
        if abs(c - 1) < rad:
            c = 1.0 + 0j
        elif abs(c + 1) < rad:
            c = -1.0 + 0j
        out.append((c, len(g)))
    return out


def elliptic_height(m, circle_tol: float = CIRCLE_TOL, tol: float = CLUSTER_TOL) -> int:
    """Total algebraic multiplicity of the multipliers on the unit circle.

    Decided per cluster centroid: the centroid of a split Jordan cluster is
    far more accurate than its members.
    """
    lam = floquet_multipliers(m)
    e = 0
    for c, k in spectral_clusters(lam, tol):
        dist = abs(abs(c) - 1.0)
        if dist < circle_tol:
            e += k
        elif dist < 10 * circle_tol:
            warnings.warn(
                f"multiplier cluster at {c:.12g} lies {dist:.2e} from the unit circle",
                SpectralAmbiguityWarning,
                stacklevel=2,
            )
    return e


# -- block classification ----------------------------------------------------

@dataclass(frozen=True)
class BlockDecomposition:
    blocks: tuple
    accounted_dim: int
    residual_report: tuple = ()

    @property
    def complete(self) -> bool:
        return not self.residual_report

    @property
    def elliptic_height(self) -> int:
        return sum(b.elliptic_dim for b in self.blocks)

    def count(self, kind: str) -> int:
        return sum(1 for b in self.blocks if b.kind == kind)

    def to_json(self) -> dict:
        return {
            "blocks": [b.to_json() for b in self.blocks],
            "accounted_dim": self.accounted_dim,
            "residual_report": list(self.residual_report),
        }


def _smallest_right_vectors(a: np.ndarray, k: int):
    _, s, vh = np.linalg.svd(a)
    return s[::-1][:k], vh[::-1][:k].conj().T


def krein_signature(a: np.ndarray, lam: complex, k: int, tol: float):
    """(positive, negative) counts of -i v^H J v on the lam-eigenspace of size k."""
    dim = a.shape[0]
    sv, v = _smallest_right_vectors(a - lam * np.eye(dim), k)
    scale = max(1.0, np.linalg.norm(a, 2))
    if sv.max() > math.sqrt(tol) * scale:
        return None
    h = -1j * (v.conj().T @ standard_form(dim // 2) @ v)
    w = np.linalg.eigvalsh((h + h.conj().T) / 2)
    if np.min(np.abs(w)) < 1e-10 * scale:
        return None
    return int(np.sum(w > 0)), int(np.sum(w < 0))


def _unit_blocks(a: np.ndarray, s: int, k: int, tol: float):
    """Split the generalized s-eigenspace (s = +-1, dimension k) into N1(s, b) blocks."""
    dim = a.shape[0]
    scale = max(1.0, np.linalg.norm(a, 2))
    if k % 2:
        return [], f"odd multiplicity {k} at eigenvalue {s:+d}"
    shifted = a - s * np.eye(dim)
    sv, gen = _smallest_right_vectors(shifted @ shifted, k)
    gen = gen.real if np.iscomplexobj(gen) else gen
    if sv.max() > math.sqrt(tol) * scale**2:
        return [], f"Jordan chain longer than 2 at eigenvalue {s:+d}"
    img = shifted @ gen
    _, s_img, vh = np.linalg.svd(img)
    kernel_tol = 1e-8 * scale
    d1 = int(np.sum(s_img < kernel_tol)) + (k - len(s_img) if len(s_img) < k else 0)
    chains = k - d1
    if d1 < k // 2:
        return [], f"Jordan chain longer than 2 at eigenvalue {s:+d}"
    blocks = [BlockLabel.N1(s, 0)] * (d1 - k // 2)
    if chains:
        w = gen @ vh[:chains].T
        j = standard_form(dim // 2)
        q = (j @ w).T @ (shifted @ w)
        ev = np.linalg.eigvalsh((q + q.T) / 2)
        if np.min(np.abs(ev)) < 1e-10 * scale:
            return [], f"indefinite chain pairing at eigenvalue {s:+d}"
        # omega(w, (M - s)w) = -b for N1(s, b)
        blocks += [BlockLabel.N1(s, 1)] * int(np.sum(ev < 0))
        blocks += [BlockLabel.N1(s, -1)] * int(np.sum(ev > 0))
    return blocks, None


def classify_blocks(m, tol: float = CLUSTER_TOL) -> BlockDecomposition:
    """Normal-form blocks of a symplectic matrix read off its eigenstructure.

    Unit-circle pairs become R(theta) with theta or 2pi - theta chosen by the
    Krein sign of the eigenvector; clusters at +-1 become N1(+-1, b) with b
    from the sign of omega(w, (M -+ I) w) on generalized eigenvectors.
    Structures outside the Sp(6) taxonomy land in residual_report.
    """
    sm = as_symplectic(m)
    a = sm.entries
    lam = floquet_multipliers(sm)
    blocks: list[BlockLabel] = []
    report: list[str] = []
    for c, k in spectral_clusters(lam, tol):
        if c == 1 or c == -1:
            found, why = _unit_blocks(a, int(c.real), k, tol)
            if why:
                report.append(why)
            blocks.extend(found)
            continue
        on_circle = abs(abs(c) - 1.0) < tol
        if on_circle and c.imag > 0:
            sig = krein_signature(a, c, k, tol)
            if sig is None:
                report.append(f"defective or Krein-degenerate cluster at {c:.10g} (multiplicity {k})")
                continue
            theta = float(np.angle(c))
            blocks += [BlockLabel.R(theta)] * sig[0]
            blocks += [BlockLabel.R(2 * math.pi - theta)] * sig[1]
        elif on_circle:
            continue
        elif abs(c.imag) < tol and abs(c) > 1:
            blocks += [BlockLabel.hyp(c.real)] * k
        elif abs(c) > 1 and c.imag > 0:
            blocks += [BlockLabel.quad(c)] * k
    blocks.sort(key=BlockLabel.sort_key)
    acc = sum(b.dim for b in blocks)
    if acc != a.shape[0] and not report:
        report.append(f"accounted for {acc} of {a.shape[0]} dimensions")
    return BlockDecomposition(tuple(blocks), acc, tuple(report))


# -- splitting numbers -------------------------------------------------------

@dataclass(frozen=True)
class SplittingEntry:
    block: BlockLabel
    s_plus: int
    nu_one: int

    @property
    def jump(self) -> int:
        """2 S^+(1) - nu_1."""
        return 2 * self.s_plus - self.nu_one


_SPLITTING = {(1, 1): (1, 1), (1, -1): (0, 1)}


def splitting_data(block: BlockLabel) -> SplittingEntry:
    """Splitting number S^+(1) and nullity at 1 for the blocks N1(1, +-1).

    Only these two entries are pinned; anything else is refused.
    """
    if block.kind != "N1" or (block.eig, block.b) not in _SPLITTING:
        raise UnsupportedBlockError(f"no splitting data tabulated for {block}")
    s_plus, nu_one = _SPLITTING[(block.eig, block.b)]
    return SplittingEntry(block, s_plus, nu_one)


def splitting_jump(blocks) -> int:
    """Aggregate 2 S^+(1) - nu_1 over a diamond product (additive over blocks)."""
    return sum(splitting_data(b).jump for b in blocks)
