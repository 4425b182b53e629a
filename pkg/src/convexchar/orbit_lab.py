"""Closed characteristics on explicit convex hypersurfaces in R^{2n}.

A surface is the level set h = 1 of

    h(x) = q(x) + eps * P(x),   q = sum_k (x_k^2 + y_k^2) / r_k^2,   P = sum_i c_i x_i^4

(the quartic runs over all 2n coordinates).  The flow uses H_alpha = G^(alpha/2)
with G = j^2 the squared gauge function of the surface, which has the closed
form G = (q + sqrt(q^2 + 4 eps P)) / 2.  G is homogeneous of degree 2, so the
indices of degenerate orbit directions do not depend on how far h is from
homogeneous.  With eps = 0 and alpha = 2 this is the quadratic ellipsoid
Hamiltonian, whose planar circles and linearized flow are known in closed
form; every other choice is handled by fixed-step RK4 and Newton shooting.

Coordinates follow `sp_core`: x = (x_1..x_n, y_1..y_n), flow x' = J grad H.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import iter_engine as ie
from .sp_core import (
    BlockLabel,
    SymplecticMatrix,
    classify_blocks,
    elliptic_height,
    floquet_multipliers,
    rotation,
    standard_form,
    symplectic_residual,
)


class NonConvexError(ValueError):
    pass


class AccuracyError(RuntimeError):
    pass


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, history=()):
        super().__init__(msg)
        self.history = list(history)


class DegenerateOrbitError(RuntimeError):
    pass


class ResolutionError(RuntimeError):
    pass


# -- surfaces ----------------------------------------------------------------

@dataclass(frozen=True)
class ConvexSurface:
    """Level set H = 1 of a convex Hamiltonian (see module docstring).

    `value`, `gradient` and `hessian` accept arrays of shape (..., 2n).
    """

    n: int
    kind: str
    radii: tuple
    epsilon: float = 0.0
    coeffs: tuple = ()
    alpha: float = 2.0
    description: str = ""
    _w: np.ndarray = field(default=None, repr=False, compare=False)
    _c: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        w = np.concatenate([1 / r**2, 1 / r**2])
        c = np.zeros(2 * self.n) if not self.coeffs else np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "_w", w)
        object.__setattr__(self, "_c", c)

    @property
    def diameter(self) -> float:
        return 2 * max(self.radii)

    def base(self, x):
        """G = j^2, the squared gauge function (equal to q when eps = 0)."""
        x = np.asarray(x, dtype=float)
        q = (self._w * x**2).sum(-1)
        if not self.epsilon:
            return q
        p = (self._c * x**4).sum(-1)
        # a negative discriminant means no gauge value: NaN, reported by the callers
        with np.errstate(invalid="ignore"):
            return 0.5 * (q + np.sqrt(q**2 + 4 * self.epsilon * p))

    def _base_grad(self, x):
        gq = 2 * self._w * x
        if not self.epsilon:
            return gq
        g = self.base(x)[..., None]
        q = (self._w * x**2).sum(-1)[..., None]
        # differentiate G^2 - q G - eps P = 0
        return (g * gq + 4 * self.epsilon * self._c * x**3) / (2 * g - q)

    def _base_hess(self, x):
        eye = np.eye(2 * self.n)
        hq = 2 * self._w * eye
        if not self.epsilon:
            return np.broadcast_to(hq, x.shape[:-1] + hq.shape).copy()
        g = self.base(x)[..., None, None]
        q = (self._w * x**2).sum(-1)[..., None, None]
        gq = 2 * self._w * x
        dg = self._base_grad(x)
        hp = (12 * self.epsilon * self._c * x**2)[..., :, None] * eye
        cross = dg[..., :, None] * gq[..., None, :]
        num = g * hq + hp + cross + np.swapaxes(cross, -1, -2) - 2 * dg[..., :, None] * dg[..., None, :]
        return num / (2 * g - q)

    def value(self, x):
        h = self.base(x)
        return h if self.alpha == 2 else h ** (self.alpha / 2)

    def level(self, x):
        """h(x); its level set h = 1 is the surface."""
        x = np.asarray(x, dtype=float)
        return (self._w * x**2).sum(-1) + self.epsilon * (self._c * x**4).sum(-1)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        g = self._base_grad(x)
        if self.alpha == 2:
            return g
        h = self.base(x)[..., None]
        return (self.alpha / 2) * h ** (self.alpha / 2 - 1) * g

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        hess = self._base_hess(x)
        if self.alpha == 2:
            return hess
        a = self.alpha / 2
        h = self.base(x)[..., None, None]
        g = self._base_grad(x)
        outer = g[..., :, None] * g[..., None, :]
        return a * h ** (a - 1) * hess + a * (a - 1) * h ** (a - 2) * outer

    def jet(self, x):
        """(H'(x), H''(x)) at a single point, sharing the intermediate terms."""
        w, c, eps = self._w, self._c, self.epsilon
        wx = w * x
        q = float(wx @ x)
        gq = 2 * wx
        if eps:
            g = 0.5 * (q + math.sqrt(q * q + 4 * eps * float(c @ x**4)))
            d = 2 * g - q
            dg = (g * gq + 4 * eps * c * x**3) / d
            cross = np.outer(dg, gq)
            hess = (np.diag(g * 2 * w + 12 * eps * c * x**2) + cross + cross.T - 2 * np.outer(dg, dg)) / d
        else:
            g, dg, hess = q, gq, np.diag(2 * w)
        if self.alpha == 2:
            return dg, hess
        a = self.alpha / 2
        return a * g ** (a - 1) * dg, a * g ** (a - 1) * hess + a * (a - 1) * g ** (a - 2) * np.outer(dg, dg)

    def vector_field(self, x):
        g = self.gradient(x)
        n = self.n
        return np.concatenate([-g[..., n:], g[..., :n]], axis=-1)

    def project(self, x):
        """Radial projection of x onto H = 1."""
        x = np.asarray(x, dtype=float)
        if not np.any(x):
            raise ValueError("cannot project the origin onto the surface")
        g = float(self.base(x))
        if not np.isfinite(g) or g <= 0:
            raise NonConvexError(f"{self.description}: gauge function undefined at {x.tolist()}")
        # G is 2-homogeneous, so x / sqrt(G(x)) lies on G = 1
        return x / math.sqrt(g)

    def probe_convexity(self, rng=None, samples: int = 1000, shell: float = 0.05):
        """Sample a shell around H = 1 and check H > 0 and H'' positive definite.

        Sampled, not certified.  Raises NonConvexError on the first failure.
        """
        rng = np.random.default_rng(0) if rng is None else rng
        u = rng.normal(size=(samples, 2 * self.n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        pts = np.array([self.project(v) for v in u])
        pts *= 1 + rng.uniform(-shell, shell, size=(samples, 1))
        vals = self.value(pts)
        if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
            raise NonConvexError(f"{self.description}: H is not positive at a sampled point")
        low = np.linalg.eigvalsh(self.hessian(pts))[:, 0]
        if np.any(low <= 0):
            k = int(np.argmin(low))
            raise NonConvexError(
                f"{self.description}: Hessian not positive definite at {pts[k].round(6).tolist()} "
                f"(smallest eigenvalue {low[k]:.3e})"
            )
        return float(low.min())

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "radii": list(self.radii),
            "epsilon": self.epsilon,
            "coeffs": list(self.coeffs),
            "alpha": self.alpha,
        }


def ellipsoid(radii, alpha: float = 2.0) -> ConvexSurface:
    radii = tuple(float(r) for r in radii)
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    if not 1 < alpha <= 2:
        raise ValueError("alpha must lie in (1, 2]")
    desc = "ellipsoid r=(" + ", ".join(f"{r:.6g}" for r in radii) + ")"
    return ConvexSurface(len(radii), "ellipsoid", radii, alpha=alpha, description=desc)


def perturbed_ellipsoid(radii, epsilon: float, coeffs, alpha: float = 2.0, rng=None) -> ConvexSurface:
    """Ellipsoid plus eps * sum c_i x_i^4; convexity is re-probed on construction."""
    radii = tuple(float(r) for r in radii)
    coeffs = tuple(float(c) for c in coeffs)
    if len(coeffs) != 2 * len(radii):
        raise ValueError(f"need {2 * len(radii)} quartic coefficients, got {len(coeffs)}")
    if not 1 < alpha <= 2:
        raise ValueError("alpha must lie in (1, 2]")
    desc = f"perturbed ellipsoid r=({', '.join(f'{r:.6g}' for r in radii)}), eps={epsilon:g}"
    s = ConvexSurface(len(radii), "perturbed_ellipsoid", radii, float(epsilon), coeffs, alpha, desc)
    s.probe_convexity(rng)
    return s


# -- integration -------------------------------------------------------------

def _rk4(surface: ConvexSurface, x0, t_end: float, steps: int, with_jacobian=False, keep_every=1):
    """Classical RK4 on x' = J H'(x) (and W' = J H''(x) W when asked).

    Returns (times, points, jacobians) sampled every `keep_every` steps,
    always including both ends.
    """
    n = surface.n
    h = t_end / steps
    x = np.array(x0, dtype=float)
    w = np.eye(2 * n) if with_jacobian else None
    f = surface.vector_field

    pts, mats, times = [x.copy()], [w.copy()] if with_jacobian else [], [0.0]
    def stage(y):
        # J v = (-v[n:], v[:n]) row-wise, for the gradient and the Hessian alike
        grad, hs = surface.jet(y)
        return np.concatenate([-grad[n:], grad[:n]]), np.concatenate([-hs[n:], hs[:n]])

    for k in range(1, steps + 1):
        if with_jacobian:
            k1, a1 = stage(x)
            x2 = x + 0.5 * h * k1
            k2, a2 = stage(x2)
            x3 = x + 0.5 * h * k2
            k3, a3 = stage(x3)
            x4 = x + h * k3
            k4, a4 = stage(x4)
            q1 = a1 @ w
            q2 = a2 @ (w + 0.5 * h * q1)
            q3 = a3 @ (w + 0.5 * h * q2)
            q4 = a4 @ (w + h * q3)
            w = w + (h / 6) * (q1 + 2 * q2 + 2 * q3 + q4)
        else:
            k1 = f(x)
            k2 = f(x + 0.5 * h * k1)
            k3 = f(x + 0.5 * h * k2)
            k4 = f(x + h * k3)
        x = x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if k % keep_every == 0 or k == steps:
            pts.append(x.copy())
            times.append(k * h)
            if with_jacobian:
                mats.append(w.copy())
    return np.array(times), np.array(pts), (np.array(mats) if with_jacobian else None)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    points: np.ndarray
    energy_drift: float


def flow_integrate(surface: ConvexSurface, x0, t_end: float, steps: int = 1000) -> Trajectory:
    """Fixed-step RK4 trajectory of x' = J H'(x) starting on H = 1."""
    x0 = np.asarray(x0, dtype=float)
    if abs(surface.value(x0) - 1) > 1e-9:
        raise ValueError(f"initial point has H = {surface.value(x0)!r}, expected 1 within 1e-9")
    if t_end == 0:
        return Trajectory(np.zeros(1), x0[None, :].copy(), 0.0)
    if steps < 100:
        raise ValueError(f"at least 100 steps are required, got {steps}")
    times, pts, _ = _rk4(surface, x0, t_end, steps)
    drift = float(np.max(np.abs(surface.value(pts) - 1)))
    if drift > 1e-5:
        raise AccuracyError(f"energy drift {drift:.2e} exceeds 1e-5; increase the step count")
    return Trajectory(times, pts, drift)


# -- closed orbits -----------------------------------------------------------

@dataclass(frozen=True)
class ClosedOrbit:
    surface: ConvexSurface
    period: float
    x0: np.ndarray
    samples: np.ndarray
    closure_residual: float
    energy_drift: float
    flow_residual: float = 0.0
    label: str = ""
    iterations: int = 0
    history: tuple = ()

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.period, len(self.samples))

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "period": self.period,
            "x0": self.x0.tolist(),
            "closure_residual": self.closure_residual,
            "energy_drift": self.energy_drift,
            "flow_residual": self.flow_residual,
            "newton_iterations": self.iterations,
        }


def _spectral_residual(surface, pts, period):
    """max |y' - J H'(y)| with y' from the FFT derivative of the periodic samples."""
    y = pts[:-1]
    m = len(y)
    k = np.fft.fftfreq(m, d=1.0 / m)
    if m % 2 == 0:
        k[m // 2] = 0
    dy = np.fft.ifft(np.fft.fft(y, axis=0) * (2j * np.pi * k / period)[:, None], axis=0).real
    return float(np.max(np.abs(dy - surface.vector_field(y))))


def _make_orbit(surface, x0, period, steps, label, iterations=0, history=()):
    times, pts, _ = _rk4(surface, x0, period, steps)
    closure = float(np.linalg.norm(pts[-1] - pts[0]))
    drift = float(np.max(np.abs(surface.value(pts) - 1)))
    return ClosedOrbit(
        surface, float(period), np.array(x0, dtype=float), pts, closure, drift,
        _spectral_residual(surface, pts, period), label, iterations, tuple(history),
    )


def ellipsoid_orbits(radii, alpha: float = 2.0, steps: int = 2000) -> list:
    """The n planar circles of an ellipsoid; orbit k lies in the (x_k, y_k) plane.

    The quadratic flow turns plane k at angular speed 2/r_k^2, so the period
    is pi r_k^2 (scaled by 2/alpha for H^(alpha/2)).
    """
    radii = [float(r) for r in radii]
    sq = np.array(radii) ** 2
    for a in range(len(sq)):
        for b in range(a):
            if abs(sq[a] / sq[b] - 1) < 1e-12:
                raise ValueError(
                    f"radii {radii[b]} and {radii[a]} coincide: the closed characteristics are not isolated"
                )
    surf = ellipsoid(radii, alpha)
    out = []
    for k, r in enumerate(radii):
        x0 = np.zeros(2 * len(radii))
        x0[k] = r
        out.append(_make_orbit(surf, x0, math.pi * r**2 * 2 / alpha, steps, f"plane {k + 1}"))
    return out


def refine_orbit(surface: ConvexSurface, guess, tol: float = 1e-10, max_iter: int = 30, steps: int = 2000):
    """Newton shooting for a closed characteristic near `guess`.

    Unknowns (x0, tau); equations y(tau; x0) - x0 = 0, H(x0) = 1 and the
    phase condition f(x_ref) . (x0 - x_ref) = 0.  The overdetermined linear
    systems are solved in the least-squares sense.  `guess` is a ClosedOrbit
    or an (x0, tau) pair.
    """
    if isinstance(guess, ClosedOrbit):
        x_ref, tau = guess.x0, guess.period
    else:
        x_ref, tau = guess
    x_ref = surface.project(np.asarray(x_ref, dtype=float))
    tau = float(tau)
    n2 = 2 * surface.n

    def shoot(x, t):
        _, pts, mats = _rk4(surface, x, t, steps, with_jacobian=True, keep_every=steps)
        return pts[-1], mats[-1]

    y_end, _ = shoot(x_ref, tau)
    start = float(np.linalg.norm(y_end - x_ref))
    if not start < 0.1 * surface.diameter:
        raise NonConvergenceError(
            f"initial closure residual {start:.3e} is not below 0.1 x diameter ({0.1 * surface.diameter:.3e})",
            [start],
        )
    f_ref = surface.vector_field(x_ref)
    x = x_ref.copy()
    history = []
    for it in range(max_iter + 1):
        y_end, phi = shoot(x, tau)
        resid = np.concatenate([y_end - x, [surface.value(x) - 1.0, f_ref @ (x - x_ref)]])
        closure = float(np.linalg.norm(y_end - x))
        history.append(closure)
        if closure <= tol and abs(resid[n2]) <= tol:
            return _make_orbit(surface, x, tau, steps, "refined", it, history)
        if it == max_iter:
            break
        jac = np.zeros((n2 + 2, n2 + 1))
        jac[:n2, :n2] = phi - np.eye(n2)
        jac[:n2, n2] = surface.vector_field(y_end)
        jac[n2, :n2] = surface.gradient(x)
        jac[n2 + 1, :n2] = f_ref
        sv = np.linalg.svd(jac, compute_uv=False)
        if sv[-1] < 1e-12 * max(1.0, sv[0]):
            raise DegenerateOrbitError(
                f"shooting Jacobian is singular (smallest singular value {sv[-1]:.2e}); "
                "the orbit is not transversally isolated"
            )
        delta = np.linalg.lstsq(jac, -resid, rcond=None)[0]
        x = x + delta[:n2]
        tau = tau + delta[n2]
        if not np.all(np.isfinite(x)) or tau <= 0:
            break
    raise NonConvergenceError(f"no convergence within {max_iter} Newton steps", history)


# -- monodromy ---------------------------------------------------------------

@dataclass(frozen=True)
class MonodromyResult:
    gamma_tau: SymplecticMatrix
    multipliers: np.ndarray
    integration_steps: int
    sympl_residual: float
    times: np.ndarray = field(repr=False)
    path: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {
            "gamma_tau": self.gamma_tau.to_json(),
            "multipliers": [[float(z.real), float(z.imag)] for z in self.multipliers],
            "integration_steps": self.integration_steps,
            "sympl_residual": self.sympl_residual,
        }


def monodromy(orbit: ClosedOrbit, steps: int = 10_000, checkpoints: int = 500) -> MonodromyResult:
    """gamma_y(tau) from W' = J H''(y(t)) W, W(0) = I, integrated alongside the orbit.

    The path is kept at about `checkpoints` evenly spaced times; each stored
    matrix must satisfy the symplectic relation to 1e-7.
    """
    keep = max(1, steps // max(1, checkpoints))
    times, _, mats = _rk4(orbit.surface, orbit.x0, orbit.period, steps, with_jacobian=True, keep_every=keep)
    worst = max(symplectic_residual(w) for w in mats)
    if worst > 1e-7:
        raise AccuracyError(f"symplecticity residual {worst:.2e} along the path exceeds 1e-7")
    gamma = SymplecticMatrix.from_array(mats[-1], tol=1e-7)
    return MonodromyResult(gamma, floquet_multipliers(gamma), steps, gamma.sympl_residual, times, mats)


def ellipsoid_multipliers(radii, k: int) -> np.ndarray:
    """Closed-form Floquet multipliers of planar orbit k (0-based) of an ellipsoid."""
    sq = np.asarray(radii, dtype=float) ** 2
    out = [1.0 + 0j, 1.0 + 0j]
    for j in range(len(sq)):
        if j != k:
            z = np.exp(2j * np.pi * sq[k] / sq[j])
            out += [z, z.conjugate()]
    return np.array(out)


def match_multisets(a, b) -> float:
    """Largest distance under the optimal pairing of two equal-size complex multisets."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("multisets differ in size")
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


# -- Conley-Zehnder / Maslov-type index -------------------------------------

def _krein_counts(a, c, k):
    """(positive, negative) Krein counts on the c-eigenspace; balanced if defective."""
    dim = a.shape[0]
    _, s, vh = np.linalg.svd(a - c * np.eye(dim))
    v = vh[::-1][:k].conj().T
    if s[::-1][:k].max() > 1e-4 * max(1.0, np.linalg.norm(a, 2)):
        return k // 2, k - k // 2
    h = -1j * (v.conj().T @ standard_form(dim // 2) @ v)
    w = np.linalg.eigvalsh((h + h.conj().T) / 2)
    return int(np.sum(w > 0)), int(np.sum(w <= 0))


def rotation_function(m, circle_tol: float = 1e-6, merge_tol: float = 1e-6) -> complex:
    """Continuous unit-complex invariant of Sp(2n): (-1)^(m0/2) times the
    Krein-positive unit-circle eigenvalues (m0 = multiplicity of negative
    real eigenvalues).  Agrees with det of the unitary part on U(n).
    """
    a = np.asarray(m, dtype=float)
    lam = np.linalg.eigvals(a)
    m0 = int(np.sum((lam.imag == 0) & (lam.real < 0)))
    rho = complex((-1) ** (m0 // 2))
    upper = [z for z in lam if z.imag > 0 and abs(abs(z) - 1) < circle_tol]
    groups: list[list[complex]] = []
    for z in upper:
        for g in groups:
            if abs(g[0] - z) < merge_tol:
                g.append(z)
                break
        else:
            groups.append([z])
    for g in groups:
        c = complex(np.mean(g))
        c /= abs(c)
        pos, neg = _krein_counts(a, c, len(g))
        rho *= c**pos * c.conjugate() ** neg
    return rho


def _endpoint_angle(m, eps):
    """Angle correction at the end of a path, after the nudge M exp(-eps J)."""
    n = m.shape[0] // 2
    nudge = np.zeros_like(m)
    idx = np.r_[0:n]
    rot = rotation(-eps)
    # exp(-eps J) acts as R(-eps) on each (x_k, y_k) plane
    nudge[idx, idx] = rot[0, 0]
    nudge[idx, idx + n] = rot[0, 1]
    nudge[idx + n, idx] = rot[1, 0]
    nudge[idx + n, idx + n] = rot[1, 1]
    mp = m @ nudge
    shift = np.angle(rotation_function(mp) / rotation_function(m))
    lam = np.linalg.eigvals(mp)
    corr = 0.0
    for z in lam:
        if z.imag == 0 or abs(abs(z) - 1) > 1e-6:
            continue
        pos, _ = _krein_counts(mp, z / abs(z), 1)
        if pos:
            theta = np.angle(z) % (2 * np.pi)
            corr += np.pi - theta
    return shift + corr, mp


@dataclass(frozen=True)
class CZIndexResult:
    i_maslov: int
    i_ekeland: int
    nu: int
    degenerate: bool
    interval: tuple
    winding_trace: np.ndarray = field(repr=False)
    raw_angle: float = 0.0

    def to_json(self) -> dict:
        return {
            "i_maslov": self.i_maslov,
            "i_ekeland": self.i_ekeland,
            "nu": self.nu,
            "degenerate": self.degenerate,
            "interval": list(self.interval),
        }


def path_index(path, eps: float = 1e-6, max_jump: float = math.pi / 2) -> CZIndexResult:
    """Maslov-type index i(gamma, 1) of a sampled symplectic path from I.

    The rotation function is tracked continuously along the samples; its
    total winding plus an endpoint correction (computed after nudging the
    endpoint by exp(-eps J)) equals pi times the index.
    """
    path = np.asarray(path, dtype=float)
    if not np.allclose(path[0], np.eye(path.shape[1]), atol=1e-12):
        raise ValueError("path must start at the identity")
    phases = np.array([np.angle(rotation_function(w)) for w in path])
    steps = np.diff(phases)
    steps = (steps + np.pi) % (2 * np.pi) - np.pi
    if steps.size and np.max(np.abs(steps)) > max_jump:
        k = int(np.argmax(np.abs(steps)))
        raise ResolutionError(
            f"rotation function jumps by {steps[k]:.3f} rad between samples {k} and {k + 1}; "
            "sample the path more finely"
        )
    trace = np.concatenate([[0.0], np.cumsum(steps)])
    end = path[-1]
    corr, _ = _endpoint_angle(end, eps)
    total = trace[-1] + corr
    index = int(round(total / math.pi))
    if abs(total / math.pi - index) > 1e-2:
        raise ResolutionError(f"winding {total / math.pi:.6f} pi is not close to an integer")
    lam = np.linalg.eigvals(end)
    mult_one = int(np.sum(np.abs(lam - 1) < 1e-3))
    nu = ie.nu_from_matrix(end, 1, tol=1e-6)
    n = end.shape[0] // 2
    degenerate = mult_one > 2
    interval = (index, index + nu - 1) if degenerate else (index, index)
    return CZIndexResult(index, index - n, nu, degenerate, interval, trace, float(total))


def cz_index(orbit: ClosedOrbit, monodromy_path) -> CZIndexResult:
    """Index i(y, 1) of the linearized flow along `orbit`.

    `monodromy_path` is a MonodromyResult or a sequence of matrices from I to
    gamma_y(tau).  An endpoint with multiplier 1 of multiplicity above 2 sets
    `degenerate` and the interval [i, i + nu - 1] is the reliable output.
    """
    path = monodromy_path.path if isinstance(monodromy_path, MonodromyResult) else monodromy_path
    return path_index(path)


def rotation_path_index(omega: float, T: float) -> int:
    """Closed form for t -> R(omega t) on [0, T], omega T / 2pi not an integer."""
    return 2 * math.floor(omega * T / (2 * math.pi)) + 1


# -- classification ----------------------------------------------------------

def profile_from_blocks(i1: int, blocks, n: int) -> "ie.MonodromyProfile | None":
    """Swap the orbit-direction block at 1 for N1(1, 1) and pick the family.

    Returns None when the 1-eigenvalue carries more than one 2x2 block.
    """
    ones = [b for b in blocks if b.kind == "N1" and b.eig == 1]
    if len(ones) != 1:
        return None
    rest = [b for b in blocks if b is not ones[0]]
    minus = [b for b in rest if b.kind == "N1" and b.eig == -1]
    lead = [BlockLabel.N1(1, 1)]
    if any(b.b == 1 for b in minus):
        family = ie.CASE3 if len(rest) == 2 and any(b.kind == "R" for b in rest) else None
        if family is None:
            return None
        return ie.MonodromyProfile(i1, tuple(lead + rest), family, n)
    return ie.MonodromyProfile(i1, tuple(lead + rest), ie.R_FAMILY, n)


@dataclass(frozen=True)
class OrbitClassification:
    elliptic: bool
    hyperbolic: bool
    non_degenerate: bool
    e: int
    blocks: tuple
    profile: "ie.MonodromyProfile | None"
    mean_index: "float | None"
    irrational_mean_index: "bool | None"
    verdicts: tuple
    q_max: int

    def to_json(self) -> dict:
        return {
            "elliptic": self.elliptic,
            "hyperbolic": self.hyperbolic,
            "non_degenerate": self.non_degenerate,
            "elliptic_height": self.e,
            "blocks": [b.to_json() for b in self.blocks],
            "mean_index": self.mean_index,
            "irrational_mean_index": self.irrational_mean_index,
            "rationality": [str(v) for v in self.verdicts],
            "q_max": self.q_max,
        }


def classify_monodromy(m, i1: "int | None" = None, q_max: int = 10_000, tol: float = 1e-10):
    """Elliptic / hyperbolic / non-degenerate flags of a monodromy matrix.

    With i1 given, the mean index is computed from the extracted profile and
    each theta/pi is put through the bounded-denominator rationality test.
    """
    gm = m.gamma_tau if isinstance(m, MonodromyResult) else m
    arr = gm.entries if isinstance(gm, SymplecticMatrix) else np.asarray(gm, dtype=float)
    n = arr.shape[0] // 2
    lam = np.linalg.eigvals(arr)
    mult_one = int(np.sum(np.abs(lam - 1) < 1e-3))
    e = elliptic_height(SymplecticMatrix.from_array(arr, tol=1e-7))
    non_deg = mult_one == 2
    dec = classify_blocks(SymplecticMatrix.from_array(arr, tol=1e-7))
    profile = mean = irr = None
    verdicts = ()
    if i1 is not None and non_deg and dec.complete:
        profile = profile_from_blocks(i1, dec.blocks, n)
        if profile is not None:
            mean = ie.mean_index(profile).value
            verdicts = tuple(
                ie.rationality_test(b.theta / math.pi, q_max, tol) for b in profile.blocks if b.kind == "R"
            )
            irr = any(not v.rational for v in verdicts)
    return OrbitClassification(
        elliptic=e == 2 * n,
        hyperbolic=non_deg and e == 2,
        non_degenerate=non_deg,
        e=e,
        blocks=dec.blocks,
        profile=profile,
        mean_index=mean,
        irrational_mean_index=irr,
        verdicts=verdicts,
        q_max=q_max,
    )


def classify_orbit(orbit: ClosedOrbit, mono: MonodromyResult, cz: CZIndexResult, q_max: int = 10_000):
    return classify_monodromy(mono, cz.i_maslov, q_max)


@dataclass(frozen=True)
class OrbitReport:
    orbit: ClosedOrbit
    monodromy: MonodromyResult
    cz: CZIndexResult
    classification: OrbitClassification


def analyze_orbit(orbit: ClosedOrbit, steps: int = 10_000, checkpoints: int = 500, q_max: int = 10_000):
    """Monodromy, index and classification of one closed orbit."""
    mono = monodromy(orbit, steps, checkpoints)
    cz = cz_index(orbit, mono)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ie.NearIntegerWarning)
        cls = classify_orbit(orbit, mono, cz, q_max)
    return OrbitReport(orbit, mono, cz, cls)
