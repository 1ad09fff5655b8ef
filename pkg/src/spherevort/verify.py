"""Residual certification against the vorticity equation, the
mean-flow/disturbance equation, and the reduced equations."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import CapabilityError, DomainError, InvalidArgumentError
from .sphere import get_transform, SphereGrid

DEFAULT_T_RANGE = (0.1, 10.0)
DEFAULT_MU_MAX = 0.999


@dataclass(frozen=True)
class ResidualReport:
    """Summary of a pointwise residual evaluation."""

    n_points: int
    max_abs: float
    rms: float
    scale: float  # max |zeta| over the sample
    relative_max: float  # max_abs / (1 + scale)
    mode: str
    extras: dict | None = None

    @classmethod
    def from_values(cls, residual, scale, mode, extras=None):
        residual = np.asarray(residual, dtype=float).ravel()
        max_abs = float(np.max(np.abs(residual))) if residual.size else 0.0
        rms = float(np.sqrt(np.mean(residual**2))) if residual.size else 0.0
        scale = float(scale)
        return cls(
            n_points=residual.size,
            max_abs=max_abs,
            rms=rms,
            scale=scale,
            relative_max=max_abs / (1.0 + scale),
            mode=mode,
            extras=extras,
        )

    def to_dict(self):
        return {
            "n_points": self.n_points,
            "max_abs": self.max_abs,
            "rms": self.rms,
            "scale": self.scale,
            "relative_max": self.relative_max,
            "mode": self.mode,
        }


def residual_csv(points, residual):
    """`point_index,t,lambda,mu,residual` rows for a pointwise evaluation."""
    t, lam, mu = points
    buf = io.StringIO()
    buf.write("point_index,t,lambda,mu,residual\n")
    for i in range(len(residual)):
        buf.write(
            f"{i},{t[i]:.17g},{lam[i]:.17g},{mu[i]:.17g},{residual[i]:.17g}\n"
        )
    return buf.getvalue()


def sample_points(
    sol=None,
    n=200,
    seed=0,
    t_range=DEFAULT_T_RANGE,
    mu_max=DEFAULT_MU_MAX,
):
    """Quasi-random interior sample points (t, lambda, mu).

    Points falling outside the solution's validity domain are discarded and
    replaced, so the returned arrays always hold n admissible points.
    """
    sampler = qmc.Halton(d=3, scramble=True, seed=seed)
    ts, lams, mus = [], [], []
    need = n
    while need > 0:
        raw = sampler.random(max(2 * need, 16))
        t = t_range[0] + (t_range[1] - t_range[0]) * raw[:, 0]
        lam = 2.0 * np.pi * raw[:, 1]
        mu = -mu_max + 2.0 * mu_max * raw[:, 2]
        if sol is not None:
            ok = sol.domain.contains(t, lam, mu)
            t, lam, mu = t[ok], lam[ok], mu[ok]
        take = min(need, len(t))
        ts.append(t[:take])
        lams.append(lam[:take])
        mus.append(mu[:take])
        need -= take
    return np.concatenate(ts), np.concatenate(lams), np.concatenate(mus)


def _fd4(fn, x, h):
    """4th-order central first derivative of a 1-parameter shift family."""
    return (-fn(2 * h) + 8 * fn(h) - 8 * fn(-h) + fn(-2 * h)) / (12 * h)


def vorticity_residual(sol, points=None, mode="analytic", grid=None,
                       truncation=None, n_points=200, seed=0):
    """Residual of zeta_t + psi_lam zeta_mu - psi_mu zeta_lam + 2 Omega psi_lam.

    mode: "analytic" uses the solution's oracles (capability error if any is
    missing); "finite_difference" uses 4th-order central differences;
    "spectral" evaluates the residual on a full transform grid.
    """
    omega = sol.frame.omega
    if mode == "spectral":
        return _spectral_residual(sol, grid, truncation)
    if points is None:
        points = sample_points(sol, n=n_points, seed=seed)
    t, lam, mu = (np.asarray(p, dtype=float) for p in points)
    sol.domain.require(t, lam, mu)

    if mode == "analytic":
        sol.require_analytic()
        psi_lam = sol.partial("lam", t, lam, mu)
        psi_mu = sol.partial("mu", t, lam, mu)
        zeta_t = sol.zeta_partial("t", t, lam, mu)
        zeta_lam = sol.zeta_partial("lam", t, lam, mu)
        zeta_mu = sol.zeta_partial("mu", t, lam, mu)
        zeta = sol.zeta(t, lam, mu)
    elif mode == "finite_difference":
        h = 1e-3
        psi_lam = _fd4(lambda s: sol.psi(t, lam + s, mu), 0, h)
        psi_mu = _fd4(lambda s: sol.psi(t, lam, mu + s), 0, h)
        zeta = sol.zeta(t, lam, mu)
        zeta_t = _fd4(lambda s: sol.zeta(t + s, lam, mu), 0, h)
        zeta_lam = _fd4(lambda s: sol.zeta(t, lam + s, mu), 0, h)
        zeta_mu = _fd4(lambda s: sol.zeta(t, lam, mu + s), 0, h)
    else:
        raise InvalidArgumentError(f"unknown residual mode {mode!r}")

    residual = zeta_t + psi_lam * zeta_mu - psi_mu * zeta_lam + 2.0 * omega * psi_lam
    scale = np.max(np.abs(zeta)) if np.size(zeta) else 0.0
    report = ResidualReport.from_values(residual, scale, mode)
    if (
        mode == "analytic"
        and report.relative_max > 1e-12
        and getattr(sol, "mp_point_oracles", None) is not None
    ):
        # Large-amplitude high-degree fields make the Jacobian products so
        # much bigger than zeta that float64 cancellation error swamps the
        # true residual; redo the evaluation in extended precision.
        return _mp_residual(sol, t, lam, mu, omega)
    return report


def _mp_residual(sol, t, lam, mu, omega):
    import mpmath as mp

    oracles = sol.mp_point_oracles
    residual = np.empty(t.shape)
    zeta_abs = np.empty(t.shape)
    with mp.workdps(60):
        om = mp.mpf(omega)
        for i in np.ndindex(t.shape):
            args = (float(t[i]), float(lam[i]), float(mu[i]))
            z = oracles["zeta"](*args)
            r = (
                oracles["zeta_t"](*args)
                + oracles["psi_lam"](*args) * oracles["zeta_mu"](*args)
                - oracles["psi_mu"](*args) * oracles["zeta_lam"](*args)
                + 2 * om * oracles["psi_lam"](*args)
            )
            residual[i] = float(r)
            zeta_abs[i] = abs(float(z))
    scale = np.max(zeta_abs) if zeta_abs.size else 0.0
    return ResidualReport.from_values(residual, scale, "analytic")


def _spectral_residual(sol, grid=None, truncation=None, dt=1e-4):
    """Grid-wide residual using spectral differentiation in space and a
    4th-order time difference of the spectral vorticity."""
    if grid is None:
        grid = SphereGrid.build(64, 128)
    if truncation is None:
        truncation = (grid.nlon - 1) // 3
    tr = get_transform(grid, truncation)
    lam2, mu2 = grid.meshes()
    t0 = 1.0

    def zeta_coeffs(t):
        psi_c = tr.analyze(sol.psi(np.full_like(mu2, t), lam2, mu2))
        n = np.arange(truncation + 1)
        return psi_c * (-(n * (n + 1.0)))[:, None]

    psi_c = tr.analyze(sol.psi(np.full_like(mu2, t0), lam2, mu2))
    _, psi_lam, psi_mu = tr.synthesize_with_gradients(psi_c)
    zc = zeta_coeffs(t0)
    zeta, zeta_lam, zeta_mu = tr.synthesize_with_gradients(zc)
    zeta_t_c = (
        -zeta_coeffs(t0 + 2 * dt)
        + 8 * zeta_coeffs(t0 + dt)
        - 8 * zeta_coeffs(t0 - dt)
        + zeta_coeffs(t0 - 2 * dt)
    ) / (12 * dt)
    zeta_t = tr.synthesize(zeta_t_c)
    residual = (
        zeta_t
        + psi_lam * zeta_mu
        - psi_mu * zeta_lam
        + 2.0 * sol.frame.omega * psi_lam
    )
    return ResidualReport.from_values(residual, np.max(np.abs(zeta)), "spectral")


def disturbance_residual(sol, points=None, n_points=200, seed=0):
    """Residual of the mean-flow/disturbance form of the vorticity equation,
    including the Sturm-Liouville term in F = H'."""
    nu, r0, H = sol.nu, sol.r0, sol.h_profile
    if points is None:
        t, lam, mu = sample_points(n=n_points, seed=seed)
        theta = np.arccos(mu)
    else:
        t, lam, theta = (np.asarray(p, dtype=float) for p in points)
    if np.any(theta <= 0) or np.any(theta >= np.pi):
        raise DomainError("theta must be strictly inside (0, pi)")

    sin = np.sin(theta)
    cot = np.cos(theta) / sin
    F = H.deriv(theta)
    l1f = H.deriv(theta, 3) + H.deriv(theta, 2) * cot - F / sin**2

    psi_lam = sol.psi_hat_partial("lam", t, lam, theta)
    psi_theta = sol.psi_hat_partial("theta", t, lam, theta)
    zeta = sol.zeta_hat(t, lam, theta)
    zeta_t = sol.zeta_hat_partial("t", t, lam, theta)
    zeta_lam = sol.zeta_hat_partial("lam", t, lam, theta)
    zeta_theta = sol.zeta_hat_partial("theta", t, lam, theta)

    residual = (
        zeta_t
        + (nu / sin) * (psi_theta * zeta_lam - psi_lam * zeta_theta)
        + (F / sin) * zeta_lam
        - psi_lam * l1f / sin
        + psi_lam / r0
    )
    return ResidualReport.from_values(residual, np.max(np.abs(zeta)), "analytic")


def _reduced_w(v, p, q):
    q = np.asarray(q, dtype=float)
    return (
        v.partial("pp", p, q) / (1.0 - q * q)
        + (1.0 - q * q) * v.partial("qq", p, q)
        - 2.0 * q * v.partial("q", p, q)
    )


def _reduced_w_grads(v, p, q, h=1e-3):
    if hasattr(v, "has_partials") and v.has_partials("ppp", "ppq", "pqq", "qqq"):
        q = np.asarray(q, dtype=float)
        u = 1.0 - q * q
        w_p = (
            v.partial("ppp", p, q) / u
            + u * v.partial("pqq", p, q)
            - 2.0 * q * v.partial("pq", p, q)
        )
        w_q = (
            v.partial("ppq", p, q) / u
            + 2.0 * q * v.partial("pp", p, q) / u**2
            + u * v.partial("qqq", p, q)
            - 4.0 * q * v.partial("qq", p, q)
            - 2.0 * v.partial("q", p, q)
        )
        return w_p, w_q
    w_p = _fd4(lambda s: _reduced_w(v, p + s, q), 0, h)
    w_q = _fd4(lambda s: _reduced_w(v, p, q + s), 0, h)
    return w_p, w_q


def reduced_residual_scale(v, a, points=None, n_points=200, seed=0):
    """Residual of the scale-invariant reduction: w + a w_p - v_p w_q + v_q w_p."""
    p, q = _reduced_points(points, n_points, seed)
    w = _reduced_w(v, p, q)
    w_p, w_q = _reduced_w_grads(v, p, q)
    residual = w + a * w_p - v.partial("p", p, q) * w_q + v.partial("q", p, q) * w_p
    return ResidualReport.from_values(residual, np.max(np.abs(w)), "analytic")


def reduced_residual_wave(v, a, points=None, n_points=200, seed=0):
    """Residual of the traveling-wave reduction: -(v+aq)_q w_p + (v+aq)_p w_q,
    plus a gradient rank diagnostic of the w = F(v + a q) dependence."""
    p, q = _reduced_points(points, n_points, seed)
    w = _reduced_w(v, p, q)
    w_p, w_q = _reduced_w_grads(v, p, q)
    v_p = v.partial("p", p, q)
    v_q = v.partial("q", p, q)
    residual = -(v_q + a) * w_p + (v_p) * w_q
    grad_norms = np.sqrt((v_p**2 + (v_q + a) ** 2) * (w_p**2 + w_q**2))
    rank = np.max(np.abs(residual) / (1.0 + grad_norms))
    return ResidualReport.from_values(
        residual, np.max(np.abs(w)), "analytic",
        extras={"dependence_rank_residual": float(rank)},
    )


def linear_reduced_residual(v, a, b, c, points=None, n_points=200, seed=0):
    """Residual of the linear inhomogeneous reduced equation."""
    p, q = _reduced_points(points, n_points, seed)
    w = _reduced_w(v, p, q)
    residual = w - c * v.v(p, q) - c * a * q - b
    return ResidualReport.from_values(residual, np.max(np.abs(w)), "analytic")


def _reduced_points(points, n_points, seed):
    if points is not None:
        p, q = (np.asarray(x, dtype=float) for x in points)
        return p, q
    sampler = qmc.Halton(d=2, scramble=True, seed=seed)
    raw = sampler.random(n_points)
    return 2.0 * np.pi * raw[:, 0], -0.95 + 1.9 * raw[:, 1]


@dataclass(frozen=True)
class EquivalenceReport:
    passed: bool
    max_deviation: float
    n_points: int
    n_skipped: int


def equivalence_check(sol_a, sol_b, transform=None, points=None, tol=1e-10,
                      n_points=50, seed=0):
    """Check sol_b == transform applied to sol_a, pointwise on psi values.

    Points outside either domain after mapping are skipped; more than 10%
    skipped is itself a failure.
    """
    mapped = transform.apply_to_solution(sol_a) if transform is not None else sol_a
    if points is None:
        points = sample_points(sol_b, n=n_points, seed=seed)
    t, lam, mu = (np.asarray(p, dtype=float) for p in points)
    ok = mapped.domain.contains(t, lam, mu) & sol_b.domain.contains(t, lam, mu)
    n_skipped = int(np.sum(~ok))
    t, lam, mu = t[ok], lam[ok], mu[ok]
    if t.size == 0:
        return EquivalenceReport(False, float("inf"), 0, n_skipped)
    dev = float(np.max(np.abs(mapped.psi(t, lam, mu) - sol_b.psi(t, lam, mu))))
    passed = dev <= tol and n_skipped <= 0.1 * (t.size + n_skipped)
    return EquivalenceReport(passed, dev, int(t.size), n_skipped)
