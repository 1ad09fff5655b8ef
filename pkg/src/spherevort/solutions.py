"""Closed-form solution families of the barotropic vorticity equation.

Every constructor returns an AnalyticSolution carrying the stream function,
analytic partial-derivative oracles, and an analytic vorticity oracle with
its first partials, so residuals can be certified without finite
differences.  Missing oracles fall back to central differences of psi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CapabilityError,
    DegenerateCaseError,
    DomainError,
    InvalidArgumentError,
    InvalidParamsError,
    SingularTimeError,
    TopologyError,
)
from .profiles import Profile, parse_profile
from .sphere import Frame, assoc_legendre, legendre_poly

DEFAULT_BAND_DELTA = 1e-3

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _segment_quad(fn, upper):
    """Integral of fn from 0 to upper (elementwise) with a fixed 64-point rule.

    The rule is a smooth function of `upper`, so finite differences of the
    result are consistent with the true derivative.
    """
    upper = np.asarray(upper, dtype=float)
    x = 0.5 * upper[..., None] * (_GL_NODES + 1.0)
    w = 0.5 * upper[..., None] * _GL_WEIGHTS
    return np.sum(fn(x) * w, axis=-1)


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

class Domain:
    """Validity region of a solution, as a vectorized point predicate."""

    def __init__(self, kind, predicate=None, delta=0.0, description=""):
        self.kind = kind  # "global" | "band" | "chart"
        self._predicate = predicate
        self.delta = delta
        self.description = description or kind

    @classmethod
    def global_sphere(cls):
        return cls("global", description="entire sphere")

    @classmethod
    def band(cls, delta=DEFAULT_BAND_DELTA, t_nonzero=False):
        def pred(t, lam, mu):
            ok = np.abs(mu) <= 1.0 - delta
            if t_nonzero:
                ok = ok & (np.asarray(t) != 0.0)
            return ok

        return cls("band", pred, delta, f"|mu| <= 1-{delta}")

    @classmethod
    def chart_band(cls, delta=DEFAULT_BAND_DELTA):
        d = cls.band(delta)
        d.kind = "chart"
        d.description = f"single lambda chart, |mu| <= 1-{delta}"
        return d

    def contains(self, t, lam, mu):
        if self._predicate is None:
            return np.ones(np.broadcast(t, lam, mu).shape, dtype=bool)
        return self._predicate(
            np.asarray(t, dtype=float),
            np.asarray(lam, dtype=float),
            np.asarray(mu, dtype=float),
        )

    def require(self, t, lam, mu):
        if not np.all(self.contains(t, lam, mu)):
            raise DomainError(f"point outside solution domain ({self.description})")


# ---------------------------------------------------------------------------
# analytic solutions
# ---------------------------------------------------------------------------

_PSI_PARTIALS = ("t", "lam", "mu", "lamlam", "lammu", "mumu")
_ZETA_PARTIALS = ("t", "lam", "mu")
_FD_STEP = 1e-5


class AnalyticSolution:
    """A stream function psi(t, lambda, mu) with derivative oracles.

    `partials` maps names among t, lam, mu, lamlam, lammu, mumu to vectorized
    callables; `zeta_partials` maps t, lam, mu to partials of the vorticity.
    Anything missing is supplied by central finite differences.
    """

    def __init__(
        self,
        psi,
        frame,
        domain=None,
        partials=None,
        zeta=None,
        zeta_partials=None,
        label="",
    ):
        self._psi = psi
        self.frame = frame
        self.domain = domain or Domain.global_sphere()
        self._partials = dict(partials or {})
        self._zeta = zeta
        self._zeta_partials = dict(zeta_partials or {})
        self.label = label

    # -- stream function and partials ------------------------------------

    def psi(self, t, lam, mu):
        return self._psi(
            np.asarray(t, dtype=float),
            np.asarray(lam, dtype=float),
            np.asarray(mu, dtype=float),
        )

    def has_partial(self, name):
        return name in self._partials

    def partial(self, name, t, lam, mu):
        if name not in _PSI_PARTIALS:
            raise InvalidArgumentError(f"unknown partial {name!r}")
        fn = self._partials.get(name)
        if fn is not None:
            return fn(
                np.asarray(t, dtype=float),
                np.asarray(lam, dtype=float),
                np.asarray(mu, dtype=float),
            )
        return self._fd_partial(name, t, lam, mu)

    def _fd_partial(self, name, t, lam, mu):
        t = np.asarray(t, dtype=float)
        lam = np.asarray(lam, dtype=float)
        mu = np.asarray(mu, dtype=float)
        h = _FD_STEP
        f = self.psi
        if name == "t":
            return (f(t + h, lam, mu) - f(t - h, lam, mu)) / (2 * h)
        if name == "lam":
            return (f(t, lam + h, mu) - f(t, lam - h, mu)) / (2 * h)
        if name == "mu":
            return (f(t, lam, mu + h) - f(t, lam, mu - h)) / (2 * h)
        if name == "lamlam":
            return (
                f(t, lam + h, mu) - 2 * f(t, lam, mu) + f(t, lam - h, mu)
            ) / h**2
        if name == "mumu":
            return (
                f(t, lam, mu + h) - 2 * f(t, lam, mu) + f(t, lam, mu - h)
            ) / h**2
        # lammu
        return (
            f(t, lam + h, mu + h)
            - f(t, lam + h, mu - h)
            - f(t, lam - h, mu + h)
            + f(t, lam - h, mu - h)
        ) / (4 * h**2)

    # -- vorticity --------------------------------------------------------

    @property
    def has_analytic_zeta(self):
        return self._zeta is not None

    @property
    def has_analytic_residual_oracles(self):
        return (
            "lam" in self._partials
            and "mu" in self._partials
            and all(n in self._zeta_partials for n in _ZETA_PARTIALS)
        )

    def zeta(self, t, lam, mu):
        """Vorticity: psi_ll/(1-mu^2) + ((1-mu^2) psi_mu)_mu."""
        if self._zeta is not None:
            return self._zeta(
                np.asarray(t, dtype=float),
                np.asarray(lam, dtype=float),
                np.asarray(mu, dtype=float),
            )
        mu = np.asarray(mu, dtype=float)
        return (
            self.partial("lamlam", t, lam, mu) / (1.0 - mu * mu)
            + (1.0 - mu * mu) * self.partial("mumu", t, lam, mu)
            - 2.0 * mu * self.partial("mu", t, lam, mu)
        )

    def zeta_partial(self, name, t, lam, mu):
        if name not in _ZETA_PARTIALS:
            raise InvalidArgumentError(f"unknown vorticity partial {name!r}")
        fn = self._zeta_partials.get(name)
        if fn is not None:
            return fn(
                np.asarray(t, dtype=float),
                np.asarray(lam, dtype=float),
                np.asarray(mu, dtype=float),
            )
        return self._fd_zeta_partial(name, t, lam, mu)

    def _fd_zeta_partial(self, name, t, lam, mu):
        t = np.asarray(t, dtype=float)
        lam = np.asarray(lam, dtype=float)
        mu = np.asarray(mu, dtype=float)
        # 4th-order central differences; larger step because zeta itself may
        # be finite-differenced from psi.
        h = 1e-3 if self._zeta is None else 1e-4
        z = self.zeta

        def shifted(s):
            if name == "t":
                return z(t + s, lam, mu)
            if name == "lam":
                return z(t, lam + s, mu)
            return z(t, lam, mu + s)

        return (
            -shifted(2 * h) + 8 * shifted(h) - 8 * shifted(-h) + shifted(-2 * h)
        ) / (12 * h)

    def require_analytic(self):
        if not self.has_analytic_residual_oracles:
            raise CapabilityError(
                f"solution {self.label or '<anonymous>'} lacks analytic "
                "residual oracles"
            )


# ---------------------------------------------------------------------------
# Rossby-Haurwitz family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RHWaveParams:
    """Degree-n wave mix: list of (order m, amplitude, phase shift)."""

    n: int
    modes: tuple
    a: float
    omega: float

    def __post_init__(self):
        if self.n < 2:
            raise DegenerateCaseError(
                f"wave degree must be >= 2 (zonal-term denominator vanishes "
                f"at n=1), got n={self.n}"
            )
        orders = [m for (m, _, _) in self.modes]
        if len(set(orders)) != len(orders):
            raise InvalidParamsError("mode orders must be distinct")
        for m, _, _ in self.modes:
            if not 0 <= m <= self.n:
                raise InvalidParamsError(f"mode order {m} outside [0, {self.n}]")


def _assoc_legendre_d2(n, m, mu, p, dp):
    """Second mu-derivative of P_n^m from the associated Legendre ODE."""
    one_minus = 1.0 - mu * mu
    return (2.0 * mu * dp - (n * (n + 1.0) - m * m / one_minus) * p) / one_minus


def harmonic_norm(n, m):
    """Orthonormalization constant N such that N*P_n^m has unit L2 norm on
    the sphere (together with the e^{im lam} factor)."""
    return math.sqrt((2.0 * n + 1.0) / (4.0 * math.pi)) * math.exp(
        0.5 * (math.lgamma(n - m + 1.0) - math.lgamma(n + m + 1.0))
    )


def rh_generalized(params):
    """Generalized Rossby-Haurwitz wave: a degree-n harmonic mix drifting at
    angular speed a - omega on top of a zonal flow, globally valid.

    Mode amplitudes multiply orthonormalized basis functions
    N_n^m P_n^m(mu) cos(m w + delta), so an amplitude of 1 yields an O(1)
    field at every order m; this keeps multi-order mixes comparable in a
    power spectrum and keeps benchmark wind speeds on the scale of the
    amplitudes themselves.
    """
    n = params.n
    nn1 = n * (n + 1.0)
    a, omega = float(params.a), float(params.omega)
    zonal_b = -a * nn1 / (nn1 - 2.0) + omega
    modes = [
        (int(m), float(A) * harmonic_norm(n, int(m)), float(d))
        for (m, A, d) in params.modes
    ]
    drift = a - omega

    def terms(t, lam, mu, kind):
        t, lam, mu = np.broadcast_arrays(
            np.asarray(t, float), np.asarray(lam, float), np.asarray(mu, float)
        )
        out = np.zeros(mu.shape)
        w = lam - drift * t
        for m, A, delta in modes:
            p, dp = assoc_legendre(n, m, mu)
            phase = m * w + delta
            if kind == "psi":
                out += A * np.cos(phase) * p
            elif kind == "t":
                out += A * m * drift * np.sin(phase) * p
            elif kind == "lam":
                out += -A * m * np.sin(phase) * p
            elif kind == "mu":
                out += A * np.cos(phase) * dp
            elif kind == "lamlam":
                out += -A * m * m * np.cos(phase) * p
            elif kind == "lammu":
                out += -A * m * np.sin(phase) * dp
            elif kind == "mumu":
                out += A * np.cos(phase) * _assoc_legendre_d2(n, m, mu, p, dp)
        return out

    psi = lambda t, lam, mu: terms(t, lam, mu, "psi") + zonal_b * mu
    partials = {
        "t": lambda t, lam, mu: terms(t, lam, mu, "t"),
        "lam": lambda t, lam, mu: terms(t, lam, mu, "lam"),
        "mu": lambda t, lam, mu: terms(t, lam, mu, "mu") + zonal_b,
        "lamlam": lambda t, lam, mu: terms(t, lam, mu, "lamlam"),
        "lammu": lambda t, lam, mu: terms(t, lam, mu, "lammu"),
        "mumu": lambda t, lam, mu: terms(t, lam, mu, "mumu"),
    }
    # zeta = -n(n+1) * wave - 2 B mu
    zeta = lambda t, lam, mu: -nn1 * terms(t, lam, mu, "psi") - 2.0 * zonal_b * np.asarray(mu, float)
    zeta_partials = {
        "t": lambda t, lam, mu: -nn1 * terms(t, lam, mu, "t"),
        "lam": lambda t, lam, mu: -nn1 * terms(t, lam, mu, "lam"),
        "mu": lambda t, lam, mu: -nn1 * terms(t, lam, mu, "mu")
        - 2.0 * zonal_b * np.ones(np.broadcast(t, lam, mu).shape),
    }
    frame = Frame.rotating(omega)
    sol = AnalyticSolution(
        psi,
        frame,
        Domain.global_sphere(),
        partials,
        zeta,
        zeta_partials,
        label=f"rh_generalized(n={n}, a={a}, omega={omega})",
    )
    sol.mp_point_oracles = _make_rh_mp_oracles(n, modes, a, omega, zonal_b)
    return sol


def _make_rh_mp_oracles(n, modes, a, omega, zonal_b):
    """Extended-precision point oracles for the harmonic-wave family.

    Raw associated Legendre polynomials at high (n, m) with Fig.-1-scale
    amplitudes push the Jacobian products far beyond what float64 can cancel;
    these mpmath oracles let the residual check run at the caller's working
    precision.  Keys match what verify.vorticity_residual needs.
    """
    import mpmath as mp

    K = n * (n + 1)

    def legendre_parts(m, x):
        one = 1 - x * x
        s = mp.sqrt(one)
        pmm = mp.mpf(1)
        for k in range(1, m + 1):
            pmm *= -(2 * k - 1) * s
        if n == m:
            p, pl = pmm, mp.mpf(0)
        else:
            pl, p = pmm, (2 * m + 1) * x * pmm
            for k in range(m + 2, n + 1):
                p, pl = ((2 * k - 1) * x * p - (k + m - 1) * pl) / (k - m), p
        dp = ((n + m) * pl - n * x * p) / one
        return p, dp

    def parts(t, lam, mu):
        t, lam, mu = mp.mpf(t), mp.mpf(lam), mp.mpf(mu)
        drift = mp.mpf(a) - mp.mpf(omega)
        w = lam - drift * t
        s_t = s_lam = s_mu = s = mp.mpf(0)
        for m, A, delta in modes:
            p, dp = legendre_parts(m, mu)
            phase = m * w + delta
            cosp, sinp = mp.cos(phase), mp.sin(phase)
            s += A * cosp * p
            s_t += A * m * drift * sinp * p
            s_lam += -A * m * sinp * p
            s_mu += A * cosp * dp
        return s, s_t, s_lam, s_mu

    B = mp.mpf(zonal_b)

    def psi_lam(t, lam, mu):
        return parts(t, lam, mu)[2]

    def psi_mu(t, lam, mu):
        return parts(t, lam, mu)[3] + B

    def zeta(t, lam, mu):
        return -K * parts(t, lam, mu)[0] - 2 * B * mp.mpf(mu)

    def zeta_t(t, lam, mu):
        return -K * parts(t, lam, mu)[1]

    def zeta_lam(t, lam, mu):
        return -K * parts(t, lam, mu)[2]

    def zeta_mu(t, lam, mu):
        return -K * parts(t, lam, mu)[3] - 2 * B

    return {
        "psi_lam": psi_lam,
        "psi_mu": psi_mu,
        "zeta": zeta,
        "zeta_t": zeta_t,
        "zeta_lam": zeta_lam,
        "zeta_mu": zeta_mu,
    }


def classic_mean_flow_speed(n, omega):
    """Wave parameter a for which the zonal mean flow vanishes."""
    nn1 = n * (n + 1.0)
    return (nn1 - 2.0) / nn1 * omega


def rh_classic(n, m, amplitude, omega):
    """Single-mode Rossby-Haurwitz wave with vanishing mean flow."""
    if not 0 <= m <= n:
        raise InvalidParamsError(f"require 0 <= m <= n, got ({n}, {m})")
    a = classic_mean_flow_speed(n, omega)
    return rh_generalized(
        RHWaveParams(n=n, modes=((m, amplitude, 0.0),), a=a, omega=omega)
    )


def phase_speed(n, omega):
    """Angular phase speed of a Rossby-Haurwitz wave: -2 omega / (n(n+1))."""
    if n < 1:
        raise InvalidArgumentError(f"degree must be >= 1, got {n}")
    return -2.0 * omega / (n * (n + 1.0))


def solid_body(omega):
    """psi = omega * mu: steady solid-body rotation in the rotating frame."""
    return rh_generalized(RHWaveParams(n=2, modes=(), a=0.0, omega=omega))


# ---------------------------------------------------------------------------
# arctanh families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArctanhParams:
    """Parameters of the quadrature family psi = g*lam + f + h*arctanh(mu) + ...

    g, f, h are time profiles; w is a profile in gamma = mu - int g dt.
    """

    g: Profile
    f: Profile
    h: Profile
    w: Profile
    delta: float = DEFAULT_BAND_DELTA
    allow_chart: bool = False


def arctanh_family(params):
    """The quadrature-integrable family from the J1 + Z(g) reduction.

    Vorticity is zeta = w(mu - int g dt), a traveling profile in mu; the
    stream function itself needs a double quadrature, fixed by the gauge
    that the inner antiderivative vanishes at gamma = 0 and the outer
    integral starts at mu = 0.
    """
    g, f, h, w = params.g, params.f, params.h, params.w
    if not g.is_zero() and not params.allow_chart:
        raise TopologyError(
            "nonzero g makes psi multivalued on the sphere; pass "
            "allow_chart=True to build the single-chart solution"
        )
    domain = (
        Domain.chart_band(params.delta)
        if not g.is_zero()
        else Domain.band(params.delta)
    )

    def gamma(t, mu):
        return mu - g.antideriv(t)

    def big_phi(t, mu):
        # int_0^mu W1(gamma(t, x)) / (1 - x^2) dx,  W1 = int_0^gamma w
        t = np.asarray(t, dtype=float)
        G = g.antideriv(t)

        def integrand(x):
            return w.antideriv(x - G[..., None]) / (1.0 - x * x)

        return _segment_quad(integrand, np.asarray(mu, dtype=float))

    def big_phi_t(t, mu):
        t = np.asarray(t, dtype=float)
        G = g.antideriv(t)
        gt = g(t)

        def integrand(x):
            return w(x - G[..., None]) / (1.0 - x * x)

        return -gt * _segment_quad(integrand, np.asarray(mu, dtype=float))

    def psi(t, lam, mu):
        t, lam, mu = np.broadcast_arrays(
            np.asarray(t, float), np.asarray(lam, float), np.asarray(mu, float)
        )
        out = f(t) + h(t) * np.arctanh(mu)
        if not g.is_zero():
            out = out + g(t) * lam
        if not w.is_zero():
            out = out + big_phi(t, mu)
        return out

    def psi_t(t, lam, mu):
        t, lam, mu = np.broadcast_arrays(
            np.asarray(t, float), np.asarray(lam, float), np.asarray(mu, float)
        )
        out = f.deriv(t) + h.deriv(t) * np.arctanh(mu)
        if not g.is_zero():
            out = out + g.deriv(t) * lam
            if not w.is_zero():
                out = out + big_phi_t(t, mu)
        return out

    def psi_mu(t, lam, mu):
        t, lam, mu = np.broadcast_arrays(
            np.asarray(t, float), np.asarray(lam, float), np.asarray(mu, float)
        )
        return (h(t) + w.antideriv(gamma(t, mu))) / (1.0 - mu * mu)

    def psi_mumu(t, lam, mu):
        t, lam, mu = np.broadcast_arrays(
            np.asarray(t, float), np.asarray(lam, float), np.asarray(mu, float)
        )
        one_minus = 1.0 - mu * mu
        gam = gamma(t, mu)
        return (
            w(gam) / one_minus
            + 2.0 * mu * (h(t) + w.antideriv(gam)) / one_minus**2
        )

    zeros = lambda t, lam, mu: np.zeros(np.broadcast(t, lam, mu).shape)
    partials = {
        "t": psi_t,
        "lam": lambda t, lam, mu: np.broadcast_to(
            g(t), np.broadcast(t, lam, mu).shape
        ).copy(),
        "mu": psi_mu,
        "lamlam": zeros,
        "lammu": zeros,
        "mumu": psi_mumu,
    }
    zeta = lambda t, lam, mu: np.broadcast_to(
        w(gamma(np.asarray(t, float), np.asarray(mu, float))),
        np.broadcast(t, lam, mu).shape,
    ).copy()
    zeta_partials = {
        "t": lambda t, lam, mu: np.broadcast_to(
            -g(np.asarray(t, float))
            * w.deriv(gamma(np.asarray(t, float), np.asarray(mu, float))),
            np.broadcast(t, lam, mu).shape,
        ).copy(),
        "lam": zeros,
        "mu": lambda t, lam, mu: np.broadcast_to(
            w.deriv(gamma(np.asarray(t, float), np.asarray(mu, float))),
            np.broadcast(t, lam, mu).shape,
        ).copy(),
    }
    return AnalyticSolution(
        psi,
        Frame.rest(),
        domain,
        partials,
        zeta,
        zeta_partials,
        label="arctanh_family",
    )


class RotatedArctanhDomain(Domain):
    """Points away from the singular circle sqrt(1-mu^2) cos(lambda) = +-1."""

    def __init__(self, delta):
        def pred(t, lam, mu):
            s = np.sqrt(1.0 - mu * mu) * np.cos(lam)
            return np.abs(s) <= 1.0 - delta

        super().__init__(
            "band", pred, delta, f"|sqrt(1-mu^2) cos(lam)| <= 1-{delta}"
        )


def rotated_arctanh(f, h, w_of_s, delta=DEFAULT_BAND_DELTA):
    """The J2-rotated image of the g = 0 arctanh family:

    psi = f(t) - h(t) arctanh(s) + W(s),  s = sqrt(1-mu^2) cos(lambda).
    """
    f, h, W = parse_profile(f), parse_profile(h), parse_profile(w_of_s)

    def s_and_grads(lam, mu):
        root = np.sqrt(1.0 - mu * mu)
        s = root * np.cos(lam)
        s_lam = -root * np.sin(lam)
        s_mu = -mu * np.cos(lam) / root
        return s, s_lam, s_mu

    def q_of(t, s):
        return -h(t) / (1.0 - s * s) + W.deriv(s)

    def psi(t, lam, mu):
        t, lam, mu = np.broadcast_arrays(
            np.asarray(t, float), np.asarray(lam, float), np.asarray(mu, float)
        )
        s = np.sqrt(1.0 - mu * mu) * np.cos(lam)
        return f(t) - h(t) * np.arctanh(s) + W(s)

    def psi_t(t, lam, mu):
        t, lam, mu = np.broadcast_arrays(
            np.asarray(t, float), np.asarray(lam, float), np.asarray(mu, float)
        )
        s = np.sqrt(1.0 - mu * mu) * np.cos(lam)
        return f.deriv(t) - h.deriv(t) * np.arctanh(s)

    def make_first(which):
        def fn(t, lam, mu):
            t, lam, mu = np.broadcast_arrays(
                np.asarray(t, float), np.asarray(lam, float), np.asarray(mu, float)
            )
            s, s_lam, s_mu = s_and_grads(lam, mu)
            return q_of(t, s) * (s_lam if which == "lam" else s_mu)

        return fn

    def make_second(which):
        def fn(t, lam, mu):
            t, lam, mu = np.broadcast_arrays(
                np.asarray(t, float), np.asarray(lam, float), np.asarray(mu, float)
            )
            s, s_lam, s_mu = s_and_grads(lam, mu)
            q = q_of(t, s)
            dq = -2.0 * h(t) * s / (1.0 - s * s) ** 2 + W.deriv(s, 2)
            root = np.sqrt(1.0 - mu * mu)
            if which == "lamlam":
                return dq * s_lam * s_lam + q * (-s)
            if which == "lammu":
                s_lammu = mu * np.sin(lam) / root
                return dq * s_lam * s_mu + q * s_lammu
            s_mumu = -np.cos(lam) / root**3
            return dq * s_mu * s_mu + q * s_mumu

        return fn

    def zeta(t, lam, mu):
        t, lam, mu = np.broadcast_arrays(
            np.asarray(t, float), np.asarray(lam, float), np.asarray(mu, float)
        )
        s = np.sqrt(1.0 - mu * mu) * np.cos(lam)
        return (1.0 - s * s) * W.deriv(s, 2) - 2.0 * s * W.deriv(s)

    def make_zeta_first(which):
        def fn(t, lam, mu):
            t, lam, mu = np.broadcast_arrays(
                np.asarray(t, float), np.asarray(lam, float), np.asarray(mu, float)
            )
            s, s_lam, s_mu = s_and_grads(lam, mu)
            dz = (
                (1.0 - s * s) * W.deriv(s, 3)
                - 4.0 * s * W.deriv(s, 2)
                - 2.0 * W.deriv(s)
            )
            return dz * (s_lam if which == "lam" else s_mu)

        return fn

    zeros = lambda t, lam, mu: np.zeros(np.broadcast(t, lam, mu).shape)
    partials = {
        "t": psi_t,
        "lam": make_first("lam"),
        "mu": make_first("mu"),
        "lamlam": make_second("lamlam"),
        "lammu": make_second("lammu"),
        "mumu": make_second("mumu"),
    }
    zeta_partials = {
        "t": zeros,
        "lam": make_zeta_first("lam"),
        "mu": make_zeta_first("mu"),
    }
    return AnalyticSolution(
        psi,
        Frame.rest(),
        RotatedArctanhDomain(delta),
        partials,
        zeta,
        zeta_partials,
        label="rotated_arctanh",
    )


# ---------------------------------------------------------------------------
# Disturbance-stream-function solutions (mean flow + scaled disturbance in (t, lambda, theta))
# ---------------------------------------------------------------------------

class DisturbanceSolution:
    """A disturbance stream function psi-hat(t, lambda, theta) and oracles.

    These objects live in the mean-flow/disturbance split: the full stream
    function is nu * psi_hat + int F dtheta, with F = H'.  All partials and
    the vorticity zeta-hat (spherical Laplacian in theta) are analytic.
    """

    def __init__(self, nu, r0, h_profile, psi_hat, partials, zeta_hat,
                 zeta_partials, domain_delta=DEFAULT_BAND_DELTA, label=""):
        if nu == 0:
            raise InvalidArgumentError("nu must be nonzero")
        if r0 <= 0:
            raise InvalidArgumentError("R0 must be positive")
        self.nu = float(nu)
        self.r0 = float(r0)
        self.h_profile = h_profile
        self._psi_hat = psi_hat
        self._partials = partials  # keys: t, lam, theta
        self._zeta_hat = zeta_hat
        self._zeta_partials = zeta_partials  # keys: t, lam, theta
        self.domain_delta = domain_delta
        self.label = label

    def _check(self, t, theta):
        t = np.asarray(t, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if np.any(t == 0.0):
            raise SingularTimeError(f"{self.label} is singular at t = 0")
        if np.any(theta <= 0.0) or np.any(theta >= math.pi):
            raise DomainError("theta must lie strictly inside (0, pi)")

    def psi_hat(self, t, lam, theta):
        self._check(t, theta)
        return self._psi_hat(
            np.asarray(t, float), np.asarray(lam, float), np.asarray(theta, float)
        )

    def psi_hat_partial(self, name, t, lam, theta):
        self._check(t, theta)
        return self._partials[name](
            np.asarray(t, float), np.asarray(lam, float), np.asarray(theta, float)
        )

    def zeta_hat(self, t, lam, theta):
        self._check(t, theta)
        return self._zeta_hat(
            np.asarray(t, float), np.asarray(lam, float), np.asarray(theta, float)
        )

    def zeta_hat_partial(self, name, t, lam, theta):
        self._check(t, theta)
        return self._zeta_partials[name](
            np.asarray(t, float), np.asarray(lam, float), np.asarray(theta, float)
        )


def _mean_flow_zeta_parts(H, nu, r0):
    """zeta-hat shared by psi1/psi2 (their arctanh parts are harmonic)."""

    def zeta_hat(t, lam, theta):
        cot = np.cos(theta) / np.sin(theta)
        return -np.cos(theta) / (nu * r0) - (
            H.deriv(theta, 2) + H.deriv(theta) * cot
        ) / nu

    def zeta_hat_theta(t, lam, theta):
        sin, cos = np.sin(theta), np.cos(theta)
        return np.sin(theta) / (nu * r0) - (
            H.deriv(theta, 3)
            + H.deriv(theta, 2) * cos / sin
            - H.deriv(theta) / sin**2
        ) / nu

    zeros = lambda t, lam, theta: np.zeros(np.broadcast(t, lam, theta).shape)
    return zeta_hat, {"t": zeros, "lam": zeros, "theta": zeta_hat_theta}


def disturbance_psi1(c1, c2, nu, r0, h_profile):
    """Zonal mean-flow solution with a 1/t log-tangent disturbance."""
    H = parse_profile(h_profile)
    c1, c2 = float(c1), float(c2)

    def base(theta):
        return np.cos(theta) / (2.0 * nu * r0) - H(theta) / nu

    def log_tan(theta):
        return np.log(np.abs(np.tan(theta / 2.0)))

    def psi_hat(t, lam, theta):
        t, lam, theta = np.broadcast_arrays(t, lam, theta)
        return base(theta) + c1 / t + (c2 / t) * log_tan(theta)

    def p_t(t, lam, theta):
        t, lam, theta = np.broadcast_arrays(t, lam, theta)
        return -(c1 + c2 * log_tan(theta)) / t**2

    def p_theta(t, lam, theta):
        t, lam, theta = np.broadcast_arrays(t, lam, theta)
        return (
            -np.sin(theta) / (2.0 * nu * r0)
            - H.deriv(theta) / nu
            + c2 / (t * np.sin(theta))
        )

    zeros = lambda t, lam, theta: np.zeros(np.broadcast(t, lam, theta).shape)
    zeta_hat, zeta_partials = _mean_flow_zeta_parts(H, float(nu), float(r0))
    return DisturbanceSolution(
        nu,
        r0,
        H,
        psi_hat,
        {"t": p_t, "lam": zeros, "theta": p_theta},
        zeta_hat,
        zeta_partials,
        label="disturbance_psi1",
    )


def disturbance_psi2(c1, c2, nu, r0, h_profile):
    """The J2-rotated companion of psi1: disturbance in kappa = sin(theta) cos(lambda + t/(2 R0))."""
    H = parse_profile(h_profile)
    c1, c2 = float(c1), float(c2)
    r0 = float(r0)

    def kappa_parts(t, lam, theta):
        phase = lam + t / (2.0 * r0)
        sin, cos = np.sin(theta), np.cos(theta)
        kappa = sin * np.cos(phase)
        k_t = -sin * np.sin(phase) / (2.0 * r0)
        k_lam = -sin * np.sin(phase)
        k_theta = cos * np.cos(phase)
        return kappa, k_t, k_lam, k_theta

    def psi_hat(t, lam, theta):
        t, lam, theta = np.broadcast_arrays(t, lam, theta)
        kappa, *_ = kappa_parts(t, lam, theta)
        return (
            np.cos(theta) / (2.0 * nu * r0)
            - H(theta) / nu
            + c1 / t
            - (2.0 * c2 / t) * np.arctanh(kappa)
        )

    def p_t(t, lam, theta):
        t, lam, theta = np.broadcast_arrays(t, lam, theta)
        kappa, k_t, _, _ = kappa_parts(t, lam, theta)
        return (
            -c1 / t**2
            + (2.0 * c2 / t**2) * np.arctanh(kappa)
            - (2.0 * c2 / t) * k_t / (1.0 - kappa**2)
        )

    def p_lam(t, lam, theta):
        t, lam, theta = np.broadcast_arrays(t, lam, theta)
        kappa, _, k_lam, _ = kappa_parts(t, lam, theta)
        return -(2.0 * c2 / t) * k_lam / (1.0 - kappa**2)

    def p_theta(t, lam, theta):
        t, lam, theta = np.broadcast_arrays(t, lam, theta)
        kappa, _, _, k_theta = kappa_parts(t, lam, theta)
        return (
            -np.sin(theta) / (2.0 * nu * r0)
            - H.deriv(theta) / nu
            - (2.0 * c2 / t) * k_theta / (1.0 - kappa**2)
        )

    zeta_hat, zeta_partials = _mean_flow_zeta_parts(H, float(nu), r0)
    return DisturbanceSolution(
        nu,
        r0,
        H,
        psi_hat,
        {"t": p_t, "lam": p_lam, "theta": p_theta},
        zeta_hat,
        zeta_partials,
        label="disturbance_psi2",
    )


# ---------------------------------------------------------------------------
# reduced-equation solutions v(p, q)
# ---------------------------------------------------------------------------

class ReducedSolution:
    """A reduced-variable solution v(p, q) with derivative oracles."""

    def __init__(self, v, partials=None, label=""):
        self._v = v
        self._partials = dict(partials or {})
        self.label = label

    def v(self, p, q):
        return self._v(np.asarray(p, float), np.asarray(q, float))

    def has_partials(self, *names):
        return all(name in self._partials for name in names)

    def partial(self, name, p, q):
        fn = self._partials.get(name)
        if fn is not None:
            return fn(np.asarray(p, float), np.asarray(q, float))
        h = _FD_STEP
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        f = self.v
        if name == "p":
            return (f(p + h, q) - f(p - h, q)) / (2 * h)
        if name == "q":
            return (f(p, q + h) - f(p, q - h)) / (2 * h)
        if name == "pp":
            return (f(p + h, q) - 2 * f(p, q) + f(p - h, q)) / h**2
        if name == "qq":
            return (f(p, q + h) - 2 * f(p, q) + f(p, q - h)) / h**2
        if name == "pq":
            return (
                f(p + h, q + h) - f(p + h, q - h) - f(p - h, q + h) + f(p - h, q - h)
            ) / (4 * h**2)
        raise InvalidArgumentError(f"unknown reduced partial {name!r}")


def linear_reduced_particular(a, b, c):
    """Particular solutions of the linear inhomogeneous reduced equation,
    one closed form per regime of c (generic, 0, -2)."""
    a, b, c = float(a), float(b), float(c)
    zeros = lambda p, q: np.zeros(np.broadcast(p, q).shape)
    if c not in (0.0, -2.0):
        const = -c * a / (c + 2.0)
        v = lambda p, q: np.broadcast_to(-b / c + const * np.asarray(q, float),
                                         np.broadcast(p, q).shape).copy()
        partials = {
            "p": zeros,
            "q": lambda p, q: np.full(np.broadcast(p, q).shape, const),
            "pp": zeros,
            "pq": zeros,
            "qq": zeros,
        }
        label = f"linear_particular(c={c})"
    elif c == 0.0:
        def v(p, q):
            q = np.asarray(q, float)
            return np.broadcast_to(-b / 2.0 * np.log(np.abs(1.0 - q * q)),
                                   np.broadcast(p, q).shape).copy()

        partials = {
            "p": zeros,
            "q": lambda p, q: np.broadcast_to(
                b * np.asarray(q, float) / (1.0 - np.asarray(q, float) ** 2),
                np.broadcast(p, q).shape,
            ).copy(),
            "pp": zeros,
            "pq": zeros,
            "qq": lambda p, q: np.broadcast_to(
                b
                * (1.0 + np.asarray(q, float) ** 2)
                / (1.0 - np.asarray(q, float) ** 2) ** 2,
                np.broadcast(p, q).shape,
            ).copy(),
        }
        label = "linear_particular(c=0)"
    else:  # c == -2
        def v(p, q):
            q = np.asarray(q, float)
            return np.broadcast_to(
                b / 2.0 + a / 3.0 * q * np.log(np.abs(1.0 - q * q)),
                np.broadcast(p, q).shape,
            ).copy()

        def v_q(p, q):
            q = np.asarray(q, float)
            one = 1.0 - q * q
            return np.broadcast_to(
                a / 3.0 * (np.log(np.abs(one)) - 2.0 * q * q / one),
                np.broadcast(p, q).shape,
            ).copy()

        def v_qq(p, q):
            q = np.asarray(q, float)
            one = 1.0 - q * q
            return np.broadcast_to(
                a / 3.0 * (-2.0 * q / one - 4.0 * q / one**2),
                np.broadcast(p, q).shape,
            ).copy()

        partials = {"p": zeros, "q": v_q, "pp": zeros, "pq": zeros, "qq": v_qq}
        label = "linear_particular(c=-2)"
    return ReducedSolution(v, partials, label)


def legendre_mode_solution(n, m, amplitude, a, c, global_domain=True):
    """Separated mode of the homogeneous reduced equation plus the zonal
    particular term: v = Re(A e^{imp} P_n^m(q)) - a c q / (c + 2)."""
    if abs(n * (n + 1.0) + c) > 1e-12:
        raise InvalidParamsError(f"need n(n+1) = -c, got n={n}, c={c}")
    if c == -2.0:
        raise DegenerateCaseError("zonal term undefined at c = -2 (n = 1)")
    if global_domain and (n != int(n) or not 0 <= m <= n):
        raise InvalidParamsError(
            "globally valid modes require integer 0 <= m <= n "
            "(non-integer degrees have singular points)"
        )
    n, m = int(n), int(m)
    A = complex(amplitude)
    zonal = -a * c / (c + 2.0)

    def parts(p, q, kind):
        p, q = np.broadcast_arrays(np.asarray(p, float), np.asarray(q, float))
        pn, dpn = assoc_legendre(n, m, q)
        e = np.exp(1j * m * p)
        if kind == "v":
            return np.real(A * e * pn) + zonal * q
        if kind == "p":
            return np.real(A * 1j * m * e * pn)
        if kind == "q":
            return np.real(A * e * dpn) + zonal
        if kind == "pp":
            return np.real(-A * m * m * e * pn)
        if kind == "pq":
            return np.real(A * 1j * m * e * dpn)
        d2 = _assoc_legendre_d2(n, m, q, pn, dpn)
        if kind == "qq":
            return np.real(A * e * d2)
        # third-order partials (exact w-gradients in the reduced residuals)
        if kind == "ppp":
            return np.real(-A * 1j * m**3 * e * pn)
        if kind == "ppq":
            return np.real(-A * m * m * e * dpn)
        if kind == "pqq":
            return np.real(A * 1j * m * e * d2)
        # qqq: differentiate the defining ODE  u d2 = 2q dp - (K - m^2/u) p
        u = 1.0 - q * q
        K = n * (n + 1.0)
        n_prime = (
            2.0 * dpn
            + 2.0 * q * d2
            + (2.0 * q * m * m / u**2) * pn
            - (K - m * m / u) * dpn
        )
        d3 = (n_prime + 2.0 * q * d2) / u
        return np.real(A * e * d3)

    return ReducedSolution(
        lambda p, q: parts(p, q, "v"),
        {
            k: (lambda p, q, k=k: parts(p, q, k))
            for k in ("p", "q", "pp", "pq", "qq", "ppp", "ppq", "pqq", "qqq")
        },
        label=f"legendre_mode(n={n}, m={m})",
    )


def test_nonsolution(omega):
    """psi = mu * lambda: deliberately NOT a solution (residual 2*omega*mu)."""
    zeros = lambda t, lam, mu: np.zeros(np.broadcast(t, lam, mu).shape)
    b = np.broadcast_arrays
    return AnalyticSolution(
        lambda t, lam, mu: np.asarray(mu, float) * np.asarray(lam, float)
        * np.ones(np.broadcast(t, lam, mu).shape),
        Frame.rotating(omega),
        Domain.band(),
        {
            "t": zeros,
            "lam": lambda t, lam, mu: b(np.asarray(mu, float) * np.ones(np.broadcast(t, lam, mu).shape))[0].copy(),
            "mu": lambda t, lam, mu: b(np.asarray(lam, float) * np.ones(np.broadcast(t, lam, mu).shape))[0].copy(),
            "lamlam": zeros,
            "lammu": lambda t, lam, mu: np.ones(np.broadcast(t, lam, mu).shape),
            "mumu": zeros,
        },
        lambda t, lam, mu: -2.0 * np.asarray(mu, float) * np.asarray(lam, float)
        * np.ones(np.broadcast(t, lam, mu).shape),
        {
            "t": zeros,
            "lam": lambda t, lam, mu: -2.0 * np.asarray(mu, float)
            * np.ones(np.broadcast(t, lam, mu).shape),
            "mu": lambda t, lam, mu: -2.0 * np.asarray(lam, float)
            * np.ones(np.broadcast(t, lam, mu).shape),
        },
        label="test_nonsolution",
    )


# ---------------------------------------------------------------------------
# flat key-value solution specs (CLI / service surface)
# ---------------------------------------------------------------------------

def _parse_modes(entries):
    modes = []
    for entry in entries:
        parts = str(entry).split(":")
        if len(parts) != 3:
            raise InvalidArgumentError(
                f"mode spec must be m:amplitude:delta, got {entry!r}"
            )
        modes.append((int(parts[0]), float(parts[1]), float(parts[2])))
    return tuple(modes)


def build_solution(spec):
    """Build a solution from a flat key-value spec (family + parameters)."""
    spec = dict(spec)
    family = str(spec.get("family", "")).lower().replace("_", "-")
    omega = float(spec.get("omega", 0.0))
    if family == "rh":
        n = int(spec["n"])
        modes = _parse_modes(spec.get("modes", []))
        a_raw = spec.get("a", 0.0)
        if isinstance(a_raw, str) and a_raw.replace("_", "-") in ("rh-classic", "classic"):
            a = classic_mean_flow_speed(n, omega)
        else:
            a = float(a_raw)
        return rh_generalized(RHWaveParams(n=n, modes=modes, a=a, omega=omega))
    if family == "rh-classic":
        return rh_classic(
            int(spec["n"]), int(spec["m"]), float(spec.get("amplitude", 1.0)), omega
        )
    if family == "solid-body":
        return solid_body(omega)
    if family == "arctanh":
        params = ArctanhParams(
            g=parse_profile(spec.get("g", "zero")),
            f=parse_profile(spec.get("f", "zero")),
            h=parse_profile(spec.get("h", "zero")),
            w=parse_profile(spec.get("w", "zero")),
            delta=float(spec.get("delta", DEFAULT_BAND_DELTA)),
            allow_chart=bool(spec.get("allow_chart", True)),
        )
        return arctanh_family(params)
    if family == "rotated-arctanh":
        return rotated_arctanh(
            spec.get("f", "zero"),
            spec.get("h", "zero"),
            spec.get("w_of_s", spec.get("W", "zero")),
            delta=float(spec.get("delta", DEFAULT_BAND_DELTA)),
        )
    if family in ("disturbance-psi1", "disturbance-psi2"):
        builder = disturbance_psi1 if family.endswith("1") else disturbance_psi2
        return builder(
            float(spec.get("c1", 0.0)),
            float(spec.get("c2", 0.0)),
            float(spec.get("nu", 1.0)),
            float(spec.get("r0", 0.5)),
            spec.get("H", "zero"),
        )
    if family == "test-nonsolution":
        return test_nonsolution(omega)
    raise InvalidArgumentError(f"unknown solution family {spec.get('family')!r}")
