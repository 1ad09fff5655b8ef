"""Lie symmetries of the vorticity equation on the sphere.

Vector fields on (t, lambda, mu, psi) with coefficient oracles, commutators,
structure constants, adjoint actions, finite (flow) transformations acting on
solutions, and the classified subalgebra catalog with numerical closure
certification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.stats import qmc

from .errors import (
    CapabilityError,
    DomainError,
    IllConditionedError,
    InvalidArgumentError,
    InvalidParamsError,
    SingularRelationError,
)
from .profiles import Profile, parse_profile
from .sphere import Frame
from .solutions import (
    DEFAULT_BAND_DELTA,
    AnalyticSolution,
    Domain,
    DisturbanceSolution,
)

_VARS = ("t", "lam", "mu", "psi")
_FD_STEP = 1e-5


# ---------------------------------------------------------------------------
# coefficient oracles
# ---------------------------------------------------------------------------

class Coefficient:
    """One generator coefficient: value and first partials in (t,lam,mu,psi).

    Missing partials fall back to 2nd-order central differences.
    """

    def __init__(self, fn, partials=None):
        self._fn = fn
        self._partials = dict(partials or {})

    def __call__(self, t, lam, mu, psi):
        return self._fn(
            np.asarray(t, float), np.asarray(lam, float),
            np.asarray(mu, float), np.asarray(psi, float),
        )

    def partial(self, var, t, lam, mu, psi):
        if var not in _VARS:
            raise InvalidArgumentError(f"unknown variable {var!r}")
        fn = self._partials.get(var)
        if fn is not None:
            return fn(
                np.asarray(t, float), np.asarray(lam, float),
                np.asarray(mu, float), np.asarray(psi, float),
            )
        h = _FD_STEP
        args = [np.asarray(t, float), np.asarray(lam, float),
                np.asarray(mu, float), np.asarray(psi, float)]
        i = _VARS.index(var)
        hi = [a.copy() if j == i else a for j, a in enumerate(args)]
        lo = [a.copy() if j == i else a for j, a in enumerate(args)]
        hi[i] = args[i] + h
        lo[i] = args[i] - h
        return (self._fn(*hi) - self._fn(*lo)) / (2 * h)


def _zeros(t, lam, mu, psi):
    return np.zeros(np.broadcast(t, lam, mu, psi).shape)


_ZERO_COEFF = Coefficient(_zeros, {v: _zeros for v in _VARS})


def _const_coeff(c):
    c = float(c)
    return Coefficient(
        lambda t, lam, mu, psi: np.full(np.broadcast(t, lam, mu, psi).shape, c),
        {v: _zeros for v in _VARS},
    )


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

class SymmetryGenerator:
    """Vector field xi^t dt + xi^lam dlam + xi^mu dmu + eta^psi dpsi."""

    def __init__(self, xi_t, xi_lam, xi_mu, eta_psi, label="", kind=None,
                 profile=None):
        self.xi_t = xi_t
        self.xi_lam = xi_lam
        self.xi_mu = xi_mu
        self.eta_psi = eta_psi
        self.label = label
        self.kind = kind  # "D" | "dt" | "J1" | "J2" | "J3" | "Z" | None
        self.profile = profile  # the g of Z(g)

    @property
    def coeffs(self):
        return (self.xi_t, self.xi_lam, self.xi_mu, self.eta_psi)

    def coeff(self, var):
        return dict(zip(_VARS, self.coeffs))[var]

    def values(self, t, lam, mu, psi):
        """(4, ...) array of coefficient values."""
        return np.stack([c(t, lam, mu, psi) for c in self.coeffs])

    def apply_to(self, coefficient, t, lam, mu, psi):
        """Directional derivative X(f) with f given as a Coefficient."""
        out = 0.0
        for var, c in zip(_VARS, self.coeffs):
            out = out + c(t, lam, mu, psi) * coefficient.partial(
                var, t, lam, mu, psi)
        return out

    def scaled(self, factor, label=None):
        factor = float(factor)

        def wrap(c):
            return Coefficient(
                lambda t, lam, mu, psi: factor * c(t, lam, mu, psi),
                {v: (lambda t, lam, mu, psi, v=v:
                     factor * c.partial(v, t, lam, mu, psi)) for v in _VARS},
            )

        return SymmetryGenerator(
            *(wrap(c) for c in self.coeffs),
            label=label or f"{factor}*{self.label}",
        )

    def plus(self, other, label=None):
        def wrap(a, b):
            return Coefficient(
                lambda t, lam, mu, psi:
                    a(t, lam, mu, psi) + b(t, lam, mu, psi),
                {v: (lambda t, lam, mu, psi, v=v:
                     a.partial(v, t, lam, mu, psi)
                     + b.partial(v, t, lam, mu, psi)) for v in _VARS},
            )

        return SymmetryGenerator(
            *(wrap(a, b) for a, b in zip(self.coeffs, other.coeffs)),
            label=label or f"{self.label}+{other.label}",
        )

    def __repr__(self):
        return f"SymmetryGenerator({self.label or '<anonymous>'})"


def _root(mu):
    return np.sqrt(1.0 - mu * mu)


def dilation_generator():
    """D = t dt - psi dpsi."""
    xi_t = Coefficient(
        lambda t, lam, mu, psi: np.broadcast_to(
            np.asarray(t, float), np.broadcast(t, lam, mu, psi).shape).copy(),
        {"t": lambda t, lam, mu, psi: np.ones(np.broadcast(t, lam, mu, psi).shape),
         "lam": _zeros, "mu": _zeros, "psi": _zeros},
    )
    eta = Coefficient(
        lambda t, lam, mu, psi: np.broadcast_to(
            -np.asarray(psi, float), np.broadcast(t, lam, mu, psi).shape).copy(),
        {"t": _zeros, "lam": _zeros, "mu": _zeros,
         "psi": lambda t, lam, mu, psi: -np.ones(
             np.broadcast(t, lam, mu, psi).shape)},
    )
    return SymmetryGenerator(xi_t, _ZERO_COEFF, _ZERO_COEFF, eta,
                             label="D", kind="D")


def time_translation_generator():
    return SymmetryGenerator(_const_coeff(1.0), _ZERO_COEFF, _ZERO_COEFF,
                             _ZERO_COEFF, label="dt", kind="dt")


def rotation_generator(index):
    """J1 = dlam; J2, J3 the off-axis rotations."""
    if index == 1:
        return SymmetryGenerator(_ZERO_COEFF, _const_coeff(1.0), _ZERO_COEFF,
                                 _ZERO_COEFF, label="J1", kind="J1")
    if index == 2:
        xi_lam = Coefficient(
            lambda t, lam, mu, psi: np.broadcast_to(
                mu * np.sin(lam) / _root(mu),
                np.broadcast(t, lam, mu, psi).shape).copy(),
            {"t": _zeros, "psi": _zeros,
             "lam": lambda t, lam, mu, psi: np.broadcast_to(
                 mu * np.cos(lam) / _root(mu),
                 np.broadcast(t, lam, mu, psi).shape).copy(),
             "mu": lambda t, lam, mu, psi: np.broadcast_to(
                 np.sin(lam) / _root(mu) ** 3,
                 np.broadcast(t, lam, mu, psi).shape).copy()},
        )
        xi_mu = Coefficient(
            lambda t, lam, mu, psi: np.broadcast_to(
                _root(mu) * np.cos(lam),
                np.broadcast(t, lam, mu, psi).shape).copy(),
            {"t": _zeros, "psi": _zeros,
             "lam": lambda t, lam, mu, psi: np.broadcast_to(
                 -_root(mu) * np.sin(lam),
                 np.broadcast(t, lam, mu, psi).shape).copy(),
             "mu": lambda t, lam, mu, psi: np.broadcast_to(
                 -mu * np.cos(lam) / _root(mu),
                 np.broadcast(t, lam, mu, psi).shape).copy()},
        )
        return SymmetryGenerator(_ZERO_COEFF, xi_lam, xi_mu, _ZERO_COEFF,
                                 label="J2", kind="J2")
    if index == 3:
        xi_lam = Coefficient(
            lambda t, lam, mu, psi: np.broadcast_to(
                mu * np.cos(lam) / _root(mu),
                np.broadcast(t, lam, mu, psi).shape).copy(),
            {"t": _zeros, "psi": _zeros,
             "lam": lambda t, lam, mu, psi: np.broadcast_to(
                 -mu * np.sin(lam) / _root(mu),
                 np.broadcast(t, lam, mu, psi).shape).copy(),
             "mu": lambda t, lam, mu, psi: np.broadcast_to(
                 np.cos(lam) / _root(mu) ** 3,
                 np.broadcast(t, lam, mu, psi).shape).copy()},
        )
        xi_mu = Coefficient(
            lambda t, lam, mu, psi: np.broadcast_to(
                -_root(mu) * np.sin(lam),
                np.broadcast(t, lam, mu, psi).shape).copy(),
            {"t": _zeros, "psi": _zeros,
             "lam": lambda t, lam, mu, psi: np.broadcast_to(
                 -_root(mu) * np.cos(lam),
                 np.broadcast(t, lam, mu, psi).shape).copy(),
             "mu": lambda t, lam, mu, psi: np.broadcast_to(
                 mu * np.sin(lam) / _root(mu),
                 np.broadcast(t, lam, mu, psi).shape).copy()},
        )
        return SymmetryGenerator(_ZERO_COEFF, xi_lam, xi_mu, _ZERO_COEFF,
                                 label="J3", kind="J3")
    raise InvalidArgumentError(f"rotation index must be 1, 2 or 3, got {index}")


def z_generator(g, g_prime=None, label=None):
    """Z(g) = g(t) dpsi.  Accepts a Profile, QuasiPolynomial, spec string, or
    a plain callable (then g_prime must be supplied or falls back to FD)."""
    if isinstance(g, QuasiPolynomial):
        qp = g
        gfun, gder = qp, qp.deriv()
        glabel = label or f"Z({qp})"
        prof = qp
    else:
        if isinstance(g, (str, Profile)):
            g = parse_profile(g)
            gfun = g
            gder = lambda t: g.deriv(t)
        else:
            gfun = g
            gder = g_prime
        glabel = label or "Z(g)"
        prof = g
    partials = {"lam": _zeros, "mu": _zeros, "psi": _zeros}
    if gder is not None:
        partials["t"] = lambda t, lam, mu, psi: np.broadcast_to(
            gder(np.asarray(t, float)),
            np.broadcast(t, lam, mu, psi).shape).copy()
    eta = Coefficient(
        lambda t, lam, mu, psi: np.broadcast_to(
            gfun(np.asarray(t, float)),
            np.broadcast(t, lam, mu, psi).shape).copy(),
        partials,
    )
    return SymmetryGenerator(_ZERO_COEFF, _ZERO_COEFF, _ZERO_COEFF, eta,
                             label=glabel, kind="Z", profile=prof)


def standard_generators():
    """The five named generators [D, dt, J1, J2, J3]; Z(g) via z_generator."""
    return [
        dilation_generator(),
        time_translation_generator(),
        rotation_generator(1),
        rotation_generator(2),
        rotation_generator(3),
    ]


def sample_generator_points(n=50, seed=0):
    """Sample points (t, lam, mu, psi) away from poles and t = 0."""
    sampler = qmc.Halton(d=4, scramble=True, seed=seed)
    raw = sampler.random(n)
    t = 0.5 + 1.5 * raw[:, 0]
    lam = 2.0 * np.pi * raw[:, 1]
    mu = -0.9 + 1.8 * raw[:, 2]
    psi = -1.0 + 2.0 * raw[:, 3]
    return t, lam, mu, psi


# ---------------------------------------------------------------------------
# commutators and structure constants
# ---------------------------------------------------------------------------

def commutator(x, y):
    """[X, Y]^i = X(Y^i) - Y(X^i); result partials fall back to differences."""

    def make(var):
        yc = y.coeff(var)
        xc = x.coeff(var)

        def val(t, lam, mu, psi):
            return x.apply_to(yc, t, lam, mu, psi) - y.apply_to(
                xc, t, lam, mu, psi)

        return Coefficient(val)

    return SymmetryGenerator(
        *(make(v) for v in _VARS),
        label=f"[{x.label},{y.label}]",
    )


def decompose_in_span(x, basis, sample_points=None):
    """Least-squares coefficients of X over the basis at the sample points.

    Returns (coefficients, residual) with residual the max pointwise misfit.
    """
    if sample_points is None:
        sample_points = sample_generator_points(max(20, 4 * len(basis)))
    t, lam, mu, psi = (np.asarray(p, float) for p in sample_points)
    if t.size < 2 * len(basis):
        raise InvalidArgumentError(
            f"need at least {2 * len(basis)} sample points for a basis of "
            f"size {len(basis)}, got {t.size}"
        )
    cols = [b.values(t, lam, mu, psi).ravel() for b in basis]
    a = np.stack(cols, axis=1)
    rhs = x.values(t, lam, mu, psi).ravel()
    svals = np.linalg.svd(a, compute_uv=False)
    if svals[-1] <= 1e-10 * max(svals[0], 1e-300):
        raise IllConditionedError(
            "sample matrix is rank deficient; basis may be linearly "
            "dependent or the points are in special position"
        )
    coeffs, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    residual = float(np.max(np.abs(a @ coeffs - rhs)))
    return coeffs, residual


@dataclass
class StructureTable:
    labels: list
    constants: np.ndarray          # c[i, j, k]
    pair_residuals: np.ndarray     # (k, k), 0 on the diagonal
    pair_pass: np.ndarray          # bool (k, k)
    jacobi_residual: float
    tol: float

    @property
    def closed(self):
        return bool(np.all(self.pair_pass))

    def csv_text(self):
        lines = ["pair_i,pair_j,residual,pass"]
        k = len(self.labels)
        for i in range(k):
            for j in range(i + 1, k):
                lines.append(
                    f"{i},{j},{self.pair_residuals[i, j]:.17g},"
                    f"{'true' if self.pair_pass[i, j] else 'false'}"
                )
        return "\n".join(lines) + "\n"

    def table_text(self):
        k = len(self.labels)
        width = max(10, max(len(s) for s in self.labels) + 2)
        head = " " * width + "".join(f"{s:>{width}}" for s in self.labels)
        rows = [head]
        for i in range(k):
            cells = []
            for j in range(k):
                terms = [
                    f"{self.constants[i, j, m]:+.3g}*{self.labels[m]}"
                    for m in range(k)
                    if abs(self.constants[i, j, m]) > 1e-9
                ]
                cells.append("0" if not terms else "".join(terms))
            rows.append(
                f"{self.labels[i]:>{width}}"
                + "".join(f"{c:>{width}}" for c in cells)
            )
        rows.append(f"jacobi residual: {self.jacobi_residual:.3g}")
        rows.append(f"closed: {self.closed}")
        return "\n".join(rows)


def structure_constants(basis, sample_points=None, tol=1e-8,
                        jacobi_points=None):
    """Antisymmetric structure table with per-pair closure certification."""
    k = len(basis)
    constants = np.zeros((k, k, k))
    residuals = np.zeros((k, k))
    passes = np.ones((k, k), dtype=bool)
    for i in range(k):
        for j in range(i + 1, k):
            bracket = commutator(basis[i], basis[j])
            try:
                c, r = decompose_in_span(bracket, basis, sample_points)
            except IllConditionedError:
                raise
            constants[i, j] = c
            constants[j, i] = -c
            residuals[i, j] = residuals[j, i] = r
            ok = r <= tol
            passes[i, j] = passes[j, i] = ok
    jac = jacobi_residual(basis, points=jacobi_points)
    return StructureTable([b.label for b in basis], constants, residuals,
                          passes, jac, tol)


def jacobi_residual(basis, points=None):
    """Max pointwise norm of the cyclic sum of nested commutators."""
    if points is None:
        points = sample_generator_points(8, seed=3)
    t, lam, mu, psi = points
    worst = 0.0
    k = len(basis)
    for i in range(k):
        for j in range(i + 1, k):
            for m in range(j + 1, k):
                x, y, z = basis[i], basis[j], basis[m]
                total = (
                    commutator(commutator(x, y), z).values(t, lam, mu, psi)
                    + commutator(commutator(y, z), x).values(t, lam, mu, psi)
                    + commutator(commutator(z, x), y).values(t, lam, mu, psi)
                )
                worst = max(worst, float(np.max(np.abs(total))))
    return worst


# ---------------------------------------------------------------------------
# point transformations
# ---------------------------------------------------------------------------

class _MappedDomain(Domain):
    def __init__(self, inner, phi, description=""):
        def pred(t, lam, mu):
            return inner.contains(*phi(t, lam, mu))

        super().__init__(inner.kind, pred, inner.delta,
                         description or f"image of ({inner.description})")


class SolutionAction:
    """How a point transformation acts on whole solutions.

    phi maps new coordinates to old ones; phi_jac gives the nonzero entries
    d old / d new as {(old, new): fn}.  The stream function transforms as
    psi_new = alpha * psi(phi(x)) + beta(x) and the vorticity as
    zeta_new = alpha_zeta * zeta(phi(x)) + gamma(x).
    """

    def __init__(self, phi, phi_jac, alpha=1.0, beta=None, beta_grad=None,
                 alpha_zeta=1.0, gamma=None, gamma_grad=None, frame_fn=None,
                 domain_fn=None, label=""):
        self.phi = phi
        self.phi_jac = phi_jac  # dict {(old, new): fn(t, lam, mu)}
        self.alpha = float(alpha)
        self.beta = beta
        self.beta_grad = dict(beta_grad or {})
        self.alpha_zeta = float(alpha_zeta)
        self.gamma = gamma
        self.gamma_grad = dict(gamma_grad or {})
        self.frame_fn = frame_fn or (lambda f: f)
        self.domain_fn = domain_fn
        self.label = label

    def _args(self, t, lam, mu):
        return (np.asarray(t, float), np.asarray(lam, float),
                np.asarray(mu, float))

    def apply(self, sol):
        phi, jac = self.phi, self.phi_jac
        alpha, beta = self.alpha, self.beta
        az, gamma = self.alpha_zeta, self.gamma

        def psi_new(t, lam, mu):
            t, lam, mu = self._args(t, lam, mu)
            out = alpha * sol.psi(*phi(t, lam, mu))
            if beta is not None:
                out = out + beta(t, lam, mu)
            return out

        def make_partial(newvar):
            def fn(t, lam, mu):
                t, lam, mu = self._args(t, lam, mu)
                old_pt = phi(t, lam, mu)
                out = np.zeros(np.broadcast(t, lam, mu).shape)
                for old in ("t", "lam", "mu"):
                    entry = jac.get((old, newvar))
                    if entry is None:
                        continue
                    out = out + entry(t, lam, mu) * sol.partial(old, *old_pt)
                out = alpha * out
                bg = self.beta_grad.get(newvar)
                if bg is not None:
                    out = out + bg(t, lam, mu)
                return out

            return fn

        def zeta_new(t, lam, mu):
            t, lam, mu = self._args(t, lam, mu)
            out = az * sol.zeta(*phi(t, lam, mu))
            if gamma is not None:
                out = out + gamma(t, lam, mu)
            return out

        def make_zeta_partial(newvar):
            def fn(t, lam, mu):
                t, lam, mu = self._args(t, lam, mu)
                old_pt = phi(t, lam, mu)
                out = np.zeros(np.broadcast(t, lam, mu).shape)
                for old in ("t", "lam", "mu"):
                    entry = jac.get((old, newvar))
                    if entry is None:
                        continue
                    out = out + entry(t, lam, mu) * sol.zeta_partial(
                        old, *old_pt)
                out = az * out
                gg = self.gamma_grad.get(newvar)
                if gg is not None:
                    out = out + gg(t, lam, mu)
                return out

            return fn

        domain = (self.domain_fn(sol.domain) if self.domain_fn is not None
                  else _MappedDomain(sol.domain, phi))
        return AnalyticSolution(
            psi_new,
            self.frame_fn(sol.frame),
            domain,
            {v: make_partial(v) for v in ("t", "lam", "mu")},
            zeta_new,
            {v: make_zeta_partial(v) for v in ("t", "lam", "mu")},
            label=f"{self.label}({sol.label})",
        )


class PointTransformation:
    """Invertible map of (t, lambda, mu, psi) with optional solution action."""

    def __init__(self, forward, inverse, label="", action=None):
        self._forward = forward
        self._inverse = inverse
        self.label = label
        self.action = action

    def forward(self, t, lam, mu, psi):
        return self._forward(
            np.asarray(t, float), np.asarray(lam, float),
            np.asarray(mu, float), np.asarray(psi, float),
        )

    def inverse(self, t, lam, mu, psi):
        return self._inverse(
            np.asarray(t, float), np.asarray(lam, float),
            np.asarray(mu, float), np.asarray(psi, float),
        )

    def jacobian(self, t, lam, mu, psi, h=1e-6):
        """4x4 numeric Jacobian of the forward map at one or more points."""
        args = [np.asarray(t, float), np.asarray(lam, float),
                np.asarray(mu, float), np.asarray(psi, float)]
        shape = np.broadcast(*args).shape
        out = np.zeros((4, 4) + shape)
        for j in range(4):
            hi = list(args)
            lo = list(args)
            hi[j] = args[j] + h
            lo[j] = args[j] - h
            fhi = self._forward(*hi)
            flo = self._forward(*lo)
            for i in range(4):
                out[i, j] = (np.asarray(fhi[i], float)
                             - np.asarray(flo[i], float)) / (2 * h)
        return out

    def compose(self, other):
        """self after other: (self . other)(x) = self(other(x))."""

        def fwd(t, lam, mu, psi):
            return self._forward(*other._forward(t, lam, mu, psi))

        def inv(t, lam, mu, psi):
            return other._inverse(*self._inverse(t, lam, mu, psi))

        composed = PointTransformation(
            fwd, inv, label=f"{self.label}.{other.label}")
        if self.action is not None and other.action is not None:
            inner, outer = other, self

            class _ChainAction:
                @staticmethod
                def apply(sol):
                    return outer.action.apply(inner.action.apply(sol))

            composed.action = _ChainAction()
        return composed

    def apply_to_solution(self, sol):
        if self.action is None:
            raise CapabilityError(
                f"transformation {self.label!r} has no solution action")
        return self.action.apply(sol)


def identity_transformation():
    def ident(t, lam, mu, psi):
        return t, lam, mu, psi

    return PointTransformation(
        ident, ident, label="identity",
        action=SolutionAction(
            phi=lambda t, lam, mu: (t, lam, mu),
            phi_jac={("t", "t"): lambda t, lam, mu: np.ones(np.broadcast(t, lam, mu).shape),
                     ("lam", "lam"): lambda t, lam, mu: np.ones(np.broadcast(t, lam, mu).shape),
                     ("mu", "mu"): lambda t, lam, mu: np.ones(np.broadcast(t, lam, mu).shape)},
            label="identity",
        ),
    )


def _ones(t, lam, mu):
    return np.ones(np.broadcast(t, lam, mu).shape)


def _angles_from_cart(x, y, z):
    lam = np.arctan2(y, x) % (2.0 * np.pi)
    mu = np.clip(z, -1.0, 1.0)
    return lam, mu


def _cart_from_angles(lam, mu):
    s = np.sqrt(np.clip(1.0 - mu * mu, 0.0, None))
    return s * np.cos(lam), s * np.sin(lam), mu


def rotation_transformation(matrix, label="rotation"):
    """Finite rotation of the sphere given as an orthogonal 3x3 matrix acting
    on (x, y, z); psi and t are carried along unchanged."""
    r = np.asarray(matrix, float)
    rt = r.T

    def fwd(t, lam, mu, psi):
        x, y, z = _cart_from_angles(lam, mu)
        xn = r[0, 0] * x + r[0, 1] * y + r[0, 2] * z
        yn = r[1, 0] * x + r[1, 1] * y + r[1, 2] * z
        zn = r[2, 0] * x + r[2, 1] * y + r[2, 2] * z
        lam2, mu2 = _angles_from_cart(xn, yn, zn)
        return t, lam2, mu2, psi

    def inv(t, lam, mu, psi):
        x, y, z = _cart_from_angles(lam, mu)
        xn = rt[0, 0] * x + rt[0, 1] * y + rt[0, 2] * z
        yn = rt[1, 0] * x + rt[1, 1] * y + rt[1, 2] * z
        zn = rt[2, 0] * x + rt[2, 1] * y + rt[2, 2] * z
        lam2, mu2 = _angles_from_cart(xn, yn, zn)
        return t, lam2, mu2, psi

    def phi(t, lam, mu):
        _, lam0, mu0, _ = inv(t, lam, mu, 0.0)
        return t, lam0, mu0

    def angle_jac(t, lam, mu):
        """2x2 blocks d(old lam, old mu)/d(new lam, new mu), analytic."""
        lam = np.asarray(lam, float)
        mu = np.asarray(mu, float)
        x, y, z = _cart_from_angles(lam, mu)
        s = np.sqrt(np.clip(1.0 - mu * mu, 1e-300, None))
        # d(new cart)/d(new angles)
        dc_dlam = np.stack([-y, x, np.zeros_like(x)])
        dc_dmu = np.stack([-mu / s * np.cos(lam), -mu / s * np.sin(lam),
                           np.ones_like(mu)])
        # old cart and d(old cart)/d(new angles)
        old = np.stack([rt @ np.stack([xi, yi, zi])
                        for xi, yi, zi in [(x, y, z)]])[0] \
            if x.ndim == 0 else np.einsum("ab,b...->a...", rt,
                                          np.stack([x, y, z]))
        do_dlam = np.einsum("ab,b...->a...", rt, dc_dlam)
        do_dmu = np.einsum("ab,b...->a...", rt, dc_dmu)
        xo, yo, zo = old[0], old[1], old[2]
        so2 = np.clip(xo * xo + yo * yo, 1e-300, None)
        dlam_dc = np.stack([-yo / so2, xo / so2, np.zeros_like(xo)])
        out = {
            ("lam", "lam"): np.sum(dlam_dc * do_dlam, axis=0),
            ("lam", "mu"): np.sum(dlam_dc * do_dmu, axis=0),
            ("mu", "lam"): do_dlam[2],
            ("mu", "mu"): do_dmu[2],
        }
        return out

    def jac_entry(pair):
        def fn(t, lam, mu):
            return angle_jac(t, lam, mu)[pair]

        return fn

    action = SolutionAction(
        phi=phi,
        phi_jac={("t", "t"): _ones,
                 ("lam", "lam"): jac_entry(("lam", "lam")),
                 ("lam", "mu"): jac_entry(("lam", "mu")),
                 ("mu", "lam"): jac_entry(("mu", "lam")),
                 ("mu", "mu"): jac_entry(("mu", "mu"))},
        label=label,
    )
    return PointTransformation(fwd, inv, label=label, action=action)


def flow(x, eps):
    """Finite transformation exp(eps * X).

    Closed forms for the six named generators; otherwise numerical
    integration of the characteristic system.
    """
    eps = float(eps)
    kind = getattr(x, "kind", None)
    if kind == "dt":
        def fwd(t, lam, mu, psi):
            return t + eps, lam, mu, psi

        def inv(t, lam, mu, psi):
            return t - eps, lam, mu, psi

        action = SolutionAction(
            phi=lambda t, lam, mu: (np.asarray(t, float) - eps, lam, mu),
            phi_jac={("t", "t"): _ones, ("lam", "lam"): _ones,
                     ("mu", "mu"): _ones},
            label=f"exp({eps}*dt)",
        )
        return PointTransformation(fwd, inv, label=f"exp({eps}*dt)",
                                   action=action)
    if kind == "D":
        a = math.exp(eps)

        def fwd(t, lam, mu, psi):
            return a * t, lam, mu, psi / a

        def inv(t, lam, mu, psi):
            return t / a, lam, mu, a * psi

        action = SolutionAction(
            phi=lambda t, lam, mu: (np.asarray(t, float) / a, lam, mu),
            phi_jac={("t", "t"): lambda t, lam, mu: np.full(
                np.broadcast(t, lam, mu).shape, 1.0 / a),
                ("lam", "lam"): _ones, ("mu", "mu"): _ones},
            alpha=1.0 / a,
            alpha_zeta=1.0 / a,
            label=f"exp({eps}*D)",
        )
        return PointTransformation(fwd, inv, label=f"exp({eps}*D)",
                                   action=action)
    if kind == "J1":
        def fwd(t, lam, mu, psi):
            return t, lam + eps, mu, psi

        def inv(t, lam, mu, psi):
            return t, lam - eps, mu, psi

        action = SolutionAction(
            phi=lambda t, lam, mu: (t, np.asarray(lam, float) - eps, mu),
            phi_jac={("t", "t"): _ones, ("lam", "lam"): _ones,
                     ("mu", "mu"): _ones},
            label=f"exp({eps}*J1)",
        )
        return PointTransformation(fwd, inv, label=f"exp({eps}*J1)",
                                   action=action)
    if kind == "J2":
        c, s = math.cos(eps), math.sin(eps)
        # d(x,z)/deps = (-z, x): rotation in the (x, z) plane
        r = np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
        return rotation_transformation(r, label=f"exp({eps}*J2)")
    if kind == "J3":
        c, s = math.cos(eps), math.sin(eps)
        # d(y,z)/deps = (z, -y): rotation in the (y, z) plane
        r = np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])
        return rotation_transformation(r, label=f"exp({eps}*J3)")
    if kind == "Z":
        g = x.profile
        gfun = g if callable(g) else (lambda t: g(t))
        eta = x.eta_psi

        def fwd(t, lam, mu, psi):
            return t, lam, mu, psi + eps * eta(t, lam, mu, psi)

        def inv(t, lam, mu, psi):
            return t, lam, mu, psi - eps * eta(t, lam, mu, psi)

        action = SolutionAction(
            phi=lambda t, lam, mu: (t, lam, mu),
            phi_jac={("t", "t"): _ones, ("lam", "lam"): _ones,
                     ("mu", "mu"): _ones},
            beta=lambda t, lam, mu: eps * np.broadcast_to(
                gfun(np.asarray(t, float)),
                np.broadcast(t, lam, mu).shape).copy(),
            beta_grad={"t": lambda t, lam, mu: eps * eta.partial(
                "t", np.asarray(t, float), lam, mu,
                np.zeros(np.broadcast(t, lam, mu).shape))},
            label=f"exp({eps}*{x.label})",
        )
        return PointTransformation(fwd, inv, label=f"exp({eps}*{x.label})",
                                   action=action)
    return _numerical_flow(x, eps)


def _numerical_flow(x, eps, rtol=1e-11, atol=1e-12):
    """Flow by integrating the characteristic ODE system; no solution action."""

    def rhs(_, state4n):
        pts = state4n.reshape(4, -1)
        vals = x.values(*pts)
        return vals.reshape(-1)

    def integrate(sign):
        def run(t, lam, mu, psi):
            arrs = np.broadcast_arrays(
                np.asarray(t, float), np.asarray(lam, float),
                np.asarray(mu, float), np.asarray(psi, float))
            state = np.stack([a.ravel().astype(float) for a in arrs])
            if eps == 0.0:
                out = state
            else:
                res = solve_ivp(rhs, (0.0, sign * eps), state.reshape(-1),
                                rtol=rtol, atol=atol, dense_output=False)
                if not res.success:
                    raise DomainError(
                        f"numerical flow integration failed: {res.message}")
                out = res.y[:, -1].reshape(4, -1)
            shape = arrs[0].shape
            return tuple(out[i].reshape(shape) for i in range(4))

        return run

    return PointTransformation(integrate(+1), integrate(-1),
                               label=f"exp({eps}*{x.label})[numeric]")


def adjoint(x, eps, y, h=1e-5):
    """Ad(exp(eps X)) Y as the pushforward of Y along flow(X, -eps).

    Matches the commutator series sum eps^k/k! (ad X)^k Y.
    """
    transform = flow(x, -eps)

    def make(i):
        def val(t, lam, mu, psi):
            args = [np.asarray(t, float), np.asarray(lam, float),
                    np.asarray(mu, float), np.asarray(psi, float)]
            base = transform.inverse(*args)
            yvals = [c(*base) for c in y.coeffs]
            out = np.zeros(np.broadcast(*args).shape)
            for j in range(4):
                hi = list(base)
                lo = list(base)
                hi[j] = base[j] + h
                lo[j] = base[j] - h
                dti = (np.asarray(transform.forward(*hi)[i], float)
                       - np.asarray(transform.forward(*lo)[i], float)) / (2 * h)
                out = out + dti * yvals[j]
            return out

        return Coefficient(val)

    return SymmetryGenerator(
        *(make(i) for i in range(4)),
        label=f"Ad(exp({eps}*{x.label})){y.label}",
    )


# ---------------------------------------------------------------------------
# named transformations
# ---------------------------------------------------------------------------

def platzman(direction, omega):
    """Map between the rotating frame and the frame at rest:
    t, mu unchanged; lam -> lam + omega t; psi -> psi - omega mu."""
    omega = float(omega)
    if direction not in ("to_rest", "to_rotating"):
        raise InvalidArgumentError(
            f"direction must be 'to_rest' or 'to_rotating', got {direction!r}")

    def to_rest(t, lam, mu, psi):
        return t, lam + omega * t, mu, psi - omega * mu

    def to_rot(t, lam, mu, psi):
        return t, lam - omega * t, mu, psi + omega * mu

    if direction == "to_rest":
        fwd, inv = to_rest, to_rot
        sign = 1.0

        def frame_fn(frame):
            if frame.kind != "rotating" or abs(frame.omega - omega) > 1e-12:
                raise InvalidArgumentError(
                    "to_rest expects a solution in the rotating frame with "
                    f"matching omega={omega}")
            return Frame.rest()
    else:
        fwd, inv = to_rot, to_rest
        sign = -1.0

        def frame_fn(frame):
            if frame.kind != "rest":
                raise InvalidArgumentError(
                    "to_rotating expects a solution in the frame at rest")
            return Frame.rotating(omega)

    def phi(t, lam, mu):
        t = np.asarray(t, float)
        return t, np.asarray(lam, float) - sign * omega * t, mu

    action = SolutionAction(
        phi=phi,
        phi_jac={("t", "t"): _ones, ("lam", "lam"): _ones, ("mu", "mu"): _ones,
                 ("lam", "t"): lambda t, lam, mu: np.full(
                     np.broadcast(t, lam, mu).shape, -sign * omega)},
        beta=lambda t, lam, mu: -sign * omega * np.broadcast_to(
            np.asarray(mu, float), np.broadcast(t, lam, mu).shape).copy(),
        beta_grad={"mu": lambda t, lam, mu: np.full(
            np.broadcast(t, lam, mu).shape, -sign * omega)},
        gamma=lambda t, lam, mu: 2.0 * sign * omega * np.broadcast_to(
            np.asarray(mu, float), np.broadcast(t, lam, mu).shape).copy(),
        gamma_grad={"mu": lambda t, lam, mu: np.full(
            np.broadcast(t, lam, mu).shape, 2.0 * sign * omega)},
        frame_fn=frame_fn,
        label=f"platzman[{direction}]",
    )
    return PointTransformation(fwd, inv, label=f"platzman[{direction}]",
                               action=action)


def discrete_symmetry(which):
    """The two discrete symmetries: (t,lam,mu,psi) -> (-t,-lam,mu,psi) and
    (t,lam,mu,psi) -> (t,lam,-mu,-psi)."""
    if which == "time_reversal":
        def mapping(t, lam, mu, psi):
            return -t, -lam, mu, psi

        action = SolutionAction(
            phi=lambda t, lam, mu: (-np.asarray(t, float),
                                    -np.asarray(lam, float), mu),
            phi_jac={
                ("t", "t"): lambda t, lam, mu: -_ones(t, lam, mu),
                ("lam", "lam"): lambda t, lam, mu: -_ones(t, lam, mu),
                ("mu", "mu"): _ones,
            },
            label="time_reversal",
        )
        return PointTransformation(mapping, mapping, label="time_reversal",
                                   action=action)
    if which == "mirror":
        def mapping(t, lam, mu, psi):
            return t, lam, -mu, -psi

        action = SolutionAction(
            phi=lambda t, lam, mu: (t, lam, -np.asarray(mu, float)),
            phi_jac={
                ("t", "t"): _ones,
                ("lam", "lam"): _ones,
                ("mu", "mu"): lambda t, lam, mu: -_ones(t, lam, mu),
            },
            alpha=-1.0,
            alpha_zeta=-1.0,
            label="mirror",
        )
        return PointTransformation(mapping, mapping, label="mirror",
                                   action=action)
    raise InvalidArgumentError(
        f"which must be 'time_reversal' or 'mirror', got {which!r}")


class DisturbanceStreamRelation:
    """psi = nu * psi_hat + H(theta) with mu = cos(theta).

    Maps disturbance-form solutions (in (t, lambda, theta)) to full stream
    functions in (t, lambda, mu), in the frame rotating at 1/(2 R0).
    """

    def __init__(self, nu, h_profile, r0=None):
        if nu == 0:
            raise SingularRelationError(
                "the disturbance relation is singular for nu = 0")
        self.nu = float(nu)
        self.h = parse_profile(h_profile)
        self.r0 = None if r0 is None else float(r0)
        self.label = "disturbance_stream_relation"

    def forward(self, t, lam, theta, psi_hat):
        """(t, lam, theta, psi_hat) -> (t, lam, mu, psi)."""
        theta = np.asarray(theta, float)
        return (np.asarray(t, float), np.asarray(lam, float), np.cos(theta),
                self.nu * np.asarray(psi_hat, float) + self.h(theta))

    def inverse(self, t, lam, mu, psi):
        mu = np.asarray(mu, float)
        theta = np.arccos(np.clip(mu, -1.0, 1.0))
        return (np.asarray(t, float), np.asarray(lam, float), theta,
                (np.asarray(psi, float) - self.h(theta)) / self.nu)

    def apply_to_solution(self, sol, delta=DEFAULT_BAND_DELTA):
        """Disturbance-form solution -> AnalyticSolution of the full equation."""
        if not isinstance(sol, DisturbanceSolution):
            raise InvalidArgumentError(
                "apply_to_solution expects a disturbance-form solution")
        if abs(sol.nu - self.nu) > 1e-12:
            raise InvalidArgumentError("nu mismatch between relation and solution")
        nu = self.nu
        H = self.h
        r0 = self.r0 if self.r0 is not None else sol.r0

        def theta_of(mu):
            return np.arccos(np.clip(np.asarray(mu, float), -1.0, 1.0))

        def psi(t, lam, mu):
            th = theta_of(mu)
            return nu * sol.psi_hat(t, lam, th) + H(th)

        def p_t(t, lam, mu):
            return nu * sol.psi_hat_partial("t", t, lam, theta_of(mu))

        def p_lam(t, lam, mu):
            return nu * sol.psi_hat_partial("lam", t, lam, theta_of(mu))

        def p_mu(t, lam, mu):
            th = theta_of(mu)
            dtheta_dmu = -1.0 / np.sin(th)
            return (nu * sol.psi_hat_partial("theta", t, lam, th)
                    + H.deriv(th)) * dtheta_dmu

        def zeta(t, lam, mu):
            th = theta_of(mu)
            cot = np.cos(th) / np.sin(th)
            return (nu * sol.zeta_hat(t, lam, th)
                    + H.deriv(th, 2) + H.deriv(th) * cot)

        def z_t(t, lam, mu):
            return nu * sol.zeta_hat_partial("t", t, lam, theta_of(mu))

        def z_lam(t, lam, mu):
            return nu * sol.zeta_hat_partial("lam", t, lam, theta_of(mu))

        def z_mu(t, lam, mu):
            th = theta_of(mu)
            sin, cos = np.sin(th), np.cos(th)
            dz_dth = (nu * sol.zeta_hat_partial("theta", t, lam, th)
                      + H.deriv(th, 3)
                      + H.deriv(th, 2) * cos / sin
                      - H.deriv(th) / sin**2)
            return dz_dth * (-1.0 / sin)

        return AnalyticSolution(
            psi,
            Frame.rotating(1.0 / (2.0 * r0)),
            Domain.band(delta=max(delta, sol.domain_delta), t_nonzero=True),
            {"t": p_t, "lam": p_lam, "mu": p_mu},
            zeta,
            {"t": z_t, "lam": z_lam, "mu": z_mu},
            label=f"stream({sol.label})",
        )


def disturbance_stream_relation(nu, h_profile, r0=None):
    return DisturbanceStreamRelation(nu, h_profile, r0)


# ---------------------------------------------------------------------------
# quasi-polynomials (exact Z-ideal bases)
# ---------------------------------------------------------------------------

_OSC = ("1", "cos", "sin", "cosln", "sinln")


@dataclass(frozen=True)
class QPTerm:
    """c * t^power * (ln t)^logpow * e^(rate t) * osc, on t > 0.

    osc is 1, cos(freq*t), sin(freq*t), cos(freq*ln t) or sin(freq*ln t).
    """

    coeff: float
    power: float = 0.0
    logpow: int = 0
    rate: float = 0.0
    osc: str = "1"
    freq: float = 0.0

    def key(self):
        return (self.power, self.logpow, self.rate, self.osc, self.freq)

    def evaluate(self, t):
        t = np.asarray(t, float)
        out = self.coeff * np.power(t, self.power)
        if self.logpow:
            out = out * np.log(t) ** self.logpow
        if self.rate:
            out = out * np.exp(self.rate * t)
        if self.osc == "cos":
            out = out * np.cos(self.freq * t)
        elif self.osc == "sin":
            out = out * np.sin(self.freq * t)
        elif self.osc == "cosln":
            out = out * np.cos(self.freq * np.log(t))
        elif self.osc == "sinln":
            out = out * np.sin(self.freq * np.log(t))
        return out

    def __str__(self):
        bits = []
        if self.power:
            bits.append(f"t^{self.power:g}")
        if self.logpow:
            bits.append(f"ln(t)^{self.logpow}")
        if self.rate:
            bits.append(f"e^({self.rate:g}t)")
        if self.osc == "cos":
            bits.append(f"cos({self.freq:g}t)")
        elif self.osc == "sin":
            bits.append(f"sin({self.freq:g}t)")
        elif self.osc == "cosln":
            bits.append(f"cos({self.freq:g}ln t)")
        elif self.osc == "sinln":
            bits.append(f"sin({self.freq:g}ln t)")
        core = "*".join(bits) if bits else "1"
        return f"{self.coeff:g}*{core}" if self.coeff != 1.0 else core


class QuasiPolynomial:
    """Finite sum of QPTerms; closed under d/dt and multiplication by t."""

    def __init__(self, terms):
        merged = {}
        for term in terms:
            if term.coeff == 0.0:
                continue
            merged[term.key()] = merged.get(term.key(), 0.0) + term.coeff
        self.terms = tuple(
            QPTerm(c, *k) for k, c in sorted(merged.items()) if c != 0.0
        )

    def __call__(self, t):
        t = np.asarray(t, float)
        out = np.zeros(t.shape)
        for term in self.terms:
            out = out + term.evaluate(t)
        return out

    def deriv(self):
        out = []
        for tm in self.terms:
            c, a, j, b, osc, nu = (tm.coeff, tm.power, tm.logpow, tm.rate,
                                   tm.osc, tm.freq)
            if a:
                out.append(QPTerm(c * a, a - 1, j, b, osc, nu))
            if j:
                out.append(QPTerm(c * j, a - 1, j - 1, b, osc, nu))
            if b:
                out.append(QPTerm(c * b, a, j, b, osc, nu))
            if osc == "cos":
                out.append(QPTerm(-c * nu, a, j, b, "sin", nu))
            elif osc == "sin":
                out.append(QPTerm(c * nu, a, j, b, "cos", nu))
            elif osc == "cosln":
                out.append(QPTerm(-c * nu, a - 1, j, b, "sinln", nu))
            elif osc == "sinln":
                out.append(QPTerm(c * nu, a - 1, j, b, "cosln", nu))
        return QuasiPolynomial(out)

    def times_t(self):
        return QuasiPolynomial(
            [QPTerm(tm.coeff, tm.power + 1, tm.logpow, tm.rate, tm.osc,
                    tm.freq) for tm in self.terms]
        )

    def is_zero(self):
        return not self.terms

    def __str__(self):
        return " + ".join(str(tm) for tm in self.terms) if self.terms else "0"


def qp(coeff=1.0, power=0.0, logpow=0, rate=0.0, osc="1", freq=0.0):
    if osc not in _OSC:
        raise InvalidArgumentError(f"unknown oscillation kind {osc!r}")
    return QuasiPolynomial([QPTerm(float(coeff), float(power), int(logpow),
                                   float(rate), osc, float(freq))])


# ---------------------------------------------------------------------------
# subalgebra catalog
# ---------------------------------------------------------------------------

CATALOG_CLASS_IDS = (
    [str(i) for i in range(1, 13)]
    + [f"opt1d_{i}" for i in range(1, 5)]
    + [f"opt2d_{i}" for i in range(1, 8)]
)


@dataclass
class Subalgebra:
    generators: list
    class_id: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.generators) > 1:
            t, lam, mu, psi = sample_generator_points(
                max(20, 4 * len(self.generators)), seed=7)
            cols = [g.values(t, lam, mu, psi).ravel() for g in self.generators]
            a = np.stack(cols, axis=1)
            svals = np.linalg.svd(a, compute_uv=False)
            if svals[-1] <= 1e-10 * max(svals[0], 1e-300):
                raise InvalidParamsError(
                    f"class {self.class_id}: generators are linearly "
                    "dependent as functions"
                )

    @property
    def dim(self):
        return len(self.generators)

    @property
    def labels(self):
        return [g.label for g in self.generators]


def _zgen(g):
    return z_generator(g)


def _hat_ideal(lambdas, ms, mus, nus, mps):
    """Z(t^k e^(lambda_i t)), k=0..m_i; Z(t^l e^(mu_j t) cos/sin(nu_j t))."""
    gens = []
    for lam_i, m_i in zip(lambdas, ms):
        for k in range(int(m_i) + 1):
            gens.append(_zgen(qp(power=k, rate=lam_i)))
    for mu_j, nu_j, mp_j in zip(mus, nus, mps):
        for el in range(int(mp_j) + 1):
            gens.append(_zgen(qp(power=el, rate=mu_j, osc="cos", freq=nu_j)))
            gens.append(_zgen(qp(power=el, rate=mu_j, osc="sin", freq=nu_j)))
    return gens


def _check_ideal(lambdas, ms, mus, nus, mps):
    """Z(tau^k |t|^lambda_i); Z(tau^l |t|^mu_j cos/sin(nu_j tau)), tau=ln|t|."""
    gens = []
    for lam_i, m_i in zip(lambdas, ms):
        for k in range(int(m_i) + 1):
            gens.append(_zgen(qp(power=lam_i, logpow=k)))
    for mu_j, nu_j, mp_j in zip(mus, nus, mps):
        for el in range(int(mp_j) + 1):
            gens.append(_zgen(qp(power=mu_j, logpow=el, osc="cosln",
                                 freq=nu_j)))
            gens.append(_zgen(qp(power=mu_j, logpow=el, osc="sinln",
                                 freq=nu_j)))
    return gens


def _tilde_ideal(n):
    return [_zgen(qp(power=k)) for k in range(int(n))]


def _validate_spectral(params, need_pairs=True):
    lambdas = [float(v) for v in params.get("lambdas", ())]
    ms = [int(v) for v in params.get("ms", [0] * len(lambdas))]
    mus = [float(v) for v in params.get("mus", ())]
    nus = [float(v) for v in params.get("nus", ())]
    mps = [int(v) for v in params.get("mps", [0] * len(mus))]
    if len(ms) != len(lambdas):
        raise InvalidParamsError("ms must have one entry per lambda")
    if len(set(lambdas)) != len(lambdas):
        raise InvalidParamsError("the lambda_i must be distinct real numbers")
    if need_pairs and (len(nus) != len(mus) or len(mps) != len(mus)):
        raise InvalidParamsError("mus, nus and mps must have equal lengths")
    pairs = list(zip(mus, nus))
    if len(set(pairs)) != len(pairs):
        raise InvalidParamsError("the (mu_j, nu_j) pairs must be distinct")
    return lambdas, ms, mus, nus, mps


def _k_rule(lambdas, ms, target):
    """k = m_i + 1 for the i with lambda_i == target; k = 0 if absent.

    The exponent so that differentiating once lands exactly on the top
    ideal element with that rate."""
    for lam_i, m_i in zip(lambdas, ms):
        if lam_i == target:
            return int(m_i) + 1
    return 0


def subalgebra_catalog(class_id, params=None):
    """Construct one member of the classified subalgebra families.

    Classes "1".."12" are the full classification; "opt1d_1".."opt1d_4" and
    "opt2d_1".."opt2d_7" are the optimal reduction lists.
    """
    params = dict(params or {})
    cid = str(class_id).lower()
    d, dt, j1, j2, j3 = standard_generators()

    def profiles(key):
        return [parse_profile(g) if isinstance(g, str) else g
                for g in params.get(key, ())]

    if cid == "1":
        gens = [_zgen(g) for g in profiles("gbar")]
        if not gens:
            raise InvalidParamsError("class 1 needs a nonempty gbar")
        return Subalgebra(gens, cid, params)
    if cid == "2":
        f = params.get("f", "zero")
        f = parse_profile(f) if isinstance(f, str) else f
        lead = j1 if _is_zero_fn(f) else j1.plus(_zgen(f), label="J1+Z(f)")
        return Subalgebra([lead] + [_zgen(g) for g in profiles("gbar")],
                          cid, params)
    if cid == "3":
        return Subalgebra([j1, j2, j3] + [_zgen(g) for g in profiles("gbar")],
                          cid, params)
    if cid in ("4", "5", "6"):
        lambdas, ms, mus, nus, mps = _validate_spectral(params)
        ideal = _hat_ideal(lambdas, ms, mus, nus, mps)
        if cid == "4":
            sigma = float(params.get("sigma", 0.0))
            lead = dt if sigma == 0.0 else dt.plus(
                j1.scaled(sigma, label=f"{sigma}*J1"),
                label=f"dt+{sigma}*J1")
            return Subalgebra([lead] + ideal, cid, params)
        if cid == "5":
            kappa = float(params.get("kappa", 0.0))
            k = _k_rule(lambdas, ms, 0.0)
            second = j1 if kappa == 0.0 else j1.plus(
                _zgen(qp(coeff=kappa, power=k)),
                label=f"J1+Z({kappa:g}t^{k})")
            return Subalgebra([dt, second] + ideal, cid, params)
        return Subalgebra([dt, j1, j2, j3] + ideal, cid, params)
    if cid in ("7", "8", "9"):
        lambdas, ms, mus, nus, mps = _validate_spectral(params)
        ideal = _check_ideal(lambdas, ms, mus, nus, mps)
        if cid == "7":
            sigma = float(params.get("sigma", 0.0))
            lead = d if sigma == 0.0 else d.plus(
                j1.scaled(sigma, label=f"{sigma}*J1"),
                label=f"D+{sigma}*J1")
            return Subalgebra([lead] + ideal, cid, params)
        if cid == "8":
            kappa = float(params.get("kappa", 0.0))
            k = _k_rule(lambdas, ms, -1.0)
            second = j1 if kappa == 0.0 else j1.plus(
                _zgen(qp(coeff=kappa, power=-1.0, logpow=k)),
                label=f"J1+Z({kappa:g}t^-1 ln^{k})")
            return Subalgebra([d, second] + ideal, cid, params)
        return Subalgebra([d, j1, j2, j3] + ideal, cid, params)
    if cid in ("10", "11", "12"):
        n = int(params.get("n", 0))
        if n < 0:
            raise InvalidParamsError("n must be a nonnegative integer")
        ideal = _tilde_ideal(n)
        if cid == "10":
            sigma = float(params.get("sigma", 0.0))
            kappa = float(params.get("kappa", 0.0))
            lead = d
            if sigma != 0.0:
                lead = lead.plus(j1.scaled(sigma, label=f"{sigma}*J1"),
                                 label=f"D+{sigma}*J1")
            if kappa != 0.0:
                lead = lead.plus(_zgen(qp(coeff=kappa, power=n)),
                                 label=lead.label + f"+Z({kappa:g}t^{n})")
            return Subalgebra([lead, dt] + ideal, cid, params)
        if cid == "11":
            kappa = float(params.get("kappa", 0.0))
            third = j1 if kappa == 0.0 else j1.plus(
                _zgen(qp(coeff=kappa, power=n)),
                label=f"J1+Z({kappa:g}t^{n})")
            return Subalgebra([d, dt, third] + ideal, cid, params)
        return Subalgebra([d, dt, j1, j2, j3] + ideal, cid, params)

    # optimal reduction lists
    if cid == "opt1d_1":
        a = float(params.get("a", 0.0))
        lead = d if a == 0.0 else d.plus(j1.scaled(a, label=f"{a}*J1"),
                                         label=f"D+{a}*J1")
        return Subalgebra([lead], cid, params)
    if cid == "opt1d_2":
        a = float(params.get("a", 0.0))
        if a not in (-1.0, 0.0, 1.0):
            raise InvalidParamsError("opt1d_2 requires a in {-1, 0, 1}")
        lead = dt if a == 0.0 else dt.plus(j1.scaled(a, label=f"{a}*J1"),
                                           label=f"dt+{a}*J1")
        return Subalgebra([lead], cid, params)
    if cid == "opt1d_3":
        g = params.get("g", "zero")
        g = parse_profile(g) if isinstance(g, str) else g
        lead = j1 if _is_zero_fn(g) else j1.plus(_zgen(g), label="J1+Z(g)")
        return Subalgebra([lead], cid, params)
    if cid == "opt1d_4":
        g = params.get("g")
        if g is None:
            raise InvalidParamsError("opt1d_4 needs a nonvanishing g")
        g = parse_profile(g) if isinstance(g, str) else g
        if _is_zero_fn(g):
            raise InvalidParamsError("opt1d_4 requires g not to vanish")
        return Subalgebra([_zgen(g)], cid, params)
    if cid == "opt2d_1":
        b = float(params.get("b", 0.0))
        lead = d if b == 0.0 else d.plus(j1.scaled(b, label=f"{b}*J1"),
                                         label=f"D+{b}*J1")
        return Subalgebra([lead, dt], cid, params)
    if cid == "opt2d_2":
        a = float(params.get("a", 0.0))
        second = j1 if a == 0.0 else j1.plus(_zgen(qp(coeff=a, power=-1.0)),
                                             label=f"J1+Z({a:g}/t)")
        return Subalgebra([d, second], cid, params)
    if cid == "opt2d_3":
        a = float(params.get("a", 0.0))
        b = float(params.get("b", 0.0))
        lead = d if a == 0.0 else d.plus(j1.scaled(a, label=f"{a}*J1"),
                                         label=f"D+{a}*J1")
        return Subalgebra([lead, _zgen(qp(power=b))], cid, params)
    if cid == "opt2d_4":
        c = float(params.get("c", 0.0))
        if c not in (-1.0, 0.0, 1.0):
            raise InvalidParamsError("opt2d_4 requires c in {-1, 0, 1}")
        second = j1 if c == 0.0 else j1.plus(_zgen(qp(coeff=c)),
                                             label=f"J1+Z({c:g})")
        return Subalgebra([dt, second], cid, params)
    if cid == "opt2d_5":
        c = float(params.get("c", 0.0))
        ct = float(params.get("c_tilde", 0.0))
        if c not in (-1.0, 0.0, 1.0):
            raise InvalidParamsError("opt2d_5 requires c in {-1, 0, 1}")
        if c == 0.0 and ct not in (-1.0, 0.0, 1.0):
            raise InvalidParamsError(
                "opt2d_5 requires c_tilde in {-1, 0, 1} when c = 0")
        lead = dt if c == 0.0 else dt.plus(j1.scaled(c, label=f"{c}*J1"),
                                           label=f"dt+{c}*J1")
        return Subalgebra([lead, _zgen(qp(rate=ct))], cid, params)
    if cid == "opt2d_6":
        gcheck = params.get("g_check", "zero")
        ghat = params.get("g_hat")
        if ghat is None:
            raise InvalidParamsError("opt2d_6 needs a nonvanishing g_hat")
        gcheck = parse_profile(gcheck) if isinstance(gcheck, str) else gcheck
        ghat = parse_profile(ghat) if isinstance(ghat, str) else ghat
        lead = j1 if _is_zero_fn(gcheck) else j1.plus(_zgen(gcheck),
                                                      label="J1+Z(g_check)")
        return Subalgebra([lead, _zgen(ghat)], cid, params)
    if cid == "opt2d_7":
        gs = profiles("gbar")
        if len(gs) != 2:
            raise InvalidParamsError(
                "opt2d_7 needs exactly two linearly independent functions")
        return Subalgebra([_zgen(g) for g in gs], cid, params)
    raise InvalidParamsError(
        f"unknown class id {class_id!r}; valid ids: {CATALOG_CLASS_IDS}")


def _is_zero_fn(g):
    if hasattr(g, "is_zero"):
        return g.is_zero()
    return False


@dataclass
class ClosureReport:
    class_id: str
    pairs: list            # (i, j, residual, passed)
    max_residual: float
    passed: bool
    tol: float

    def csv_text(self):
        lines = ["pair_i,pair_j,residual,pass"]
        for i, j, r, ok in self.pairs:
            lines.append(f"{i},{j},{r:.17g},{'true' if ok else 'false'}")
        return "\n".join(lines) + "\n"

    def table_text(self):
        rows = [f"closure report for class {self.class_id} "
                f"(tol {self.tol:g})",
                f"{'pair':>10} {'residual':>14} {'pass':>6}"]
        for i, j, r, ok in self.pairs:
            rows.append(f"{f'[{i},{j}]':>10} {r:>14.3e} "
                        f"{'yes' if ok else 'NO':>6}")
        rows.append(f"max residual {self.max_residual:.3e}; "
                    f"{'PASS' if self.passed else 'FAIL'}")
        return "\n".join(rows)


def closure_check(subalgebra, sample_points=None, tol=1e-8):
    """Decompose every pairwise commutator in the subalgebra's own span."""
    gens = subalgebra.generators
    if sample_points is None:
        sample_points = sample_generator_points(max(24, 4 * len(gens)),
                                                seed=11)
    pairs = []
    worst = 0.0
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            bracket = commutator(gens[i], gens[j])
            _, residual = decompose_in_span(bracket, gens, sample_points)
            ok = residual <= tol
            pairs.append((i, j, residual, ok))
            worst = max(worst, residual)
    return ClosureReport(
        class_id=getattr(subalgebra, "class_id", "?"),
        pairs=pairs,
        max_residual=worst,
        passed=all(p[3] for p in pairs),
        tol=tol,
    )
