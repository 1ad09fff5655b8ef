"""Grids, Legendre functions and spherical-harmonic transforms.

Latitudes are Gauss-Legendre nodes in mu = sin(latitude), strictly inside
(-1, 1); longitudes are equispaced on [0, 2pi).  The spectral basis is the
orthonormal (4pi-normalized) complex basis N_n^m P_n^m(mu) e^{i m lambda}
with the Condon-Shortley phase, triangularly truncated at degree T.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    InvalidArgumentError,
    ResolutionError,
)


# ---------------------------------------------------------------------------
# quadrature and Legendre functions
# ---------------------------------------------------------------------------

def gauss_legendre_nodes(nlat):
    """Nodes and weights of the nlat-point Gauss-Legendre rule on [-1, 1].

    Exact for polynomials of degree <= 2*nlat - 1; nodes increasing and
    symmetric about 0; weights sum to 2.
    """
    if nlat < 1:
        raise InvalidArgumentError(f"nlat must be >= 1, got {nlat}")
    nodes, weights = np.polynomial.legendre.leggauss(int(nlat))
    return nodes, weights


def legendre_poly(n, mu):
    """Legendre polynomial P_n(mu) and its derivative dP_n/dmu.

    Uses the three-term recurrence for the value and the derivative
    recurrence P_n' = n P_{n-1} + mu P_{n-1}', which is stable up to and
    including the endpoints mu = +-1.
    """
    if n < 0:
        raise InvalidArgumentError(f"degree must be >= 0, got {n}")
    mu = np.asarray(mu, dtype=float)
    if np.any(np.abs(mu) > 1.0 + 1e-14):
        raise DomainError("legendre_poly requires |mu| <= 1")
    p_prev = np.ones_like(mu)
    d_prev = np.zeros_like(mu)
    if n == 0:
        return p_prev, d_prev
    p = mu.copy()
    d = np.ones_like(mu)
    for k in range(2, n + 1):
        p_next = ((2 * k - 1) * mu * p - (k - 1) * p_prev) / k
        d_next = k * p + mu * d
        p_prev, p = p, p_next
        d = d_next
    return p, d


def assoc_legendre(n, m, mu):
    """Associated Legendre function P_n^m(mu) and its mu-derivative.

    Convention: P_n^m = (-1)^m (1-mu^2)^{m/2} d^m P_n / dmu^m (includes the
    Condon-Shortley phase), so P_1^1(0) = -1.  Seeded on the m-diagonal and
    marched upward in degree; the (2k-1) factorial factor is interleaved
    with the (1-mu^2)^{1/2} factor to delay overflow at high degree.

    For m >= 1 the derivative is only defined on |mu| < 1.
    """
    if m < 0 or m > n:
        raise DomainError(f"require 0 <= m <= n, got n={n}, m={m}")
    mu = np.asarray(mu, dtype=float)
    if np.any(np.abs(mu) > 1.0 + 1e-14):
        raise DomainError("assoc_legendre requires |mu| <= 1")
    if m == 0:
        return legendre_poly(n, mu)

    s = np.sqrt(np.clip(1.0 - mu * mu, 0.0, None))
    pmm = np.ones_like(mu)
    for k in range(1, m + 1):
        pmm = pmm * (-(2 * k - 1)) * s
    if n == m:
        p, p_lower = pmm, np.zeros_like(mu)
    else:
        p_lower = pmm
        p = (2 * m + 1) * mu * pmm
        for k in range(m + 2, n + 1):
            p_next = ((2 * k - 1) * mu * p - (k + m - 1) * p_lower) / (k - m)
            p_lower, p = p, p_next
    # (1-mu^2) dP_n^m/dmu = (n+m) P_{n-1}^m - n mu P_n^m
    with np.errstate(divide="ignore", invalid="ignore"):
        deriv = ((n + m) * p_lower - n * mu * p) / (1.0 - mu * mu)
    return p, deriv


def _normalization(n, m):
    """N_n^m such that N_n^m P_n^m e^{im lambda} has unit L2 norm on the sphere."""
    return math.sqrt(
        (2 * n + 1) / (4.0 * math.pi) * math.exp(
            math.lgamma(n - m + 1) - math.lgamma(n + m + 1)
        )
    )


def normalized_assoc_legendre_table(truncation, mu):
    """Tables of normalized P-bar_n^m(mu) and their mu-derivatives.

    Returns arrays of shape (len(mu), T+1, T+1) indexed [j, n, m], zero for
    m > n.  Uses the standard normalized recurrences, stable to high degree.
    """
    mu = np.asarray(mu, dtype=float)
    npts = mu.shape[0]
    T = int(truncation)
    s = np.sqrt(1.0 - mu * mu)
    p = np.zeros((npts, T + 1, T + 1))
    dp = np.zeros((npts, T + 1, T + 1))

    p[:, 0, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(1, T + 1):
        p[:, m, m] = -math.sqrt((2 * m + 1) / (2.0 * m)) * s * p[:, m - 1, m - 1]
    for m in range(0, T):
        p[:, m + 1, m] = math.sqrt(2 * m + 3) * mu * p[:, m, m]
    for m in range(0, T + 1):
        for n in range(m + 2, T + 1):
            a = math.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
            b = math.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1.0) ** 2 - 1.0))
            p[:, n, m] = a * (mu * p[:, n - 1, m] - b * p[:, n - 2, m])

    one_minus = 1.0 - mu * mu
    for m in range(0, T + 1):
        for n in range(m, T + 1):
            if n == 0:
                continue
            c = math.sqrt((n * n - m * m) * (2.0 * n + 1.0) / (2.0 * n - 1.0))
            lower = p[:, n - 1, m] if n - 1 >= m else 0.0
            dp[:, n, m] = (c * lower - n * mu * p[:, n, m]) / one_minus
    return p, dp


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Frame:
    """Reference frame tag: rotating with angular velocity omega, or at rest."""

    kind: str  # "rotating" | "rest"
    omega: float = 0.0

    def __post_init__(self):
        if self.kind not in ("rotating", "rest"):
            raise InvalidArgumentError(f"unknown frame kind {self.kind!r}")
        if self.kind == "rest" and self.omega != 0.0:
            raise InvalidArgumentError("rest frame must have omega = 0")

    @classmethod
    def rotating(cls, omega):
        return cls("rotating", float(omega))

    @classmethod
    def rest(cls):
        return cls("rest", 0.0)


@dataclass(frozen=True)
class SphereGrid:
    """Gauss-Legendre x equispaced-longitude grid, pole free.

    mu increases south to north; lambda_nodes[k] = 2 pi k / nlon exactly.
    """

    nlat: int
    nlon: int
    mu_nodes: np.ndarray = field(repr=False)
    mu_weights: np.ndarray = field(repr=False)
    lambda_nodes: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, nlat, nlon):
        if nlat < 1:
            raise InvalidArgumentError(f"nlat must be >= 1, got {nlat}")
        if nlon < 1:
            raise InvalidArgumentError(f"nlon must be >= 1, got {nlon}")
        nodes, weights = gauss_legendre_nodes(nlat)
        lam = 2.0 * np.pi * np.arange(nlon) / nlon
        return cls(int(nlat), int(nlon), nodes, weights, lam)

    def meshes(self):
        """(lam2d, mu2d) arrays of shape (nlat, nlon)."""
        return np.meshgrid(self.lambda_nodes, self.mu_nodes)


@dataclass
class ScalarField:
    """Grid samples of a scalar (stream function or vorticity) at one time."""

    grid: SphereGrid
    values: np.ndarray  # (nlat, nlon)
    time: float = 0.0
    frame: Frame = Frame.rest()

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.nlat, self.grid.nlon):
            raise InvalidArgumentError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.nlat}, {self.grid.nlon})"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidArgumentError("field values must be finite")


@dataclass
class SpectralCoeffs:
    """Triangular-truncation coefficients c[n, m], 0 <= m <= n <= T.

    Real fields are implied; m < 0 coefficients follow by conjugate symmetry
    and are not stored.  Entries with m > n are structurally zero.
    """

    truncation: int
    coeffs: np.ndarray  # complex, (T+1, T+1)

    def __post_init__(self):
        T = self.truncation
        if T < 0:
            raise InvalidArgumentError("truncation must be >= 0")
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (T + 1, T + 1):
            raise InvalidArgumentError(
                f"coeffs shape {self.coeffs.shape}, expected {(T + 1, T + 1)}"
            )
        self.coeffs[np.triu_indices(T + 1, k=1)] = 0.0

    @classmethod
    def zeros(cls, truncation):
        return cls(truncation, np.zeros((truncation + 1, truncation + 1), complex))

    def copy(self):
        return SpectralCoeffs(self.truncation, self.coeffs.copy())


def min_grid_for(truncation):
    """(nlat, nlon) of the smallest grid dealiasing quadratic products at T."""
    nlon = 3 * truncation + 1
    return (nlon + 1) // 2, nlon


def check_resolution(grid, truncation):
    nlat_min, nlon_min = min_grid_for(truncation)
    if grid.nlon < nlon_min or grid.nlat < nlat_min:
        raise ResolutionError(
            f"grid ({grid.nlat}, {grid.nlon}) too coarse for T={truncation}: "
            f"need nlat >= {nlat_min}, nlon >= {nlon_min}"
        )


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

class SphericalHarmonicTransform:
    """Cached forward/inverse transform between grid and spectral space.

    All methods are pure with respect to the cached tables; latitude rows are
    independent, so evaluation is trivially data parallel.
    """

    def __init__(self, grid, truncation):
        check_resolution(grid, truncation)
        self.grid = grid
        self.truncation = int(truncation)
        p, dp = normalized_assoc_legendre_table(truncation, grid.mu_nodes)
        self.pnm = p                      # (nlat, T+1, T+1)
        self.dpnm = dp
        # analysis kernel: weights folded into the Legendre table
        self._wp = p * grid.mu_weights[:, None, None]
        # order-batched layouts so the Legendre sums run as real BLAS matmuls
        self._pt = np.ascontiguousarray(p.transpose(2, 0, 1))        # (m, j, n)
        self._dpt = np.ascontiguousarray(dp.transpose(2, 0, 1))      # (m, j, n)
        self._wpt = np.ascontiguousarray(self._wp.transpose(2, 1, 0))  # (m, n, j)
        self._m_arr = np.arange(self.truncation + 1)

    @staticmethod
    def _batched_contract(table_t, rows):
        """Batched real matmul of (m, a, b) with complex (m, b) -> (m, a)."""
        rb = np.ascontiguousarray(rows)
        v = rb.view(float).reshape(rb.shape[0], rb.shape[1], 2)
        out = np.matmul(table_t, v)
        return out.view(complex)[:, :, 0]

    def _legendre_synth(self, table_t, coeffs):
        """Sum over degree n: (m, j, n) table with (n, m) coeffs -> (j, m)."""
        return self._batched_contract(table_t, coeffs.T).T

    def analyze(self, values):
        """Grid values (nlat, nlon) -> coefficient array (T+1, T+1)."""
        T = self.truncation
        fm = np.fft.rfft(values, axis=1)[:, : T + 1] * (
            2.0 * np.pi / self.grid.nlon
        )
        coeffs = self._batched_contract(self._wpt, fm.T).T
        coeffs[np.triu_indices(T + 1, k=1)] = 0.0
        return np.ascontiguousarray(coeffs)

    def synthesize(self, coeffs):
        """Coefficient array (T+1, T+1) -> grid values (nlat, nlon)."""
        gm = self._legendre_synth(self._pt, coeffs)
        return self._inverse_fourier(gm)

    def synthesize_with_gradients(self, coeffs, want_values=True):
        """(values, d/dlambda, d/dmu) on the grid for one coefficient set.

        With want_values=False the first element is None (skips one inverse
        FFT for callers that only need the gradients).
        """
        gm = self._legendre_synth(self._pt, coeffs)
        gm_mu = self._legendre_synth(self._dpt, coeffs)
        values = self._inverse_fourier(gm) if want_values else None
        d_lam = self._inverse_fourier(gm * (1j * self._m_arr))
        d_mu = self._inverse_fourier(gm_mu)
        return values, d_lam, d_mu

    def _inverse_fourier(self, gm):
        nlon = self.grid.nlon
        spec = np.zeros((self.grid.nlat, nlon // 2 + 1), dtype=complex)
        spec[:, : gm.shape[1]] = gm
        return np.fft.irfft(spec * nlon, n=nlon, axis=1)


_TRANSFORM_CACHE = {}


def get_transform(grid, truncation):
    key = (
        grid.nlat,
        grid.nlon,
        truncation,
        grid.mu_nodes.tobytes(),
        grid.lambda_nodes.tobytes(),
    )
    t = _TRANSFORM_CACHE.get(key)
    if t is None:
        t = SphericalHarmonicTransform(grid, truncation)
        _TRANSFORM_CACHE[key] = t
    return t


def sh_analysis(fld, truncation):
    """Forward transform of a ScalarField onto the orthonormal basis."""
    t = get_transform(fld.grid, truncation)
    return SpectralCoeffs(truncation, t.analyze(fld.values))


def sh_synthesis(coeffs, grid, time=0.0, frame=Frame.rest()):
    """Pointwise evaluation of the truncated expansion on the grid."""
    t = get_transform(grid, coeffs.truncation)
    return ScalarField(grid, t.synthesize(coeffs.coeffs), time=time, frame=frame)


def laplacian_spectral(coeffs):
    """Laplace-Beltrami operator on the unit sphere: c[n,m] -> -n(n+1) c[n,m]."""
    n = np.arange(coeffs.truncation + 1)
    eig = -(n * (n + 1.0))[:, None]
    return SpectralCoeffs(coeffs.truncation, coeffs.coeffs * eig)


# ---------------------------------------------------------------------------
# ScalarField CSV format
# ---------------------------------------------------------------------------

_FMT = "%.17g"


def write_field_csv(fld, path_or_buf, zeta=None):
    """Write a ScalarField (optionally with vorticity) in the documented CSV schema.

    Leading comment lines carry schema, frame, omega, t, nlat, nlon; rows are
    `lambda,mu,psi[,zeta]` in lambda-major order, 17 significant digits.
    """
    own = isinstance(path_or_buf, (str, bytes))
    f = open(path_or_buf, "w") if own else path_or_buf
    try:
        g = fld.grid
        f.write("# schema=1\n")
        f.write(f"# frame={fld.frame.kind}\n")
        f.write(f"# omega={_FMT % fld.frame.omega}\n")
        f.write(f"# t={_FMT % fld.time}\n")
        f.write(f"# nlat={g.nlat}\n")
        f.write(f"# nlon={g.nlon}\n")
        for k in range(g.nlon):
            lam = g.lambda_nodes[k]
            for j in range(g.nlat):
                row = [_FMT % lam, _FMT % g.mu_nodes[j], _FMT % fld.values[j, k]]
                if zeta is not None:
                    row.append(_FMT % zeta[j, k])
                f.write(",".join(row) + "\n")
    finally:
        if own:
            f.close()


def field_csv_text(fld, zeta=None):
    buf = io.StringIO()
    write_field_csv(fld, buf, zeta=zeta)
    return buf.getvalue()


def read_field_csv(path_or_buf):
    """Read the ScalarField CSV schema; returns (field, zeta_or_None)."""
    own = isinstance(path_or_buf, (str, bytes))
    f = open(path_or_buf) if own else path_or_buf
    try:
        header = {}
        rows = []
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                header[key.strip()] = val.strip()
            else:
                rows.append([float(x) for x in line.split(",")])
    finally:
        if own:
            f.close()
    if header.get("schema") != "1":
        raise InvalidArgumentError("unsupported or missing CSV schema tag")
    nlat, nlon = int(header["nlat"]), int(header["nlon"])
    grid = SphereGrid.build(nlat, nlon)
    data = np.asarray(rows)
    if data.shape[0] != nlat * nlon:
        raise InvalidArgumentError("row count does not match nlat*nlon")
    has_zeta = data.shape[1] == 4
    psi = data[:, 2].reshape(nlon, nlat).T
    zeta = data[:, 3].reshape(nlon, nlat).T if has_zeta else None
    frame = (
        Frame.rest()
        if header["frame"] == "rest"
        else Frame.rotating(float(header["omega"]))
    )
    fld = ScalarField(grid, psi, time=float(header["t"]), frame=frame)
    return fld, zeta
