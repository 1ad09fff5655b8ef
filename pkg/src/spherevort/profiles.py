"""Built-in scalar function profiles used by the solution constructors.

Profiles are named 1-argument functions with exact derivatives and (where it
exists) the antiderivative vanishing at 0.  Spec strings:

    zero            f(x) = 0
    identity        f(x) = x
    const:<v>       f(x) = v
    power:<k>       f(x) = x**k
    cpower:<c>:<k>  f(x) = c * x**k
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError


class Profile:
    """Scalar function with derivatives up to third order."""

    def __call__(self, x):
        raise NotImplementedError

    def deriv(self, x, order=1):
        raise NotImplementedError

    def antideriv(self, x):
        """Antiderivative vanishing at 0."""
        raise NotImplementedError

    def is_zero(self):
        return False


class PowerProfile(Profile):
    """c * x**k for real k; the workhorse behind all named profiles."""

    def __init__(self, coeff, exponent):
        self.coeff = float(coeff)
        self.exponent = float(exponent)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.coeff == 0.0:
            return np.zeros_like(x)
        return self.coeff * np.power(x, self.exponent)

    def deriv(self, x, order=1):
        x = np.asarray(x, dtype=float)
        c, k = self.coeff, self.exponent
        for _ in range(order):
            c, k = c * k, k - 1.0
        if c == 0.0:
            return np.zeros_like(x)
        return c * np.power(x, k)

    def antideriv(self, x):
        x = np.asarray(x, dtype=float)
        c, k = self.coeff, self.exponent
        if c == 0.0:
            return np.zeros_like(x)
        if k == -1.0:
            raise InvalidArgumentError(
                "antiderivative of x**-1 has no base point at 0"
            )
        return c / (k + 1.0) * np.power(x, k + 1.0)

    def is_zero(self):
        return self.coeff == 0.0


class ZeroProfile(PowerProfile):
    def __init__(self):
        super().__init__(0.0, 0.0)


class ConstProfile(PowerProfile):
    def __init__(self, value):
        super().__init__(value, 0.0)

    def antideriv(self, x):
        return self.coeff * np.asarray(x, dtype=float)


class CallableProfile(Profile):
    """Adapter for user-supplied callables; derivatives optional."""

    def __init__(self, fn, d1=None, d2=None, d3=None, antideriv=None):
        self._fn = fn
        self._derivs = {1: d1, 2: d2, 3: d3}
        self._antideriv = antideriv

    def __call__(self, x):
        return self._fn(np.asarray(x, dtype=float))

    def deriv(self, x, order=1):
        d = self._derivs.get(order)
        if d is None:
            raise InvalidArgumentError(
                f"profile does not supply derivative of order {order}"
            )
        return d(np.asarray(x, dtype=float))

    def antideriv(self, x):
        if self._antideriv is None:
            from scipy.integrate import quad

            x = np.asarray(x, dtype=float)
            flat = np.atleast_1d(x).ravel()
            out = np.array(
                [quad(self._fn, 0.0, xi, epsabs=1e-12, epsrel=1e-12)[0] for xi in flat]
            )
            return out.reshape(np.shape(x))
        return self._antideriv(np.asarray(x, dtype=float))


def parse_profile(spec):
    """Parse a profile spec string (or pass a Profile through)."""
    if isinstance(spec, Profile):
        return spec
    if not isinstance(spec, str):
        raise InvalidArgumentError(f"cannot parse profile from {spec!r}")
    name, _, rest = spec.partition(":")
    name = name.strip().lower()
    if name == "zero":
        return ZeroProfile()
    if name == "identity":
        return PowerProfile(1.0, 1.0)
    if name == "const":
        return ConstProfile(float(rest))
    if name == "power":
        return PowerProfile(1.0, float(rest))
    if name == "cpower":
        c, _, k = rest.partition(":")
        return PowerProfile(float(c), float(k))
    raise InvalidArgumentError(f"unknown profile {spec!r}")
