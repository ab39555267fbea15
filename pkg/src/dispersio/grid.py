"""Periodic grid fields with cached spectra.

Fields live on a uniform torus grid with ``n`` points per axis (a power of
two) and period ``L``.  A field carries N complex components stored as an
array of shape (N, n, ..., n); the spatial axes come last so transforms map
over components.  Discrete norms carry the quadrature weight (L/n)^d, which
makes the L2 pairing match the continuum one and keeps Sobolev norms
consistent under grid refinement.
"""

from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * np.pi


@lru_cache(maxsize=64)
def _axes_cached(n, d, period):
    base = TWO_PI / period * np.fft.fftfreq(n, 1.0 / n)
    out = []
    for j in range(d):
        shape = [1] * d
        shape[j] = n
        out.append(base.reshape(shape).copy())
    return tuple(out)


def wavenumber_axes(n, d, period):
    """Physical wavenumbers along each axis, shaped for broadcasting."""
    return _axes_cached(int(n), int(d), float(period))


@lru_cache(maxsize=64)
def _abs_xi_cached(n, d, period):
    axes = _axes_cached(n, d, period)
    return np.sqrt(sum(a * a for a in axes) + 0.0)


def abs_xi_grid(n, d, period):
    """|xi| on the full spatial grid, shape (n,)*d."""
    g = _abs_xi_cached(int(n), int(d), float(period))
    return np.broadcast_to(g, (n,) * d) if g.shape != (n,) * d else g


def xi_sq_grid(n, d, period):
    g = _abs_xi_cached(int(n), int(d), float(period))
    return g * g


class GridField:
    """Complex multi-component field sampled on the torus grid."""

    __slots__ = ("values", "period", "_hat")

    def __init__(self, values, period, _hat=None):
        values = np.asarray(values, dtype=np.complex128)
        if values.ndim < 2:
            raise ValueError("field values need shape (components, n, ...)")
        n = values.shape[1]
        if any(s != n for s in values.shape[1:]):
            raise ValueError("spatial axes must share one size")
        self.values = values
        self.period = float(period)
        self._hat = _hat

    @property
    def ncomp(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.ndim - 1

    @property
    def npoints(self):
        return self.values.shape[1]

    @property
    def spatial_axes(self):
        return tuple(range(1, self.values.ndim))

    @property
    def hat(self):
        """Unnormalized FFT over the spatial axes, cached."""
        if self._hat is None:
            self._hat = np.fft.fftn(self.values, axes=self.spatial_axes)
        return self._hat

    @classmethod
    def from_hat(cls, hat, period):
        vals = np.fft.ifftn(np.asarray(hat, dtype=np.complex128),
                            axes=tuple(range(1, hat.ndim)))
        return cls(vals, period, _hat=np.array(hat, dtype=np.complex128))

    def copy(self):
        return GridField(self.values.copy(), self.period)

    def __add__(self, other):
        return GridField(self.values + other.values, self.period)

    def __sub__(self, other):
        return GridField(self.values - other.values, self.period)

    def __mul__(self, scalar):
        return GridField(self.values * scalar, self.period)

    __rmul__ = __mul__

    def __neg__(self):
        return GridField(-self.values, self.period)


def cell_weight(u):
    return (u.period / u.npoints) ** u.dim


def l2_norm(u):
    return float(np.sqrt(cell_weight(u) * np.sum(np.abs(u.values) ** 2)))


def inner(u, v):
    """Discrete L2 pairing, linear in the first argument."""
    return complex(cell_weight(u) * np.sum(u.values * np.conj(v.values)))


def sobolev_norm(u, s):
    """H^s norm via Parseval; s = 0 reproduces the L2 norm exactly."""
    w = xi_sq_grid(u.npoints, u.dim, u.period)
    weight = (1.0 + w) ** s
    total = np.sum(weight * np.sum(np.abs(u.hat) ** 2, axis=0))
    return float(np.sqrt(cell_weight(u) / u.npoints ** u.dim * total))


def linf_norm(u):
    """Max over nodes of the euclidean component magnitude."""
    return float(np.sqrt(np.sum(np.abs(u.values) ** 2, axis=0)).max())


def apply_multiplier(u, mult):
    """Apply a scalar or matrix Fourier multiplier given on the grid.

    ``mult`` has shape (n,)*d for a scalar multiplier or (N, N) + (n,)*d
    for a matrix one.
    """
    if mult.ndim == u.dim:
        hat = mult[None, ...] * u.hat
    else:
        hat = np.einsum("ab...,b...->a...", mult, u.hat)
    return GridField.from_hat(hat, u.period)


def spectral_derivative(u, axis):
    ax = wavenumber_axes(u.npoints, u.dim, u.period)[axis]
    return GridField.from_hat(1j * ax * u.hat, u.period)


def w1inf_norm(u):
    """max|u| plus the max of each spectral first derivative."""
    total = linf_norm(u)
    for j in range(u.dim):
        total += linf_norm(spectral_derivative(u, j))
    return total


def mode_field(n, d, period, ncomp, component, mode, amplitude=1.0):
    """Single Fourier mode exp(i xi.x) in one component; ``mode`` holds integers."""
    mode = np.atleast_1d(np.asarray(mode))
    idx = np.indices((n,) * d)
    phase = sum(TWO_PI * mode[j] * idx[j] / n for j in range(d))
    vals = np.zeros((ncomp,) + (n,) * d, dtype=np.complex128)
    vals[component] = amplitude * np.exp(1j * phase)
    return GridField(vals, period)


def random_field(rng, n, d, period, ncomp, kind="white", band=None, decay=0.0,
                 amplitude=1.0):
    """Seeded random field built in Fourier space.

    kind="white" fills all modes with unit-variance complex noise; ``band``
    restricts |xi| to [lo, hi]; ``decay`` multiplies by (1+|xi|)^-decay for
    smoother draws.
    """
    shape = (ncomp,) + (n,) * d
    hat = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    absxi = abs_xi_grid(n, d, period)
    if band is not None:
        lo, hi = band
        hat = hat * ((absxi >= lo) & (absxi <= hi))
    if decay:
        hat = hat * (1.0 + absxi) ** (-decay)
    f = GridField.from_hat(hat, period)
    nrm = l2_norm(f)
    if nrm > 0:
        f = f * (amplitude / nrm)
    return f
