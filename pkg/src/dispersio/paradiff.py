"""Discrete paradifferential calculus on the periodic grid.

A dyadic partition of frequency space is built from one radial C^2 bump
chi (equal to 1 below 1.1, to 0 above 1.9) through chi_k(xi) =
chi(2^-k xi) and phi_k = chi_k - chi_{k-1}.  A symbol a(x, xi) becomes an
operator by low-pass filtering its x-dependence relative to xi:

    T_a u = sum_k  S_{k-N} a (x) . (phi_k-band of u),

with S_j the chi_j low pass and N the separation parameter.  This is the
exact quantization of the mollified symbol sum_k (S_{k-N} a) phi_k(xi),
so x-independent symbols reduce to plain Fourier multipliers with no
error at all, and the usual calculus (products, adjoints, changes of
cutoff) holds up to operators that are one order smoother.  Those defect
operators are measured here empirically through their action on
band-limited inputs.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import (GridField, abs_xi_grid, l2_norm, linf_norm, mode_field,
                   random_field, sobolev_norm, spectral_derivative,
                   w1inf_norm, wavenumber_axes)

TWO_PI = 2.0 * np.pi


def smoothstep(t):
    """Quintic C^2 step: 0 below 0, 1 above 1, monotone between."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (6.0 * t - 15.0))


@dataclass(frozen=True)
class CutoffSpec:
    """Radial bump profile and the separation parameter of the low pass."""

    nsep: int = 3
    lo: float = 1.1
    hi: float = 1.9

    def profile(self, r):
        """chi(r): 1 for r <= lo, 0 for r >= hi, C^2 in between."""
        r = np.asarray(r, dtype=float)
        return smoothstep((self.hi - r) / (self.hi - self.lo))


class DyadicScheme:
    """Cutoff family instantiated on one grid's wavenumbers.

    kmax is the top dyadic index resolved by the grid Nyquist radius;
    kdec (>= kmax) is the number of bands needed so the partition of
    unity is exact on every resolved wavenumber.
    """

    def __init__(self, n, d, period, cutoff=CutoffSpec()):
        self.n, self.d, self.period, self.cutoff = n, d, period, cutoff
        self.absxi = abs_xi_grid(n, d, period)
        self.knyq = (n // 2) * (TWO_PI / period)
        max_abs = float(self.absxi.max())
        self.kmax = max(0, int(np.floor(np.log2(self.knyq))))
        self.kdec = max(0, int(np.ceil(np.log2(max_abs / cutoff.lo))))
        self._chi = {}

    def chi(self, j):
        """Low-pass profile chi_j on the grid; any integer j is valid."""
        if j not in self._chi:
            self._chi[j] = self.cutoff.profile(2.0 ** float(-j) * self.absxi)
        return self._chi[j]

    def phi(self, k):
        if k == 0:
            return self.chi(0)
        return self.chi(k) - self.chi(k - 1)

    @property
    def bands(self):
        return range(self.kdec + 1)

    def band_project(self, u, k):
        return GridField.from_hat(self.phi(k)[None] * u.hat, u.period)

    def band_core_mask(self, k):
        """Wavenumbers where phi_k is exactly 1."""
        c = self.cutoff
        if k == 0:
            return self.absxi <= c.lo
        return (self.absxi >= c.hi * 2.0 ** (k - 1)) & \
               (self.absxi <= c.lo * 2.0 ** k)


@lru_cache(maxsize=32)
def scheme_for(n, d, period, cutoff=CutoffSpec()):
    return DyadicScheme(n, d, period, cutoff)


def _default_scheme(u, cutoff=CutoffSpec()):
    return scheme_for(u.npoints, u.dim, float(u.period), cutoff)


def decompose(u, scheme=None):
    """Dyadic blocks of u; they sum back to u exactly on the grid."""
    scheme = scheme or _default_scheme(u)
    return [scheme.band_project(u, k) for k in scheme.bands]


def besov_norm(u, scheme=None):
    """sup over blocks of 2^-k max-node magnitude of the k-th block."""
    scheme = scheme or _default_scheme(u)
    return max(2.0 ** (-k) * linf_norm(scheme.band_project(u, k))
               for k in scheme.bands)


# ---------------------------------------------------------------------------
# symbols

def _is_matrix(arr, d):
    return arr is not None and arr.ndim == d + 2


@dataclass(frozen=True)
class SeparableTerm:
    """One product term X(x) f(xi): either factor may be scalar or absent."""

    xfield: np.ndarray | None
    fmult: np.ndarray | None


@dataclass(frozen=True)
class SandwichTerm:
    """Term sum_bc G[a,b,c,d](xi) X[b,c](x), for projector-sandwich symbols.

    G carries the frequency structure (projector pair times a gap weight)
    and X the pointwise coefficient matrix it is applied to.
    """

    gtensor: np.ndarray  # (N, N, N, N) + spatial
    xfield: np.ndarray   # (N, N) + spatial


@dataclass(frozen=True)
class PdoSymbol:
    n: int
    d: int
    period: float
    order: float
    terms: tuple

    @property
    def is_multiplier(self):
        return all(isinstance(t, SeparableTerm) and t.xfield is None
                   for t in self.terms)

    def multiplier(self):
        """Collapse an x-independent symbol to one multiplier array."""
        if not self.is_multiplier:
            raise ValueError("symbol has x-dependent terms")
        total = None
        for t in self.terms:
            m = t.fmult if t.fmult is not None else np.ones((self.n,) * self.d)
            total = m if total is None else total + m
        return total


def multiplier_symbol(mult, order, n, d, period):
    mult = np.asarray(mult, dtype=complex)
    return PdoSymbol(n, d, period, order, (SeparableTerm(None, mult),))


def paraproduct_symbol(a, order=0.0):
    """Frequency-independent symbol a(x) from a scalar or matrix field.

    Accepts a one-component GridField (scalar coefficient) or a raw array
    of shape (N, N) + spatial (matrix coefficient); needs the field to
    carry its own grid metadata in the first case.
    """
    if isinstance(a, GridField):
        if a.ncomp != 1:
            raise ValueError("scalar paraproduct needs a 1-component field")
        return PdoSymbol(a.npoints, a.dim, a.period, order,
                         (SeparableTerm(a.values[0], None),))
    raise TypeError("pass a GridField; use matrix_symbol for raw arrays")


def matrix_symbol(arr, n, d, period, order=0.0, fmult=None):
    arr = np.asarray(arr, dtype=complex)
    if not _is_matrix(arr, d):
        raise ValueError("expected a matrix field of shape (N, N) + spatial")
    return PdoSymbol(n, d, period, order, (SeparableTerm(arr, fmult),))


def first_order_symbol(coupling, state):
    """Symbol sum_j B_j(state(x)) xi_j of a coupling frozen at a state."""
    n, d, period = state.npoints, state.dim, state.period
    axes = wavenumber_axes(n, d, period)
    full = np.broadcast_to(abs_xi_grid(n, d, period), (n,) * d)
    terms = []
    for j in range(coupling.dim):
        xf = coupling.coeff_field(j, state.values)
        fm = np.broadcast_to(axes[j], full.shape).astype(complex)
        terms.append(SeparableTerm(xf, fm))
    return PdoSymbol(n, d, period, 1.0, tuple(terms))


def symbol_product(a, b):
    """Pointwise product symbol ab; defined when matrix factors line up.

    Terms multiply as X_a f_a X_b f_b; the result is separable again
    whenever f_a or X_b is scalar (or absent), which covers multipliers,
    paraproducts and first-order symbols.  Anything else has genuinely
    intertwined matrix structure and is rejected.
    """
    if (a.n, a.d, a.period) != (b.n, b.d, b.period):
        raise ValueError("symbols live on different grids")
    d = a.d
    terms = []
    for ta in a.terms:
        for tb in b.terms:
            if not (isinstance(ta, SeparableTerm)
                    and isinstance(tb, SeparableTerm)):
                raise NotImplementedError(
                    "products with sandwich terms are not representable")
            fa, xb = ta.fmult, tb.xfield
            fa_matrix = _is_matrix(fa, d)
            xb_matrix = _is_matrix(xb, d)
            if fa_matrix and xb_matrix:
                raise NotImplementedError(
                    "matrix frequency factor times matrix coefficient does "
                    "not commute; refactor the symbols")
            if fa_matrix:
                # xb is scalar or absent: slide it through fa
                xnew = _scalar_combine(ta.xfield, xb, d)
                fnew = _mult_combine(fa, tb.fmult, d)
            else:
                xnew = _field_combine(ta.xfield, xb, d)
                fnew = _mult_combine(fa, tb.fmult, d)
            terms.append(SeparableTerm(xnew, fnew))
    return PdoSymbol(a.n, a.d, a.period, a.order + b.order, tuple(terms))


def _scalar_combine(x, scalar_field, d):
    if scalar_field is None:
        return x
    if x is None:
        return scalar_field
    return x * scalar_field


def _field_combine(xa, xb, d):
    if xa is None:
        return xb
    if xb is None:
        return xa
    if _is_matrix(xa, d) and _is_matrix(xb, d):
        return np.einsum("ab...,bc...->ac...", xa, xb)
    return xa * xb


def _mult_combine(fa, fb, d):
    if fa is None:
        return fb
    if fb is None:
        return fa
    if _is_matrix(fa, d) and _is_matrix(fb, d):
        return np.einsum("ab...,bc...->ac...", fa, fb)
    return fa * fb


def symbol_adjoint(a):
    """Symbol with values a(x, xi)* (pointwise conjugate transpose)."""
    terms = []
    for t in a.terms:
        if isinstance(t, SandwichTerm):
            g = np.conj(np.swapaxes(t.gtensor, 0, 3))
            terms.append(SandwichTerm(g, np.conj(t.xfield)))
            continue
        x, f = t.xfield, t.fmult
        xm, fm = _is_matrix(x, a.d), _is_matrix(f, a.d)
        if xm and fm:
            raise NotImplementedError(
                "adjoint of matrix-times-matrix term is not separable")
        xs = None if x is None else (
            np.conj(np.swapaxes(x, 0, 1)) if xm else np.conj(x))
        fs = None if f is None else (
            np.conj(np.swapaxes(f, 0, 1)) if fm else np.conj(f))
        terms.append(SeparableTerm(xs, fs))
    return PdoSymbol(a.n, a.d, a.period, a.order, tuple(terms))


# ---------------------------------------------------------------------------
# operator application

def _spatial_fft(arr, d):
    return np.fft.fftn(arr, axes=tuple(range(arr.ndim - d, arr.ndim)))


def _spatial_ifft(arr, d):
    return np.fft.ifftn(arr, axes=tuple(range(arr.ndim - d, arr.ndim)))


def _mult_apply(m, uhat, d):
    if m is None:
        return uhat
    if _is_matrix(m, d):
        return np.einsum("ab...,b...->a...", m, uhat)
    return m[None] * uhat


def _field_apply(x, v, d):
    if x is None:
        return v
    if _is_matrix(x, d):
        return np.einsum("ab...,b...->a...", x, v)
    return x[None] * v


def apply_T(sym, u, scheme=None):
    """Apply the paradifferential operator of a symbol to a field.

    x-independent symbols go through the exact Fourier-multiplier path;
    everything else is assembled band by band with the low-passed
    coefficients.
    """
    scheme = scheme or scheme_for(sym.n, sym.d, sym.period)
    if sym.is_multiplier:
        m = sym.multiplier()
        hat = _mult_apply(m, u.hat, sym.d)
        return GridField.from_hat(hat, u.period)

    d = sym.d
    nsep = scheme.cutoff.nsep
    uhat = u.hat
    out = np.zeros_like(u.values)
    xhats = [None if t.xfield is None else _spatial_fft(t.xfield, d)
             for t in sym.terms]
    for k in scheme.bands:
        phik = scheme.phi(k)
        low = scheme.chi(k - nsep)
        for t, xhat in zip(sym.terms, xhats):
            if isinstance(t, SandwichTerm):
                yhat = np.einsum("abcd...,d...->abc...",
                                 t.gtensor, phik[None] * uhat)
                y = _spatial_ifft(yhat, d)
                xk = _spatial_ifft(low * xhat, d)
                out += np.einsum("bc...,abc...->a...", xk, y)
                continue
            v = _spatial_ifft(_mult_apply(t.fmult, phik[None] * uhat, d), d)
            if t.xfield is None:
                out += v
            else:
                xk = _spatial_ifft(low * xhat, d)
                out += _field_apply(xk, v, d)
    return GridField(out, u.period)


def apply_T_adjoint(sym, u, scheme=None):
    """Exact discrete L2 adjoint of apply_T for the same symbol."""
    scheme = scheme or scheme_for(sym.n, sym.d, sym.period)
    d = sym.d
    if sym.is_multiplier:
        m = sym.multiplier()
        madj = np.conj(np.swapaxes(m, 0, 1)) if _is_matrix(m, d) else np.conj(m)
        return GridField.from_hat(_mult_apply(madj, u.hat, d), u.period)

    nsep = scheme.cutoff.nsep
    out_hat = np.zeros_like(u.values)
    xhats = [None if getattr(t, "xfield", None) is None
             else _spatial_fft(t.xfield, d) for t in sym.terms]
    for k in scheme.bands:
        phik = scheme.phi(k)
        low = scheme.chi(k - nsep)
        for t, xhat in zip(sym.terms, xhats):
            if isinstance(t, SandwichTerm):
                xk = _spatial_ifft(low * xhat, d)
                z = np.einsum("bc...,a...->abc...", np.conj(xk), u.values)
                zhat = _spatial_fft(z, d)
                out_hat += np.einsum("abcd...,abc...->d...",
                                     np.conj(t.gtensor), zhat) * phik[None]
                continue
            if t.xfield is None:
                w = u.values
            else:
                xk = _spatial_ifft(low * xhat, d)
                if _is_matrix(xk, d):
                    w = np.einsum("ba...,b...->a...", np.conj(xk), u.values)
                else:
                    w = np.conj(xk)[None] * u.values
            what = _spatial_fft(w, d)
            f = t.fmult
            if f is None:
                out_hat += phik[None] * what
            elif _is_matrix(f, d):
                out_hat += np.einsum("ba...,b...->a...", np.conj(f),
                                     phik[None] * what)
            else:
                out_hat += np.conj(f)[None] * phik[None] * what
    return GridField.from_hat(out_hat, u.period)


# ---------------------------------------------------------------------------
# defect operators and their band scaling

def compose_defect(a, b, u, scheme=None):
    """(T_a T_b - T_ab) u; one order smoother than the naive product."""
    return apply_T(a, apply_T(b, u, scheme), scheme) - \
        apply_T(symbol_product(a, b), u, scheme)


def adjoint_defect(a, u, scheme=None):
    """((T_a)* - T_{a*}) u; one order smoother than T_a."""
    return apply_T_adjoint(a, u, scheme) - apply_T(symbol_adjoint(a), u, scheme)


def cutoff_difference(a, u, cut1, cut2):
    """(T_a^{psi1} - T_a^{psi2}) u for two admissible cutoff choices."""
    s1 = scheme_for(a.n, a.d, a.period, cut1)
    s2 = scheme_for(a.n, a.d, a.period, cut2)
    return apply_T(a, u, s1) - apply_T(a, u, s2)


def band_input(rng, scheme, k, ncomp, period):
    """Unit random field spectrally supported where phi_k equals 1."""
    mask = scheme.band_core_mask(k)
    if not mask.any():
        return None
    shape = (ncomp,) + mask.shape
    hat = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    hat *= mask[None]
    f = GridField.from_hat(hat, period)
    nrm = l2_norm(f)
    return f * (1.0 / nrm) if nrm > 0 else None


def band_operator_norms(op, scheme, ncomp, ks, rng, trials=5):
    """Empirical L2 -> L2 norms of an operator on dyadic-band inputs."""
    out = {}
    for k in ks:
        worst = 0.0
        for _ in range(trials):
            u = band_input(rng, scheme, k, ncomp, scheme.period)
            if u is None:
                break
            worst = max(worst, l2_norm(op(u)))
        if worst > 0.0:
            out[k] = worst
    return out


def fit_band_slope(norms):
    """log2 least-squares slope of band norms against the band index."""
    ks = sorted(norms)
    if len(ks) < 2:
        raise ValueError("need at least two bands for a slope fit")
    x = np.array(ks, dtype=float)
    y = np.log2([max(norms[k], 1e-300) for k in ks])
    return float(np.polyfit(x, y, 1)[0])


def slope_band_range(scheme, klo=4):
    """Fit range [klo, kmax - 1]; the top band suffers truncation."""
    return range(klo, max(scheme.kmax - 1, klo) + 1)


def paralinearization_defect(a, u, axis=0, scheme=None):
    """a d_j u - T_a d_j u for a scalar coefficient field a."""
    du = spectral_derivative(u, axis)
    direct = GridField(a.values[0][None] * du.values, u.period)
    return direct - apply_T(paraproduct_symbol(a), du, scheme)


def paralinearization_constant(a, u, axis=0, scheme=None):
    return l2_norm(paralinearization_defect(a, u, axis, scheme)) / \
        (w1inf_norm(a) * l2_norm(u))


def time_commutator(dta, u, scheme=None, order=0.0):
    """T_{d/dt a} u: the time commutator of a paradifferential family.

    Differentiating t -> T_{a(t)} in time commutes with the band sums, so
    the commutator with d/dt is exactly the operator of the differentiated
    symbol; dta may be a one-component GridField (coefficient time slope,
    possibly only Besov-regular) or a ready-made symbol.
    """
    if isinstance(dta, GridField):
        dta = paraproduct_symbol(dta, order)
    return apply_T(dta, u, scheme)


# ---------------------------------------------------------------------------
# admissibility of the cutoff pair

def measure_admissibility(cutoff=CutoffSpec(), radii=None, neta=4000,
                          kbig=48):
    """Empirical (eps1, eps2) of psi(eta, xi) = sum chi_{k-N}(eta) phi_k(xi).

    eps1 is the largest fraction of (1 + |xi|) below which psi is
    identically 1, minimized over |xi|; eps2 the smallest fraction above
    which psi vanishes, maximized over |xi|.  Admissibility means
    0 < eps1 < eps2 < 1.
    """
    if radii is None:
        radii = np.concatenate([[0.0], np.geomspace(0.05, 2.0 ** 20, 200)])
    eps1, eps2 = np.inf, 0.0
    for rho in radii:
        phis = []
        for k in range(kbig + 1):
            if k == 0:
                phis.append(cutoff.profile(rho))
            else:
                phis.append(cutoff.profile(2.0 ** (-k) * rho)
                            - cutoff.profile(2.0 ** (-k + 1) * rho))
        phis = np.array(phis)
        if abs(phis.sum() - 1.0) > 1e-9:
            continue  # rho beyond the last band
        etas = np.linspace(0.0, 1.0 + rho, neta)
        psi = np.zeros_like(etas)
        for k, pk in enumerate(phis):
            if pk != 0.0:
                psi += pk * cutoff.profile(2.0 ** (-(k - cutoff.nsep)) * etas)
        ones = np.nonzero(np.abs(psi - 1.0) > 1e-12)[0]
        r1 = etas[ones[0] - 1] if ones.size and ones[0] > 0 else etas[-1]
        nz = np.nonzero(np.abs(psi) > 1e-12)[0]
        r2 = etas[nz[-1] + 1] if nz.size and nz[-1] + 1 < neta else \
            (etas[-1] if nz.size else 0.0)
        eps1 = min(eps1, r1 / (1.0 + rho))
        eps2 = max(eps2, r2 / (1.0 + rho))
    return float(eps1), float(eps2)


# ---------------------------------------------------------------------------
# measurement bundle for the paracheck harness

def paracheck_report(n=256, d=1, trials=25, seed=0, period=TWO_PI):
    """Measure the calculus on one grid: exactness, constants, slopes."""
    rng = np.random.default_rng(seed)
    scheme = scheme_for(n, d, period)

    report = {"grid": n, "dim": d, "period": period, "trials": trials,
              "seed": seed, "kmax": scheme.kmax, "kbands": scheme.kdec + 1}

    # partition of unity and reconstruction
    total = sum(scheme.phi(k) for k in scheme.bands)
    report["partition_max_dev"] = float(np.abs(total - 1.0).max())
    u = random_field(rng, n, d, period, ncomp=2)
    rec = u
    for blk in decompose(u, scheme):
        rec = rec - blk
    report["reconstruction_rel_err"] = l2_norm(rec) / l2_norm(u)

    # multiplier fast path against direct application
    mult = np.sqrt(1.0 + abs_xi_grid(n, d, period) ** 2)
    sym = multiplier_symbol(mult, 0.5, n, d, period)
    diff = apply_T(sym, u, scheme) - GridField.from_hat(
        mult[None] * u.hat, period)
    report["multiplier_rel_err"] = l2_norm(diff) / l2_norm(u)

    eps1, eps2 = measure_admissibility(scheme.cutoff)
    report["eps1"], report["eps2"] = eps1, eps2

    # Besov embedding ratio at s = d/2 - 1 + 0.5
    s_emb = d / 2.0 - 0.5
    ratios = []
    for _ in range(trials):
        w = random_field(rng, n, d, period, ncomp=1, decay=1.0)
        ratios.append(besov_norm(w, scheme) / sobolev_norm(w, s_emb))
    report["besov_embedding_max_ratio"] = float(max(ratios))

    # paralinearization constant at this size and at half size
    def paralin_c(nn, count):
        sch = scheme_for(nn, d, period)
        r = np.random.default_rng(seed + 1)
        worst = 0.0
        for _ in range(count):
            a = random_field(r, nn, d, period, ncomp=1, decay=2.0)
            v = random_field(r, nn, d, period, ncomp=2)
            worst = max(worst, paralinearization_constant(a, v, 0, sch))
        return worst

    report["paralin_C"] = paralin_c(n, trials)
    report["paralin_C_half"] = paralin_c(n // 2, trials)
    report["paralin_ratio"] = report["paralin_C"] / report["paralin_C_half"]

    # defect band slopes; the coefficient needs genuine C^1 decay or the
    # low-passed derivative mass keeps growing with k and biases the fit
    ks = slope_band_range(scheme)
    acoef = random_field(rng, n, d, period, ncomp=1, decay=3.0)
    para = paraproduct_symbol(acoef)
    slope_rng = np.random.default_rng(seed + 2)

    comp_sym = multiplier_symbol(mult, 1.0, n, d, period)

    def compose_op(v):
        return compose_defect(comp_sym, para, v, scheme)

    def adjoint_op(v):
        return adjoint_defect(para, v, scheme)

    cut4 = CutoffSpec(nsep=4)

    def cutoff_op(v):
        return cutoff_difference(para, v, scheme.cutoff, cut4)

    slopes = {}
    for name, op, naive in (("compose", compose_op, 1.0),
                            ("adjoint", adjoint_op, 0.0),
                            ("cutoff", cutoff_op, 0.0)):
        norms = band_operator_norms(op, scheme, 2, ks, slope_rng, trials=3)
        slopes[name] = {"slope": fit_band_slope(norms),
                        "naive_order": naive,
                        "norms": {str(k): v for k, v in norms.items()}}
    report["defect_slopes"] = slopes

    # time commutator with rough coefficient slopes
    smooth = random_field(rng, n, d, period, ncomp=2, decay=3.0)
    tc = {}
    for m in slope_band_range(scheme):
        spike = mode_field(n, d, period, 1, 0, [2 ** m] + [0] * (d - 1),
                           amplitude=2.0 ** m)
        tc[str(m)] = l2_norm(time_commutator(spike, smooth, scheme))
    report["time_commutator_norms"] = tc
    return report
