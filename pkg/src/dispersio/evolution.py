"""Time integration with energy diagnostics.

The linearized equation d/dt u + i A(dx) J u + B(a(t,x), dx) J u = f is
advanced by Strang splitting: the dispersive flow is an exact Fourier
multiplier (so it conserves the L2 norm to rounding and is never a CFL
constraint), and the first-order term uses an explicit midpoint stage.
The mollifier J = (1 - eps Laplacian)^-1 damps the generator at high
frequency; eps = 0 turns it off.

The symmetrizer Sigma = Id - T_V - (T_V)* + gamma (1 - Laplacian)^-1 built
from the degree -1 conjugator V is a diagnostic only: runs integrate the
equation directly and evaluate the Sigma energy on the recorded states.
The quasilinear problem is solved by Picard iteration on the linearized
flow with coefficients frozen at the previous iterate.
"""

import numpy as np

from dataclasses import dataclass, field

from .grid import (GridField, inner, l2_norm, linf_norm, mode_field,
                   random_field, sobolev_norm, wavenumber_axes, xi_sq_grid)
from .paradiff import (PdoSymbol, SandwichTerm, SeparableTerm, apply_T,
                       apply_T_adjoint, scheme_for, smoothstep)
from .symbols import StructuralError, eigenstructure, conjugator

BLOWUP_FACTOR = 1e10


class CflError(RuntimeError):
    """Time step too large for the split scheme to remain stable."""

    def __init__(self, dt, suggested, which="first-order CFL proxy"):
        self.suggested_dt = suggested
        self.which = which
        super().__init__(
            f"dt = {dt:g} violates the {which}; try dt <= {suggested:g}")


def zeta_profile(r):
    """Origin cutoff: 0 for r <= 1/4, 1 for r >= 1, C^2 between."""
    return smoothstep((np.asarray(r, dtype=float) - 0.25) / 0.75)


def mollifier(n, d, period, eps):
    """J multiplier 1 / (1 + eps |xi|^2) on the grid."""
    return 1.0 / (1.0 + eps * xi_sq_grid(n, d, period))


def _as_coeff(coeff, t):
    if coeff is None or isinstance(coeff, GridField):
        return coeff
    return coeff(t)


def state_interpolant(states, dt):
    """Linear-in-time interpolant through states sampled every dt."""

    def at(t):
        x = t / dt
        i = int(np.floor(x))
        i = min(max(i, 0), len(states) - 1)
        if i >= len(states) - 1:
            return states[-1]
        th = x - i
        if th <= 0.0:
            return states[i]
        return GridField((1.0 - th) * states[i].values
                         + th * states[i + 1].values, states[i].period)

    return at


class LinearPropagator:
    """One Strang step of the mollified linearized equation."""

    def __init__(self, spec, dt, eps=0.0, n=None):
        self.spec = spec
        self.dt = float(dt)
        self.eps = float(eps)
        self.n = n = int(n or spec.grid_points)
        self.period = spec.period
        d = spec.dim
        self.axes = wavenumber_axes(n, d, self.period)
        self.jeps = mollifier(n, d, self.period, eps)
        self.kmax_l1 = sum(float(np.abs(a).max()) for a in self.axes)

        # exact dispersive half step exp(-i dt/2 J(xi) A(xi)), batched
        agrid = spec.dispersion.at_grid(self.axes)         # sp + (N, N)
        h = np.broadcast_to(self.jeps[..., None, None],
                            agrid.shape) * agrid
        w, v = np.linalg.eigh(h)
        phase = np.exp(-0.5j * self.dt * w)
        half = np.einsum("...ab,...b,...cb->...ac", v, phase, v.conj())
        self.half_mult = np.moveaxis(half, (-2, -1), (0, 1))

        # splitting is only stable when the dispersive rotation per step
        # stays far from the pi resonance, where the phase factor commutes
        # with everything and the first-order growth accumulates unchecked
        self.rotation_rate = float(np.abs(w).max())
        if self.dt * self.rotation_rate > 1.0 + 1e-12:
            raise CflError(self.dt, 0.9 / max(self.rotation_rate, 1e-300),
                           which="dispersive rotation resolution bound")

    def _check_cfl(self, coeff_field):
        vals = None if coeff_field is None else coeff_field.values
        bound = 0.0
        for j in range(self.spec.dim):
            bj = self.spec.coupling.coeff_field(
                j, vals) if vals is not None else None
            if bj is None:
                m = self.spec.coupling.coeff(j)
                bound = max(bound, float(np.linalg.norm(m)))
            else:
                # Frobenius per node upper-bounds the spectral norm
                bound = max(bound, float(
                    np.sqrt((np.abs(bj) ** 2).sum(axis=(0, 1))).max()))
        if self.dt * bound * self.kmax_l1 > 1.0 + 1e-12:
            raise CflError(self.dt, 0.9 / max(bound * self.kmax_l1, 1e-300))
        return bound

    def _dispersive_half(self, vals):
        hat = np.fft.fftn(vals, axes=tuple(range(1, vals.ndim)))
        hat = np.einsum("ab...,b...->a...", self.half_mult, hat)
        return np.fft.ifftn(hat, axes=tuple(range(1, hat.ndim)))

    def _first_order_rhs(self, vals, coeff_field, forcing):
        hat = np.fft.fftn(vals, axes=tuple(range(1, vals.ndim)))
        hat *= self.jeps[None]
        out = np.zeros_like(vals)
        cvals = None if coeff_field is None else coeff_field.values
        for j in range(self.spec.dim):
            dj = np.fft.ifftn(1j * self.axes[j][None] * hat,
                              axes=tuple(range(1, hat.ndim)))
            if cvals is None:
                bj = self.spec.coupling.coeff(j)
                out -= np.einsum("ab,b...->a...", bj, dj)
            else:
                bj = self.spec.coupling.coeff_field(j, cvals)
                out -= np.einsum("ab...,b...->a...", bj, dj)
        if forcing is not None:
            out += forcing.values
        return out

    def step(self, u, t, coeff=None, forcing=None):
        """Advance from t to t + dt."""
        vals = self._dispersive_half(u.values)
        c_mid = _as_coeff(coeff, t + 0.5 * self.dt)
        self._check_cfl(c_mid)
        f0 = _as_coeff(forcing, t)
        fmid = _as_coeff(forcing, t + 0.5 * self.dt)
        k1 = self._first_order_rhs(vals, _as_coeff(coeff, t), f0)
        mid = vals + 0.5 * self.dt * k1
        vals = vals + self.dt * self._first_order_rhs(mid, c_mid, fmid)
        vals = self._dispersive_half(vals)
        return GridField(vals, u.period)


# ---------------------------------------------------------------------------
# symmetrizer

@dataclass
class Symmetrizer:
    vsym: PdoSymbol | None
    gamma: float
    c0_hat: float
    n: int
    dim: int
    period: float
    doublings: int = 0

    def apply(self, u):
        j1 = mollifier(self.n, self.dim, self.period, 1.0)
        out = u.values + self.gamma * GridField.from_hat(
            j1[None] * u.hat, u.period).values
        if self.vsym is not None:
            out = out - apply_T(self.vsym, u).values
            out = out - apply_T_adjoint(self.vsym, u).values
        return GridField(out, u.period)

    def energy(self, u):
        return float(np.real(inner(self.apply(u), u)))


def conjugator_symbol(spec, coeff=None, n=None):
    """Degree -1 symbol V(x, xi) zeta(|xi|) of the conjugator.

    Constant couplings yield a pure matrix multiplier.  State-dependent
    couplings at a frozen coefficient field become projector-sandwich
    terms: the frequency side carries Pi_p ( . ) Pi_q xi_j zeta / gap and
    the x side the pointwise skew part of each direction coefficient.
    """
    if spec.conjugate_coupling is not None:
        raise ValueError("build the symmetrizer on the doubled system when "
                         "a conjugate coupling is present")
    n = int(n or spec.grid_points)
    d, ncomp = spec.dim, spec.ncomp
    axes = wavenumber_axes(n, d, spec.period)
    shape = (n,) * d
    xi_vectors = np.stack([np.broadcast_to(a, shape) for a in axes])
    flat = xi_vectors.reshape(d, -1)
    absxi = np.sqrt((flat ** 2).sum(axis=0))
    zeta = zeta_profile(absxi)

    if spec.coupling.is_constant:
        vmult = np.zeros((ncomp, ncomp, flat.shape[1]), dtype=complex)
        for idx in range(flat.shape[1]):
            if zeta[idx] == 0.0:
                continue
            xi = flat[:, idx]
            es = eigenstructure(spec.dispersion, xi)
            bmat = spec.coupling.at(xi)
            vmult[:, :, idx] = zeta[idx] * conjugator(es, bmat)
        term = SeparableTerm(None, vmult.reshape((ncomp, ncomp) + shape))
        return PdoSymbol(n, d, spec.period, -1.0, (term,))

    if coeff is None:
        raise ValueError("state-dependent coupling needs a coefficient field")
    gts = [np.zeros((ncomp,) * 4 + (flat.shape[1],), dtype=complex)
           for _ in range(d)]
    for idx in range(flat.shape[1]):
        if zeta[idx] == 0.0:
            continue
        xi = flat[:, idx]
        es = eigenstructure(spec.dispersion, xi)
        lams, projs = es.eigenvalues, es.projectors
        for p in range(len(lams)):
            for q in range(len(lams)):
                if p == q:
                    continue
                gap = lams[q] - lams[p]
                pair = np.einsum("ab,cd->abcd", projs[p], projs[q])
                for j in range(d):
                    gts[j][..., idx] += pair * (xi[j] * zeta[idx] / gap)
    terms = []
    for j in range(d):
        xf = skew_part_field(spec.coupling.coeff_field(j, coeff.values))
        terms.append(SandwichTerm(gts[j].reshape((ncomp,) * 4 + shape), xf))
    return PdoSymbol(n, d, spec.period, -1.0, tuple(terms))


def skew_part_field(bfield):
    """(B - B*)/2 pointwise over a matrix field (N, N) + spatial."""
    return 0.5 * (bfield - np.conj(np.swapaxes(bfield, 0, 1)))


def build_symmetrizer(spec, coeff=None, n=None, probes=10, power_steps=20,
                      max_doublings=8, seed=7):
    """Assemble Sigma and pick gamma so it is provably coercive on probes.

    gamma starts at twice the squared L2 -> H1 norm of T_V (estimated by
    power iteration on T_V* (1 - Laplacian) T_V) and doubles, at most
    max_doublings times, until (Sigma u, u) >= 1/2 ||u||^2 holds on every
    probe field.  Failure to reach coercivity signals a coupling that the
    dispersion cannot compensate (or misconfigured tolerances).
    """
    n = int(n or spec.grid_points)
    d, ncomp = spec.dim, spec.ncomp
    vsym = conjugator_symbol(spec, coeff, n)
    scheme = scheme_for(n, d, spec.period)

    oneminus = 1.0 + xi_sq_grid(n, d, spec.period)
    rng = np.random.default_rng(seed)
    w = random_field(rng, n, d, spec.period, ncomp)
    lam = 0.0
    for _ in range(power_steps):
        z = apply_T(vsym, w, scheme)
        z = GridField.from_hat(oneminus[None] * z.hat, z.period)
        z = apply_T_adjoint(vsym, z, scheme)
        lam = float(np.real(inner(z, w)) / np.real(inner(w, w)))
        nz = l2_norm(z)
        if nz == 0.0:
            break
        w = z * (1.0 / nz)
    c0 = float(np.sqrt(max(lam, 0.0)))
    gamma = 2.0 * c0 * c0

    for doubling in range(max_doublings + 1):
        sym = Symmetrizer(vsym, gamma, c0, n, d, spec.period,
                          doublings=doubling)
        prng = np.random.default_rng(seed + 1)
        ok = True
        for _ in range(probes):
            u = random_field(prng, n, d, spec.period, ncomp)
            if sym.energy(u) < 0.5 * l2_norm(u) ** 2 * (1.0 - 1e-9):
                ok = False
                break
        if ok:
            return sym
        gamma = 2.0 * gamma if gamma > 0 else 1.0
    raise StructuralError(
        "symmetrizer cannot reach coercivity; the coupling appears "
        "incompatible with the dispersion")


# ---------------------------------------------------------------------------
# linear solve with energy trace

@dataclass
class EnergyTrace:
    t: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    hs: list = field(default_factory=list)
    sigma_energy: list = field(default_factory=list)
    k0: list = field(default_factory=list)
    k1: list = field(default_factory=list)

    COLUMNS = ("t", "l2", "hs", "sigma_energy", "k0", "k1")

    def rows(self):
        for i in range(len(self.t)):
            yield (self.t[i], self.l2[i], self.hs[i], self.sigma_energy[i],
                   self.k0[i], self.k1[i])


@dataclass
class SolveResult:
    status: str              # "completed" or "ill_posed_suspected"
    final: GridField
    trace: EnergyTrace
    info: dict
    states: list | None = None


def fitted_growth_constant(trace, sigma_f_norms=None):
    """Smallest C with dE/dt <= 2 ||Sigma f|| ||u|| + C ||u||^2 on the trace."""
    worst = -np.inf
    for i in range(len(trace.t) - 1):
        dt = trace.t[i + 1] - trace.t[i]
        if dt <= 0:
            continue
        de = (trace.sigma_energy[i + 1] - trace.sigma_energy[i]) / dt
        u2 = trace.l2[i] ** 2
        if u2 <= 0:
            continue
        f_term = 0.0
        if sigma_f_norms is not None:
            f_term = 2.0 * sigma_f_norms[i] * trace.l2[i]
        worst = max(worst, (de - f_term) / u2)
    return float(worst)


def tail_growth_rate(trace):
    """Exponential rate of the L2 norm fitted over the trailing half."""
    t = np.asarray(trace.t)
    if len(t) < 3:
        return 0.0
    mask = t >= 0.5 * t[-1]
    y = np.log(np.maximum(np.asarray(trace.l2)[mask], 1e-300))
    if mask.sum() < 2:
        return 0.0
    return float(np.polyfit(t[mask], y, 1)[0])


def solve_linear(spec, coeff, h, tmax, dt, eps=0.0, forcing=None, n=None,
                 record_every=1, symmetrizer="auto", collect_states=False,
                 blowup_factor=BLOWUP_FACTOR):
    """Integrate the linearized equation and record the energy trace.

    coeff freezes the coupling coefficients: None (zero state), a single
    GridField (constant in time), a callable t -> GridField, or a list of
    states sampled every dt.  The L2 norm exceeding blowup_factor times
    its initial value aborts the run with status "ill_posed_suspected";
    that is a finding, not an exception.
    """
    n = int(n or spec.grid_points)
    if isinstance(coeff, list):
        coeff = state_interpolant(coeff, dt)
    nsteps = max(1, int(round(tmax / dt)))
    dt = tmax / nsteps
    prop = LinearPropagator(spec, dt, eps, n)

    if symmetrizer == "auto":
        try:
            symmetrizer = build_symmetrizer(spec, _as_coeff(coeff, 0.0), n)
        except StructuralError:
            symmetrizer = None

    u = h.copy()
    s = spec.sobolev_index
    trace = EnergyTrace()
    sigma_f_norms = []
    states = [h.copy()] if collect_states else None
    k0_run, hs_a_run, dta_run = 0.0, 0.0, 0.0
    prev_a = None
    l2_0 = l2_norm(h)
    status = "completed"

    def record(t):
        trace.t.append(t)
        trace.l2.append(l2_norm(u))
        trace.hs.append(sobolev_norm(u, s))
        trace.sigma_energy.append(
            symmetrizer.energy(u) if symmetrizer else l2_norm(u) ** 2)
        trace.k0.append(k0_run)
        trace.k1.append(hs_a_run + dta_run)
        f = _as_coeff(forcing, t)
        if symmetrizer is not None and f is not None:
            sigma_f_norms.append(l2_norm(symmetrizer.apply(f)))
        else:
            sigma_f_norms.append(0.0 if f is None else l2_norm(f))

    def update_coeff_stats(t):
        nonlocal k0_run, hs_a_run, dta_run, prev_a
        a = _as_coeff(coeff, t)
        if a is None:
            return
        k0_run = max(k0_run, linf_norm(a))
        hs_a_run = max(hs_a_run, sobolev_norm(a, s))
        if prev_a is not None:
            da = GridField((a.values - prev_a.values) / dt, a.period)
            dta_run = max(dta_run, sobolev_norm(da, s - 2.0))
        prev_a = a

    update_coeff_stats(0.0)
    record(0.0)
    forced_scale = 0.0  # integrated forcing norm, the particular-solution size
    for m in range(nsteps):
        t = m * dt
        u = prop.step(u, t, coeff, forcing)
        update_coeff_stats(t + dt)
        if collect_states:
            states.append(u.copy())
        f = _as_coeff(forcing, t + 0.5 * dt)
        if f is not None:
            forced_scale += dt * l2_norm(f)
        cur = l2_norm(u)
        if not np.isfinite(cur) or \
                cur > blowup_factor * max(l2_0 + forced_scale, 1e-300):
            status = "ill_posed_suspected"
            record(t + dt)
            break
        if (m + 1) % record_every == 0 or m + 1 == nsteps:
            record(t + dt)

    info = {
        "dt": dt, "eps": eps, "n": n, "tmax": tmax, "steps": nsteps,
        "fitted_C": fitted_growth_constant(trace, sigma_f_norms),
        "growth_rate": tail_growth_rate(trace),
        "gamma": symmetrizer.gamma if symmetrizer else None,
        "c0_hat": symmetrizer.c0_hat if symmetrizer else None,
        "blowup_factor": blowup_factor,
    }
    return SolveResult(status, u, trace, info, states)


# ---------------------------------------------------------------------------
# quasilinear Picard iteration

@dataclass
class PicardResult:
    status: str             # converged | max_iters | t_halved_out
    iterations: int
    diffs: list
    tmax_used: float
    halvings: int
    final: GridField
    states: list
    trace: EnergyTrace
    info: dict


def picard_solve(spec, h, tmax, dt, eps=0.0, n=None, max_iters=12,
                 tol_factor=1e-8, max_halvings=4, record_every=1):
    """Fixed-point iteration for the quasilinear equation.

    Iterate k + 1 solves the linear equation with coefficients frozen at
    iterate k (interpolated in time); the zeroth iterate is constant h.
    Convergence is declared when the sup-in-time L2 difference of
    consecutive iterates drops below tol_factor times ||h||_{H^s}.  If an
    iteration doubles the running H^s bound, the time horizon is halved
    (at most max_halvings times) and the iteration restarts.
    """
    spec.warn_if_rough()
    n = int(n or spec.grid_points)
    hs_h = sobolev_norm(h, spec.sobolev_index)
    tol = tol_factor * hs_h
    halvings = 0

    while True:
        nsteps = max(1, int(round(tmax / dt)))
        prev = [h] * (nsteps + 1)
        hs_bound = hs_h
        diffs = []
        status = "max_iters"
        last = None
        restart = False
        for it in range(1, max_iters + 1):
            res = solve_linear(spec, list(prev), h, tmax, dt, eps, n=n,
                               record_every=record_every, symmetrizer=None,
                               collect_states=True)
            cur = res.states
            stride = max(1, len(cur) // 16)
            hs_new = max(sobolev_norm(cur[i], spec.sobolev_index)
                         for i in range(0, len(cur), stride))
            if hs_new > 2.0 * hs_bound and halvings < max_halvings:
                tmax *= 0.5
                halvings += 1
                restart = True
                break
            hs_bound = max(hs_bound, hs_new)
            diff = max(l2_norm(GridField(cur[i].values - prev[i].values,
                                         h.period))
                       for i in range(min(len(cur), len(prev))))
            diffs.append(diff)
            last = res
            if diff <= tol:  # inclusive: zero data converges at once
                status = "converged"
                break
            prev = cur
        if restart:
            continue
        info = dict(last.info if last else {}, tol=tol, eps=eps)
        return PicardResult(status, len(diffs), diffs, tmax, halvings,
                            last.final if last else h, last.states if last
                            else [h], last.trace if last else EnergyTrace(),
                            info)


def nonlinear_residual(spec, states, dt, stride=None):
    """Max L2 residual of the unmollified equation along a trajectory.

    Time derivative by the 5-point centered stencil, space derivatives
    spectral, coefficients evaluated at the trajectory itself.
    """
    if len(states) < 5:
        raise ValueError("need at least 5 stored states")
    n = states[0].npoints
    d = states[0].dim
    axes = wavenumber_axes(n, d, states[0].period)
    agrid = np.moveaxis(spec.dispersion.at_grid(axes), (-2, -1), (0, 1))
    stride = stride or max(1, (len(states) - 4) // 16)
    worst = 0.0
    for m in range(2, len(states) - 2, stride):
        um2, um1, u0, up1, up2 = (states[m + j].values for j in
                                  (-2, -1, 0, 1, 2))
        dtu = (um2 - 8.0 * um1 + 8.0 * up1 - up2) / (12.0 * dt)
        hat = np.fft.fftn(u0, axes=tuple(range(1, u0.ndim)))
        au = np.fft.ifftn(np.einsum("ab...,b...->a...", agrid, hat),
                          axes=tuple(range(1, u0.ndim)))
        res = dtu + 1j * au
        for j in range(d):
            dj = np.fft.ifftn(1j * axes[j][None] * hat,
                              axes=tuple(range(1, u0.ndim)))
            bj = spec.coupling.coeff_field(j, u0)
            res += np.einsum("ab...,b...->a...", bj, dj)
        worst = max(worst, l2_norm(GridField(res, states[0].period)))
    return worst


def mollifier_consistency(spec, h, tmax, dt, eps_values, n=None,
                          mode="picard", **kwargs):
    """Sup-in-time L2 gaps between runs at consecutive mollifier strengths."""
    runs = []
    for eps in eps_values:
        if mode == "picard":
            r = picard_solve(spec, h, tmax, dt, eps=eps, n=n, **kwargs)
        else:
            r = solve_linear(spec, kwargs.get("coeff"), h, tmax, dt, eps=eps,
                             n=n, collect_states=True, symmetrizer=None)
        runs.append(r.states)
    gaps = []
    for a, b in zip(runs, runs[1:]):
        steps = min(len(a), len(b))
        gaps.append(max(l2_norm(GridField(a[i].values - b[i].values,
                                          h.period))
                        for i in range(steps)))
    return gaps


def coefficient_diagnostics(states, dt, s):
    """(K0, K1 proxy) of a coefficient trajectory sampled every dt.

    K0 is the space-time sup of the pointwise magnitude; the K1 proxy adds
    the running H^s bound and the H^{s-2} bound of the time derivative
    (centered differences inside, one-sided at the ends).
    """
    k0 = max(linf_norm(a) for a in states)
    hs = max(sobolev_norm(a, s) for a in states)
    dts = []
    for i in range(len(states)):
        if 0 < i < len(states) - 1:
            da = (states[i + 1].values - states[i - 1].values) / (2.0 * dt)
        elif i == 0 and len(states) > 1:
            da = (states[1].values - states[0].values) / dt
        elif i == len(states) - 1 and len(states) > 1:
            da = (states[-1].values - states[-2].values) / dt
        else:
            da = np.zeros_like(states[0].values)
        dts.append(sobolev_norm(GridField(da, states[0].period), s - 2.0))
    return k0, hs + max(dts)


def initial_field(spec, n=None, seed=0):
    """Initial data from the system description (or a seeded default)."""
    n = int(n or spec.grid_points)
    d, ncomp, period = spec.dim, spec.ncomp, spec.period
    data = spec.initial_data
    if data is None:
        rng = np.random.default_rng(seed)
        knyq = (n // 2) * (2.0 * np.pi / period)
        return random_field(rng, n, d, period, ncomp,
                            band=(0.0, knyq / 2.0), decay=1.0)
    kind = data.get("kind", "modes")
    if kind == "modes":
        total = None
        for entry in data["modes"]:
            mode = entry["mode"]
            for c, amp in enumerate(entry["amplitude"]):
                z = complex(amp[0], amp[1]) if isinstance(amp, list) \
                    else complex(amp)
                if z == 0:
                    continue
                f = mode_field(n, d, period, ncomp, c, mode, amplitude=z)
                total = f if total is None else total + f
        if total is None:
            total = GridField(np.zeros((ncomp,) + (n,) * d, dtype=complex),
                              period)
        return total
    if kind == "random_band":
        rng = np.random.default_rng(int(data.get("seed", seed)))
        band = data.get("band")
        return random_field(rng, n, d, period, ncomp,
                            band=tuple(band) if band else None,
                            decay=float(data.get("decay", 0.0)),
                            amplitude=float(data.get("amplitude", 1.0)))
    raise ValueError(f"unknown initial data kind {kind!r}")
