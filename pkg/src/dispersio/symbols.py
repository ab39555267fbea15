"""Symbols of the coupled systems and their spectral algebra.

A system couples a second-order dispersive part with symbol
A(xi) = sum_jk G_jk xi_j xi_k (Hermitian-matrix valued, homogeneous of
degree 2) to a first-order part with symbol B(xi) = sum_j xi_j B_j(u),
plus an optional conjugate coupling C acting on the complex conjugate of
the state.  On the Fourier side the constant-coefficient evolution is
d/dt u_hat = M(xi) u_hat with M = -i A(xi) - i B(xi).

The central objects here are the spectral decomposition of A(xi) into
eigenvalue branches, the divisibility checks that decide whether the skew
part of B is compatible with the spectral gaps of A, and the degree -1
conjugator V with B - [V, A] self-adjoint whenever those checks pass.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

TAU_CLUSTER = 1e-8   # eigenvalue clustering, relative to |xi|^2
TAU_ALG = 1e-9       # algebraic identities, relative to matrix scale
TAU_DIV = 1e-6       # smallest honest spectral gap, relative to |xi|^2


class StructuralError(Exception):
    """A structural hypothesis on the symbols is violated."""


class DegenerateGapError(StructuralError):
    """Distinct eigenvalue branches closer than the division floor."""


class OriginFrequencyError(ValueError):
    """Spectral projectors are undefined at frequency zero."""


def opnorm(m):
    return float(np.linalg.norm(np.atleast_2d(m), 2))


def herm_part(m):
    return 0.5 * (m + m.conj().T)


def skew_part(m):
    return 0.5 * (m - m.conj().T)


def herm_defect(m):
    """Operator norm of the skew part; zero iff m is Hermitian."""
    return opnorm(skew_part(m))


# ---------------------------------------------------------------------------
# symbol containers

@dataclass(frozen=True)
class QuadraticSymbol:
    """Second-order symbol A(xi) = sum_jk coeffs[j,k] xi_j xi_k."""

    dim: int
    coeffs: np.ndarray  # (d, d, N, N) complex, symmetric in the first two axes

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape[:2] != (self.dim, self.dim) or c.shape[2] != c.shape[3]:
            raise ValueError("quadratic coefficients need shape (d, d, N, N)")
        sym_dev = np.abs(c - c.transpose(1, 0, 2, 3)).max()
        scale = max(np.abs(c).max(), 1.0)
        if sym_dev > TAU_ALG * scale:
            raise StructuralError("quadratic coefficients must be symmetric "
                                  "in the direction indices")
        object.__setattr__(self, "coeffs", c)

    @property
    def ncomp(self):
        return self.coeffs.shape[2]

    def at(self, xi, check=True):
        """Evaluate A(xi); rejects a non-Hermitian value beyond tolerance."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        quad = np.einsum("j,k,jkab->ab", xi, xi, self.coeffs)
        if check:
            dev = herm_defect(quad)
            if dev > TAU_ALG * max(opnorm(quad), 1.0):
                raise StructuralError(
                    f"dispersive symbol not Hermitian at xi={xi.tolist()} "
                    f"(defect {dev:.3e})")
        return quad

    def at_grid(self, axes):
        """Batch evaluation on broadcastable wavenumber axes.

        Returns an array of shape spatial + (N, N) for vectorized
        eigendecompositions.
        """
        d, n = self.dim, self.ncomp
        shape = np.broadcast_shapes(*(a.shape for a in axes))
        out = np.zeros(shape + (n, n), dtype=np.complex128)
        for j in range(d):
            for k in range(d):
                out += (axes[j] * axes[k])[..., None, None] * self.coeffs[j, k]
        return out

    def is_zero(self):
        return not np.any(self.coeffs)


@dataclass(frozen=True)
class MonomialTerm:
    """Constant matrix times a monomial in (Re u_1, Im u_1, Re u_2, ...)."""

    exponents: tuple
    coeff: np.ndarray

    def value(self, u):
        u = np.asarray(u)
        parts = np.empty(2 * u.shape[0])
        parts[0::2] = u.real
        parts[1::2] = u.imag
        mono = 1.0
        for e, p in zip(self.exponents, parts):
            if e:
                mono *= p ** e
        return mono * self.coeff

    def scalar_field(self, ufield):
        """Monomial factor evaluated nodewise on an (N, spatial...) field."""
        mono = np.ones(ufield.shape[1:])
        for i, e in enumerate(self.exponents):
            if not e:
                continue
            comp = ufield[i // 2]
            part = comp.real if i % 2 == 0 else comp.imag
            mono = mono * part ** e
        return mono


@dataclass(frozen=True)
class FirstOrderSymbol:
    """First-order symbol B(xi; u) = sum_j xi_j B_j(u).

    Each direction coefficient is a constant matrix plus polynomial terms
    in the real and imaginary parts of the state, so the coefficients have
    no explicit (t, x) dependence of their own.
    """

    dim: int
    const: np.ndarray                 # (d, N, N)
    terms: tuple = ()                 # tuple over j of tuples of MonomialTerm

    def __post_init__(self):
        c = np.asarray(self.const, dtype=np.complex128)
        if c.ndim != 3 or c.shape[0] != self.dim or c.shape[1] != c.shape[2]:
            raise ValueError("constant part needs shape (d, N, N)")
        object.__setattr__(self, "const", c)
        if not self.terms:
            object.__setattr__(self, "terms", tuple(() for _ in range(self.dim)))

    @property
    def ncomp(self):
        return self.const.shape[1]

    @property
    def is_constant(self):
        return all(len(t) == 0 for t in self.terms)

    def coeff(self, j, u=None):
        """The j-th direction coefficient matrix at state u."""
        m = self.const[j].copy()
        if u is not None:
            for term in self.terms[j]:
                m += term.value(u)
        return m

    def coeff_field(self, j, ufield):
        """Nodewise coefficient matrices, shape (N, N) + spatial."""
        sp = ufield.shape[1:]
        pad = (1,) * len(sp)
        out = np.broadcast_to(self.const[j].reshape(self.const[j].shape + pad),
                              self.const[j].shape + sp).astype(complex).copy()
        for term in self.terms[j]:
            out += (term.coeff.reshape(term.coeff.shape + pad)
                    * term.scalar_field(ufield))
        return out

    def at(self, xi, u=None):
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        n = self.ncomp
        out = np.zeros((n, n), dtype=np.complex128)
        for j in range(self.dim):
            if xi[j]:
                out += xi[j] * self.coeff(j, u)
        return out

    def conjugated(self):
        """Entrywise complex conjugate of every coefficient matrix."""
        terms = tuple(tuple(MonomialTerm(t.exponents, t.coeff.conj())
                            for t in tj) for tj in self.terms)
        return FirstOrderSymbol(self.dim, self.const.conj(), terms)

    def bound_on_ball(self, radius, rng=None, samples=16):
        """sup over j and sampled |u| <= radius of the coefficient norm."""
        states = [np.zeros(self.ncomp, dtype=complex)]
        if not self.is_constant:
            rng = rng or np.random.default_rng(0)
            for _ in range(samples):
                v = rng.standard_normal(self.ncomp) + 1j * rng.standard_normal(self.ncomp)
                v *= radius * rng.random() / max(np.linalg.norm(v), 1e-300)
                states.append(v)
        return max(opnorm(self.coeff(j, u))
                   for j in range(self.dim) for u in states)


def zero_first_order(dim, ncomp):
    return FirstOrderSymbol(dim, np.zeros((dim, ncomp, ncomp), dtype=complex))


@dataclass
class SystemSpec:
    """Full declarative description of one coupled system."""

    dispersion: QuadraticSymbol
    coupling: FirstOrderSymbol
    conjugate_coupling: FirstOrderSymbol | None = None
    period: float = 2.0 * np.pi
    grid_points: int = 128
    sobolev_index: float = 2.5
    initial_data: dict | None = None
    name: str = ""

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        n = self.grid_points
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError("grid_points must be a power of two")
        if self.dispersion.dim != self.coupling.dim:
            raise ValueError("dispersion and coupling disagree on dimension")
        if self.dispersion.ncomp != self.coupling.ncomp:
            raise ValueError("dispersion and coupling disagree on components")
        if (self.conjugate_coupling is not None
                and (self.conjugate_coupling.dim != self.dim
                     or self.conjugate_coupling.ncomp != self.ncomp)):
            raise ValueError("conjugate coupling has mismatched shape")

    @property
    def dim(self):
        return self.dispersion.dim

    @property
    def ncomp(self):
        return self.dispersion.ncomp

    def warn_if_rough(self):
        threshold = 1.0 + 0.5 * self.dim
        if self.sobolev_index <= threshold:
            warnings.warn(
                f"sobolev index {self.sobolev_index} is at or below "
                f"1 + d/2 = {threshold}; the quasilinear iteration may not "
                "contract", stacklevel=2)


# ---------------------------------------------------------------------------
# eigenstructure

@dataclass
class EigenStructure:
    """Clustered spectral decomposition of A(xi) at one frequency."""

    xi: np.ndarray
    eigenvalues: np.ndarray      # (P,) ascending branch values
    projectors: np.ndarray       # (P, N, N) orthogonal spectral projectors
    multiplicities: tuple

    @property
    def nbranches(self):
        return len(self.eigenvalues)


def _cluster(w, vecs, tol):
    """Group ascending eigenvalues into branches separated by > tol."""
    groups = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol:
            groups.append((start, i))
            start = i
    lams, projs, mults = [], [], []
    for a, b in groups:
        v = vecs[:, a:b]
        projs.append(v @ v.conj().T)
        lams.append(float(np.mean(w[a:b])))
        mults.append(b - a)
    return np.array(lams), np.array(projs), tuple(mults)


def eigenstructure(quad, xi, tol_cluster=TAU_CLUSTER):
    """Branch decomposition of the dispersive symbol at one frequency.

    Eigenvalues within tol_cluster * |xi|^2 of each other are merged into a
    single branch whose projector is the sum over the cluster.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    r2 = float(xi @ xi)
    if r2 == 0.0:
        raise OriginFrequencyError("eigenstructure undefined at xi = 0")
    a = quad.at(xi)
    w, vecs = np.linalg.eigh(a)
    lams, projs, mults = _cluster(w, vecs, tol_cluster * r2)
    return EigenStructure(xi, lams, projs, mults)


def track_branches(quad, directions, tol_cluster=TAU_CLUSTER):
    """Eigenstructures along a path of directions with consistent ordering.

    Branches are matched to the previous direction by maximal projector
    overlap (Frobenius); a change in the multiplicity pattern restarts the
    ordering and is reported in the second return value.
    """
    structs = []
    breaks = []
    prev = None
    for idx, om in enumerate(directions):
        es = eigenstructure(quad, om, tol_cluster)
        if prev is not None and prev.nbranches == es.nbranches:
            overlap = np.array([[np.linalg.norm(p @ q) for q in prev.projectors]
                                for p in es.projectors])
            order = np.full(es.nbranches, -1)
            used = set()
            # greedy maximal-overlap assignment
            for _ in range(es.nbranches):
                flat = np.unravel_index(np.argmax(overlap), overlap.shape)
                order[flat[1]] = flat[0]
                overlap[flat[0], :] = -1.0
                overlap[:, flat[1]] = -1.0
                used.add(flat[0])
            es = EigenStructure(es.xi, es.eigenvalues[order],
                                es.projectors[order],
                                tuple(es.multiplicities[i] for i in order))
        elif prev is not None:
            breaks.append(idx)
        structs.append(es)
        prev = es
    return structs, breaks


# ---------------------------------------------------------------------------
# conjugator

def conjugator(es, b_matrix, tau_div=TAU_DIV):
    """Degree -1 conjugator V with B - [V, A] self-adjoint.

    V = sum_{p != q} Pi_p skew(B) Pi_q / (lambda_q - lambda_p), built from
    the skew part of B so that the commutator with A removes exactly the
    non-self-adjoint off-diagonal blocks.  V is Hermitian when B's diagonal
    blocks are, and vanishes when B is Hermitian.
    """
    lams, projs = es.eigenvalues, es.projectors
    scale = max(float(es.xi @ es.xi), float(np.abs(lams).max()), 1e-300)
    sk = skew_part(np.asarray(b_matrix, dtype=complex))
    n = sk.shape[0]
    v = np.zeros((n, n), dtype=complex)
    for p in range(len(lams)):
        for q in range(len(lams)):
            if p == q:
                continue
            gap = lams[q] - lams[p]
            if abs(gap) < tau_div * scale:
                raise DegenerateGapError(
                    f"branches {p} and {q} separated by {abs(gap):.3e} "
                    "(below the division floor; clustering tolerance "
                    "misconfigured?)")
            v += projs[p] @ sk @ projs[q] / gap
    return v


def conjugation_remainder(es, b_matrix, v=None):
    """B - [V, A] computed from the branch data."""
    if v is None:
        v = conjugator(es, b_matrix)
    a = sum(lam * pi for lam, pi in zip(es.eigenvalues, es.projectors))
    return b_matrix - (v @ a - a @ v)


# ---------------------------------------------------------------------------
# divisibility checks

@dataclass
class CheckReport:
    passed: bool
    diag_max: float = 0.0
    max_ratio: float = 0.0
    worst: dict | None = None
    refinement: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def __bool__(self):
        return self.passed


def _default_directions(dim, count=64):
    if dim == 1:
        return [np.array([1.0]), np.array([-1.0])]
    if dim == 2:
        th = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
        return [np.array([np.cos(t), np.sin(t)]) for t in th]
    # Fibonacci sphere for d = 3, random directions beyond
    rng = np.random.default_rng(12345)
    dirs = []
    for _ in range(count):
        v = rng.standard_normal(dim)
        dirs.append(v / np.linalg.norm(v))
    return dirs


def _default_states(spec, rng, count=8):
    states = [np.zeros(spec.ncomp, dtype=complex)]
    needs_states = not spec.coupling.is_constant or (
        spec.conjugate_coupling is not None
        and not spec.conjugate_coupling.is_constant)
    if needs_states:
        for _ in range(count):
            v = rng.standard_normal(spec.ncomp) + 1j * rng.standard_normal(spec.ncomp)
            states.append(v / max(np.linalg.norm(v), 1e-300))
    return states


def _pair_families(spec, om, u, with_conjugate):
    """Block families (matrix, gap function) to test at direction om.

    The last flag marks families whose right projector must be conjugated:
    a conjugate coupling pairs a branch of the dispersion with a branch of
    its conjugated counterpart, whose projectors are the conjugates.
    """
    fams = [("skew-coupling", skew_part(spec.coupling.at(om, u)),
             lambda lp, lq: lp - lq, True, False)]
    if with_conjugate:
        c = spec.conjugate_coupling.at(om, u)
        fams.append(("conjugate-coupling", c - c.T,
                     lambda lp, lq: lp + lq, False, True))
    return fams


def _refine_ratio(quad, spec, om, u, fam_name, p, q, levels, factor, rng):
    """Ratios at directions approaching the gap minimizer near om.

    Only meaningful for d >= 2 where directions form a continuum; for d = 1
    the coincidence set is a ray and the block either vanishes or fails the
    coincident-block test outright.
    """
    d = len(om)
    if d < 2:
        return []
    tan = rng.standard_normal(d)
    tan -= (tan @ om) * om
    nt = np.linalg.norm(tan)
    if nt < 1e-12:
        return []
    tan /= nt

    def gap_at(theta):
        w = om + theta * tan
        w = w / np.linalg.norm(w)
        es = eigenstructure(quad, w)
        if es.nbranches <= max(p, q):
            return 0.0, es, w
        return abs(es.eigenvalues[p] - es.eigenvalues[q]), es, w

    # coarse golden-section hunt for the local gap minimizer
    lo, hi = -0.3, 0.3
    for _ in range(24):
        m1 = lo + 0.382 * (hi - lo)
        m2 = lo + 0.618 * (hi - lo)
        if gap_at(m1)[0] <= gap_at(m2)[0]:
            hi = m2
        else:
            lo = m1
    theta_star = 0.5 * (lo + hi)

    ratios = []
    base = 0.1
    for level in range(levels):
        worst = 0.0
        for sgn in (+1.0, -1.0):
            theta = theta_star + sgn * base * factor ** (-level)
            w = om + theta * tan
            w = w / np.linalg.norm(w)
            es = eigenstructure(quad, w)
            for fam, mat, gapfun, _, conj_right in _pair_families(
                    spec, w, u, fam_name == "conjugate-coupling"):
                if fam != fam_name:
                    continue
                projs_r = ([np.conj(pr) for pr in es.projectors]
                           if conj_right else es.projectors)
                for pp in range(es.nbranches):
                    for qq in range(es.nbranches):
                        if fam == "skew-coupling" and pp == qq:
                            continue
                        gap = abs(gapfun(es.eigenvalues[pp], es.eigenvalues[qq]))
                        if gap < 1e-14:
                            continue
                        bn = opnorm(es.projectors[pp] @ mat @ projs_r[qq])
                        worst = max(worst, bn / gap)
        ratios.append(worst)
    return ratios


def _run_divisibility(spec, with_conjugate, directions=None, states=None,
                      rng=None, refine_levels=5, refine_factor=10.0):
    rng = rng or np.random.default_rng(2024)
    quad = spec.dispersion
    directions = directions if directions is not None else _default_directions(spec.dim)
    states = states if states is not None else _default_states(spec, rng)

    report = CheckReport(passed=True)
    for om in directions:
        om = np.asarray(om, dtype=float)
        es = eigenstructure(quad, om)
        scale_a = max(opnorm(quad.at(om)), 1.0)
        for u in states:
            for fam, mat, gapfun, skip_diag, conj_right in _pair_families(
                    spec, om, u, with_conjugate):
                scale_b = max(opnorm(mat), 1.0)
                tol_block = TAU_ALG * 2.0 * scale_b  # (1 + |om|) with |om| = 1
                projs_r = ([np.conj(pr) for pr in es.projectors]
                           if conj_right else es.projectors)
                for p in range(es.nbranches):
                    for q in range(es.nbranches):
                        if skip_diag and p == q:
                            # the p = q gap vanishes identically; the block
                            # itself must vanish
                            bn = opnorm(es.projectors[p] @ mat @ es.projectors[p])
                            report.diag_max = max(report.diag_max, bn)
                            if bn > tol_block:
                                report.passed = False
                                w = dict(xi=om.tolist(), family=fam, p=p, q=p,
                                         block_norm=bn, gap=0.0, ratio=np.inf)
                                if (report.worst is None
                                        or bn > report.worst["block_norm"]):
                                    report.worst = w
                            continue
                        gap = abs(gapfun(es.eigenvalues[p], es.eigenvalues[q]))
                        bn = opnorm(es.projectors[p] @ mat @ projs_r[q])
                        if gap < TAU_DIV * scale_a:
                            # coincident branches: block must vanish
                            report.diag_max = max(report.diag_max, bn)
                            if bn > tol_block:
                                report.passed = False
                                w = dict(xi=om.tolist(), family=fam, p=p, q=q,
                                         block_norm=bn, gap=gap, ratio=np.inf)
                                if (report.worst is None
                                        or bn > report.worst["block_norm"]):
                                    report.worst = w
                            continue
                        ratio = bn / gap
                        report.max_ratio = max(report.max_ratio, ratio)
                        if gap < 0.05 * scale_a and bn > tol_block:
                            ratios = _refine_ratio(
                                quad, spec, om, u, fam, p, q,
                                refine_levels, refine_factor, rng)
                            if ratios:
                                report.refinement.append(
                                    dict(xi=om.tolist(), family=fam,
                                         p=p, q=q, ratios=ratios))
                                if ratios[-1] > 10.0 * max(ratios[0], 1e-300):
                                    report.passed = False
                                    w = dict(xi=om.tolist(), family=fam,
                                             p=p, q=q, block_norm=bn, gap=gap,
                                             ratio=ratios[-1])
                                    report.worst = report.worst or w
    if report.passed and report.worst is None:
        report.notes.append("all block families divisible by their gaps")
    return report


def check_coupling_divisibility(spec, directions=None, states=None, rng=None,
                                refine_levels=5, refine_factor=10.0):
    """Decide whether skew(B) blocks are divisible by the gaps of A.

    PASS requires vanishing diagonal blocks of the skew part of B(xi; u) in
    every branch of A(xi), vanishing blocks across coincident branches, and
    gap ratios that stay bounded under refinement toward near-coincidences.
    """
    return _run_divisibility(spec, False, directions, states, rng,
                             refine_levels, refine_factor)


def check_conjugate_divisibility(spec, directions=None, states=None, rng=None,
                                 refine_levels=5, refine_factor=10.0):
    """Divisibility check for systems with a conjugate coupling C.

    Runs the same gap test on two block families at once: skew(B) against
    differences of branch values and C - C^T against their sums.
    """
    if spec.conjugate_coupling is None:
        raise ValueError("system has no conjugate coupling")
    return _run_divisibility(spec, True, directions, states, rng,
                             refine_levels, refine_factor)


# ---------------------------------------------------------------------------
# doubling and linearization

def double_system(spec):
    """State-doubled system carrying (u, conj u) with no conjugate coupling.

    The dispersive part becomes diag(A, -A) and the coupling the block
    matrix [[B, C], [conj C, conj B]]; polynomial coefficients keep reading
    the original state components, which occupy the first half of the
    doubled state.
    """
    d, n = spec.dim, spec.ncomp
    a = spec.dispersion.coeffs
    big_a = np.zeros((d, d, 2 * n, 2 * n), dtype=complex)
    big_a[:, :, :n, :n] = a
    # conjugating the equation conjugates the dispersion coefficients
    big_a[:, :, n:, n:] = -a.conj()

    c_sym = spec.conjugate_coupling or zero_first_order(d, n)

    def pad(expo):
        return tuple(expo) + (0,) * (2 * n)

    big_const = np.zeros((d, 2 * n, 2 * n), dtype=complex)
    big_terms = []
    for j in range(d):
        big_const[j, :n, :n] = spec.coupling.const[j]
        big_const[j, n:, n:] = spec.coupling.const[j].conj()
        big_const[j, :n, n:] = c_sym.const[j]
        big_const[j, n:, :n] = c_sym.const[j].conj()
        tj = []
        for t in spec.coupling.terms[j]:
            m = np.zeros((2 * n, 2 * n), dtype=complex)
            m[:n, :n] = t.coeff
            m[n:, n:] = t.coeff.conj()
            tj.append(MonomialTerm(pad(t.exponents), m))
        for t in c_sym.terms[j]:
            m = np.zeros((2 * n, 2 * n), dtype=complex)
            m[:n, n:] = t.coeff
            m[n:, :n] = t.coeff.conj()
            tj.append(MonomialTerm(pad(t.exponents), m))
        big_terms.append(tuple(tj))

    return SystemSpec(
        dispersion=QuadraticSymbol(d, big_a),
        coupling=FirstOrderSymbol(d, big_const, tuple(big_terms)),
        conjugate_coupling=None,
        period=spec.period,
        grid_points=spec.grid_points,
        sobolev_index=spec.sobolev_index,
        name=(spec.name + "-doubled") if spec.name else "doubled",
    )


def doubled_state(u):
    return np.concatenate([u, np.conj(u)])


def wirtinger_partials(f, u, v, step=1e-6):
    """Finite-difference gradient-direction partials of f(u, v).

    f maps (u, v) with u an N-vector and v a (d, N) array of gradient
    components to an N-vector.  Returns (dv, dvbar): lists over j of N x N
    Jacobians with respect to v_j and conj(v_j), computed through the
    identification d/dv = (d/dRe - i d/dIm)/2.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    d, n = v.shape
    dv, dvbar = [], []
    for j in range(d):
        jac_re = np.zeros((n, n), dtype=complex)
        jac_im = np.zeros((n, n), dtype=complex)
        for b in range(n):
            for jac, unit in ((jac_re, 1.0), (jac_im, 1j)):
                vp = v.copy()
                vm = v.copy()
                vp[j, b] += step * unit
                vm[j, b] -= step * unit
                jac[:, b] = (np.asarray(f(u, vp)) - np.asarray(f(u, vm))) / (2 * step)
        dv.append(0.5 * (jac_re - 1j * jac_im))
        dvbar.append(0.5 * (jac_re + 1j * jac_im))
    return dv, dvbar


def linearized_coupling(dv, dvbar):
    """Assemble (B, C) coefficient stacks from gradient-direction partials.

    dv and dvbar are lists over directions of N x N matrices (as returned
    by wirtinger_partials); the results evaluate as B(xi) = sum_j xi_j dv[j]
    and likewise for C.
    """
    d = len(dv)
    n = dv[0].shape[0]
    b = FirstOrderSymbol(d, np.array(dv, dtype=complex).reshape(d, n, n))
    c = FirstOrderSymbol(d, np.array(dvbar, dtype=complex).reshape(d, n, n))
    return b, c
