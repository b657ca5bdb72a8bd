"""Numerical probes of nonlinear ill-posedness around a reference point.

Sampling in the ball ``B_rho(x_true)`` uses a uniformly random direction on
the coefficient sphere and a radius ``rho * u`` with ``u`` uniform on
``(0, 1]``.  Everything computed from samples is evidence for or against a
property at the sampled scale, never a proof, and the reports say so.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .errors import (
    GridMismatch,
    OutOfRange,
    PreconditionViolated,
    RangeInclusionViolated,
    TooManyTerms,
    WindowTooSmall,
)
from .gallery import (
    DiscretizedOperator,
    GridFunction,
    as_array,
    autoconv_apply,
    autoconv_frechet,
)
from .linalg_core import compute_svd, default_rel_tol, truncated_pinv
from .profiler import estimate_decay_exponent

#: Range-membership tolerance of the N factor: ``|z - A A^+ z| <= RANGE_TOL |z|``.
RANGE_TOL = 0.01
DEGENERATE_FLOOR = 1e-14
EVIDENCE_NOTE = "sampled evidence at finite scale; consistent/inconsistent with, not a proof"


@dataclass
class NonlinearProblem:
    apply: object
    frechet: object
    base_point: GridFunction
    radius: float = 1.0
    note: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def grid_n(self):
        return self.base_point.grid_n

    def base_value(self):
        if "F0" not in self._cache:
            self._cache["F0"] = self.apply(self.base_point)
        return self._cache["F0"]

    def base_derivative(self):
        if "A" not in self._cache:
            self._cache["A"] = self.frechet(self.base_point)
        return self._cache["A"]

    def check(self, x):
        if not isinstance(x, GridFunction) or x.grid_n != self.grid_n:
            raise GridMismatch(f"expected a GridFunction on {self.grid_n} cells")
        return x


def autoconvolution_problem(grid_n, base=1.0, radius=1.0):
    """Autoconvolution on ``L2(0,1)`` around ``base`` (a constant, callable or GridFunction)."""
    if isinstance(base, GridFunction):
        x0 = base
    elif callable(base):
        x0 = GridFunction.from_function(base, grid_n)
    else:
        x0 = GridFunction.constant(base, grid_n)
    return NonlinearProblem(autoconv_apply, autoconv_frechet, x0, float(radius), "autoconvolution on L2(0,1)")


def linear_problem(A, base_point=None, radius=1.0):
    """``F(x) = A x`` with constant derivative (a control problem)."""
    M = as_array(A)
    op = A if isinstance(A, DiscretizedOperator) else DiscretizedOperator(M, "custom")
    n = M.shape[1]
    if M.shape[0] != n:
        raise GridMismatch("linear control problems need a square matrix")
    x0 = GridFunction.zeros(n) if base_point is None else base_point

    def apply(x):
        return GridFunction(M @ x.coeffs, n, x.domain_length)

    return NonlinearProblem(apply, lambda x: op, x0, float(radius), "linear F(x) = A x")


def perturbed_linear_problem(A, coupling, base_point=None, radius=0.1):
    """``F(x) = A x + coupling * autoconv(x)``; its derivative stays within ``2|coupling||x|`` of ``A``."""
    M = as_array(A)
    n = M.shape[1]
    x0 = GridFunction.zeros(n) if base_point is None else base_point

    def apply(x):
        return GridFunction(M @ x.coeffs + coupling * autoconv_apply(x).coeffs, n, x.domain_length)

    def frechet(x):
        return DiscretizedOperator(M + coupling * autoconv_frechet(x).matrix, "custom", {}, n)

    return NonlinearProblem(apply, frechet, x0, float(radius), f"A x + {coupling:g} * autoconv(x)")


# -- sampling -----------------------------------------------------------------


def sample_ball(problem, samples, rng, radius=None):
    """Increments ``h`` with ``|h| <= radius`` (uniform direction, radius ``rho * u``)."""
    rho = problem.radius if radius is None else radius
    n = problem.grid_n
    out = []
    for _ in range(samples):
        d = rng.standard_normal(n)
        d /= np.linalg.norm(d)
        r = rho * (1.0 - rng.random())
        out.append(r * d)
    return out


def adversarial_directions(problem, count=12):
    """Right singular vectors of ``F'(x_true)`` on a geometric index ladder (unit norm)."""
    ss = compute_svd(as_array(problem.base_derivative()))
    r = max(ss.rank(), 1)
    idx = np.unique(np.geomspace(1, r, count).astype(int)) - 1
    return idx, [ss.V[:, i].copy() for i in idx]


# -- Taylor remainder ---------------------------------------------------------


@dataclass
class RemainderRecord:
    remainder: GridFunction
    remainder_norm: float
    linear_norm: float
    difference_norm: float
    step_norm: float

    def norms(self):
        return (self.remainder_norm, self.linear_norm, self.difference_norm, self.step_norm)


def taylor_remainder(problem, x):
    """``F(x) - F(x_true) - F'(x_true)(x - x_true)`` together with the three reference norms."""
    x = problem.check(x)
    h = x - problem.base_point
    diff = problem.apply(x) - problem.base_value()
    lin = problem.base_derivative() @ h
    rem = diff - lin
    return RemainderRecord(rem, rem.norm(), lin.norm(), diff.norm(), h.norm())


def _records(problem, increments):
    x0 = problem.base_point
    return [taylor_remainder(problem, x0 + GridFunction(h, x0.grid_n, x0.domain_length)) for h in increments]


# -- degree of nonlinearity ---------------------------------------------------


@dataclass
class TripleVerdict:
    triple: tuple
    q: float
    q_shrunk: float
    q_low_frequency: float
    passed: bool
    skipped: int
    note: str = EVIDENCE_NOTE

    def as_dict(self):
        return {
            "triple": list(self.triple),
            "q": self.q,
            "q_shrunk": self.q_shrunk,
            "q_low_frequency": self.q_low_frequency,
            "passed": self.passed,
            "skipped": self.skipped,
            "note": self.note,
        }


def _q_max(records, triple):
    g1, g2, g3 = triple
    best = 0.0
    skipped = 0
    for rec in records:
        factors = ((rec.linear_norm, g1), (rec.difference_norm, g2), (rec.step_norm, g3))
        if any(g > 0 and v < DEGENERATE_FLOOR for v, g in factors):
            skipped += 1
            continue
        den = 1.0
        for v, g in factors:
            if g > 0:
                den *= v**g
        best = max(best, rec.remainder_norm / den)
    return best, skipped


def _stable(a, b, factor=2.0):
    lo, hi = min(a, b), max(a, b)
    if hi == 0.0:
        return True
    return lo > 0.0 and hi <= factor * lo


def degree_of_nonlinearity_check(problem, samples=100, seed=0, triples=((0, 0, 2),), shrink=4.0,
                                 adversarial=True):
    """Fit the smallest ``q`` for each exponent triple and test its stability.

    ``q`` is the maximum over samples of
    ``|remainder| / (|F'(x_true) h|**g1 * |F(x) - F(x_true)|**g2 * |h|**g3)``.
    A triple passes when ``q`` changes by at most a factor 2 when all
    increments shrink by ``shrink`` and, with ``adversarial``, when adding
    the high-frequency half of the singular-vector ladder of ``F'(x_true)``
    changes it by at most a factor 2.  Samples whose active
    denominator factors fall below 1e-14 are skipped and counted.
    """
    for t in triples:
        g1, g2, g3 = t
        if not (0 <= g1 <= 1 and 0 <= g2 <= 1 and 0 <= g3 <= 2):
            raise PreconditionViolated(f"triple {t} outside [0,1]x[0,1]x[0,2]")
    rng = np.random.default_rng(seed)
    incs = sample_ball(problem, samples, rng)
    if adversarial:
        _, dirs = adversarial_directions(problem)
        half = 0.5 * problem.radius
        incs_adv = [half * d for d in dirs]
    else:
        incs_adv = []
    recs = _records(problem, incs + incs_adv)
    recs_small = _records(problem, [h / shrink for h in incs + incs_adv])
    n_low = len(incs) + len(incs_adv) // 2
    out = []
    for t in triples:
        t = tuple(float(g) for g in t)
        q, skipped = _q_max(recs, t)
        q_small, skipped_small = _q_max(recs_small, t)
        q_low, _ = _q_max(recs[:n_low], t)
        passed = _stable(q, q_small) and (not adversarial or _stable(q, q_low))
        out.append(TripleVerdict(t, q, q_small, q_low, passed, skipped + skipped_small))
    return out


# -- tangential cone constants ------------------------------------------------


def _root_above_one(q, p):
    # root z >= 1 of z - 1 = q z**p, p in [0, 1]; requires q < 1 when p == 1
    if p == 0.0:
        return 1.0 + q
    if p == 1.0:
        return 1.0 / (1.0 - q)
    f = lambda z: z - 1.0 - q * z**p
    hi = 2.0
    while f(hi) <= 0.0:
        hi *= 2.0
    return brentq(f, 1.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def tangential_cone_constants(q_sigma, sigma, strict=False):
    """Two-sided bound constants implied by a tangential cone condition.

    ``K_upper`` is the root ``z >= 1`` of ``z - 1 = q z**sigma`` and
    ``K_lower`` the reciprocal of the root of ``z - 1 = q z**(1 - sigma)``.
    The upper constant needs ``q < 1`` when ``sigma = 1`` and the lower one
    needs ``q < 1`` when ``sigma = 0``; a side whose condition fails comes
    back as ``None`` (or raises with ``strict=True``).
    """
    q, s = float(q_sigma), float(sigma)
    if not q > 0.0 or not math.isfinite(q):
        raise PreconditionViolated(f"q_sigma must be positive and finite, got {q_sigma}")
    if not 0.0 <= s <= 1.0:
        raise PreconditionViolated(f"sigma must lie in [0, 1], got {sigma}")
    upper = lower = None
    if s == 1.0 and q >= 1.0:
        if strict:
            raise PreconditionViolated("upper bound needs q_1 < 1 when sigma = 1")
    else:
        upper = _root_above_one(q, s)
    if s == 0.0 and q >= 1.0:
        if strict:
            raise PreconditionViolated("lower bound needs q_0 < 1 when sigma = 0")
    else:
        lower = 1.0 / _root_above_one(q, 1.0 - s)
    return upper, lower


def cone_constant_from_bounds(K_lower, K_upper):
    """A ``q`` valid for every ``sigma`` given ``K_lower a <= b <= K_upper a``.

    With ``a = |F'(x_true) h|`` and ``b = |F(x) - F(x_true)|`` the remainder
    is at most ``a + b <= q min(a, b) <= q a**(1-sigma) b**sigma``.
    """
    return max(1.0 + K_upper, 1.0 + 1.0 / K_lower)


# -- stable ill-posedness -----------------------------------------------------


@dataclass
class StabilityScan:
    stability_ratios: list
    c_lower: float
    c_upper: float
    decay_exponents: list
    base_exponent: float
    distances: list
    note: str = EVIDENCE_NOTE

    def as_dict(self):
        return {
            "c_lower": self.c_lower,
            "c_upper": self.c_upper,
            "base_exponent": self.base_exponent,
            "decay_exponents": self.decay_exponents,
            "distances": self.distances,
            "stability_ratios": [list(map(float, r)) for r in self.stability_ratios],
            "note": self.note,
        }


def _exponent(sv):
    try:
        return estimate_decay_exponent(sv)[0]
    except WindowTooSmall:
        return None


def _svals(op):
    return scipy.linalg.svdvals(as_array(op), check_finite=False)


def stable_illposedness_scan(problem, samples=20, seed=0, n_max=None, points=()):
    """Compare ``sigma_n(F'(x))`` with ``sigma_n(F'(x_true))`` over sampled ``x``.

    ``points`` adds explicit GridFunctions to the random ball samples.
    ``c_lower``/``c_upper`` are the extreme ratios
    ``sigma_n(F'(x)) / sigma_n(F'(x_true))`` over all samples and compared
    indices; indices where either value is below the rank cutoff are skipped.
    """
    x0 = problem.base_point
    rng = np.random.default_rng(seed)
    xs = [x0 + GridFunction(h, x0.grid_n, x0.domain_length) for h in sample_ball(problem, samples, rng)]
    xs += [problem.check(p) for p in points]
    base = _svals(problem.base_derivative())
    cut = default_rel_tol((base.size, base.size)) * base[0]
    ratios, exps, dists = [], [], []
    lo, hi = math.inf, -math.inf
    for x in xs:
        sv = _svals(problem.frechet(x))
        k = min(base.size, sv.size)
        if n_max is not None:
            k = min(k, int(n_max))
        alive = (base[:k] > cut) & (sv[:k] > default_rel_tol((sv.size, sv.size)) * sv[0])
        r = sv[:k][alive] / base[:k][alive]
        ratios.append(r)
        if r.size:
            lo, hi = min(lo, float(r.min())), max(hi, float(r.max()))
        exps.append(_exponent(sv))
        dists.append((x - x0).norm())
    return StabilityScan(ratios, lo, hi, exps, _exponent(base), dists)


# -- local ill-posedness ------------------------------------------------------


def sine_directions(grid_n, n_terms):
    """Orthonormalized ``sqrt(2) sin(n pi t)`` at cell midpoints, ``n = 1..n_terms`` (columns)."""
    if n_terms > grid_n:
        raise TooManyTerms(f"{n_terms} directions requested on {grid_n} cells")
    h = 1.0 / grid_n
    t = (np.arange(grid_n) + 0.5) * h
    k = np.arange(1, n_terms + 1)
    E = math.sqrt(2.0 * h) * np.sin(np.pi * np.outer(t, k))
    Q, R = np.linalg.qr(E)
    return Q * np.sign(np.diag(R))


@dataclass
class LocalProbe:
    table: list
    radius: float
    note: str = EVIDENCE_NOTE

    @property
    def decay_factor(self):
        first = [row[0] for row in self.table]
        return first[0] / first[-1] if first[-1] > 0 else math.inf

    def as_dict(self):
        return {"radius": self.radius, "decay_factor": self.decay_factor,
                "table": [list(r) for r in self.table], "note": self.note}


def local_illposedness_probe(problem, n_terms, radius=None):
    """Rows ``(|F(x_true + rho e_n) - F(x_true)|, |rho e_n|)`` for ``n = 1..n_terms``.

    A shrinking first column next to a constant second column is the
    finite-scale signature of local ill-posedness.
    """
    rho = problem.radius if radius is None else float(radius)
    x0 = problem.base_point
    E = sine_directions(x0.grid_n, n_terms)
    F0 = problem.base_value()
    rows = []
    for k in range(n_terms):
        step = GridFunction(rho * E[:, k], x0.grid_n, x0.domain_length)
        rows.append(((problem.apply(x0 + step) - F0).norm(), step.norm()))
    return LocalProbe(rows, rho)


# -- the nonlinear factor N ---------------------------------------------------


class NFactor:
    """``N(z) = F(x_true + A^+ z) - F(x_true)`` with ``A = F'(x_true)``."""

    def __init__(self, problem, range_tol=RANGE_TOL, rel_tol=None):
        self.problem = problem
        self.range_tol = range_tol
        A = as_array(problem.base_derivative())
        self.svd = compute_svd(A)
        self.A = A
        self.A_pinv = truncated_pinv(A, rel_tol, svd=self.svd)

    def __call__(self, z):
        p = self.problem
        z = p.check(z)
        w = self.A_pinv @ z.coeffs
        miss = np.linalg.norm(z.coeffs - self.A @ w)
        if miss > self.range_tol * z.norm():
            raise OutOfRange(f"z is not in the numerical range of F'(x_true): residual {miss:.3e}")
        x0 = p.base_point
        return p.apply(x0 + GridFunction(w, x0.grid_n, x0.domain_length)) - p.base_value()


def build_N_factor(problem, z, range_tol=RANGE_TOL):
    return NFactor(problem, range_tol)(z)


@dataclass
class NBounds:
    K_lower: float
    K_upper: float
    per_scale: list
    note: str = EVIDENCE_NOTE

    def as_dict(self):
        return {"K_lower": self.K_lower, "K_upper": self.K_upper,
                "per_scale": [list(r) for r in self.per_scale], "note": self.note}


def n_factor_bounds(problem, samples=100, seed=0, scales=(1e-1, 1e-2, 1e-3), adversarial=True):
    """Empirical ``K_lower <= |N(z)| / |z| <= K_upper`` over sampled ``z`` in the range.

    At each scale ``eps`` the sample set holds ``samples`` random range
    elements ``eps * A w / |A w|`` and, with ``adversarial``, the left
    singular vectors of ``A`` on a geometric index ladder scaled to ``eps``.
    ``per_scale`` rows are ``(eps, K_lower, K_upper)``.
    """
    nf = NFactor(problem)
    p = problem
    n = p.grid_n
    rng = np.random.default_rng(seed)
    r = max(nf.svd.rank(), 1)
    dirs = []
    for _ in range(samples):
        z = nf.A @ rng.standard_normal(n)
        dirs.append(z / np.linalg.norm(z))
    if adversarial:
        idx = np.unique(np.geomspace(1, r, 12).astype(int)) - 1
        dirs += [nf.svd.U[:, i] for i in idx]
    rows = []
    for eps in scales:
        vals = []
        for d in dirs:
            z = GridFunction(eps * d, n)
            vals.append(nf(z).norm() / z.norm())
        rows.append((float(eps), float(min(vals)), float(max(vals))))
    return NBounds(min(r[1] for r in rows), max(r[2] for r in rows), rows)


# -- rotation condition fit ---------------------------------------------------


@dataclass
class RotationFit:
    C_R: float
    kappa: float
    fit_residual: float
    pairs: list
    failures: int
    note: str = "fit reported without asserting the condition"


def rotation_condition_fit(problem, samples=20, seed=0):
    """Fit ``|R(x, y) - I| <= C |x - y|**kappa`` where ``F'(x) = R F'(y)``.

    ``R - I`` is taken as ``(F'(x) - F'(y)) F'(y)^+`` and obtained through
    :func:`illposed.ordering.douglas_factorize` of the transposed pair.
    Pairs where that factorization fails are counted in ``failures``.
    """
    from .ordering import douglas_factorize

    rng = np.random.default_rng(seed)
    x0 = problem.base_point
    pts = [x0 + GridFunction(h, x0.grid_n, x0.domain_length) for h in sample_ball(problem, 2 * samples, rng)]
    pairs, failures = [], 0
    for x, y in zip(pts[::2], pts[1::2]):
        Ax, Ay = as_array(problem.frechet(x)), as_array(problem.frechet(y))
        D = Ax - Ay
        dist = (x - y).norm()
        try:
            fac = douglas_factorize(D.T, Ay.T)
        except RangeInclusionViolated:
            failures += 1
            continue
        pairs.append((dist, float(np.linalg.norm(fac.right_factor, 2))))
    usable = [(d, v) for d, v in pairs if d > 0 and v > 0]
    if len(usable) < 2:
        return RotationFit(math.nan, math.nan, math.nan, pairs, failures)
    lx = np.log([d for d, _ in usable])
    ly = np.log([v for _, v in usable])
    kappa, logc = np.polyfit(lx, ly, 1)
    # smallest C making the fitted exponent an upper bound on the samples
    C = float(np.exp(np.max(ly - kappa * lx)))
    resid = float(np.sqrt(np.mean((ly - (kappa * lx + logc)) ** 2)))
    return RotationFit(C, float(kappa), resid, pairs, failures)


__all__ = [
    "NonlinearProblem",
    "autoconvolution_problem",
    "linear_problem",
    "perturbed_linear_problem",
    "taylor_remainder",
    "degree_of_nonlinearity_check",
    "tangential_cone_constants",
    "cone_constant_from_bounds",
    "stable_illposedness_scan",
    "local_illposedness_probe",
    "build_N_factor",
    "n_factor_bounds",
    "rotation_condition_fit",
]
