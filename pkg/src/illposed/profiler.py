"""Degree and interval of ill-posedness from a singular-value sequence.

Conventions (fixed constants, overridable per call and on the CLI):

* the automatic fit window is ``[max(3, r * HEAD_FRACTION), r * TAIL_FRACTION]``
  in 1-based indices, ``r`` the numerical rank;
* the interval proxies use ``q_n = -log(sigma_n / c_fit) / log n`` where
  ``c_fit`` is the scale constant of the log-log fit, so that the constant
  in ``sigma_n ~ c n**-k`` does not bias finite-``n`` values.
"""

from dataclasses import dataclass

import numpy as np

from .errors import WindowTooSmall

HEAD_FRACTION = 1.0 / 8.0
TAIL_FRACTION = 1.0 / 4.0
MIN_WINDOW = 5
DEFAULT_WINDOW_COUNT = 8
REL_CUTOFF = 1e-12

MODERATE_MAX_RESIDUAL = 0.15
MODERATE_MAX_WIDTH = 0.5
SEVERE_SLOPE_PER_DECADE = 0.5


@dataclass
class IllposednessProfile:
    mu_hat: float
    mu_lower: float
    mu_upper: float
    fit_window: tuple
    fit_residual: float
    classification: str
    trend_slope: float = 0.0

    @property
    def degree(self):
        if self.classification.startswith("moderate("):
            return float(self.classification[len("moderate("):-1])
        return None

    def as_dict(self):
        return {
            "mu_hat": self.mu_hat,
            "mu_lower": self.mu_lower,
            "mu_upper": self.mu_upper,
            "fit_window": list(self.fit_window),
            "fit_residual": self.fit_residual,
            "classification": self.classification,
            "trend_slope": self.trend_slope,
        }


def numerical_rank(sigma, rel_cutoff=REL_CUTOFF):
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.size == 0 or not np.any(sigma > 0):
        return 0
    # leading run above the cutoff; sequences need not be sorted
    alive = sigma > rel_cutoff * sigma.size * np.max(sigma)
    if alive.all():
        return sigma.size
    return int(np.argmin(alive))


def auto_window(rank, head=HEAD_FRACTION, tail=TAIL_FRACTION):
    lo = max(3, int(rank * head))
    hi = min(rank, max(int(rank * tail), lo + MIN_WINDOW - 1))
    return lo, hi


def _resolve_window(sigma, window, head, tail):
    r = numerical_rank(sigma)
    if window is None or window == "auto":
        lo, hi = auto_window(r, head, tail)
    else:
        lo, hi = window
        hi = min(hi, r)
    if hi - lo + 1 < MIN_WINDOW:
        raise WindowTooSmall(f"window [{lo}, {hi}] has fewer than {MIN_WINDOW} usable indices (rank {r})")
    return int(lo), int(hi)


def _loglog_fit(sigma, lo, hi):
    n = np.arange(lo, hi + 1, dtype=np.float64)
    x = np.log(n)
    y = -np.log(np.asarray(sigma, dtype=np.float64)[lo - 1:hi])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def estimate_decay_exponent(sigma, window="auto", head=HEAD_FRACTION, tail=TAIL_FRACTION):
    """Least-squares slope of ``-log sigma_n`` against ``log n``.

    Returns ``(mu_hat, fit_residual)`` where the residual is the RMS of the
    log-log fit.  ``window`` is ``"auto"`` or an inclusive 1-based index pair.
    """
    lo, hi = _resolve_window(sigma, window, head, tail)
    slope, _, rms = _loglog_fit(sigma, lo, hi)
    return slope, rms


def q_sequence(sigma, window="auto", head=HEAD_FRACTION, tail=TAIL_FRACTION):
    """Scale-normalized ``q_n`` on the fit window; returns ``(n, q_n)``."""
    lo, hi = _resolve_window(sigma, window, head, tail)
    _, intercept, _ = _loglog_fit(sigma, lo, hi)
    n = np.arange(lo, hi + 1, dtype=np.float64)
    # sigma_n / c_fit with c_fit = exp(-intercept)
    q = (-np.log(np.asarray(sigma, dtype=np.float64)[lo - 1:hi]) - intercept) / np.log(n)
    return n, q


def _window_means(q, width):
    c = np.concatenate([[0.0], np.cumsum(q)])
    return (c[width:] - c[:-width]) / width


def illposedness_interval(sigma, window_count=DEFAULT_WINDOW_COUNT, window="auto",
                          head=HEAD_FRACTION, tail=TAIL_FRACTION):
    """Finite-scale proxies for the liminf and limsup of ``-log sigma_n / log n``.

    ``q_n`` on the admissible range is averaged over every contiguous window
    of width ``len(range) // window_count``; the smallest and largest window
    means are returned as ``(mu_lower, mu_upper)``.
    """
    _, q = q_sequence(sigma, window, head, tail)
    width = max(1, q.size // max(1, int(window_count)))
    means = _window_means(q, width)
    return float(means.min()), float(means.max())


def _trend_slope(sigma, window, head, tail):
    # slope of raw q_n = -log(sigma_n / sigma_1) / log n per decade of n
    lo, hi = _resolve_window(sigma, window, head, tail)
    sigma = np.asarray(sigma, dtype=np.float64)
    n = np.arange(max(lo, 2), hi + 1, dtype=np.float64)
    q = -np.log(sigma[n.astype(int) - 1] / sigma[0]) / np.log(n)
    return float(np.polyfit(np.log10(n), q, 1)[0])


def classify(mu_hat, fit_residual, mu_lower, mu_upper, trend_slope=0.0):
    """Label a profile ``moderate(k)``, ``severe`` or ``indeterminate``.

    ``k`` is ``mu_hat`` rounded to the nearest 0.5.  A ``q_n`` trend steeper
    than 0.5 per decade wins over a good linear fit, since short windows of
    an exponential decay fit a line well.
    """
    if trend_slope > SEVERE_SLOPE_PER_DECADE:
        return "severe"
    if fit_residual <= MODERATE_MAX_RESIDUAL and (mu_upper - mu_lower) <= MODERATE_MAX_WIDTH:
        k = round(mu_hat * 2.0) / 2.0
        return f"moderate({k:g})"
    return "indeterminate"


def profile(sigma, window="auto", window_count=DEFAULT_WINDOW_COUNT, head=HEAD_FRACTION, tail=TAIL_FRACTION):
    """Full :class:`IllposednessProfile` for a singular-value sequence."""
    lo, hi = _resolve_window(sigma, window, head, tail)
    mu_hat, rms = estimate_decay_exponent(sigma, (lo, hi))
    mu_lower, mu_upper = illposedness_interval(sigma, window_count, (lo, hi))
    trend = _trend_slope(sigma, (lo, hi), head, tail)
    label = classify(mu_hat, rms, mu_lower, mu_upper, trend)
    if label != "severe":
        mu_lower, mu_upper = min(mu_lower, mu_hat), max(mu_upper, mu_hat)
    return IllposednessProfile(
        mu_hat=mu_hat,
        mu_lower=mu_lower,
        mu_upper=mu_upper,
        fit_window=(lo, hi),
        fit_residual=rms,
        classification=label,
        trend_slope=trend,
    )


def decay_exponent_of(matrix, window="auto"):
    from .linalg_core import singular_values

    return estimate_decay_exponent(singular_values(matrix), window)[0]


__all__ = [
    "IllposednessProfile",
    "auto_window",
    "classify",
    "estimate_decay_exponent",
    "illposedness_interval",
    "numerical_rank",
    "profile",
    "q_sequence",
]
