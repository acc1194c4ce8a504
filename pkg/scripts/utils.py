"""Shared helpers: counter-based random streams, confidence intervals, ordered parallel
maps and the JSON conventions used for summaries."""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable

import numpy as np
from scipy import stats

from scripts import config

logger = logging.getLogger(__name__)

MAX_SEED: int = 2**64


# =============================================================================
#  Random streams
# =============================================================================


def check_seed(seed: int) -> int:
    """seeds are unsigned 64-bit integers"""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) < MAX_SEED:
        raise ValueError(f"seed must lie in [0, 2**64), got {seed}")
    return int(seed)


def make_rng(
    seed: int, stream: int, domain: int = config.RNG_DOMAIN_MEASUREMENT
) -> np.random.Generator:
    """Counter-based generator for one (seed, stream, domain) triple.

    The Philox key is the seed. The stream index sits in the top 64 bits of the
    256-bit counter and the domain tag in the next 64, so draws within one stream
    never reach another stream's counter range.
    """
    seed = check_seed(seed)
    stream = check_seed(stream)
    counter = (stream << 192) | (int(domain) << 128)
    return np.random.Generator(np.random.Philox(key=seed, counter=counter))


# =============================================================================
#  Statistics
# =============================================================================


def rms_about(values: np.ndarray, truth: float) -> float:
    """rms error of the values about a known truth"""
    values = np.asarray(values, dtype=float)
    return float(np.sqrt(np.mean((values - truth) ** 2)))


def rms_confidence_interval(
    rms: float, n: int, confidence: float = config.CI_CONFIDENCE
) -> tuple[float, float]:
    """Chi-square interval for an rms measured about the truth.

    n * rms**2 / sigma**2 follows a chi-square law with n degrees of freedom.
    """
    alpha = 1.0 - confidence
    hi_q = stats.chi2.ppf(1.0 - alpha / 2.0, n)
    lo_q = stats.chi2.ppf(alpha / 2.0, n)
    return float(rms * np.sqrt(n / hi_q)), float(rms * np.sqrt(n / lo_q))


def rms_standard_error(rms: float, n: int) -> float:
    """large-n standard error of an rms: rms / sqrt(2n)"""
    return float(rms / np.sqrt(2.0 * n))


# =============================================================================
#  Parallel map
# =============================================================================


def ordered_map(func: Callable, items: Iterable, threads: int = 1) -> list:
    """Map func over items, returning results in input order.

    The thread count only changes scheduling. Every item carries its own random
    stream so results do not depend on it.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def chunk_ranges(n: int, chunk: int) -> list[tuple[int, int]]:
    """split range(n) into contiguous (start, stop) chunks"""
    return [(start, min(start + chunk, n)) for start in range(0, n, chunk)]


# =============================================================================
#  JSON
# =============================================================================


def _to_builtin(obj):
    """convert numpy scalars and arrays so json can serialise them"""
    if isinstance(obj, dict):
        return {str(k): _to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_builtin(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def to_json(obj) -> str:
    """canonical json text: sorted keys, fixed indent, trailing newline"""
    return json.dumps(_to_builtin(obj), sort_keys=True, indent=2) + "\n"
