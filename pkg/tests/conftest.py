"""Shared fixtures: memoized long-time averages reused across the suite."""
from __future__ import annotations

import pytest

from bkc.dynamics import AveragingProtocol, TimeAverageResult, time_averaged_entropy
from bkc.model import ModelParams

# The acceptance sweeps never needed more than ~20k samples to converge;
# the raised cap keeps the harsh 1e-3 criterion attainable at every grid
# point without masking a genuine non-convergence.
_SAMPLE_CAP = 60000


class AverageStore:
    """Memoized time-averaged entropies keyed by couplings and subsystem."""

    def __init__(self) -> None:
        self._cache: dict[tuple, TimeAverageResult] = {}

    def result(self, g: float, n: int, sites, w: float = 1.0,
               delta: float = 0.25,
               rel_threshold: float | None = None) -> TimeAverageResult:
        key = (w, delta, g, n, tuple(sites), rel_threshold)
        if key not in self._cache:
            params = ModelParams(w=w, delta=delta, g=g, n_sites=n)
            overrides: dict = {"max_samples": _SAMPLE_CAP}
            if rel_threshold is not None:
                # fast path for wide grids that only need a loose average
                overrides.update(rel_threshold=rel_threshold,
                                 initial_samples=300, batch_samples=300)
            protocol = AveragingProtocol.for_params(params, **overrides)
            self._cache[key] = time_averaged_entropy(params, list(sites), protocol)
        return self._cache[key]

    def mean(self, g: float, n: int, sites, **kw) -> float:
        return self.result(g, n, sites, **kw).mean

    def quarter(self, g: float, n: int, **kw) -> TimeAverageResult:
        return self.result(g, n, range(n // 4), **kw)


@pytest.fixture(scope="session")
def averages() -> AverageStore:
    return AverageStore()
