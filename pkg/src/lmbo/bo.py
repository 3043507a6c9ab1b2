"""Efficient global optimization over mixed hierarchical design spaces."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import norm

from .design_space import DEFAULT_ENUMERATION_CAP, DesignPoint, DesignSpace
from .gp import GpConfig, GpModel, fit
from .kernels import SingularCorrelationError, ThetaLayout

log = logging.getLogger(__name__)

N_RANDOM_CANDIDATES = 4096


class SpaceExhausted(RuntimeError):
    """Every candidate point has already been evaluated."""


@dataclass(frozen=True)
class TrialRecord:
    iteration: int
    phase: str  # "doe" or "ego"
    point: DesignPoint
    objective: float | None  # imputed value for failed trials, None if nothing to impute from
    seed: int
    wall_time: float
    failed: bool = False

    def to_json(self, names: Sequence[str], with_time: bool = False) -> str:
        d = {
            "iteration": self.iteration,
            "phase": self.phase,
            "point": dict(zip(names, self.point.values)),
            "active": dict(zip(names, self.point.active)),
            "objective": self.objective,
            "failed": self.failed,
            "seed": self.seed,
        }
        if with_time:
            d["wall_time"] = self.wall_time
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, line: str, space: DesignSpace) -> "TrialRecord":
        d = json.loads(line)
        return cls(
            iteration=d["iteration"], phase=d["phase"], point=space.point(d["point"]),
            objective=d["objective"], seed=d["seed"], wall_time=d.get("wall_time", 0.0),
            failed=d["failed"],
        )


@dataclass
class BoResult:
    space: DesignSpace
    trials: list[TrialRecord] = field(default_factory=list)
    n_doe: int = 0
    n_iter: int = 0

    @property
    def successful(self) -> list[TrialRecord]:
        return [t for t in self.trials if not t.failed]

    @property
    def best(self) -> TrialRecord:
        ok = self.successful
        if not ok:
            raise RuntimeError("no successful trial")
        # min() keeps the earliest trial on ties
        return min(ok, key=lambda t: t.objective)

    def best_trace(self) -> list[float]:
        """Best successful objective after each trial (inf before the first)."""
        out, cur = [], math.inf
        for t in self.trials:
            if not t.failed:
                cur = min(cur, t.objective)
            out.append(cur)
        return out


def expected_improvement(mu, sigma, f_min):
    """Closed-form EI for minimization; exactly 0 where ``sigma == 0``."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise ValueError("sigma must be nonnegative")
    imp = f_min - mu
    pos = sigma > 0
    safe = np.where(pos, sigma, 1.0)
    z = imp / safe
    ei = np.where(pos, imp * norm.cdf(z) + safe * norm.pdf(z), 0.0)
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


def point_seed(point: DesignPoint, run_seed: int) -> int:
    """Stable 32-bit seed derived from a canonical point and the run seed."""
    key = json.dumps([list(point.values), int(run_seed)], sort_keys=True).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:4], "little")


def candidate_points(space: DesignSpace, seed: int, cap: int = DEFAULT_ENUMERATION_CAP,
                     n_random: int = N_RANDOM_CANDIDATES) -> list[DesignPoint]:
    """Full enumeration when the space is small enough, else seeded random draws."""
    if space.is_finite and space.cardinality() <= cap:
        return space.enumerate(cap)
    pts = space.sample_random(n_random, seed)
    return list(dict.fromkeys(pts))


def propose_next(model: GpModel, space: DesignSpace, evaluated, f_min: float,
                 candidates: Sequence[DesignPoint] | None = None, seed: int = 0) -> DesignPoint:
    """Unevaluated candidate with the largest expected improvement.

    Ties resolve to the earliest candidate in enumeration order.
    """
    if candidates is None:
        candidates = candidate_points(space, seed)
    evaluated = set(evaluated)
    pool = [p for p in candidates if p not in evaluated]
    if not pool:
        raise SpaceExhausted("all candidate points have been evaluated")
    mean, var = model.predict(space.encode_many(pool))
    ei = expected_improvement(mean, np.sqrt(var), f_min)
    return pool[int(np.argmax(ei))]


def _fill_unique(space: DesignSpace, points: list[DesignPoint], seed: int) -> list[DesignPoint]:
    """Replace duplicate DoE points by fresh random ones (order preserved)."""
    out, seen = [], set()
    extra = iter(())
    k = 0
    for p in points:
        while p in seen:
            try:
                p = next(extra)
            except StopIteration:
                k += 1
                if k > 50:
                    raise SpaceExhausted("could not find enough distinct DoE points")
                extra = iter(space.sample_random(len(points), seed + 7919 * k))
                continue
        seen.add(p)
        out.append(p)
    return out


def _failure_value(ok: Sequence[float]) -> float:
    worst = max(ok)
    return 2.0 * worst if worst > 0 else worst + 1.0


def _impute(trials: list[TrialRecord]) -> np.ndarray | None:
    ok = [t.objective for t in trials if not t.failed]
    if not ok:
        return None
    fill = _failure_value(ok)
    return np.array([fill if t.failed else t.objective for t in trials], dtype=float)


def _evaluate(objective, point, seed):
    t0 = time.perf_counter()
    try:
        val = float(objective(point, seed))
        failed = not math.isfinite(val)
    except Exception as exc:  # objective failures are recorded, not raised
        log.warning("objective failed at %s: %s", point.values, exc)
        val, failed = math.nan, True
    return val, failed, time.perf_counter() - t0


def run_ego(objective: Callable[[DesignPoint, int], float], space: DesignSpace,
            n_doe: int | None = None, n_iter: int = 20, seed: int = 0,
            gp_config: GpConfig = GpConfig(), workers: int = 1,
            on_trial: Callable[[TrialRecord], None] | None = None,
            candidate_cap: int = DEFAULT_ENUMERATION_CAP,
            replay: Sequence[TrialRecord] = ()) -> BoResult:
    """Evaluate an LHS DoE, then ``n_iter`` EI-selected points.

    ``objective(point, seed)`` receives a seed derived from the point and
    ``seed``. Failed evaluations (exceptions, non-finite values) are kept
    in the history; for the surrogate they count as twice the worst
    successful value and they never define the incumbent. The loop stops
    early once every point of a finite space has been evaluated.

    ``replay`` holds trials of an interrupted run with the same arguments;
    a trial whose iteration and point match is reused instead of evaluated.
    """
    replayed = {t.iteration: t for t in replay}

    def evaluate(it, point, pseed):
        old = replayed.get(it)
        if old is not None and old.point == point:
            val = math.nan if old.failed else old.objective
            return val, old.failed, old.wall_time
        return _evaluate(objective, point, pseed)

    if n_doe is None:
        n_doe = max(5, 2 * len(space))
    if n_doe < 2:
        raise ValueError("n_doe must be >= 2")
    layout = ThetaLayout.from_space(space, gp_config.categorical)
    result = BoResult(space=space, n_doe=n_doe, n_iter=n_iter)

    def record(it, phase, point, val, failed, dt):
        obj = val
        if failed:
            ok = [t.objective for t in result.successful]
            obj = _failure_value(ok) if ok else None
        rec = TrialRecord(it, phase, point, obj, point_seed(point, seed), dt, failed)
        result.trials.append(rec)
        if on_trial is not None:
            on_trial(rec)

    finite_size = space.cardinality() if space.is_finite else math.inf
    doe = space.sample_doe(n_doe, seed)
    if finite_size <= n_doe:
        doe = space.enumerate(candidate_cap)[:n_doe]
    else:
        doe = _fill_unique(space, doe, seed)
    seeds = [point_seed(p, seed) for p in doe]
    jobs = list(zip(range(len(doe)), doe, seeds))
    # results are committed in point order, each as soon as it is available
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for (i, p, _), (val, failed, dt) in zip(jobs, pool.map(lambda job: evaluate(*job), jobs)):
                record(i, "doe", p, val, failed, dt)
    else:
        for i, p, s in jobs:
            record(i, "doe", p, *evaluate(i, p, s))

    candidates = None
    if space.is_finite and finite_size <= candidate_cap:
        candidates = space.enumerate(candidate_cap)
    for k in range(n_iter):
        evaluated = {t.point for t in result.trials}
        if len(evaluated) >= finite_size:
            log.info("design space exhausted after %d trials", len(result.trials))
            break
        cands = candidates if candidates is not None else candidate_points(
            space, seed + 1 + k, candidate_cap)
        nxt = _next_point(result, space, layout, gp_config, seed + k, cands, evaluated)
        it = len(result.trials)
        val, failed, dt = evaluate(it, nxt, point_seed(nxt, seed))
        record(it, "ego", nxt, val, failed, dt)
    return result


def _next_point(result, space, layout, gp_config, fit_seed, cands, evaluated) -> DesignPoint:
    y = _impute(result.trials)
    if y is None:
        # nothing to model yet: first unevaluated candidate
        return next(p for p in cands if p not in evaluated)
    W = space.encode_many([t.point for t in result.trials])
    f_min = min(t.objective for t in result.successful)
    try:
        model = fit(W, y, layout, gp_config, seed=fit_seed)
    except SingularCorrelationError:
        log.warning("GP fit failed; falling back to first unevaluated candidate")
        return next(p for p in cands if p not in evaluated)
    try:
        return propose_next(model, space, evaluated, f_min, candidates=cands)
    except SpaceExhausted:
        # the random candidate pool can be fully evaluated on large spaces
        extra = space.sample_random(N_RANDOM_CANDIDATES, fit_seed + 104729)
        return propose_next(model, space, evaluated, f_min, candidates=extra)
