"""Bounded population-based minimization: particle swarm and differential evolution.

Both algorithms search the unit cube; each dimension maps to its box either
linearly or in log10 space. Candidates are clamped to the box before every
evaluation, so the objective never sees an out-of-bounds point.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

ALGORITHMS = ("PSO", "DE")


@dataclass(frozen=True)
class Parameter:
    name: str
    lower: float
    upper: float
    scale: str = "linear"


class ParameterSpace:
    """Ordered named box constraints."""

    def __init__(self, params: Sequence[Parameter | tuple]) -> None:
        items = [p if isinstance(p, Parameter) else Parameter(*p) for p in params]
        if not items:
            raise ConfigError("parameter space is empty")
        seen = set()
        for p in items:
            if p.name in seen:
                raise ConfigError(f"duplicate parameter name {p.name!r}")
            seen.add(p.name)
            if not (math.isfinite(p.lower) and math.isfinite(p.upper)) or not p.lower < p.upper:
                raise ConfigError(f"parameter {p.name!r}: lower bound must be below upper bound")
            if p.scale not in ("linear", "log"):
                raise ConfigError(f"parameter {p.name!r}: scale must be 'linear' or 'log'")
            if p.scale == "log" and p.lower <= 0:
                raise ConfigError(f"parameter {p.name!r}: log scale needs a positive lower bound")
        self.params = tuple(items)
        self.names = tuple(p.name for p in items)
        self.lower = np.array([p.lower for p in items], dtype=float)
        self.upper = np.array([p.upper for p in items], dtype=float)
        self._log = np.array([p.scale == "log" for p in items])
        self._lo = np.where(self._log, np.log10(np.where(self._log, self.lower, 1.0)), self.lower)
        self._hi = np.where(self._log, np.log10(np.where(self._log, self.upper, 1.0)), self.upper)

    def __len__(self) -> int:
        return len(self.params)

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        u = np.clip(u, 0.0, 1.0)
        w = self._lo + u * (self._hi - self._lo)
        x = w.copy()
        x[..., self._log] = 10.0 ** w[..., self._log]
        return np.clip(x, self.lower, self.upper)

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        w = np.where(self._log, np.log10(np.where(self._log, np.maximum(x, 1e-300), 1.0)), x)
        return np.clip((w - self._lo) / (self._hi - self._lo), 0.0, 1.0)

    def clamp(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def as_dict(self, x: Sequence[float]) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, x)}

    def to_list(self) -> list[dict]:
        return [{"name": p.name, "lower": p.lower, "upper": p.upper, "scale": p.scale} for p in self.params]

    @classmethod
    def from_list(cls, items: list[dict]) -> ParameterSpace:
        try:
            return cls([Parameter(d["name"], float(d["lower"]), float(d["upper"]), d.get("scale", "linear")) for d in items])
        except KeyError as exc:
            raise ConfigError(f"parameter entry missing {exc.args[0]!r}") from None


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: str = "PSO"
    population: int = 30
    max_iter: int = 100
    seed: int = 0
    target: float | None = None
    stagnation_window: int = 30
    stagnation_tol: float = 1e-8
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    f_weight: float = 0.6
    crossover: float = 0.9

    def __post_init__(self) -> None:
        algo = str(self.algorithm).upper()
        object.__setattr__(self, "algorithm", algo)
        if algo not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}, expected one of {ALGORITHMS}")
        if self.population < 4:
            raise ConfigError("population must be at least 4")
        if self.max_iter < 0:
            raise ConfigError("max_iter must be >= 0")
        if self.stagnation_window < 1 or self.stagnation_tol < 0:
            raise ConfigError("stagnation window must be >= 1 and tolerance >= 0")
        if not 0.0 <= self.inertia < 1.0:
            raise ConfigError("PSO inertia must lie in [0, 1)")
        if self.cognitive < 0 or self.social < 0 or self.cognitive + self.social > 4.5:
            raise ConfigError("PSO cognitive/social coefficients must be >= 0 with sum <= 4.5")
        if not 0.0 < self.f_weight <= 2.0:
            raise ConfigError("DE weight F must lie in (0, 2]")
        if not 0.0 <= self.crossover <= 1.0:
            raise ConfigError("DE crossover CR must lie in [0, 1]")

    @classmethod
    def from_dict(cls, data: dict) -> OptimizerConfig:
        names = set(cls.__dataclass_fields__)
        extra = set(data) - names
        if extra:
            raise ConfigError(f"unknown optimizer keys {sorted(extra)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class OptimizationResult:
    best_x: np.ndarray
    best_f: float
    history: list[float] = field(default_factory=list)
    evals_history: list[int] = field(default_factory=list)
    evaluations: int = 0
    stop_reason: str = ""
    names: tuple[str, ...] = ()

    @property
    def best(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.best_x)}

    def history_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "best_objective", "evals"])
        for k, (f, n) in enumerate(zip(self.history, self.evals_history)):
            w.writerow([k, repr(float(f)), n])
        return buf.getvalue()

    def write_history(self, path: str | Path) -> None:
        Path(path).write_text(self.history_csv())


def sample_initial_population(space: ParameterSpace, config: OptimizerConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Uniform samples per dimension (log-uniform on log dimensions)."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    u = rng.random((config.population, len(space)))
    return space.from_unit(u)


Evaluator = Callable[[Callable[[np.ndarray], float], list[np.ndarray]], list[float]]


def _serial(fn, xs):
    return [fn(x) for x in xs]


class _Tracker:
    def __init__(self, objective, evaluate: Evaluator, space: ParameterSpace) -> None:
        self.objective = objective
        self.evaluate = evaluate
        self.space = space
        self.count = 0

    def __call__(self, unit: np.ndarray) -> np.ndarray:
        xs = [self.space.from_unit(u) for u in unit]
        fs = self.evaluate(self.objective, xs)
        self.count += len(xs)
        out = np.array([float(f) for f in fs])
        return np.where(np.isnan(out), np.inf, out)


def optimize(
    space: ParameterSpace,
    objective: Callable[[np.ndarray], float],
    config: OptimizerConfig,
    evaluate: Evaluator | None = None,
    callback: Callable[[int, float], None] | None = None,
) -> OptimizationResult:
    """Minimize ``objective`` over ``space``.

    ``evaluate(objective, candidates)`` may map a batch concurrently; it must
    return values in candidate order. The random stream is consumed only
    here, so a parallel evaluator does not change the result.
    """
    rng = np.random.default_rng(config.seed)
    track = _Tracker(objective, evaluate or _serial, space)
    n, d = config.population, len(space)

    pos = rng.random((n, d))
    fit = track(pos)
    ib = int(np.argmin(fit))
    best_u, best_f = pos[ib].copy(), float(fit[ib])
    history, evals = [best_f], [track.count]

    if config.algorithm == "PSO":
        vel = (rng.random((n, d)) - 0.5) * 0.2
        pbest, pbest_f = pos.copy(), fit.copy()

    reason = "max_iter"
    last_improve = 0
    for it in range(1, config.max_iter + 1):
        if config.target is not None and best_f <= config.target:
            reason = "target"
            break
        if it - last_improve > config.stagnation_window:
            reason = "stagnation"
            break

        if config.algorithm == "PSO":
            r1 = rng.random((n, d))
            r2 = rng.random((n, d))
            vel = config.inertia * vel + config.cognitive * r1 * (pbest - pos) + config.social * r2 * (best_u - pos)
            np.clip(vel, -0.5, 0.5, out=vel)
            pos = np.clip(pos + vel, 0.0, 1.0)
            fit = track(pos)
            better = fit < pbest_f
            pbest[better] = pos[better]
            pbest_f[better] = fit[better]
            cand_i = int(np.argmin(pbest_f))
            cand_u, cand_f = pbest[cand_i], float(pbest_f[cand_i])
        else:
            trial = np.empty_like(pos)
            for i in range(n):
                others = [k for k in range(n) if k != i]
                a, b, c = rng.choice(others, 3, replace=False)
                mutant = pos[a] + config.f_weight * (pos[b] - pos[c])
                cross = rng.random(d) < config.crossover
                cross[rng.integers(d)] = True
                trial[i] = np.where(cross, mutant, pos[i])
            trial = np.clip(trial, 0.0, 1.0)
            tf = track(trial)
            keep = tf <= fit
            pos[keep] = trial[keep]
            fit[keep] = tf[keep]
            cand_i = int(np.argmin(fit))
            cand_u, cand_f = pos[cand_i], float(fit[cand_i])

        if cand_f < best_f:
            if best_f - cand_f > config.stagnation_tol * max(abs(best_f), 1e-300):
                last_improve = it
            best_u, best_f = cand_u.copy(), cand_f
        history.append(best_f)
        evals.append(track.count)
        if callback is not None:
            callback(it, best_f)
    else:
        if config.target is not None and best_f <= config.target:
            reason = "target"

    return OptimizationResult(
        best_x=space.from_unit(best_u),
        best_f=best_f,
        history=history,
        evals_history=evals,
        evaluations=track.count,
        stop_reason=reason,
        names=space.names,
    )
