"""Search over the rule space: Bayesian optimization with acquisition-based
adaptive game budgets, plus random-search and (1+1)-ES baselines. All methods
emit one TrialRecord per iteration and stream them to an append-only JSONL
run log that supports resume."""

from __future__ import annotations

import json
import logging
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import gp, rulespace
from .evaluator import EvalResult
from .gp import GPModel, SurrogateError, expected_improvement, gp_posterior_standardized
from .rulespace import RuleConfig, default_space

log = logging.getLogger(__name__)

EvaluateFn = Callable[[RuleConfig, int, int], EvalResult]

_SPECS = default_space()
_LOWER = np.array([s.lower for s in _SPECS])
_UPPER = np.array([s.upper for s in _SPECS])
_STEP = np.array([1.0 if s.precision is rulespace.Precision.INTEGER else 0.1 for s in _SPECS])
_SPAN = _UPPER - _LOWER

N_CANDIDATES = 4096


def snap_unit(u: np.ndarray) -> np.ndarray:
    """Map unit-cube points onto the nearest realizable discrete configs,
    still expressed in the unit cube. Vectorized over rows."""
    v = _LOWER + np.clip(u, 0.0, 1.0) * _SPAN
    # half-away-from-zero; all parameter values are positive
    q = np.clip(np.floor(v / _STEP + 0.5) * _STEP, _LOWER, _UPPER)
    return (q - _LOWER) / _SPAN


def unit_to_raw(u: np.ndarray) -> list[float]:
    return [float(x) for x in (_LOWER + np.asarray(u) * _SPAN)]


@dataclass
class BudgetPolicy:
    n_min: int = 16
    n_max: int = 64
    running_max_ei: float = 0.0

    def __post_init__(self):
        if not 1 <= self.n_min <= self.n_max:
            raise ValueError("need 1 <= n_min <= n_max")


def adaptive_games(ei: float, policy: BudgetPolicy) -> tuple[int, BudgetPolicy]:
    """Linear budget in the candidate's EI relative to the running maximum
    (which includes the current candidate, so a fresh record gets n_max)."""
    if ei < 0:
        raise ValueError("ei must be >= 0")
    running = max(policy.running_max_ei, ei)
    updated = BudgetPolicy(policy.n_min, policy.n_max, running)
    if running == 0.0:
        return policy.n_min, updated
    n = policy.n_min + (policy.n_max - policy.n_min) * (ei / running)
    n_t = int(np.floor(n + 0.5))  # half away from zero; n is nonnegative
    return min(max(n_t, policy.n_min), policy.n_max), updated


@dataclass
class TrialRecord:
    method: str
    iteration: int
    raw: list[float]  # continuous proposal, parameter units
    config: RuleConfig
    acquisition: float
    n_games: int
    eval_result: EvalResult
    wall_time: float = 0.0
    accepted: bool | None = None  # (1+1)-ES only

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "iteration": self.iteration,
            "raw": self.raw,
            "config": self.config.to_dict(),
            "acquisition": self.acquisition,
            "n_games": self.n_games,
            "eval": self.eval_result.to_dict(include_games=False),
            "wall_time": self.wall_time,
        }
        if self.accepted is not None:
            out["accepted"] = self.accepted
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TrialRecord":
        ev = data["eval"]
        return cls(
            method=data["method"],
            iteration=data["iteration"],
            raw=list(data["raw"]),
            config=RuleConfig.from_dict(data["config"]),
            acquisition=data["acquisition"],
            n_games=data["n_games"],
            eval_result=EvalResult(
                n_games=ev["n_games"],
                wins_empire=ev["wins_empire"],
                wins_nomads=ev["wins_nomads"],
                draws=ev["draws"],
            ),
            wall_time=data.get("wall_time", 0.0),
            accepted=data.get("accepted"),
        )


class RunLog:
    """Append-only JSONL stream of TrialRecords."""

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path else None

    def append(self, record: TrialRecord) -> None:
        if self.path is None:
            return
        with self.path.open("a") as fh:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")


def load_history(path: str | Path) -> list[TrialRecord]:
    records = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            records.append(TrialRecord.from_dict(json.loads(line)))
    return records


def game_seed_base(run_seed: int, iteration: int) -> int:
    # room for n_max games per iteration without overlap between iterations
    return run_seed * 1_000_000 + iteration * 1_000


def _iter_rng(run_seed: int, iteration: int, method: str) -> np.random.Generator:
    tag = zlib.crc32(method.encode())  # stable across processes, unlike hash()
    return np.random.default_rng([run_seed, iteration, tag])


def propose(model: GPModel, rng: np.random.Generator) -> tuple[list[float], float]:
    """Maximize EI over uniform unit-cube candidates snapped onto the discrete
    grid, so the acquisition is scored at realizable configs. Returns the raw
    winning proposal (parameter units) and its EI (standardized units); ties
    go to the earliest draw."""
    u = snap_unit(rng.uniform(size=(N_CANDIDATES, len(_SPECS))))
    mu, sigma = gp_posterior_standardized(model, u)
    ei = expected_improvement(mu, sigma, model.y_best_standardized)
    best = int(np.argmax(ei))
    return unit_to_raw(u[best]), float(ei[best])


def _random_config(
    rng: np.random.Generator, map_size: int, max_turns: int | None
) -> tuple[list[float], RuleConfig]:
    u = snap_unit(rng.uniform(size=(1, len(_SPECS))))[0]
    raw = unit_to_raw(u)
    return raw, rulespace.project(raw, map_size=map_size, max_turns=max_turns)


def run_bo(
    T: int,
    evaluate_fn: EvaluateFn,
    seed: int,
    policy: BudgetPolicy | None = None,
    init_count: int = 10,
    map_size: int = 7,
    max_turns: int | None = None,
    log_path: str | Path | None = None,
    history: list[TrialRecord] | None = None,
    adaptive: bool = True,
    fixed_n: int | None = None,
    gp_restarts: int = 8,
) -> list[TrialRecord]:
    """Bayesian optimization loop: init_count uniform warm-up evaluations,
    then GP fit + EI proposal + adaptive (or fixed) game budget + projection +
    evaluation per iteration. Fully reproducible from the seed, including when
    resumed from a partial history."""
    if not T >= init_count >= 2:
        raise ValueError("need T >= init_count >= 2")
    policy = policy or BudgetPolicy()
    if not adaptive and fixed_n is None:
        fixed_n = policy.n_max
    method = "bo-adaptive" if adaptive else "bo-fixed"
    history = list(history) if history else []
    for rec in history:
        policy.running_max_ei = max(policy.running_max_ei, rec.acquisition)
    runlog = RunLog(log_path)

    xs = [snap_unit(np.array([rulespace.normalize(r.config)]))[0] for r in history]
    ys = [r.eval_result.loss for r in history]

    for t in range(len(history) + 1, T + 1):
        start = time.perf_counter()
        rng = _iter_rng(seed, t, method)
        if t <= init_count:
            raw, config = _random_config(rng, map_size, max_turns)
            ei = 0.0
            n_t = policy.n_min if adaptive else fixed_n
        else:
            try:
                model = gp.fit_gp(xs, ys, n_restarts=gp_restarts, seed=seed * 1000 + t)
                raw, ei = propose(model, rng)
            except SurrogateError as exc:
                log.warning("surrogate failure at iteration %d: %s; random fallback", t, exc)
                raw, _ = _random_config(rng, map_size, max_turns)
                ei = 0.0
            config = rulespace.project(raw, map_size=map_size, max_turns=max_turns)
            if adaptive:
                n_t, policy = adaptive_games(ei, policy)
            else:
                n_t = fixed_n
        result = evaluate_fn(config, n_t, game_seed_base(seed, t))
        record = TrialRecord(
            method=method,
            iteration=t,
            raw=raw,
            config=config,
            acquisition=ei,
            n_games=n_t,
            eval_result=result,
            wall_time=time.perf_counter() - start,
        )
        history.append(record)
        xs.append(snap_unit(np.array([rulespace.normalize(config)]))[0])
        ys.append(result.loss)
        runlog.append(record)
    return history


def run_random_search(
    T: int,
    n_games: int,
    evaluate_fn: EvaluateFn,
    seed: int,
    map_size: int = 7,
    max_turns: int | None = None,
    log_path: str | Path | None = None,
) -> list[TrialRecord]:
    """Uniform sampling over the discrete rule space, fixed budget per trial."""
    if T < 1:
        raise ValueError("T must be >= 1")
    runlog = RunLog(log_path)
    history = []
    for t in range(1, T + 1):
        start = time.perf_counter()
        raw, config = _random_config(_iter_rng(seed, t, "random"), map_size, max_turns)
        result = evaluate_fn(config, n_games, game_seed_base(seed, t))
        record = TrialRecord(
            method="random",
            iteration=t,
            raw=raw,
            config=config,
            acquisition=0.0,
            n_games=n_games,
            eval_result=result,
            wall_time=time.perf_counter() - start,
        )
        history.append(record)
        runlog.append(record)
    return history


def run_one_plus_one_es(
    T: int,
    n_games: int,
    evaluate_fn: EvaluateFn,
    seed: int,
    step_sigma: float = 0.1,
    map_size: int = 7,
    max_turns: int | None = None,
    log_path: str | Path | None = None,
) -> list[TrialRecord]:
    """(1+1)-ES in the normalized space: isotropic Gaussian perturbation of a
    single incumbent, greedy acceptance on strict improvement. Iteration 1
    evaluates the random starting incumbent."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if step_sigma <= 0:
        raise ValueError("step_sigma must be > 0")
    runlog = RunLog(log_path)
    history = []
    incumbent_u: np.ndarray | None = None
    incumbent_loss = float("inf")
    for t in range(1, T + 1):
        start = time.perf_counter()
        rng = _iter_rng(seed, t, "es")
        if incumbent_u is None:
            u = snap_unit(rng.uniform(size=(1, len(_SPECS))))[0]
        else:
            perturbed = incumbent_u + rng.normal(0.0, step_sigma, size=len(_SPECS))
            u = snap_unit(np.clip(perturbed, 0.0, 1.0)[None, :])[0]
        raw = unit_to_raw(u)
        config = rulespace.project(raw, map_size=map_size, max_turns=max_turns)
        result = evaluate_fn(config, n_games, game_seed_base(seed, t))
        accepted = result.loss < incumbent_loss
        if accepted:
            incumbent_u, incumbent_loss = u, result.loss
        record = TrialRecord(
            method="es",
            iteration=t,
            raw=raw,
            config=config,
            acquisition=0.0,
            n_games=n_games,
            eval_result=result,
            wall_time=time.perf_counter() - start,
            accepted=accepted,
        )
        history.append(record)
        runlog.append(record)
    return history


def best_record(history: list[TrialRecord]) -> TrialRecord:
    """Lowest observed loss; ties toward more games, then earlier iteration."""
    return min(history, key=lambda r: (r.eval_result.loss, -r.n_games, r.iteration))


def total_games(history: list[TrialRecord]) -> int:
    return sum(r.n_games for r in history)
