"""Self-play evaluation: run N games for a candidate configuration, estimate
win rates, and compute the balance loss."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import engine
from .agents import Agent, ExternalEndpoint, observe
from .engine import Faction, Outcome
from .rulespace import RuleConfig


@dataclass(frozen=True)
class AgentSpec:
    """Picklable recipe for constructing a per-game agent."""

    kind: str  # random | heuristic | external
    endpoint: str | None = None
    timeout: float = 30.0

    @classmethod
    def parse(cls, text: str, endpoint: str | None = None) -> "AgentSpec":
        return cls(kind=text, endpoint=endpoint)


def derive_agent_seed(game_seed: int, side: str) -> int:
    # stable across processes and sessions, decorrelates the two factions
    digest = hashlib.sha256(f"{game_seed}:{side}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _make_agent(spec: AgentSpec, game_seed: int, side: str) -> Agent:
    endpoint = ExternalEndpoint(spec.endpoint, spec.timeout) if spec.kind == "external" else None
    return Agent(
        kind=spec.kind,
        seed=derive_agent_seed(game_seed, side),
        endpoint=endpoint,
        game_id=f"game-{game_seed}",
    )


@dataclass
class GameResult:
    outcome: Outcome
    turns_played: int
    score_empire: float
    score_nomads: float
    seed: int
    substitutions: dict[str, int]
    transcript: list[dict] | None = None

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "outcome": self.outcome.value,
            "turns_played": self.turns_played,
            "score_empire": self.score_empire,
            "score_nomads": self.score_nomads,
            "substitutions": self.substitutions,
        }


def play_game(
    config: RuleConfig,
    agent_e: AgentSpec,
    agent_n: AgentSpec,
    seed: int,
    record_transcript: bool = False,
) -> GameResult:
    """One game from new_game through termination. Agent seeds derive
    deterministically from the game seed."""
    agents = {
        Faction.EMPIRE: _make_agent(agent_e, seed, "E"),
        Faction.NOMADS: _make_agent(agent_n, seed, "N"),
    }
    state = engine.new_game(config, seed)
    transcript: list[dict] = []
    engine_subs = {f.value: 0 for f in Faction}
    last_turn = 0
    while engine.outcome(state) is Outcome.ONGOING:
        obs = observe(state)
        plan = agents[state.acting].plan(obs)
        acting = state.acting
        state, events = engine.apply_turn(state, plan)
        engine_subs[acting.value] += events.substitutions
        last_turn = events.turn
        if record_transcript:
            transcript.append(engine.transcript_line(state, plan, events))
    for agent in agents.values():
        if agent.endpoint is not None:
            agent.endpoint.close()
    final = engine.outcome(state)
    return GameResult(
        outcome=final,
        turns_played=last_turn,
        score_empire=engine.score(state, Faction.EMPIRE),
        score_nomads=engine.score(state, Faction.NOMADS),
        seed=seed,
        substitutions=engine_subs,
        transcript=transcript if record_transcript else None,
    )


def balance_loss_from_counts(wins_e: int, wins_n: int, draws: int) -> float:
    """|w_E - 0.5| + |w_N - 0.5| + 0.5 * w_D, computed exactly over counts."""
    n = wins_e + wins_n + draws
    if n < 1:
        raise ValueError("need at least one game")
    half = Fraction(1, 2)
    loss = (
        abs(Fraction(wins_e, n) - half)
        + abs(Fraction(wins_n, n) - half)
        + half * Fraction(draws, n)
    )
    return float(loss)


@dataclass
class EvalResult:
    n_games: int
    wins_empire: int
    wins_nomads: int
    draws: int
    games: list[GameResult] = field(default_factory=list)

    def __post_init__(self):
        if self.wins_empire + self.wins_nomads + self.draws != self.n_games:
            raise ValueError("outcome counts must sum to n_games")

    @property
    def w_e(self) -> float:
        return self.wins_empire / self.n_games

    @property
    def w_n(self) -> float:
        return self.wins_nomads / self.n_games

    @property
    def w_d(self) -> float:
        return self.draws / self.n_games

    @property
    def loss(self) -> float:
        return balance_loss_from_counts(self.wins_empire, self.wins_nomads, self.draws)

    def to_dict(self, include_games: bool = True) -> dict:
        out = {
            "n_games": self.n_games,
            "wins_empire": self.wins_empire,
            "wins_nomads": self.wins_nomads,
            "draws": self.draws,
            "w_e": self.w_e,
            "w_n": self.w_n,
            "w_d": self.w_d,
            "loss": self.loss,
        }
        if include_games:
            out["games"] = [g.to_dict() for g in self.games]
        return out


def _play_one(args) -> GameResult:
    config, agent_e, agent_n, seed = args
    return play_game(config, agent_e, agent_n, seed)


def evaluate(
    config: RuleConfig,
    n_games: int,
    base_seed: int,
    agent_e: AgentSpec = AgentSpec("heuristic"),
    agent_n: AgentSpec = AgentSpec("heuristic"),
    max_workers: int = 1,
) -> EvalResult:
    """Play games with seeds base_seed .. base_seed+n_games-1 and aggregate.
    Results are merged in seed order, so the outcome is independent of worker
    count and execution order."""
    if n_games < 1:
        raise ValueError("n_games must be >= 1")
    jobs = [(config, agent_e, agent_n, base_seed + i) for i in range(n_games)]
    if max_workers > 1 and agent_e.kind != "external" and agent_n.kind != "external":
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_play_one, jobs))
    else:
        results = [_play_one(job) for job in jobs]
    results.sort(key=lambda r: r.seed)
    counts = {Outcome.EMPIRE_WIN: 0, Outcome.NOMADS_WIN: 0, Outcome.DRAW: 0}
    for r in results:
        counts[r.outcome] += 1
    return EvalResult(
        n_games=n_games,
        wins_empire=counts[Outcome.EMPIRE_WIN],
        wins_nomads=counts[Outcome.NOMADS_WIN],
        draws=counts[Outcome.DRAW],
        games=results,
    )


def select_best_checkpoint(history, threshold: float = 0.1):
    """The qualifying record (loss <= threshold) with minimal loss; ties break
    toward more games, then earlier iteration. None if nothing qualifies."""
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    qualifying = [r for r in history if r.eval_result.loss <= threshold]
    if not qualifying:
        return None
    return min(qualifying, key=lambda r: (r.eval_result.loss, -r.n_games, r.iteration))


def write_report(path: str | Path, config: RuleConfig, result: EvalResult) -> None:
    report = {"config": config.to_dict(), **result.to_dict()}
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
