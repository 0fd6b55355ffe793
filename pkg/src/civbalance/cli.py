"""Command-line entry point: run optimizations, evaluate configurations,
render rollouts, and summarize run logs."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import engine, optimizer, rulespace
from .agents import Agent, ExternalEndpoint, observe
from .engine import Faction, Outcome
from .evaluator import AgentSpec, evaluate, play_game, select_best_checkpoint, write_report
from .optimizer import BudgetPolicy, best_record, load_history, total_games
from .render import render_svg
from .rulespace import ContractViolation, load_config

ENDPOINT_ENV = "CIVBALANCE_AGENT_ENDPOINT"


def _parse_agents(text: str) -> tuple[AgentSpec, AgentSpec]:
    """Parse 'E=<kind>,N=<kind>' into a pair of agent specs."""
    specs = {"E": "heuristic", "N": "heuristic"}
    if text:
        for part in text.split(","):
            side, _, kind = part.partition("=")
            side = side.strip().upper()
            if side not in specs or not kind:
                raise click.UsageError(f"bad --agents entry: {part!r}")
            specs[side] = kind.strip()
    endpoint = os.environ.get(ENDPOINT_ENV)
    out = []
    for side in ("E", "N"):
        kind = specs[side]
        if kind not in ("random", "heuristic", "external"):
            raise click.UsageError(f"unknown agent kind: {kind}")
        if kind == "external" and not endpoint:
            raise click.UsageError(f"external agents need {ENDPOINT_ENV} set")
        out.append(AgentSpec(kind, endpoint if kind == "external" else None))
    return out[0], out[1]


@click.group()
def cli():
    """CivMini game-balancing toolkit."""


@cli.command()
@click.option("--method", type=click.Choice(["bo-adaptive", "bo-fixed", "random", "es"]), default="bo-adaptive")
@click.option("--iterations", "-T", default=100, show_default=True)
@click.option("--games", default=16, show_default=True, help="Games per trial for fixed-budget methods.")
@click.option("--n-min", default=16, show_default=True)
@click.option("--n-max", default=64, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--agents", default="E=heuristic,N=heuristic", show_default=True)
@click.option("--map-size", default=7, type=int, show_default=True)
@click.option("--max-turns", default=None, type=int)
@click.option("--step-sigma", default=0.1, show_default=True, help="(1+1)-ES step in normalized space.")
@click.option("--init-count", default=10, show_default=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--resume", is_flag=True, help="Continue an interrupted run log.")
def optimize(method, iterations, games, n_min, n_max, seed, agents, map_size,
             max_turns, step_sigma, init_count, workers, out, resume):
    """Search the rule space, streaming one JSON record per iteration."""
    agent_e, agent_n = _parse_agents(agents)

    def evaluate_fn(config, n_games, base_seed):
        return evaluate(config, n_games, base_seed, agent_e, agent_n, max_workers=workers)

    history = None
    if resume and Path(out).exists():
        history = load_history(out)
        click.echo(f"resuming from {len(history)} recorded iterations")
    elif Path(out).exists():
        raise ContractViolation(f"{out} exists; pass --resume to continue it")

    common = dict(map_size=map_size, max_turns=max_turns, log_path=out)
    if method == "bo-adaptive":
        history = optimizer.run_bo(
            iterations, evaluate_fn, seed, policy=BudgetPolicy(n_min, n_max),
            init_count=init_count, history=history, **common)
    elif method == "bo-fixed":
        history = optimizer.run_bo(
            iterations, evaluate_fn, seed, policy=BudgetPolicy(games, games),
            init_count=init_count, history=history, adaptive=False, fixed_n=games, **common)
    elif method == "random":
        history = optimizer.run_random_search(iterations, games, evaluate_fn, seed, **common)
    else:
        history = optimizer.run_one_plus_one_es(
            iterations, games, evaluate_fn, seed, step_sigma=step_sigma, **common)

    running = float("inf")
    for rec in history:
        running = min(running, rec.eval_result.loss)
        click.echo(f"iter {rec.iteration:3d}  N={rec.n_games:3d}  "
                   f"loss={rec.eval_result.loss:.3f}  best={running:.3f}")
    best = best_record(history)
    click.echo(f"best: iteration {best.iteration}, loss {best.eval_result.loss:.3f}")


@cli.command("evaluate")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--games", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--agents", default="E=heuristic,N=heuristic", show_default=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--out", default=None, type=click.Path(dir_okay=False))
def evaluate_cmd(config_path, games, seed, agents, workers, out):
    """Run self-play games for one configuration and report win rates."""
    config = load_config(config_path)
    agent_e, agent_n = _parse_agents(agents)
    result = evaluate(config, games, seed, agent_e, agent_n, max_workers=workers)
    click.echo(f"Empire wins | Nomads wins: "
               f"{100 * result.w_e:.0f} | {100 * result.w_n:.0f}"
               f"  (draws {100 * result.w_d:.0f}%, loss {result.loss:.3f})")
    if out:
        write_report(out, config, result)
        click.echo(f"report written to {out}")


@cli.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--render", "render_mode", type=click.Choice(["text", "svg"]), default="text")
@click.option("--agents", default="E=heuristic,N=heuristic", show_default=True)
@click.option("--out", default="rollout", type=click.Path(file_okay=False), show_default=True)
def play(config_path, seed, render_mode, agents, out):
    """Play one game and write per-turn renderings plus the transcript."""
    config = load_config(config_path)
    agent_e, agent_n = _parse_agents(agents)
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)

    result = play_game(config, agent_e, agent_n, seed, record_transcript=True)
    with (outdir / "transcript.jsonl").open("w") as fh:
        for line in result.transcript:
            fh.write(json.dumps(line, sort_keys=True) + "\n")

    # re-run the recorded plans to regenerate every intermediate state
    state = engine.new_game(config, seed)
    frames = [state]
    for line in result.transcript:
        plan = engine.TurnPlan(
            {eid: engine.action_from_dict(a) for eid, a in line["plan"].items()}
        )
        state, _ = engine.apply_turn(state, plan)
        frames.append(state)

    final = engine.outcome(state)
    annotation = ""
    if final in (Outcome.EMPIRE_WIN, Outcome.NOMADS_WIN):
        winner = "Empire" if final is Outcome.EMPIRE_WIN else "Nomads"
        conquest = any(c.hp <= 0 for c in state.cities.values())
        annotation = f"{winner} wins" + (" - city destroyed" if conquest else " on score")
    elif final is Outcome.DRAW:
        annotation = "Draw"

    for i, frame in enumerate(frames):
        caption = annotation if i == len(frames) - 1 else ""
        if render_mode == "text":
            text = engine.render_text(frame)
            if caption:
                text += f"\n{caption}"
            (outdir / f"frame_{i:03d}.txt").write_text(text + "\n")
        else:
            (outdir / f"frame_{i:03d}.svg").write_text(render_svg(frame, caption=caption))
    click.echo(f"{len(frames)} frames written to {outdir} ({annotation or 'ongoing'})")


@cli.command()
@click.argument("log_paths", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--threshold", default=0.1, show_default=True)
def report(log_paths, threshold):
    """Summarize one or more run logs: best loss, balanced checkpoint, games
    consumed, and the TTK profile of the best configuration."""
    for path in log_paths:
        history = load_history(path)
        if not history:
            raise ContractViolation(f"{path}: empty run log")
        best = best_record(history)
        checkpoint = select_best_checkpoint(history, threshold)
        click.echo(f"{path} [{history[0].method}] iterations={len(history)} "
                   f"total_games={total_games(history)}")
        click.echo(f"  best loss {best.eval_result.loss:.3f} at iteration {best.iteration} "
                   f"(N={best.n_games})")
        if checkpoint is None:
            click.echo(f"  no balanced checkpoint (loss <= {threshold})")
            chosen = best
        else:
            r = checkpoint.eval_result
            click.echo(f"  balanced checkpoint: iteration {checkpoint.iteration}, "
                       f"loss {r.loss:.3f}, split {100 * r.w_e:.0f} | {100 * r.w_n:.0f}")
            chosen = checkpoint
        ttk_n_e, ttk_e_n = engine.compute_ttk(chosen.config)
        click.echo(f"  TTK N->E: {ttk_n_e}, TTK E->N: {ttk_e_n}")
        click.echo("  config: " + json.dumps(chosen.config.to_dict(), sort_keys=True))


def main() -> int:
    try:
        cli.main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except (ContractViolation, OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except Exception as exc:  # noqa: BLE001
        click.echo(f"internal failure: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
