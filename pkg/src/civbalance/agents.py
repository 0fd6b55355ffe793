"""Decision-makers for both factions: seeded random, scripted heuristics, and
an external-agent protocol (natural-language state in, JSON action document
out), plus TF-IDF rulebook retrieval."""

from __future__ import annotations

import json
import logging
import math
import random
import re
import subprocess
import threading
from dataclasses import dataclass, field

from . import engine
from .engine import (
    Action,
    BATTLE,
    Faction,
    GATHER,
    GameState,
    MOVE,
    PASS_ACTION,
    PRODUCE_RESOURCE,
    PRODUCE_UNIT,
    TurnPlan,
    UnitKind,
)
from .rulespace import RuleConfig

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1


@dataclass
class Observation:
    """Everything the acting faction sees: the full state (the game is fully
    observable) plus the legal-action set for each of its entities, keyed in
    canonical resolution order."""

    state: GameState
    faction: Faction
    legal: dict[str, list[Action]]


def observe(state: GameState) -> Observation:
    faction = state.acting
    legal = {
        eid: engine.legal_actions(state, eid) for eid in engine.entity_order(state, faction)
    }
    return Observation(state=state, faction=faction, legal=legal)


# ---------------------------------------------------------------------------
# State description

_STRATEGY_NOTES = {
    Faction.EMPIRE: (
        "Empire strategy: keep Farmers gathering every turn, screen them with "
        "Soldiers, and defend your city. Produce Soldiers when you can afford "
        "them; resources and surviving units score points at the turn limit."
    ),
    Faction.NOMADS: (
        "Nomads strategy: you cannot gather passively, so stay aggressive. "
        "Use Cavalry mobility (2 cells per turn) to hunt enemy units for kill "
        "resources and to threaten the Empire city for a conquest win."
    ),
}


def describe_state(state: GameState, faction: Faction, config: RuleConfig) -> str:
    """Deterministic natural-language description of the situation for one
    faction: turn counter, own forces, enemy positions, a strategy note, and
    per-entity legal actions."""
    enemy = faction.opponent
    lines = [f"Turn {min(state.turn, state.max_turns)} of {state.max_turns}."]

    own_city = state.cities[faction]
    lines.append(
        f"Your faction: {faction.value.capitalize()}. "
        f"Resources: {state.resources[faction]:g}. "
        f"Battles won: {state.battles_won[faction]}. "
        f"City at ({own_city.pos.x},{own_city.pos.y}) with {own_city.hp:g} HP."
    )
    for uid in sorted(state.units):
        u = state.units[uid]
        if u.faction is faction:
            lines.append(f"  {uid}: {u.kind.value} at ({u.pos.x},{u.pos.y}), {u.hp:g} HP")

    enemy_city = state.cities[enemy]
    lines.append(
        f"Enemy ({enemy.value.capitalize()}) city at "
        f"({enemy_city.pos.x},{enemy_city.pos.y}) with {enemy_city.hp:g} HP. Enemy units:"
    )
    enemy_units = [u for _, u in sorted(state.units.items()) if u.faction is enemy]
    if enemy_units:
        for u in enemy_units:
            lines.append(f"  {u.id}: {u.kind.value} at ({u.pos.x},{u.pos.y}), {u.hp:g} HP")
    else:
        lines.append("  (none)")

    lines.append(_STRATEGY_NOTES[faction])

    lines.append("Legal actions per entity:")
    for eid in engine.entity_order(state, faction):
        acts = engine.legal_actions(state, eid)
        lines.append(f"  {eid}: " + "; ".join(_action_brief(a) for a in acts))
    return "\n".join(lines)


def _action_brief(a: Action) -> str:
    if a.action_type == MOVE:
        return f"MOVE to ({a.to.x},{a.to.y})"
    if a.action_type == BATTLE:
        return f"BATTLE target ({a.target.x},{a.target.y})"
    if a.action_type == PRODUCE_UNIT:
        return f"PRODUCE_UNIT {a.produce_unit_type.value} to ({a.to.x},{a.to.y})"
    return a.action_type


# ---------------------------------------------------------------------------
# Rulebook retrieval (TF-IDF + cosine)

_TOKEN_RE = re.compile(r"[0-9a-z]+")


def _tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class RulebookIndex:
    """TF-IDF index over rulebook passages. Weights use raw term frequency
    times a smoothed idf: log((1+P)/(1+df)) + 1."""

    def __init__(self, passages: list[str]):
        if not passages:
            raise ValueError("rulebook must contain at least one passage")
        self.passages = list(passages)
        n = len(passages)
        tfs = [self._tf(p) for p in passages]
        df: dict[str, int] = {}
        for tf in tfs:
            for term in tf:
                df[term] = df.get(term, 0) + 1
        self.idf = {t: math.log((1 + n) / (1 + d)) + 1.0 for t, d in df.items()}
        self.vectors = [self._weigh(tf) for tf in tfs]

    @staticmethod
    def _tf(text: str) -> dict[str, int]:
        tf: dict[str, int] = {}
        for tok in _tokenize(text):
            tf[tok] = tf.get(tok, 0) + 1
        return tf

    def _weigh(self, tf: dict[str, int]) -> dict[str, float]:
        return {t: c * self.idf.get(t, 1.0) for t, c in tf.items()}

    def query_vector(self, query: str) -> dict[str, float]:
        return self._weigh(self._tf(query))


def cosine(a: dict[str, float], b: dict[str, float]) -> float:
    # zero-norm convention: similarity 0 when either vector is zero
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    dot = sum(v * b[t] for t, v in a.items() if t in b)
    return dot / (na * nb)


def retrieve_rules(query: str, index: RulebookIndex, k: int) -> list[str]:
    """The k passages most cosine-similar to the query; ties (including the
    all-zero empty-query case) fall back to passage order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    qv = index.query_vector(query)
    scored = [(-cosine(qv, pv), i) for i, pv in enumerate(index.vectors)]
    scored.sort()
    return [index.passages[i] for _, i in scored[:k]]


def default_rulebook(config: RuleConfig) -> list[str]:
    """Natural-language rule passages for the current configuration."""
    c = config
    return [
        f"The game is played on a {c.map_size}x{c.map_size} grid for up to "
        f"{c.max_turns} turns. Each faction starts with a city and a few units, "
        f"and both factions begin with {c.initial_resources:g} resources.",
        "Each unit of the current player performs exactly one action per turn. "
        "Only one entity may occupy a tile; stacking is never allowed. Cities "
        "are immobile and can be attacked.",
        f"Farmers belong to the Empire, have 5 HP, and can GATHER, adding "
        f"{c.empire_farmer_gather:g} resources per turn. Farmers cannot battle.",
        f"Soldiers belong to the Empire, have {c.empire_soldier_hp:g} HP, deal "
        f"{c.empire_damage:g} damage per attack, and move 1 cell per turn.",
        f"Cavalry belong to the Nomads, have {c.nomads_cavalry_hp:g} HP, deal "
        f"{c.nomads_damage:g} damage per attack, and can move up to 2 cells per "
        f"turn in Manhattan distance.",
        f"Nomads cannot gather resources passively; they gain "
        f"{c.nomads_kill_gain:g} resources for each enemy unit they kill.",
        "BATTLE attacks an adjacent enemy unit or city (Manhattan distance 1). "
        "Soldiers, Cavalry, and cities can battle. There is no retaliation "
        "damage. A city reduced to 0 HP loses the game immediately (conquest).",
        f"Cities spawn new units in adjacent empty cells with PRODUCE_UNIT. "
        f"An Empire unit costs {c.empire_unit_cost:g} resources and a Nomad "
        f"cavalry costs {c.nomads_unit_cost:g}. The Empire city can also "
        f"PRODUCE_RESOURCE, adding {c.empire_farmer_gather:g} resources.",
        f"If no city falls before the turn limit, the higher score wins. Score "
        f"= {c.score_per_resource:g} per resource + {c.score_per_battle:g} per "
        f"battle won + {c.score_per_unit:g} per surviving unit. Equal scores "
        f"are a draw.",
    ]


# ---------------------------------------------------------------------------
# Action-document parsing (untrusted input, total fallback to PASS)

_DECODER = json.JSONDecoder()


def extract_json_object(text: str):
    """First syntactically valid top-level JSON object embedded in the text,
    or None."""
    for i, ch in enumerate(text):
        if ch != "{":
            continue
        try:
            obj, _ = _DECODER.raw_decode(text[i:])
        except ValueError:
            continue
        if isinstance(obj, dict):
            return obj
    return None


def parse_action_document(text: str, observation: Observation) -> tuple[TurnPlan, int]:
    """Turn untrusted agent output into a legal TurnPlan. Every malformed
    entry, unknown entity, or illegal action degrades to PASS; the second
    return value counts those fallbacks. Never raises."""
    fallbacks = 0
    actions: dict[str, Action] = {}
    doc = extract_json_object(text if isinstance(text, str) else "")
    if doc is None:
        doc = {}
        fallbacks += 1

    for eid in observation.legal:
        entry = doc.get(eid)
        action = PASS_ACTION
        if entry is None:
            if eid in doc:
                fallbacks += 1
        else:
            try:
                parsed = engine.action_from_dict(entry)
            except Exception:
                fallbacks += 1
            else:
                if parsed in observation.legal[eid]:
                    action = parsed
                else:
                    fallbacks += 1
        actions[eid] = action

    # unknown entity keys are dropped but counted
    fallbacks += sum(1 for k in doc if k not in observation.legal)
    return TurnPlan(actions), fallbacks


# ---------------------------------------------------------------------------
# Scripted agents


def random_agent_plan(observation: Observation, rng: random.Random) -> TurnPlan:
    """Uniform choice from each entity's legal set, in canonical order."""
    return TurnPlan(
        {eid: rng.choice(acts) for eid, acts in observation.legal.items()}
    )


def _toward(pos, goal, moves, rng: random.Random) -> Action | None:
    """The MOVE from `moves` that most reduces Manhattan distance to goal,
    if any strictly improves; ties broken by seeded draw."""
    best = None
    best_d = pos.manhattan(goal)
    for a in moves:
        d = a.to.manhattan(goal)
        if d < best_d:
            best, best_d = [a], d
        elif best is not None and d == best_d:
            best.append(a)
    return rng.choice(best) if best else None


def heuristic_agent_plan(observation: Observation, rng: random.Random) -> TurnPlan:
    """Fixed faction playstyles: Empire farms and defends, Nomads rush.
    Deterministic given (observation, seed)."""
    state = observation.state
    faction = observation.faction
    enemy = faction.opponent
    plan: dict[str, Action] = {}

    enemy_units = [u for _, u in sorted(state.units.items()) if u.faction is enemy]
    own_city = state.cities[faction]
    enemy_city = state.cities[enemy]

    for eid, acts in observation.legal.items():
        battles = [a for a in acts if a.action_type == BATTLE]
        moves = [a for a in acts if a.action_type == MOVE]
        produces = [a for a in acts if a.action_type == PRODUCE_UNIT]
        chosen = PASS_ACTION

        if eid == state.city_id(faction):
            if faction is Faction.EMPIRE:
                soldier = [a for a in produces if a.produce_unit_type is UnitKind.SOLDIER]
                if soldier:
                    chosen = rng.choice(soldier)
                else:
                    chosen = Action(PRODUCE_RESOURCE)
            else:
                chosen = rng.choice(produces) if produces else PASS_ACTION
        else:
            unit = state.units[eid]
            if unit.kind is UnitKind.FARMER:
                chosen = Action(GATHER)
            elif battles:
                chosen = rng.choice(battles)
            elif faction is Faction.EMPIRE:
                # intercept the enemy unit closest to our city
                if enemy_units:
                    threat = min(
                        enemy_units, key=lambda u: (u.pos.manhattan(own_city.pos), u.id)
                    )
                    step = _toward(unit.pos, threat.pos, moves, rng)
                    if step is not None:
                        chosen = step
            else:
                step = _toward(unit.pos, enemy_city.pos, moves, rng)
                if step is not None:
                    chosen = step
        plan[eid] = chosen
    return TurnPlan(plan)


# ---------------------------------------------------------------------------
# External-agent protocol


def legal_actions_payload(observation: Observation) -> dict:
    return {eid: [a.to_dict() for a in acts] for eid, acts in observation.legal.items()}


_ROLE_PREAMBLE = (
    "You are the {faction} player in CivMini, a two-faction turn-based "
    "strategy game on a grid. Decide one action for every one of your "
    "entities this turn."
)

_FORMAT_EXAMPLES = (
    "Respond with a single JSON object mapping each of your entity ids to an "
    "action, for example:\n"
    '{"empire_farmer_0": {"action_type": "GATHER"},\n'
    ' "empire_soldier_0": {"action_type": "BATTLE", "target": {"x": 2, "y": 2}},\n'
    ' "empire_city": {"action_type": "PRODUCE_UNIT", '
    '"produce_unit_type": "soldier", "to": {"x": 1, "y": 2}}}\n'
    "Valid action_type values: GATHER, MOVE, BATTLE, PRODUCE_RESOURCE, "
    "PRODUCE_UNIT, PASS."
)

PROMPT_TEMPLATE_VERSION = 1


def build_prompt(observation: Observation, index: RulebookIndex, k: int = 4) -> str:
    """Fixed assembly order (role preamble, retrieved rules, state description,
    format examples) so external runs stay comparable across sessions."""
    state = observation.state
    desc = describe_state(state, observation.faction, state.config)
    rules = retrieve_rules(desc, index, k)
    return "\n\n".join(
        [
            _ROLE_PREAMBLE.format(faction=observation.faction.value.capitalize()),
            "Relevant rules:\n" + "\n".join(f"- {r}" for r in rules),
            desc,
            _FORMAT_EXAMPLES,
        ]
    )


def protocol_request(observation: Observation, game_id: str, prompt: str) -> dict:
    return {
        "protocol_version": PROTOCOL_VERSION,
        "game_id": game_id,
        "faction": observation.faction.value,
        "prompt": prompt,
        "legal_actions": legal_actions_payload(observation),
        "turn": observation.state.turn,
    }


class ExternalEndpoint:
    """Transport to an external agent: either a subprocess speaking
    line-delimited JSON over its standard streams, or an HTTP POST URL
    carrying the same JSON bodies."""

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    @property
    def is_http(self) -> bool:
        return self.endpoint.startswith("http://") or self.endpoint.startswith("https://")

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.endpoint,
                shell=True,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        return self._proc

    def exchange(self, request: dict) -> dict | None:
        """One request/response cycle; None on any transport failure."""
        try:
            if self.is_http:
                import urllib.request

                req = urllib.request.Request(
                    self.endpoint,
                    data=json.dumps(request).encode(),
                    headers={"Content-Type": "application/json"},
                )
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    return json.loads(resp.read().decode())
            with self._lock:
                proc = self._ensure_proc()
                proc.stdin.write(json.dumps(request) + "\n")
                proc.stdin.flush()
                line: list[str | None] = [None]

                def _read():
                    line[0] = proc.stdout.readline()

                t = threading.Thread(target=_read, daemon=True)
                t.start()
                t.join(self.timeout)
                if t.is_alive() or not line[0]:
                    proc.kill()
                    self._proc = None
                    return None
                return json.loads(line[0])
        except Exception as exc:
            log.warning("external agent transport failure: %s", exc)
            return None

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.kill()
        self._proc = None


def external_agent_plan(
    observation: Observation,
    endpoint: ExternalEndpoint,
    index: RulebookIndex,
    game_id: str,
) -> tuple[TurnPlan, int]:
    """Query the external agent; any failure degrades to an all-PASS plan."""
    prompt = build_prompt(observation, index)
    reply = endpoint.exchange(protocol_request(observation, game_id, prompt))
    if reply is None:
        log.warning("external agent failed for %s turn %d; passing", game_id, observation.state.turn)
        return TurnPlan({eid: PASS_ACTION for eid in observation.legal}), len(observation.legal)
    actions = reply.get("actions", {}) if isinstance(reply, dict) else {}
    return parse_action_document(json.dumps(actions), observation)


# ---------------------------------------------------------------------------
# Agent objects (uniform interface for the evaluator)


@dataclass
class Agent:
    """A per-game decision-maker. kind is one of 'random', 'heuristic',
    'external'; seeds are explicit, never ambient."""

    kind: str
    seed: int = 0
    endpoint: ExternalEndpoint | None = None
    game_id: str = ""
    substitutions: int = 0
    _rng: random.Random = field(init=False, repr=False)
    _index: RulebookIndex | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("random", "heuristic", "external"):
            raise ValueError(f"unknown agent kind: {self.kind}")
        if self.kind == "external" and self.endpoint is None:
            raise ValueError("external agent requires an endpoint")
        self._rng = random.Random(self.seed)

    def plan(self, observation: Observation) -> TurnPlan:
        if self.kind == "random":
            return random_agent_plan(observation, self._rng)
        if self.kind == "heuristic":
            return heuristic_agent_plan(observation, self._rng)
        if self._index is None:
            self._index = RulebookIndex(default_rulebook(observation.state.config))
        plan, fallbacks = external_agent_plan(
            observation, self.endpoint, self._index, self.game_id
        )
        self.substitutions += fallbacks
        return plan
