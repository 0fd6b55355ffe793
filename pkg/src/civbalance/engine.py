"""Deterministic CivMini engine: state, legality, turn resolution, combat,
production, victory, and scoring.

All operations are pure state -> state transforms; a GameState is never
mutated in place by the public API.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum

from .rulespace import FARMER_HP, ContractViolation, RuleConfig


class Faction(Enum):
    EMPIRE = "empire"
    NOMADS = "nomads"

    @property
    def opponent(self) -> "Faction":
        return Faction.NOMADS if self is Faction.EMPIRE else Faction.EMPIRE


class UnitKind(Enum):
    FARMER = "farmer"
    SOLDIER = "soldier"
    CAVALRY = "cavalry"


# Faction-legal unit kinds; Farmers/Soldiers are Empire-only, Cavalry Nomads-only.
KINDS_BY_FACTION = {
    Faction.EMPIRE: (UnitKind.FARMER, UnitKind.SOLDIER),
    Faction.NOMADS: (UnitKind.CAVALRY,),
}

MOVE_ALLOWANCE = {UnitKind.FARMER: 1, UnitKind.SOLDIER: 1, UnitKind.CAVALRY: 2}


@dataclass(frozen=True, order=True)
class Position:
    x: int
    y: int

    def manhattan(self, other: "Position") -> int:
        return abs(self.x - other.x) + abs(self.y - other.y)

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y}


GATHER = "GATHER"
MOVE = "MOVE"
BATTLE = "BATTLE"
PRODUCE_RESOURCE = "PRODUCE_RESOURCE"
PRODUCE_UNIT = "PRODUCE_UNIT"
PASS = "PASS"

ACTION_TYPES = (GATHER, MOVE, BATTLE, PRODUCE_RESOURCE, PRODUCE_UNIT, PASS)


@dataclass(frozen=True, order=True)
class Action:
    action_type: str
    to: Position | None = None
    target: Position | None = None
    produce_unit_type: UnitKind | None = None

    def to_dict(self) -> dict:
        out: dict = {"action_type": self.action_type}
        if self.to is not None:
            out["to"] = self.to.to_dict()
        if self.target is not None:
            out["target"] = self.target.to_dict()
        if self.produce_unit_type is not None:
            out["produce_unit_type"] = self.produce_unit_type.value
        return out


PASS_ACTION = Action(PASS)


@dataclass
class Unit:
    id: str
    faction: Faction
    kind: UnitKind
    hp: float
    pos: Position


@dataclass
class City:
    faction: Faction
    pos: Position
    hp: float


@dataclass(frozen=True)
class TurnPlan:
    """One action per entity of the acting faction. Missing entities PASS."""

    actions: dict[str, Action] = field(default_factory=dict)


@dataclass
class TurnEvents:
    """Ordered record of what happened while resolving one faction's turn."""

    turn: int
    faction: Faction
    events: list[dict] = field(default_factory=list)

    @property
    def substitutions(self) -> int:
        return sum(1 for e in self.events if e.get("substituted"))


class Outcome(Enum):
    ONGOING = "ongoing"
    EMPIRE_WIN = "empire_win"
    NOMADS_WIN = "nomads_win"
    DRAW = "draw"


WINNER_OF = {Faction.EMPIRE: Outcome.EMPIRE_WIN, Faction.NOMADS: Outcome.NOMADS_WIN}


@dataclass
class GameState:
    config: RuleConfig
    rng_seed: int
    turn: int
    acting: Faction
    units: dict[str, Unit]
    cities: dict[Faction, City]
    resources: dict[Faction, float]
    battles_won: dict[Faction, int]
    spawn_counters: dict[str, int]

    @property
    def map_size(self) -> int:
        return self.config.map_size

    @property
    def max_turns(self) -> int:
        return self.config.max_turns

    def city_id(self, faction: Faction) -> str:
        return f"{faction.value}_city"


def city_max_hp(config: RuleConfig, faction: Faction) -> float:
    # Cities share HP (and damage) with their faction's combat unit.
    return (
        config.empire_soldier_hp if faction is Faction.EMPIRE else config.nomads_cavalry_hp
    )


def faction_damage(config: RuleConfig, faction: Faction) -> float:
    return config.empire_damage if faction is Faction.EMPIRE else config.nomads_damage


def unit_max_hp(config: RuleConfig, kind: UnitKind) -> float:
    if kind is UnitKind.FARMER:
        return FARMER_HP
    if kind is UnitKind.SOLDIER:
        return config.empire_soldier_hp
    return config.nomads_cavalry_hp


def unit_cost(config: RuleConfig, faction: Faction) -> float:
    return config.empire_unit_cost if faction is Faction.EMPIRE else config.nomads_unit_cost


# Starting roster, as offsets from each faction's city anchor.
_START_UNITS = {
    Faction.EMPIRE: [
        (UnitKind.FARMER, (-1, 0)),
        (UnitKind.FARMER, (0, -1)),
        (UnitKind.SOLDIER, (1, 0)),
    ],
    Faction.NOMADS: [
        (UnitKind.CAVALRY, (-1, 0)),
        (UnitKind.CAVALRY, (0, -1)),
    ],
}


def city_anchor(map_size: int, faction: Faction) -> Position:
    if faction is Faction.EMPIRE:
        return Position(1, 1)
    return Position(map_size - 2, map_size - 2)


def new_game(config: RuleConfig, seed: int) -> GameState:
    """Fresh game: cities at their anchors, starting units beside them,
    both factions holding the configured initial resources, Empire to act."""
    units: dict[str, Unit] = {}
    cities: dict[Faction, City] = {}
    counters: dict[str, int] = {}
    for faction in (Faction.EMPIRE, Faction.NOMADS):
        anchor = city_anchor(config.map_size, faction)
        cities[faction] = City(faction, anchor, city_max_hp(config, faction))
        for kind, (dx, dy) in _START_UNITS[faction]:
            key = f"{faction.value}_{kind.value}"
            idx = counters.get(key, 0)
            counters[key] = idx + 1
            uid = f"{key}_{idx}"
            units[uid] = Unit(
                uid, faction, kind, unit_max_hp(config, kind), Position(anchor.x + dx, anchor.y + dy)
            )
    return GameState(
        config=config,
        rng_seed=seed,
        turn=1,
        acting=Faction.EMPIRE,
        units=units,
        cities=cities,
        resources={f: float(config.initial_resources) for f in Faction},
        battles_won={f: 0 for f in Faction},
        spawn_counters=counters,
    )


def occupied_positions(state: GameState) -> dict[Position, str]:
    occ = {u.pos: uid for uid, u in state.units.items()}
    for faction, city in state.cities.items():
        if city.hp > 0:
            occ[city.pos] = state.city_id(faction)
    return occ


def _in_bounds(state: GameState, pos: Position) -> bool:
    return 0 <= pos.x < state.map_size and 0 <= pos.y < state.map_size


def _neighbors(state: GameState, pos: Position) -> list[Position]:
    cand = [
        Position(pos.x + 1, pos.y),
        Position(pos.x - 1, pos.y),
        Position(pos.x, pos.y + 1),
        Position(pos.x, pos.y - 1),
    ]
    return [p for p in cand if _in_bounds(state, p)]


def _entity_lookup(state: GameState, entity_id: str):
    """Returns ('unit', Unit) or ('city', City) for a live entity."""
    if entity_id in state.units:
        return "unit", state.units[entity_id]
    for faction in Faction:
        if entity_id == state.city_id(faction) and state.cities[faction].hp > 0:
            return "city", state.cities[faction]
    raise KeyError(f"unknown or dead entity: {entity_id}")


def entity_order(state: GameState, faction: Faction) -> list[str]:
    """Canonical within-turn resolution order: units ascending by id, city last."""
    ids = sorted(uid for uid, u in state.units.items() if u.faction is faction)
    if state.cities[faction].hp > 0:
        ids.append(state.city_id(faction))
    return ids


def legal_actions(state: GameState, entity_id: str) -> list[Action]:
    """Exactly the actions apply_turn would accept for this entity, in a
    deterministic order. PASS is always last and always present."""
    etype, ent = _entity_lookup(state, entity_id)
    occ = occupied_positions(state)
    actions: list[Action] = []
    faction = ent.faction
    enemy = faction.opponent

    if etype == "unit":
        if ent.kind is UnitKind.FARMER:
            actions.append(Action(GATHER))
        allowance = MOVE_ALLOWANCE[ent.kind]
        dests = []
        for dx in range(-allowance, allowance + 1):
            for dy in range(-allowance, allowance + 1):
                d = abs(dx) + abs(dy)
                if 0 < d <= allowance:
                    p = Position(ent.pos.x + dx, ent.pos.y + dy)
                    if _in_bounds(state, p) and p not in occ:
                        dests.append(p)
        actions.extend(Action(MOVE, to=p) for p in sorted(dests))
        if ent.kind in (UnitKind.SOLDIER, UnitKind.CAVALRY):
            targets = []
            for p in _neighbors(state, ent.pos):
                holder = occ.get(p)
                if holder is None:
                    continue
                if holder in state.units and state.units[holder].faction is enemy:
                    targets.append(p)
                elif holder == state.city_id(enemy):
                    targets.append(p)
            actions.extend(Action(BATTLE, target=p) for p in sorted(targets))
    else:  # city
        for p in _neighbors(state, ent.pos):
            holder = occ.get(p)
            if holder is None:
                continue
            if holder in state.units and state.units[holder].faction is enemy:
                actions.append(Action(BATTLE, target=p))
        actions.sort()
        if faction is Faction.EMPIRE:
            actions.append(Action(PRODUCE_RESOURCE))
        if state.resources[faction] >= unit_cost(state.config, faction):
            free = sorted(p for p in _neighbors(state, ent.pos) if p not in occ)
            for kind in KINDS_BY_FACTION[faction]:
                actions.extend(Action(PRODUCE_UNIT, to=p, produce_unit_type=kind) for p in free)

    actions.append(PASS_ACTION)
    return actions


def outcome(state: GameState) -> Outcome:
    for faction in Faction:
        if state.cities[faction].hp <= 0:
            return WINNER_OF[faction.opponent]
    if state.turn > state.max_turns:
        # Compare after rounding to one decimal: weights are tenth-precision
        # and counters integral, so ties are exact in decimal arithmetic.
        s_e = round(score(state, Faction.EMPIRE), 1)
        s_n = round(score(state, Faction.NOMADS), 1)
        if s_e > s_n:
            return Outcome.EMPIRE_WIN
        if s_n > s_e:
            return Outcome.NOMADS_WIN
        return Outcome.DRAW
    return Outcome.ONGOING


def score(state: GameState, faction: Faction) -> float:
    """Weighted sum of remaining resources, battles won, and surviving units
    (the city itself does not count as a surviving unit)."""
    cfg = state.config
    surviving = sum(1 for u in state.units.values() if u.faction is faction)
    return (
        cfg.score_per_resource * state.resources[faction]
        + cfg.score_per_battle * state.battles_won[faction]
        + cfg.score_per_unit * surviving
    )


def compute_ttk(config: RuleConfig) -> tuple[int, int]:
    """(attacks for Nomads to kill an Empire soldier,
    attacks for Empire to kill a Nomad cavalry)."""
    ttk_n_to_e = math.ceil(config.empire_soldier_hp / config.nomads_damage)
    ttk_e_to_n = math.ceil(config.nomads_cavalry_hp / config.empire_damage)
    return ttk_n_to_e, ttk_e_to_n


def _spawn_unit(state: GameState, faction: Faction, kind: UnitKind, pos: Position) -> Unit:
    key = f"{faction.value}_{kind.value}"
    idx = state.spawn_counters.get(key, 0)
    state.spawn_counters[key] = idx + 1
    uid = f"{key}_{idx}"
    unit = Unit(uid, faction, kind, unit_max_hp(state.config, kind), pos)
    state.units[uid] = unit
    return unit


def apply_turn(state: GameState, plan: TurnPlan) -> tuple[GameState, TurnEvents]:
    """Resolve one faction's turn. Entities act in canonical order; every
    illegal or missing action is replaced by PASS and logged. Conquest ends
    the game immediately, skipping any remaining actions."""
    if outcome(state) is not Outcome.ONGOING:
        raise ContractViolation("game is over; no further turns accepted")
    acting = state.acting
    order = entity_order(state, acting)
    for eid in plan.actions:
        if eid not in order:
            raise ContractViolation(f"plan contains non-acting entity: {eid}")

    st = copy.deepcopy(state)
    events = TurnEvents(turn=st.turn, faction=acting)
    cfg = st.config

    for eid in order:
        submitted = plan.actions.get(eid, PASS_ACTION)
        action = submitted
        substituted = False
        if action not in legal_actions(st, eid):
            action = PASS_ACTION
            substituted = True
        ev: dict = {
            "entity": eid,
            "submitted": submitted.to_dict(),
            "applied": action.to_dict(),
            "substituted": substituted,
        }
        kind = action.action_type
        if kind == GATHER:
            st.resources[Faction.EMPIRE] += cfg.empire_farmer_gather
            ev["resource_delta"] = cfg.empire_farmer_gather
        elif kind == MOVE:
            st.units[eid].pos = action.to
        elif kind == BATTLE:
            dmg = faction_damage(cfg, acting)
            occ = occupied_positions(st)
            target_id = occ[action.target]
            ev["damage"] = dmg
            ev["target"] = target_id
            if target_id in st.units:
                target = st.units[target_id]
                target.hp -= dmg
                if target.hp <= 0:
                    del st.units[target_id]
                    st.battles_won[acting] += 1
                    ev["killed"] = target_id
                    if acting is Faction.NOMADS:
                        st.resources[acting] += cfg.nomads_kill_gain
                        ev["resource_delta"] = cfg.nomads_kill_gain
            else:
                city = st.cities[acting.opponent]
                city.hp -= dmg
                if city.hp <= 0:
                    ev["killed"] = target_id
                    events.events.append(ev)
                    break  # conquest: game over, remaining actions void
        elif kind == PRODUCE_RESOURCE:
            st.resources[Faction.EMPIRE] += cfg.empire_farmer_gather
            ev["resource_delta"] = cfg.empire_farmer_gather
        elif kind == PRODUCE_UNIT:
            cost = unit_cost(cfg, acting)
            st.resources[acting] -= cost
            unit = _spawn_unit(st, acting, action.produce_unit_type, action.to)
            ev["resource_delta"] = -cost
            ev["spawned"] = unit.id
        events.events.append(ev)

    st.acting = acting.opponent
    if acting is Faction.NOMADS:
        st.turn += 1
    return st, events


# ---------------------------------------------------------------------------
# Serialization, digests, and text rendering


def state_to_dict(state: GameState) -> dict:
    return {
        "config": state.config.to_dict(),
        "rng_seed": state.rng_seed,
        "turn": state.turn,
        "acting": state.acting.value,
        "units": [
            {
                "id": u.id,
                "faction": u.faction.value,
                "kind": u.kind.value,
                "hp": u.hp,
                "pos": u.pos.to_dict(),
            }
            for _, u in sorted(state.units.items())
        ],
        "cities": {
            f.value: {"pos": c.pos.to_dict(), "hp": c.hp} for f, c in sorted(state.cities.items(), key=lambda kv: kv[0].value)
        },
        "resources": {f.value: state.resources[f] for f in Faction},
        "battles_won": {f.value: state.battles_won[f] for f in Faction},
        "spawn_counters": dict(sorted(state.spawn_counters.items())),
    }


def state_digest(state: GameState) -> str:
    payload = json.dumps(state_to_dict(state), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


_GLYPHS = {
    (Faction.EMPIRE, UnitKind.FARMER): "f",
    (Faction.EMPIRE, UnitKind.SOLDIER): "s",
    (Faction.NOMADS, UnitKind.CAVALRY): "c",
}
_CITY_GLYPHS = {Faction.EMPIRE: "E", Faction.NOMADS: "N"}


def render_text(state: GameState) -> str:
    m = state.map_size
    grid = [["." for _ in range(m)] for _ in range(m)]
    for faction, city in state.cities.items():
        if city.hp > 0:
            grid[city.pos.y][city.pos.x] = _CITY_GLYPHS[faction]
    for u in state.units.values():
        grid[u.pos.y][u.pos.x] = _GLYPHS[(u.faction, u.kind)]
    lines = [" ".join(row) for row in grid]
    lines.append(
        f"Turn {min(state.turn, state.max_turns)}/{state.max_turns} | acting: {state.acting.value}"
        f" | Empire res={state.resources[Faction.EMPIRE]:g}"
        f" score={score(state, Faction.EMPIRE):.1f}"
        f" | Nomads res={state.resources[Faction.NOMADS]:g}"
        f" score={score(state, Faction.NOMADS):.1f}"
    )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Transcripts and replay


def action_from_dict(data: dict) -> Action:
    atype = data["action_type"]
    if atype not in ACTION_TYPES:
        raise ValueError(f"unknown action_type: {atype}")
    to = data.get("to")
    target = data.get("target")
    kind = data.get("produce_unit_type")
    return Action(
        atype,
        to=Position(int(to["x"]), int(to["y"])) if to else None,
        target=Position(int(target["x"]), int(target["y"])) if target else None,
        produce_unit_type=UnitKind(kind) if kind else None,
    )


def transcript_line(state_after: GameState, plan: TurnPlan, events: TurnEvents) -> dict:
    return {
        "turn": events.turn,
        "faction": events.faction.value,
        "plan": {eid: a.to_dict() for eid, a in sorted(plan.actions.items())},
        "events": events.events,
        "digest": state_digest(state_after),
    }


def replay_transcript(config: RuleConfig, seed: int, lines: list[dict]) -> bool:
    """Re-run the recorded plans from a fresh game and verify every per-turn
    state digest matches. Returns True iff the transcript is bit-exact."""
    state = new_game(config, seed)
    for line in lines:
        plan = TurnPlan({eid: action_from_dict(a) for eid, a in line["plan"].items()})
        state, _ = apply_turn(state, plan)
        if state_digest(state) != line["digest"]:
            return False
    return True
