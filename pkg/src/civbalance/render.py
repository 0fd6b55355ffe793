"""Static SVG snapshots of game states, one file per turn."""

from __future__ import annotations

from . import engine
from .engine import Faction, GameState, UnitKind

CELL = 40

_UNIT_COLORS = {
    (Faction.EMPIRE, UnitKind.FARMER): "#7cb342",
    (Faction.EMPIRE, UnitKind.SOLDIER): "#1e88e5",
    (Faction.NOMADS, UnitKind.CAVALRY): "#e53935",
}
_CITY_COLORS = {Faction.EMPIRE: "#0d47a1", Faction.NOMADS: "#b71c1c"}


def render_svg(state: GameState, caption: str = "") -> str:
    m = state.map_size
    w, h = m * CELL, m * CELL + 24
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="#fafaf0"/>',
    ]
    for i in range(m + 1):
        parts.append(
            f'<line x1="0" y1="{i * CELL}" x2="{m * CELL}" y2="{i * CELL}" stroke="#ccc"/>'
        )
        parts.append(
            f'<line x1="{i * CELL}" y1="0" x2="{i * CELL}" y2="{m * CELL}" stroke="#ccc"/>'
        )
    for faction, city in state.cities.items():
        if city.hp > 0:
            x, y = city.pos.x * CELL, city.pos.y * CELL
            parts.append(
                f'<rect x="{x + 4}" y="{y + 4}" width="{CELL - 8}" height="{CELL - 8}" '
                f'fill="{_CITY_COLORS[faction]}"/>'
            )
            parts.append(
                f'<text x="{x + CELL / 2}" y="{y + CELL / 2 + 5}" text-anchor="middle" '
                f'fill="white" font-size="14">{city.hp:g}</text>'
            )
    for u in state.units.values():
        cx = u.pos.x * CELL + CELL / 2
        cy = u.pos.y * CELL + CELL / 2
        color = _UNIT_COLORS[(u.faction, u.kind)]
        parts.append(f'<circle cx="{cx}" cy="{cy}" r="{CELL / 2 - 6}" fill="{color}"/>')
        parts.append(
            f'<text x="{cx}" y="{cy + 4}" text-anchor="middle" fill="white" '
            f'font-size="11">{u.kind.value[0].upper()}{u.hp:g}</text>'
        )
    status = caption or (
        f"Turn {min(state.turn, state.max_turns)}/{state.max_turns} | "
        f"E {engine.score(state, Faction.EMPIRE):.1f} : "
        f"N {engine.score(state, Faction.NOMADS):.1f}"
    )
    parts.append(
        f'<text x="4" y="{m * CELL + 16}" font-size="12" fill="#333">{status}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)
