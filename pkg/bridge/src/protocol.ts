/**
 * Wire protocol shared with the game engine: one JSON object per line on
 * standard streams. Requests carry a prompt plus machine-readable legal
 * actions; responses carry a sanitized action document.
 */

import { z } from "zod";

export const PROTOCOL_VERSION = 1;

export const ACTION_TYPES = [
  "GATHER",
  "MOVE",
  "BATTLE",
  "PRODUCE_RESOURCE",
  "PRODUCE_UNIT",
  "PASS",
] as const;

export type ActionType = (typeof ACTION_TYPES)[number];

const CoordinateSchema = z.object({ x: z.number().int(), y: z.number().int() });

export const RequestSchema = z.object({
  protocol_version: z.number().int(),
  game_id: z.string(),
  faction: z.string(),
  prompt: z.string(),
  legal_actions: z.record(z.array(z.record(z.unknown()))),
  turn: z.number().int(),
});

export type ProtocolRequest = z.infer<typeof RequestSchema>;

export interface Action {
  action_type: ActionType;
  to?: { x: number; y: number };
  target?: { x: number; y: number };
  produce_unit_type?: string;
}

export interface ProtocolResponse {
  game_id: string;
  turn: number;
  actions: Record<string, Action>;
  error?: string;
}

const EntrySchema = z.object({
  action_type: z.enum(ACTION_TYPES),
  to: CoordinateSchema.optional(),
  target: CoordinateSchema.optional(),
  produce_unit_type: z.string().optional(),
});

/**
 * Entry-wise sanitization of a model-produced action document: keep every
 * entry that names one of the six action types with well-formed fields, drop
 * everything else. Dropping is per entry, never per document, so one bad
 * entry cannot void an otherwise usable reply (the engine substitutes PASS
 * for missing entities anyway).
 */
export function sanitizeActions(value: unknown): Record<string, Action> {
  const actions: Record<string, Action> = {};
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    return actions;
  }
  for (const [entityId, entry] of Object.entries(value)) {
    const parsed = EntrySchema.safeParse(entry);
    if (!parsed.success) {
      continue;
    }
    const action: Action = { action_type: parsed.data.action_type };
    if (parsed.data.to !== undefined) action.to = parsed.data.to;
    if (parsed.data.target !== undefined) action.target = parsed.data.target;
    if (parsed.data.produce_unit_type !== undefined) {
      action.produce_unit_type = parsed.data.produce_unit_type;
    }
    actions[entityId] = action;
  }
  return actions;
}

export function makeResponse(
  gameId: string,
  turn: number,
  actions: Record<string, Action>,
): ProtocolResponse {
  return { game_id: gameId, turn, actions };
}

export function errorResponse(
  gameId: string | null,
  turn: number | null,
  message: string,
): ProtocolResponse {
  return {
    game_id: gameId ?? "",
    turn: turn ?? 0,
    actions: {},
    error: message,
  };
}
