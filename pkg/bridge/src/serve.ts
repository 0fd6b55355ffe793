/**
 * Line-delimited JSON server: one request line in, exactly one response line
 * out, for every line, no matter how malformed the input or how broken the
 * model reply. The stream never crashes; failures degrade to empty actions
 * (which the engine interprets as all-PASS).
 */

import { createInterface } from "node:readline";
import type { Readable, Writable } from "node:stream";

import { extractActionObject } from "./extract.js";
import type { CompletionClient } from "./llm.js";
import { INSTRUCTION_SUFFIX } from "./llm.js";
import {
  errorResponse,
  makeResponse,
  ProtocolResponse,
  RequestSchema,
  sanitizeActions,
} from "./protocol.js";

export async function handleLine(
  line: string,
  client: CompletionClient,
): Promise<ProtocolResponse> {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    return errorResponse(null, null, "request line is not valid JSON");
  }
  const request = RequestSchema.safeParse(raw);
  if (!request.success) {
    // best-effort echo of identifiers so the caller can correlate the error
    const partial = raw as { game_id?: unknown; turn?: unknown };
    return errorResponse(
      typeof partial?.game_id === "string" ? partial.game_id : null,
      typeof partial?.turn === "number" ? partial.turn : null,
      "request failed validation",
    );
  }
  const { game_id, turn, prompt } = request.data;
  let completion: string;
  try {
    completion = await client.complete(prompt + INSTRUCTION_SUFFIX);
  } catch {
    return makeResponse(game_id, turn, {});
  }
  const document = extractActionObject(completion);
  return makeResponse(game_id, turn, sanitizeActions(document));
}

export async function serveStdio(
  client: CompletionClient,
  input: Readable = process.stdin,
  output: Writable = process.stdout,
): Promise<void> {
  const lines = createInterface({ input, crlfDelay: Infinity });
  for await (const line of lines) {
    if (!line.trim()) {
      continue;
    }
    const response = await handleLine(line, client);
    output.write(JSON.stringify(response) + "\n");
  }
}
