import { PassThrough } from "node:stream";

import { describe, expect, it } from "vitest";

import type { CompletionClient } from "../src/llm.js";
import { ACTION_TYPES, PROTOCOL_VERSION } from "../src/protocol.js";
import { handleLine, serveStdio } from "../src/serve.js";

function makeRequest(overrides: Record<string, unknown> = {}) {
  return {
    protocol_version: PROTOCOL_VERSION,
    game_id: "game-0",
    faction: "empire",
    prompt: "You command the Empire faction. Choose actions for your units.",
    legal_actions: {
      empire_farmer_0: [{ action_type: "GATHER" }, { action_type: "PASS" }],
    },
    turn: 1,
    ...overrides,
  };
}

/** Deterministic stand-in for a model: replies from a fixed script, cycling. */
class ScriptedClient implements CompletionClient {
  calls = 0;
  constructor(private readonly script: string[]) {}

  complete(): Promise<string> {
    const reply = this.script[this.calls % this.script.length];
    this.calls += 1;
    return Promise.resolve(reply);
  }
}

class FailingClient implements CompletionClient {
  complete(): Promise<string> {
    return Promise.reject(new Error("API unavailable"));
  }
}

const EXAMPLE_DOCUMENT = {
  empire_farmer_0: { action_type: "GATHER" },
  empire_city: {
    action_type: "PRODUCE_UNIT",
    produce_unit_type: "soldier",
    to: { x: 1, y: 2 },
  },
};

describe("handleLine", () => {
  it("produces zero protocol violations over 100 varied request cycles", async () => {
    const script = [
      JSON.stringify(EXAMPLE_DOCUMENT),
      `Sure! Here is my plan:\n\`\`\`json\n${JSON.stringify(EXAMPLE_DOCUMENT)}\n\`\`\``,
      '{"empire_farmer_0": {"action_type": "MOVE", "to": {"x": 3, "y": 3}}}',
      "I refuse to answer in JSON today.",
      '{"empire_farmer_0": {"action_type": "FLY"}, "empire_soldier_0": {"action_type": "PASS"}}',
      "{not even close to JSON",
      '{"empire_farmer_0": {"action_type": "BATTLE", "target": {"x": "bad", "y": 0}}}',
    ];
    const client = new ScriptedClient(script);
    for (let i = 0; i < 100; i++) {
      const request = makeRequest({ game_id: `game-${i}`, turn: (i % 40) + 1 });
      const response = await handleLine(JSON.stringify(request), client);
      expect(response.game_id).toBe(request.game_id);
      expect(response.turn).toBe(request.turn);
      expect(response.error).toBeUndefined();
      expect(typeof response.actions).toBe("object");
      for (const [entityId, action] of Object.entries(response.actions)) {
        expect(typeof entityId).toBe("string");
        expect(ACTION_TYPES).toContain(action.action_type);
        for (const coord of [action.to, action.target]) {
          if (coord !== undefined) {
            expect(Number.isInteger(coord.x)).toBe(true);
            expect(Number.isInteger(coord.y)).toBe(true);
          }
        }
      }
      // each response must survive a JSON round trip unchanged
      expect(JSON.parse(JSON.stringify(response))).toEqual(response);
    }
    expect(client.calls).toBe(100);
  });

  it("recovers the documented example plan from a prose-wrapped completion", async () => {
    const client = new ScriptedClient([
      `After weighing the economy, I will do this:\n${JSON.stringify(EXAMPLE_DOCUMENT)}\nThat secures the farm.`,
    ]);
    const response = await handleLine(JSON.stringify(makeRequest()), client);
    expect(response.actions).toEqual(EXAMPLE_DOCUMENT);
  });

  it("degrades garbage completions to an empty action document", async () => {
    for (const garbage of ["", "PASS PASS PASS", "[1,2,3]", "{{{{", "null"]) {
      const client = new ScriptedClient([garbage]);
      const response = await handleLine(JSON.stringify(makeRequest()), client);
      expect(response.actions).toEqual({});
      expect(response.error).toBeUndefined();
    }
  });

  it("returns empty actions when the completion call fails", async () => {
    const response = await handleLine(
      JSON.stringify(makeRequest()),
      new FailingClient(),
    );
    expect(response.actions).toEqual({});
    expect(response.error).toBeUndefined();
  });

  it("answers a malformed request with an error echoing game_id and turn", async () => {
    const bad = { game_id: "game-7", turn: 4, prompt: 12 };
    const response = await handleLine(JSON.stringify(bad), new FailingClient());
    expect(response.game_id).toBe("game-7");
    expect(response.turn).toBe(4);
    expect(response.actions).toEqual({});
    expect(response.error).toBeTruthy();
  });

  it("answers a non-JSON line with an error response", async () => {
    const response = await handleLine("this is not json", new FailingClient());
    expect(response.actions).toEqual({});
    expect(response.error).toBeTruthy();
  });
});

describe("serveStdio", () => {
  it("writes exactly one response line per non-blank request line", async () => {
    const input = new PassThrough();
    const output = new PassThrough();
    const client = new ScriptedClient([JSON.stringify(EXAMPLE_DOCUMENT)]);
    const done = serveStdio(client, input, output);
    input.write(JSON.stringify(makeRequest({ game_id: "g1", turn: 1 })) + "\n");
    input.write("\n");
    input.write("garbage line\n");
    input.write(JSON.stringify(makeRequest({ game_id: "g2", turn: 2 })) + "\n");
    input.end();
    await done;
    const lines = output
      .read()
      .toString()
      .trim()
      .split("\n")
      .map((line: string) => JSON.parse(line));
    expect(lines).toHaveLength(3);
    expect(lines[0].game_id).toBe("g1");
    expect(lines[0].actions).toEqual(EXAMPLE_DOCUMENT);
    expect(lines[1].error).toBeTruthy();
    expect(lines[2].game_id).toBe("g2");
    expect(lines[2].turn).toBe(2);
  });
});
