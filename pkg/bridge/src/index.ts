#!/usr/bin/env node
/**
 * Entry point: configure from the environment and serve the wire protocol on
 * standard streams.
 */

import { loadConfig } from "./config.js";
import { HttpLlmClient } from "./llm.js";
import { serveStdio } from "./serve.js";

export * from "./config.js";
export * from "./extract.js";
export * from "./llm.js";
export * from "./protocol.js";
export * from "./serve.js";

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;

if (invokedDirectly) {
  const config = loadConfig();
  serveStdio(new HttpLlmClient(config)).catch((error) => {
    console.error(`bridge stream failed: ${error}`);
    process.exit(1);
  });
}
