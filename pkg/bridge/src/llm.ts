/**
 * Minimal chat-completion client over fetch: OpenAI-style request body,
 * exponential backoff on retryable failures, hard timeout per attempt.
 */

import type { BridgeConfig } from "./config.js";

export interface CompletionClient {
  complete(prompt: string): Promise<string>;
}

/** Appended to every prompt so the model emits a parseable document. */
export const INSTRUCTION_SUFFIX =
  "\n\nReply with exactly one JSON object and nothing else.";

export class HttpLlmClient implements CompletionClient {
  constructor(private readonly config: BridgeConfig) {}

  async complete(prompt: string): Promise<string> {
    const { apiUrl, model, temperature, maxRetries, timeoutMs, credentialEnv } =
      this.config;
    const apiKey = process.env[credentialEnv];
    const headers: Record<string, string> = {
      "Content-Type": "application/json",
    };
    if (apiKey) {
      headers.Authorization = `Bearer ${apiKey}`;
    }
    let lastError: unknown = null;
    for (let attempt = 0; attempt <= maxRetries; attempt++) {
      if (attempt > 0) {
        await sleep(500 * 2 ** (attempt - 1));
      }
      const controller = new AbortController();
      const timer = setTimeout(() => controller.abort(), timeoutMs);
      try {
        const response = await fetch(apiUrl, {
          method: "POST",
          headers,
          body: JSON.stringify({
            model,
            temperature,
            messages: [{ role: "user", content: prompt }],
          }),
          signal: controller.signal,
        });
        if (!response.ok) {
          throw new Error(`API returned HTTP ${response.status}`);
        }
        const body = (await response.json()) as {
          choices?: { message?: { content?: string } }[];
        };
        const content = body.choices?.[0]?.message?.content;
        if (typeof content !== "string") {
          throw new Error("completion missing message content");
        }
        return content;
      } catch (error) {
        lastError = error;
      } finally {
        clearTimeout(timer);
      }
    }
    throw lastError instanceof Error
      ? lastError
      : new Error(String(lastError ?? "completion failed"));
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
