/**
 * Bridge configuration from the environment. Credentials are never read from
 * files or flags: the config only names the environment variable holding the
 * API key, and the client resolves it at call time.
 */

export interface BridgeConfig {
  apiUrl: string;
  model: string;
  temperature: number;
  maxRetries: number;
  timeoutMs: number;
  credentialEnv: string;
}

export function loadConfig(env: NodeJS.ProcessEnv = process.env): BridgeConfig {
  const apiUrl = env.CIVBRIDGE_API_URL;
  const model = env.CIVBRIDGE_MODEL;
  if (!apiUrl || !model) {
    throw new Error("CIVBRIDGE_API_URL and CIVBRIDGE_MODEL must be set");
  }
  const temperature = Number(env.CIVBRIDGE_TEMPERATURE ?? "0.7");
  const maxRetries = Number(env.CIVBRIDGE_MAX_RETRIES ?? "2");
  const timeoutMs = Number(env.CIVBRIDGE_TIMEOUT_S ?? "30") * 1000;
  const credentialEnv = env.CIVBRIDGE_API_KEY_ENV ?? "CIVBRIDGE_API_KEY";
  if (!Number.isFinite(temperature)) {
    throw new Error("CIVBRIDGE_TEMPERATURE must be a number");
  }
  if (!Number.isInteger(maxRetries) || maxRetries < 0) {
    throw new Error("CIVBRIDGE_MAX_RETRIES must be an integer >= 0");
  }
  if (!Number.isFinite(timeoutMs) || timeoutMs <= 0) {
    throw new Error("CIVBRIDGE_TIMEOUT_S must be a positive number");
  }
  return { apiUrl, model, temperature, maxRetries, timeoutMs, credentialEnv };
}
