/**
 * Subprocess transport to the native CLI.
 *
 * The native pipeline is never reimplemented here; every call shells out to
 * the `zoomtok` command (override with the ZOOMTOK_CMD environment variable,
 * e.g. "python3 -m zoomtok") and native errors are rethrown with their
 * original error name preserved.
 */

import { spawnSync } from "node:child_process";

export class NativeError extends Error {
  constructor(name: string, message: string) {
    super(message);
    this.name = name;
  }
}

function command(): string[] {
  const override = process.env.ZOOMTOK_CMD;
  if (override && override.trim().length > 0) {
    return override.trim().split(/\s+/);
  }
  return ["python3", "-m", "zoomtok"];
}

const ERROR_LINE = /^([A-Za-z][A-Za-z0-9_]*): (.*)$/;

function extractError(stderr: string, exitCode: number): NativeError {
  const lines = stderr.trim().split(/\r?\n/);
  for (let i = lines.length - 1; i >= 0; i--) {
    const match = ERROR_LINE.exec(lines[i]);
    if (match) {
      return new NativeError(match[1], match[2]);
    }
  }
  return new NativeError("NativeError", `exit code ${exitCode}: ${stderr.trim()}`);
}

export interface CliResult {
  stdout: string;
  exitCode: number;
}

/** Run one CLI invocation; throws a NativeError on a nonzero exit. */
export function runCli(args: string[], allowExitCodes: number[] = []): CliResult {
  const [bin, ...prefix] = command();
  const proc = spawnSync(bin, [...prefix, ...args], {
    encoding: "utf8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw proc.error;
  }
  const exitCode = proc.status ?? -1;
  if (exitCode !== 0 && !allowExitCodes.includes(exitCode)) {
    throw extractError(proc.stderr ?? "", exitCode);
  }
  return { stdout: proc.stdout ?? "", exitCode };
}
