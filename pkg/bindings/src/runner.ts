/** Synchronous CLI invocation with per-call scratch directories.
 *
 * Every binding call runs one `contiseg` subprocess against freshly written
 * temp files and removes them afterwards, so concurrent calls from multiple
 * threads or workers never share state.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { BindingError } from "./errors.js";

/** Command used to launch the CLI. Override the interpreter with the
 * CONTISEG_PYTHON environment variable when `python3` is not on PATH. */
export function cliCommand(): { command: string; prefix: string[] } {
  const python = process.env.CONTISEG_PYTHON ?? "python3";
  return { command: python, prefix: ["-m", "contiseg.cli"] };
}

export function runCli(args: string[]): string {
  const { command, prefix } = cliCommand();
  const proc = spawnSync(command, [...prefix, ...args], {
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw new BindingError(`failed to launch ${command}: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    throw new BindingError(
      `contiseg ${args[0]} exited with code ${proc.status}: ${proc.stderr.trim()}`,
      { exitCode: proc.status ?? undefined, stderr: proc.stderr },
    );
  }
  return proc.stdout;
}

export function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "contiseg-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
