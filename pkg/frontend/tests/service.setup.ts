/* Spawns the real analysis service once for the whole test run. */

import { spawn } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import path from "node:path";
import { REPO_ROOT, SERVICE_BASE, SERVICE_PORT } from "./config.js";

async function healthy(): Promise<boolean> {
  try {
    const resp = await fetch(`${SERVICE_BASE}/health`);
    return resp.ok;
  } catch {
    return false;
  }
}

export default async function setup(): Promise<() => Promise<void>> {
  if (await healthy()) {
    return async () => {};
  }
  const proc: ChildProcess = spawn(
    "python3",
    [path.join(REPO_ROOT, "scripts", "run_service.py")],
    {
      cwd: REPO_ROOT,
      env: {
        ...process.env,
        MSMKIT_HOST: "127.0.0.1",
        MSMKIT_PORT: String(SERVICE_PORT),
      },
      stdio: "ignore",
    },
  );
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    if (await healthy()) {
      return async () => {
        proc.kill("SIGTERM");
      };
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  proc.kill("SIGTERM");
  throw new Error(`analysis service did not come up on ${SERVICE_BASE}`);
}
