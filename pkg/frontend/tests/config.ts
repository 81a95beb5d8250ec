import path from "node:path";
import { fileURLToPath } from "node:url";

export const SERVICE_PORT = 8633;
export const SERVICE_BASE = `http://127.0.0.1:${SERVICE_PORT}`;

const here = path.dirname(fileURLToPath(import.meta.url));

export const REPO_ROOT = path.resolve(here, "..", "..");

export function fixturePath(name: string): string {
  return path.join(REPO_ROOT, "src", "msmkit", "fixtures", name);
}
