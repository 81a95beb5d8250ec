/* View state shared across pages, plus the in-flight request discipline:
   one request per page, responses matched against a token so a stale reply
   can never overwrite a newer one. */

import type { Envelope, Kind, SessionInfo } from "./api.js";

export type Page = "input" | "survival" | "idm" | "msm" | "markov";

export const PAGES: Page[] = ["input", "survival", "idm", "msm", "markov"];

export interface ViewState {
  session: SessionInfo | null;
  boundKind: Kind | null;
  page: Page;
  results: Record<string, Envelope | null>;
}

export function pageEnabled(page: Page, boundKind: Kind | null): boolean {
  if (page === "input") return true;
  if (boundKind === null) return false;
  if (page === "survival") return boundKind === "survival";
  if (page === "idm") return boundKind === "idm";
  if (page === "msm") return boundKind === "msm";
  return boundKind === "idm" || boundKind === "msm";
}

export class Store {
  state: ViewState = { session: null, boundKind: null, page: "input", results: {} };

  private tokens = new Map<string, number>();
  private inflight = new Set<string>();

  /* Start a request on behalf of a page; the returned token must be passed
     back to settle(). Starting a new request invalidates older tokens. */
  begin(key: string): number {
    const token = (this.tokens.get(key) ?? 0) + 1;
    this.tokens.set(key, token);
    this.inflight.add(key);
    return token;
  }

  /* True when this response is current and should be applied; false means
     a newer request superseded it and the caller must discard the reply. */
  settle(key: string, token: number): boolean {
    if (this.tokens.get(key) !== token) return false;
    this.inflight.delete(key);
    return true;
  }

  isPending(key: string): boolean {
    return this.inflight.has(key);
  }

  reset(): void {
    this.state = { session: null, boundKind: null, page: "input", results: {} };
    this.tokens.clear();
    this.inflight.clear();
  }
}
