import { ServiceClient } from "./api.js";
import { buildApp } from "./pages.js";
import { Store } from "./state.js";

declare global {
  interface Window {
    MSMKIT_BASE?: string;
  }
}

function start() {
  const root = document.getElementById("app");
  if (!root) return;
  const base = window.MSMKIT_BASE ?? "";
  buildApp(document, root as HTMLElement, new ServiceClient(base), new Store());
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", start);
} else {
  start();
}
