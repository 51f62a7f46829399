/**
 * Entry point: reads configuration from the URL, builds the client and
 * controller, and wires them to the page.
 *
 * Query parameters:
 *   service   base URL of the swipe service (default: same origin)
 *   session   existing session id to resume
 *   strategy  banditbo | simplebo | random (default banditbo)
 *   dprime    search dimensionality (default 8)
 *   budget    number of comparisons (server default when omitted)
 */

import { ServiceClient } from "./api.js";
import { SessionController } from "./controller.js";
import { grabElements, imageLoader, renderView, wireInput } from "./ui.js";

function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("service") ?? "";
  const api = new ServiceClient(base, (input, init) => fetch(input, init));
  const els = grabElements(document);

  const controller = new SessionController(api, {
    render: (view) => renderView(els, view),
    loadImage: imageLoader(els.cardImage),
    now: () => performance.now(),
  });

  const start = (): void => {
    const strategy = params.get("strategy") ?? "banditbo";
    const dPrime = Number(params.get("dprime") ?? "8");
    const budgetRaw = params.get("budget");
    const budget = budgetRaw === null ? undefined : Number(budgetRaw);
    void controller.start(strategy, dPrime, budget);
  };

  wireInput(els, controller, start);

  const existing = params.get("session");
  if (existing) void controller.resume(existing);
  else start();
}

document.addEventListener("DOMContentLoaded", boot);
