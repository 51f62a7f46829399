import { describe, expect, it } from "vitest";

import { FeedbackRequest, FetchLike, ServiceClient } from "../src/api.js";
import { SessionController, ViewModel } from "../src/controller.js";

const BASE = "http://svc.test";

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/**
 * In-memory stand-in for the session service. Tracks the authoritative
 * iteration counter and rejects stale or duplicate feedback with 409,
 * like the real thing.
 */
class FakeServer {
  budget = 3;
  iteration = 0;
  finished = false;
  feedbackCalls: FeedbackRequest[] = [];
  createCalls = 0;
  getCalls = 0;
  conflictNext = false;
  failNext = false;

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    if (this.failNext) {
      this.failNext = false;
      throw new Error("socket hang up");
    }
    if (url === `${BASE}/v1/sessions` && method === "POST") {
      this.createCalls += 1;
      return json(201, {
        session_id: "sess-1",
        strategy: "banditbo",
        d_prime: 8,
        seed: 7,
        budget: this.budget,
        iteration: 0,
        image_url_previous: "/v1/images/p0.png",
        image_url_current: "/v1/images/c1.png",
      });
    }
    if (url.endsWith("/feedback") && method === "POST") {
      const body = JSON.parse(String(init?.body)) as FeedbackRequest;
      if (this.conflictNext || body.iteration !== this.iteration + 1) {
        this.conflictNext = false;
        return json(409, { error: "stale iteration" });
      }
      this.feedbackCalls.push(body);
      this.iteration += 1;
      if (this.iteration >= this.budget) {
        this.finished = true;
        return json(200, {
          finished: true,
          iteration: this.iteration,
          final_image_url: "/v1/images/final.png",
        });
      }
      return json(200, {
        finished: false,
        iteration: this.iteration,
        next_image_url: `/v1/images/c${this.iteration + 1}.png`,
        image_url_previous: `/v1/images/p${this.iteration}.png`,
      });
    }
    this.getCalls += 1;
    return json(200, {
      session_id: "sess-1",
      status: this.finished ? "finished" : "active",
      strategy: "banditbo",
      d_prime: 8,
      seed: 7,
      budget: this.budget,
      iteration: this.iteration,
      history: [],
      ...(this.finished
        ? { final_image_url: "/v1/images/final.png" }
        : {
            image_url_previous: `/v1/images/p${this.iteration}.png`,
            image_url_current: `/v1/images/c${this.iteration + 1}.png`,
          }),
    });
  };
}

interface Deferred {
  promise: Promise<void>;
  resolve: () => void;
}

function deferred(): Deferred {
  let resolve!: () => void;
  const promise = new Promise<void>((res) => {
    resolve = res;
  });
  return { promise, resolve };
}

function harness(server: FakeServer) {
  const api = new ServiceClient(BASE, server.fetch);
  const loaded: string[] = [];
  const gates: Deferred[] = [];
  const statuses: ViewModel["status"][] = [];
  const clock = { t: 1000 };
  const controller = new SessionController(api, {
    render: (view) => statuses.push(view.status),
    loadImage: (url) => {
      loaded.push(url);
      const gate = gates.shift();
      return gate ? gate.promise : Promise.resolve();
    },
    now: () => clock.t,
  });
  return { controller, loaded, gates, statuses, clock };
}

describe("SessionController.start", () => {
  it("loads both images and lands in ready", async () => {
    const server = new FakeServer();
    const h = harness(server);
    await h.controller.start("banditbo", 8, 3);
    const view = h.controller.viewModel;
    expect(view.status).toBe("ready");
    expect(view.sessionId).toBe("sess-1");
    expect(view.budget).toBe(3);
    expect(view.iteration).toBe(0);
    expect(view.currentImage).toBe(`${BASE}/v1/images/c1.png`);
    expect(view.pivotImage).toBe(`${BASE}/v1/images/p0.png`);
    expect(h.loaded).toEqual([`${BASE}/v1/images/c1.png`]);
    expect(h.statuses).toContain("starting");
    expect(h.statuses).toContain("awaiting-image");
  });

  it("reports an error when the service is unreachable", async () => {
    const server = new FakeServer();
    server.failNext = true;
    const h = harness(server);
    await h.controller.start("banditbo", 8);
    const view = h.controller.viewModel;
    expect(view.status).toBe("error");
    expect(view.errorMessage).toContain("could not start a session");
  });
});

describe("SessionController.swipe", () => {
  it("sends one feedback per committed swipe with the right payload", async () => {
    const server = new FakeServer();
    const h = harness(server);
    await h.controller.start("banditbo", 8, 3);

    h.clock.t = 1250;
    expect(await h.controller.swipe("right")).toBe(true);
    expect(server.feedbackCalls).toHaveLength(1);
    expect(server.feedbackCalls[0]).toEqual({
      current_won: true,
      iteration: 1,
      decision_time_ms: 250,
    });
    expect(h.controller.viewModel.iteration).toBe(1);
    expect(h.controller.viewModel.status).toBe("ready");
  });

  it("maps a left swipe to current_won false", async () => {
    const server = new FakeServer();
    const h = harness(server);
    await h.controller.start("banditbo", 8, 3);
    await h.controller.swipe("left");
    expect(server.feedbackCalls[0].current_won).toBe(false);
  });

  it("clamps the decision time to at least 1 ms", async () => {
    const server = new FakeServer();
    const h = harness(server);
    await h.controller.start("banditbo", 8, 3);
    // clock did not advance since the image was displayed
    await h.controller.swipe("right");
    expect(server.feedbackCalls[0].decision_time_ms).toBe(1);
  });

  it("drops the second of two rapid swipes", async () => {
    const server = new FakeServer();
    const h = harness(server);
    await h.controller.start("banditbo", 8, 3);

    const first = h.controller.swipe("right");
    const second = h.controller.swipe("left");
    expect(await first).toBe(true);
    expect(await second).toBe(false);
    expect(server.feedbackCalls).toHaveLength(1);
    expect(server.iteration).toBe(1);
  });

  it("ignores swipes while the next image is still loading", async () => {
    const server = new FakeServer();
    const h = harness(server);
    const gate = deferred();
    h.gates.push(gate);

    const starting = h.controller.start("banditbo", 8, 3);
    for (let i = 0; i < 20 && h.controller.viewModel.status !== "awaiting-image"; i++) {
      await Promise.resolve();
    }
    expect(h.controller.viewModel.status).toBe("awaiting-image");
    expect(await h.controller.swipe("right")).toBe(false);
    expect(server.feedbackCalls).toHaveLength(0);

    gate.resolve();
    await starting;
    expect(h.controller.viewModel.status).toBe("ready");
    expect(await h.controller.swipe("right")).toBe(true);
  });

  it("resyncs on conflict instead of resubmitting", async () => {
    const server = new FakeServer();
    const h = harness(server);
    await h.controller.start("banditbo", 8, 3);

    server.conflictNext = true;
    expect(await h.controller.swipe("right")).toBe(false);
    expect(server.feedbackCalls).toHaveLength(0);
    expect(server.getCalls).toBe(1);
    expect(h.controller.viewModel.status).toBe("ready");

    // recovered state lines up with the server, so the next swipe works
    expect(await h.controller.swipe("right")).toBe(true);
    expect(server.feedbackCalls).toHaveLength(1);
  });

  it("finishes the session and shows the final image", async () => {
    const server = new FakeServer();
    const h = harness(server);
    await h.controller.start("banditbo", 8, 3);
    await h.controller.swipe("right");
    await h.controller.swipe("left");
    await h.controller.swipe("right");

    const view = h.controller.viewModel;
    expect(view.status).toBe("finished");
    expect(view.iteration).toBe(3);
    expect(view.finalImage).toBe(`${BASE}/v1/images/final.png`);
    expect(server.feedbackCalls.map((c) => c.iteration)).toEqual([1, 2, 3]);
    for (const call of server.feedbackCalls) {
      expect(call.decision_time_ms).toBeGreaterThanOrEqual(1);
    }
    // no further swipes once finished
    expect(await h.controller.swipe("right")).toBe(false);
    expect(server.feedbackCalls).toHaveLength(3);
  });

  it("surfaces non-conflict server failures as errors", async () => {
    const server = new FakeServer();
    const h = harness(server);
    await h.controller.start("banditbo", 8, 3);
    server.failNext = true;
    expect(await h.controller.swipe("right")).toBe(false);
    expect(h.controller.viewModel.status).toBe("error");
    expect(h.controller.viewModel.errorMessage).toContain("feedback failed");
  });
});

describe("SessionController.resume", () => {
  it("rehydrates an active session from a snapshot", async () => {
    const server = new FakeServer();
    server.iteration = 1;
    const h = harness(server);
    await h.controller.resume("sess-1");
    const view = h.controller.viewModel;
    expect(view.status).toBe("ready");
    expect(view.iteration).toBe(1);
    expect(view.budget).toBe(3);
    expect(view.currentImage).toBe(`${BASE}/v1/images/c2.png`);
    expect(view.pivotImage).toBe(`${BASE}/v1/images/p1.png`);

    await h.controller.swipe("right");
    expect(server.feedbackCalls[0].iteration).toBe(2);
  });

  it("rehydrates a finished session straight to the final screen", async () => {
    const server = new FakeServer();
    server.iteration = 3;
    server.finished = true;
    const h = harness(server);
    await h.controller.resume("sess-1");
    const view = h.controller.viewModel;
    expect(view.status).toBe("finished");
    expect(view.finalImage).toBe(`${BASE}/v1/images/final.png`);
  });

  it("retry after an error resumes the known session", async () => {
    const server = new FakeServer();
    const h = harness(server);
    await h.controller.start("banditbo", 8, 3);
    server.failNext = true;
    await h.controller.swipe("right");
    expect(h.controller.viewModel.status).toBe("error");

    await h.controller.retry();
    expect(h.controller.viewModel.status).toBe("ready");
    expect(server.getCalls).toBe(1);
  });
});
