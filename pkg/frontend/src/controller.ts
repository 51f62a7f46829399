/**
 * Session flow state machine, DOM-free.
 *
 * Owns the view model the UI renders from and enforces the interaction
 * contract: at most one feedback request in flight (gestures that land
 * during a flight are dropped), decision time measured on a monotonic
 * clock from the moment the current image finished loading, and a
 * conflict response resyncs from the server instead of resubmitting.
 */

import {
  ApiError,
  FeedbackResponse,
  ServiceClient,
  SessionSnapshot,
} from "./api.js";
import { SwipeDirection } from "./gesture.js";

export type FlowStatus =
  | "idle"
  | "starting"
  | "awaiting-image"
  | "ready"
  | "submitting"
  | "finished"
  | "error";

export interface ViewModel {
  status: FlowStatus;
  sessionId: string | null;
  iteration: number;
  budget: number;
  currentImage: string | null;
  pivotImage: string | null;
  finalImage: string | null;
  errorMessage: string | null;
}

export interface ControllerHooks {
  /** Called after every view-model change. */
  render: (view: ViewModel) => void;
  /** Resolve when the image bytes are fully loaded and displayed. */
  loadImage: (url: string) => Promise<void>;
  /** Monotonic clock in milliseconds. */
  now: () => number;
}

export class SessionController {
  private view: ViewModel = {
    status: "idle",
    sessionId: null,
    iteration: 0,
    budget: 0,
    currentImage: null,
    pivotImage: null,
    finalImage: null,
    errorMessage: null,
  };
  private displayedAt: number | null = null;
  private inFlight = false;

  constructor(
    private readonly api: ServiceClient,
    private readonly hooks: ControllerHooks,
  ) {}

  get viewModel(): Readonly<ViewModel> {
    return this.view;
  }

  private update(patch: Partial<ViewModel>): void {
    this.view = { ...this.view, ...patch };
    this.hooks.render(this.view);
  }

  async start(strategy: string, dPrime: number, budget?: number): Promise<void> {
    this.update({ status: "starting", errorMessage: null });
    try {
      const resp = await this.api.createSession({
        strategy,
        d_prime: dPrime,
        ...(budget !== undefined ? { budget } : {}),
      });
      this.update({
        sessionId: resp.session_id,
        iteration: resp.iteration,
        budget: resp.budget,
        pivotImage: this.api.imageUrl(resp.image_url_previous),
      });
      await this.showCurrent(this.api.imageUrl(resp.image_url_current));
    } catch (err) {
      this.fail(err, "could not start a session");
    }
  }

  /** Rehydrate an existing session, e.g. after a page reload. */
  async resume(sessionId: string): Promise<void> {
    this.update({ status: "starting", errorMessage: null });
    try {
      const snap = await this.api.getSession(sessionId);
      this.applySnapshot(snap);
      if (snap.status === "active" && snap.image_url_current) {
        await this.showCurrent(this.api.imageUrl(snap.image_url_current));
      }
    } catch (err) {
      this.fail(err, "could not resume the session");
    }
  }

  /**
   * Handle one committed swipe. Returns true when a feedback request
   * was actually sent; gestures during a flight or before the image is
   * ready are dropped (queued-then-dropped contract).
   */
  async swipe(direction: SwipeDirection): Promise<boolean> {
    if (
      this.inFlight ||
      this.view.status !== "ready" ||
      this.view.sessionId === null ||
      this.displayedAt === null
    ) {
      return false;
    }
    const decisionTime = Math.max(this.hooks.now() - this.displayedAt, 1);
    this.inFlight = true;
    this.update({ status: "submitting" });
    try {
      const resp = await this.api.submitFeedback(this.view.sessionId, {
        current_won: direction === "right",
        iteration: this.view.iteration + 1,
        decision_time_ms: decisionTime,
      });
      await this.applyFeedback(resp);
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.resync();
        return false;
      }
      this.fail(err, "feedback failed");
      return false;
    } finally {
      this.inFlight = false;
    }
  }

  /** Re-fetch server state after a conflict; never resubmits. */
  async resync(): Promise<void> {
    if (this.view.sessionId === null) return;
    try {
      const snap = await this.api.getSession(this.view.sessionId);
      this.applySnapshot(snap);
      if (snap.status === "active" && snap.image_url_current) {
        await this.showCurrent(this.api.imageUrl(snap.image_url_current));
      }
    } catch (err) {
      this.fail(err, "could not resync the session");
    }
  }

  retry(): Promise<void> {
    if (this.view.sessionId !== null) return this.resume(this.view.sessionId);
    this.update({ status: "idle", errorMessage: null });
    return Promise.resolve();
  }

  private async applyFeedback(resp: FeedbackResponse): Promise<void> {
    if (resp.finished) {
      const finalUrl = this.api.imageUrl(resp.final_image_url ?? "");
      await this.hooks.loadImage(finalUrl);
      this.displayedAt = null;
      this.update({
        status: "finished",
        iteration: resp.iteration,
        finalImage: finalUrl,
        currentImage: null,
      });
      return;
    }
    this.update({
      iteration: resp.iteration,
      pivotImage: resp.image_url_previous
        ? this.api.imageUrl(resp.image_url_previous)
        : this.view.pivotImage,
    });
    await this.showCurrent(this.api.imageUrl(resp.next_image_url ?? ""));
  }

  private applySnapshot(snap: SessionSnapshot): void {
    this.update({
      sessionId: snap.session_id,
      iteration: snap.iteration,
      budget: snap.budget,
      pivotImage: snap.image_url_previous
        ? this.api.imageUrl(snap.image_url_previous)
        : null,
      finalImage: snap.final_image_url
        ? this.api.imageUrl(snap.final_image_url)
        : null,
      status: snap.status === "finished" ? "finished" : this.view.status,
    });
  }

  /** Swap in a new candidate only once its bytes are fully loaded. */
  private async showCurrent(url: string): Promise<void> {
    this.update({ status: "awaiting-image" });
    await this.hooks.loadImage(url);
    this.displayedAt = this.hooks.now();
    this.update({ status: "ready", currentImage: url });
  }

  private fail(err: unknown, context: string): void {
    const message =
      err instanceof ApiError
        ? `${context}: ${err.message} (HTTP ${err.status})`
        : `${context}: ${String(err)}`;
    this.update({ status: "error", errorMessage: message });
  }
}
