/**
 * DOM layer: renders the view model and translates pointer/keyboard
 * input into controller calls. The pivot image is revealed only while
 * the compare button (or the C key) is held down, keeping the default
 * layout to one image at a time.
 */

import { SessionController, ViewModel } from "./controller.js";
import { GestureTracker } from "./gesture.js";

export interface Elements {
  card: HTMLElement;
  cardImage: HTMLImageElement;
  pivotImage: HTMLImageElement;
  progress: HTMLElement;
  progressLabel: HTMLElement;
  finalPanel: HTMLElement;
  finalImage: HTMLImageElement;
  errorPanel: HTMLElement;
  errorText: HTMLElement;
  retryButton: HTMLElement;
  restartButton: HTMLElement;
  compareButton: HTMLElement;
  statusLine: HTMLElement;
}

export function grabElements(root: Document): Elements {
  const get = (id: string): HTMLElement => {
    const el = root.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el;
  };
  return {
    card: get("card"),
    cardImage: get("card-image") as HTMLImageElement,
    pivotImage: get("pivot-image") as HTMLImageElement,
    progress: get("progress-fill"),
    progressLabel: get("progress-label"),
    finalPanel: get("final-panel"),
    finalImage: get("final-image") as HTMLImageElement,
    errorPanel: get("error-panel"),
    errorText: get("error-text"),
    retryButton: get("retry-button"),
    restartButton: get("restart-button"),
    compareButton: get("compare-button"),
    statusLine: get("status-line"),
  };
}

const STATUS_TEXT: Record<ViewModel["status"], string> = {
  idle: "",
  starting: "starting session...",
  "awaiting-image": "loading image...",
  ready: "swipe right if this one is closer, left if not",
  submitting: "thinking...",
  finished: "session complete",
  error: "",
};

export function renderView(els: Elements, view: ViewModel): void {
  els.statusLine.textContent = STATUS_TEXT[view.status];
  els.errorPanel.hidden = view.status !== "error";
  els.errorText.textContent = view.errorMessage ?? "";
  els.finalPanel.hidden = view.status !== "finished";
  els.card.hidden = view.status === "finished" || view.status === "error";

  if (view.currentImage) els.cardImage.src = view.currentImage;
  if (view.pivotImage) els.pivotImage.src = view.pivotImage;
  if (view.finalImage) els.finalImage.src = view.finalImage;

  const frac = view.budget > 0 ? view.iteration / view.budget : 0;
  els.progress.style.width = `${Math.round(frac * 100)}%`;
  els.progressLabel.textContent =
    view.budget > 0 ? `${view.iteration} / ${view.budget}` : "";

  els.card.classList.toggle("ready", view.status === "ready");
}

/** Preload an image element and resolve once its bytes are decoded. */
export function imageLoader(img: HTMLImageElement) {
  return (url: string): Promise<void> =>
    new Promise((resolve, reject) => {
      const probe = new Image();
      probe.onload = () => {
        img.src = url;
        resolve();
      };
      probe.onerror = () => reject(new Error(`image failed to load: ${url}`));
      probe.src = url;
    });
}

export function wireInput(
  els: Elements,
  controller: SessionController,
  onRestart: () => void,
): void {
  let tracker: GestureTracker | null = null;

  els.card.addEventListener("pointerdown", (ev) => {
    tracker = new GestureTracker(els.card.clientWidth || 300);
    tracker.start(ev.clientX, ev.timeStamp);
    els.card.setPointerCapture(ev.pointerId);
    els.card.classList.add("dragging");
  });

  els.card.addEventListener("pointermove", (ev) => {
    if (!tracker || !tracker.isActive) return;
    const dx = tracker.move(ev.clientX, ev.timeStamp);
    els.card.style.transform = `translateX(${dx}px) rotate(${dx / 20}deg)`;
  });

  const release = (ev: PointerEvent): void => {
    if (!tracker || !tracker.isActive) return;
    const result = tracker.end(ev.clientX, ev.timeStamp);
    els.card.classList.remove("dragging");
    if (result.committed && result.direction) {
      const dir = result.direction === "right" ? 1 : -1;
      els.card.style.transform = `translateX(${dir * 600}px) rotate(${dir * 30}deg)`;
      void controller.swipe(result.direction).then(() => {
        els.card.style.transform = "";
      });
    } else {
      els.card.style.transform = "";
    }
  };
  els.card.addEventListener("pointerup", release);
  els.card.addEventListener("pointercancel", (ev) => {
    release(ev);
  });

  const showPivot = (show: boolean): void => {
    els.pivotImage.classList.toggle("revealed", show);
  };
  els.compareButton.addEventListener("pointerdown", () => showPivot(true));
  els.compareButton.addEventListener("pointerup", () => showPivot(false));
  els.compareButton.addEventListener("pointerleave", () => showPivot(false));

  document.addEventListener("keydown", (ev) => {
    if (ev.repeat) return;
    if (ev.key === "ArrowRight") void controller.swipe("right");
    else if (ev.key === "ArrowLeft") void controller.swipe("left");
    else if (ev.key.toLowerCase() === "c") showPivot(true);
  });
  document.addEventListener("keyup", (ev) => {
    if (ev.key.toLowerCase() === "c") showPivot(false);
  });

  els.retryButton.addEventListener("click", () => void controller.retry());
  els.restartButton.addEventListener("click", onRestart);
}
