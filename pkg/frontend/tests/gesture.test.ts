import { describe, expect, it } from "vitest";

import {
  COMMIT_FRACTION,
  FLICK_VELOCITY,
  GestureTracker,
} from "../src/gesture.js";

const WIDTH = 300;

function drag(points: Array<[number, number]>): ReturnType<GestureTracker["end"]> {
  const tracker = new GestureTracker(WIDTH);
  const [x0, t0] = points[0];
  tracker.start(x0, t0);
  for (const [x, t] of points.slice(1, -1)) tracker.move(x, t);
  const [xn, tn] = points[points.length - 1];
  return tracker.end(xn, tn);
}

describe("GestureTracker", () => {
  it("rejects a non-positive card width", () => {
    expect(() => new GestureTracker(0)).toThrow();
  });

  it("commits a slow drag past the distance threshold", () => {
    const px = COMMIT_FRACTION * WIDTH + 1;
    const result = drag([
      [100, 0],
      [100 + px / 2, 400],
      [100 + px, 800],
    ]);
    expect(result.committed).toBe(true);
    expect(result.direction).toBe("right");
    expect(result.deltaX).toBeCloseTo(px);
  });

  it("commits leftward drags with direction left", () => {
    const result = drag([
      [200, 0],
      [200 - WIDTH, 500],
    ]);
    expect(result.committed).toBe(true);
    expect(result.direction).toBe("left");
  });

  it("snaps back when the drag is short and slow", () => {
    const result = drag([
      [100, 0],
      [120, 300],
    ]);
    expect(result.committed).toBe(false);
    expect(result.direction).toBeNull();
  });

  it("commits a short but fast flick", () => {
    const px = 40; // well under the distance threshold
    const result = drag([
      [100, 0],
      [100 + px, 40],
    ]);
    expect(Math.abs(px / 40)).toBeGreaterThanOrEqual(FLICK_VELOCITY);
    expect(result.committed).toBe(true);
    expect(result.direction).toBe("right");
  });

  it("measures velocity over the trailing window only", () => {
    // fast start, then the pointer parks before release
    const result = drag([
      [100, 0],
      [160, 30],
      [160, 400],
      [160, 500],
    ]);
    expect(Math.abs(result.velocity)).toBeLessThan(FLICK_VELOCITY);
    expect(result.committed).toBe(false);
  });

  it("does not commit when the flick direction fights the displacement", () => {
    // net displacement right, but the release velocity points left
    const result = drag([
      [100, 0],
      [180, 200],
      [150, 230],
    ]);
    expect(result.deltaX).toBeGreaterThan(0);
    expect(result.velocity).toBeLessThan(0);
    expect(result.committed).toBe(false);
  });

  it("reports deltaX live during the drag", () => {
    const tracker = new GestureTracker(WIDTH);
    tracker.start(50, 0);
    expect(tracker.move(80, 16)).toBe(30);
    expect(tracker.move(20, 32)).toBe(-30);
  });

  it("is inert after cancel", () => {
    const tracker = new GestureTracker(WIDTH);
    tracker.start(50, 0);
    tracker.cancel();
    expect(tracker.isActive).toBe(false);
    expect(tracker.move(500, 10)).toBe(0);
    const result = tracker.end(500, 20);
    expect(result.committed).toBe(false);
  });

  it("zero-duration release reports zero velocity", () => {
    const tracker = new GestureTracker(WIDTH);
    tracker.start(100, 5);
    const result = tracker.end(100, 5);
    expect(result.velocity).toBe(0);
    expect(result.committed).toBe(false);
  });
});
