/**
 * Pointer-drag interpretation for swipe cards.
 *
 * A drag commits as a swipe when the release point is displaced at
 * least COMMIT_FRACTION of the card width, or when the release
 * velocity (measured over the trailing VELOCITY_WINDOW_MS of samples)
 * exceeds FLICK_VELOCITY. Anything else snaps back. All arithmetic is
 * pure so it can be unit-tested without a DOM.
 */

export const COMMIT_FRACTION = 0.3;
export const FLICK_VELOCITY = 0.6; // px per ms
export const VELOCITY_WINDOW_MS = 90;

export type SwipeDirection = "left" | "right";

export interface GestureResult {
  committed: boolean;
  direction: SwipeDirection | null;
  deltaX: number;
  velocity: number;
}

interface Sample {
  x: number;
  t: number;
}

export class GestureTracker {
  private samples: Sample[] = [];
  private active = false;

  constructor(private readonly cardWidth: number) {
    if (cardWidth <= 0) throw new Error("cardWidth must be positive");
  }

  get isActive(): boolean {
    return this.active;
  }

  start(x: number, t: number): void {
    this.samples = [{ x, t }];
    this.active = true;
  }

  /** Current horizontal displacement, for live card transforms. */
  move(x: number, t: number): number {
    if (!this.active) return 0;
    this.samples.push({ x, t });
    return x - this.samples[0].x;
  }

  end(x: number, t: number): GestureResult {
    if (!this.active) {
      return { committed: false, direction: null, deltaX: 0, velocity: 0 };
    }
    this.samples.push({ x, t });
    this.active = false;

    const deltaX = x - this.samples[0].x;
    const velocity = this.trailingVelocity();
    const byDistance = Math.abs(deltaX) >= COMMIT_FRACTION * this.cardWidth;
    const byFlick =
      Math.abs(velocity) >= FLICK_VELOCITY &&
      Math.sign(velocity) === Math.sign(deltaX) &&
      deltaX !== 0;
    const committed = byDistance || byFlick;
    const direction: SwipeDirection | null = committed
      ? deltaX > 0
        ? "right"
        : "left"
      : null;
    return { committed, direction, deltaX, velocity };
  }

  cancel(): void {
    this.active = false;
    this.samples = [];
  }

  private trailingVelocity(): number {
    const last = this.samples[this.samples.length - 1];
    // earliest sample still inside the trailing window
    let first = this.samples[0];
    for (const s of this.samples) {
      if (last.t - s.t <= VELOCITY_WINDOW_MS) {
        first = s;
        break;
      }
    }
    const dt = last.t - first.t;
    if (dt <= 0) return 0;
    return (last.x - first.x) / dt;
  }
}
