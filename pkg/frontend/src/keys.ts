// Keyboard chord -> action id. The board takes one command per axis; the 9
// joint actions enumerate x-axis {none, up, down} x y-axis {none, left, right}
// in that nesting order, matching the server's action table.

export type Vertical = "none" | "up" | "down";
export type Horizontal = "none" | "left" | "right";

const VERTICAL_INDEX: Record<Vertical, number> = { none: 0, up: 1, down: 2 };
const HORIZONTAL_INDEX: Record<Horizontal, number> = { none: 0, left: 1, right: 2 };

export function encodeAction(vertical: Vertical, horizontal: Horizontal): number {
  return 3 * VERTICAL_INDEX[vertical] + HORIZONTAL_INDEX[horizontal];
}

export function decodeAction(action: number): [Vertical, Horizontal] {
  if (!Number.isInteger(action) || action < 0 || action > 8) {
    throw new Error(`action id out of range: ${action}`);
  }
  const verticals: Vertical[] = ["none", "up", "down"];
  const horizontals: Horizontal[] = ["none", "left", "right"];
  return [verticals[Math.floor(action / 3)], horizontals[action % 3]];
}

const VERTICAL_KEYS: Record<string, Vertical> = {
  ArrowUp: "up",
  ArrowDown: "down",
  w: "up",
  s: "down",
};

const HORIZONTAL_KEYS: Record<string, Horizontal> = {
  ArrowLeft: "left",
  ArrowRight: "right",
  a: "left",
  d: "right",
};

/** Tracks which chord keys are held; the current chord is sampled on commit. */
export class ChordTracker {
  private vertical: Vertical = "none";
  private horizontal: Horizontal = "none";

  keyDown(key: string): void {
    if (key in VERTICAL_KEYS) this.vertical = VERTICAL_KEYS[key];
    if (key in HORIZONTAL_KEYS) this.horizontal = HORIZONTAL_KEYS[key];
  }

  keyUp(key: string): void {
    if (key in VERTICAL_KEYS && VERTICAL_KEYS[key] === this.vertical) {
      this.vertical = "none";
    }
    if (key in HORIZONTAL_KEYS && HORIZONTAL_KEYS[key] === this.horizontal) {
      this.horizontal = "none";
    }
  }

  current(): { vertical: Vertical; horizontal: Horizontal; action: number } {
    return {
      vertical: this.vertical,
      horizontal: this.horizontal,
      action: encodeAction(this.vertical, this.horizontal),
    };
  }
}
