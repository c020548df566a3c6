// Command gating: every committed chord becomes exactly one act command, and
// nothing is sent while the session is frozen, finished, or idle.

import type { DoneKind } from "./types";

export type Phase = "idle" | "recording" | "frozen" | "finished";

export class InputGate {
  phase: Phase = "idle";
  recordedPairs = 0;

  onReset(): void {
    this.phase = "recording";
    this.recordedPairs = 0;
  }

  onStateEvent(done: DoneKind, frozen: boolean, counted: boolean): void {
    if (counted) this.recordedPairs += 1;
    if (done !== "running") {
      this.phase = "finished";
    } else {
      this.phase = frozen ? "frozen" : "recording";
    }
  }

  onSaved(): void {
    this.phase = "idle";
    this.recordedPairs = 0;
  }

  onDiscarded(): void {
    this.phase = "idle";
    this.recordedPairs = 0;
  }

  /** One commit -> at most one act command; none while frozen/finished/idle. */
  shouldSendAct(): boolean {
    return this.phase === "recording";
  }

  canToggleFreeze(): boolean {
    return this.phase === "recording" || this.phase === "frozen";
  }

  canSave(): boolean {
    return this.phase === "finished" && this.recordedPairs > 0;
  }
}
