// Wire types for the demonstration-recording protocol.

export interface CircleConstraint {
  kind: "circle";
  label: string;
  center: [number, number];
  radius: number;
}

export interface LineConstraint {
  kind: "hline" | "vline";
  label: string;
  level: number;
  side: "below" | "above" | "left" | "right";
}

export type Constraint = CircleConstraint | LineConstraint;

export interface Geometry {
  setting: string;
  board_half_extent: number;
  hole_center: [number, number];
  hole_capture_radius: number;
  constraints: Constraint[];
  start_region: [number, number, number, number];
  max_steps: number;
}

export type DoneKind = "running" | "goal" | "timeout";

export interface StateEvent {
  event: "state";
  t: number;
  ball: [number, number];
  vel: [number, number];
  angles: [number, number];
  ang_vel: [number, number];
  reward: number;
  done: DoneKind;
  viol_active: boolean[];
  viol_event: boolean[];
  frozen: boolean;
}

export interface HelloEvent {
  event: "hello";
  setting: string;
  geometry: Geometry;
}

export interface SavedEvent {
  event: "saved";
  pairs: number;
}

export interface DiscardedEvent {
  event: "discarded";
  pairs: number;
}

export interface ErrorEvent {
  event: "error";
  msg: string;
}

export interface WarningEvent {
  event: "warning";
  msg: string;
}

export type ServerEvent =
  | HelloEvent
  | StateEvent
  | SavedEvent
  | DiscardedEvent
  | ErrorEvent
  | WarningEvent;

export type Command =
  | { cmd: "reset"; seed: number | null }
  | { cmd: "act"; action: number }
  | { cmd: "freeze"; on: boolean }
  | { cmd: "save" }
  | { cmd: "discard" };

// One line of a demonstration JSONL file (after the header).
export interface DemoRecord {
  ep: number;
  t: number;
  s: number[];
  a: number;
  r: number;
  bx: number;
  by: number;
  viol: boolean[];
}

export interface DemoHeader {
  setting: string;
  provenance: string;
  seed: number | null;
  constraints_digest: string;
}
