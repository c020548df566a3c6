// Board renderer. Drawing goes through a minimal 2D-context interface so the
// logic is testable without a real canvas; all inputs are raw board units and
// the scale is fixed per geometry.

import type { Constraint, Geometry, StateEvent } from "./types";

export interface Canvas2DLike {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

export const COLORS = {
  background: "#101418",
  board: "#1c2228",
  wall: "#4a5560",
  constraint: "#2ecc71",
  violation: "#e74c3c",
  ball: "#ffffff",
  hole: "#27ae60",
  trace: "#2ecc71",
  traceViolation: "#e74c3c",
  hud: "#d0d8e0",
} as const;

export interface Hud {
  phase: string;
  recordedPairs: number;
  banner?: string | null;
}

export interface FrameInput {
  state: StateEvent;
  hud: Hud;
  trace?: Array<{ x: number; y: number; violating: boolean }>;
}

export class BoardRenderer {
  readonly scale: number;
  readonly size: number;

  constructor(
    private readonly ctx: Canvas2DLike,
    private readonly geometry: Geometry,
    canvasSize = 600,
    private readonly margin = 20,
  ) {
    this.size = canvasSize;
    this.scale = (canvasSize - 2 * margin) / (2 * geometry.board_half_extent);
  }

  /** Board coordinates (y up) to canvas pixels (y down). */
  toPixel(x: number, y: number): [number, number] {
    const he = this.geometry.board_half_extent;
    return [this.margin + (x + he) * this.scale, this.margin + (he - y) * this.scale];
  }

  render(frame: FrameInput): void {
    const { state, hud, trace } = frame;
    const ctx = this.ctx;
    ctx.fillStyle = COLORS.background;
    ctx.fillRect(0, 0, this.size, this.size + 60);
    this.drawBoard();
    this.drawHole();
    this.geometry.constraints.forEach((c, i) =>
      this.drawConstraint(c, state.viol_active[i] ?? false),
    );
    if (trace) this.drawTrace(trace);
    this.drawBall(state.ball[0], state.ball[1]);
    this.drawHud(state, hud);
  }

  private drawBoard(): void {
    const [x0, y0] = this.toPixel(-this.geometry.board_half_extent, this.geometry.board_half_extent);
    const side = 2 * this.geometry.board_half_extent * this.scale;
    this.ctx.fillStyle = COLORS.board;
    this.ctx.fillRect(x0, y0, side, side);
    this.ctx.strokeStyle = COLORS.wall;
    this.ctx.lineWidth = 3;
    this.ctx.strokeRect(x0, y0, side, side);
  }

  private drawHole(): void {
    const [hx, hy] = this.toPixel(...this.geometry.hole_center);
    this.ctx.fillStyle = COLORS.hole;
    this.ctx.beginPath();
    this.ctx.arc(hx, hy, this.geometry.hole_capture_radius * this.scale, 0, 2 * Math.PI);
    this.ctx.fill();
  }

  /** Violated constraints flash red for the frame, otherwise green. */
  drawConstraint(c: Constraint, violating: boolean): void {
    const ctx = this.ctx;
    const color = violating ? COLORS.violation : COLORS.constraint;
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    const he = this.geometry.board_half_extent;
    ctx.beginPath();
    if (c.kind === "circle") {
      const [cx, cy] = this.toPixel(c.center[0], c.center[1]);
      ctx.arc(cx, cy, c.radius * this.scale, 0, 2 * Math.PI);
    } else if (c.kind === "hline") {
      const [x0, y] = this.toPixel(-he, c.level);
      const [x1] = this.toPixel(he, c.level);
      ctx.moveTo(x0, y);
      ctx.lineTo(x1, y);
    } else {
      const [x, y0] = this.toPixel(c.level, he);
      const [, y1] = this.toPixel(c.level, -he);
      ctx.moveTo(x, y0);
      ctx.lineTo(x, y1);
    }
    ctx.stroke();
  }

  private drawTrace(points: Array<{ x: number; y: number; violating: boolean }>): void {
    for (const p of points) {
      const [px, py] = this.toPixel(p.x, p.y);
      this.ctx.fillStyle = p.violating ? COLORS.traceViolation : COLORS.trace;
      this.ctx.beginPath();
      this.ctx.arc(px, py, 2.5, 0, 2 * Math.PI);
      this.ctx.fill();
    }
  }

  private drawBall(x: number, y: number): void {
    const [px, py] = this.toPixel(x, y);
    this.ctx.fillStyle = COLORS.ball;
    this.ctx.beginPath();
    this.ctx.arc(px, py, 6, 0, 2 * Math.PI);
    this.ctx.fill();
  }

  private drawHud(state: StateEvent, hud: Hud): void {
    const ctx = this.ctx;
    ctx.fillStyle = COLORS.hud;
    ctx.font = "14px monospace";
    const line = `t=${state.t}  reward=${state.reward.toFixed(4)}  phase=${hud.phase}  pairs=${hud.recordedPairs}`;
    ctx.fillText(line, this.margin, this.size + 20);
    if (state.frozen) {
      ctx.fillStyle = COLORS.violation;
      ctx.fillText("FROZEN", this.margin, this.size + 40);
    }
    if (hud.banner) {
      ctx.fillStyle = COLORS.constraint;
      ctx.fillText(hud.banner, this.margin + 80, this.size + 40);
    } else if (state.done !== "running") {
      ctx.fillStyle = state.done === "goal" ? COLORS.constraint : COLORS.violation;
      ctx.fillText(state.done === "goal" ? "GOAL" : "TIMEOUT", this.margin + 80, this.size + 40);
    }
  }
}
