// Demonstration playback: parse a recorded JSONL file and step through the
// raw ball positions with the regular renderer; no server involved.

import type { DemoHeader, DemoRecord } from "./types";

export class DemoParseError extends Error {
  constructor(
    readonly line: number,
    detail: string,
  ) {
    super(`line ${line}: ${detail}`);
  }
}

export interface ParsedDemos {
  header: DemoHeader;
  episodes: DemoRecord[][];
}

const RECORD_FIELDS = ["ep", "t", "s", "a", "r", "bx", "by", "viol"] as const;

export function parseDemoFile(text: string): ParsedDemos {
  const lines = text.split("\n").filter((l) => l.trim() !== "");
  if (lines.length === 0) throw new DemoParseError(1, "empty file");
  let header: DemoHeader;
  try {
    header = JSON.parse(lines[0]);
  } catch {
    throw new DemoParseError(1, "header is not valid JSON");
  }
  const episodes: DemoRecord[][] = [];
  let currentEp: number | null = null;
  lines.slice(1).forEach((line, i) => {
    const lineNo = i + 2;
    let record: DemoRecord;
    try {
      record = JSON.parse(line);
    } catch {
      throw new DemoParseError(lineNo, "record is not valid JSON");
    }
    for (const field of RECORD_FIELDS) {
      if (!(field in record)) throw new DemoParseError(lineNo, `missing field ${field}`);
    }
    if (record.ep !== currentEp) {
      episodes.push([]);
      currentEp = record.ep;
    }
    episodes[episodes.length - 1].push(record);
  });
  return { header, episodes };
}

export interface PlaybackFrame {
  /** frame index within the episode: 0 .. steps (inclusive) */
  index: number;
  /** raw ball position for this frame */
  x: number;
  y: number;
  /** violation flags recorded for this state (last frame repeats the final row's) */
  viol: boolean[];
  t: number;
  action: number | null;
  reward: number | null;
}

/**
 * An episode of N records plays back as N+1 frames: every recorded
 * pre-action state plus one synthetic final frame at the last known
 * position (the recording stores states before each action).
 */
export function episodeFrames(records: DemoRecord[]): PlaybackFrame[] {
  const frames: PlaybackFrame[] = records.map((r, i) => ({
    index: i,
    x: r.bx,
    y: r.by,
    viol: r.viol,
    t: r.t,
    action: r.a,
    reward: r.r,
  }));
  const last = records[records.length - 1];
  frames.push({
    index: records.length,
    x: last.bx,
    y: last.by,
    viol: last.viol,
    t: last.t + 1,
    action: null,
    reward: null,
  });
  return frames;
}

export class PlaybackController {
  private frames: PlaybackFrame[];
  private cursor = 0;
  private playing = false;
  private progress = 0; // fractional frames carried between ticks
  speed = 1.0; // frames per tick, user controlled

  constructor(records: DemoRecord[]) {
    if (records.length === 0) throw new Error("episode has no records");
    this.frames = episodeFrames(records);
  }

  get frameCount(): number {
    return this.frames.length;
  }

  get frameIndex(): number {
    return this.cursor;
  }

  get isPlaying(): boolean {
    return this.playing;
  }

  current(): PlaybackFrame {
    return this.frames[this.cursor];
  }

  play(): void {
    this.playing = true;
  }

  pause(): void {
    this.playing = false;
  }

  stepForward(): PlaybackFrame {
    this.cursor = Math.min(this.cursor + 1, this.frames.length - 1);
    return this.current();
  }

  stepBack(): PlaybackFrame {
    this.cursor = Math.max(this.cursor - 1, 0);
    return this.current();
  }

  rewind(): void {
    this.cursor = 0;
    this.playing = false;
  }

  /** Advance by the playback speed if playing; pausing freezes the cursor.
   *  Fractional speeds accumulate across ticks (0.5 advances every 2nd tick). */
  tick(): PlaybackFrame {
    if (this.playing && this.cursor < this.frames.length - 1) {
      this.progress += this.speed;
      const advance = Math.floor(this.progress);
      if (advance > 0) {
        this.progress -= advance;
        this.cursor = Math.min(this.frames.length - 1, this.cursor + advance);
        if (this.cursor === this.frames.length - 1) this.playing = false;
      }
    }
    return this.current();
  }

  /** Trace points up to the cursor, colored by the recorded violation rows. */
  trace(): Array<{ x: number; y: number; violating: boolean }> {
    return this.frames
      .slice(0, this.cursor + 1)
      .map((f) => ({ x: f.x, y: f.y, violating: f.viol.some(Boolean) }));
  }
}
