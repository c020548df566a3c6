// Browser bootstrap: live recording against the session server, plus local
// playback of saved demonstration files. Hold arrows/WASD to form the chord;
// Space commits one timestep. F toggles freeze, R resets, Enter saves,
// Backspace discards. No physics run client side.

import { SessionClient, fetchGeometry } from "./client";
import { InputGate } from "./gate";
import { ChordTracker } from "./keys";
import { episodeFrames, parseDemoFile, PlaybackController } from "./playback";
import { BoardRenderer, type Canvas2DLike } from "./render";
import type { Geometry, ServerEvent, StateEvent } from "./types";

function wsUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/ws`;
}

function statusLine(text: string): void {
  const el = document.getElementById("status");
  if (el) el.textContent = text;
}

async function boot(): Promise<void> {
  const canvas = document.getElementById("board") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d") as unknown as Canvas2DLike;
  const geometry: Geometry = await fetchGeometry();
  const renderer = new BoardRenderer(ctx, geometry, canvas.width);
  const chord = new ChordTracker();
  const gate = new InputGate();
  let lastState: StateEvent | null = null;
  let playback: PlaybackController | null = null;

  const redraw = () => {
    if (playback) {
      const frame = playback.current();
      const synthetic: StateEvent = {
        event: "state",
        t: frame.t,
        ball: [frame.x, frame.y],
        vel: [0, 0],
        angles: [0, 0],
        ang_vel: [0, 0],
        reward: frame.reward ?? 0,
        done: "running",
        viol_active: frame.viol,
        viol_event: frame.viol,
        frozen: !playback.isPlaying,
      };
      renderer.render({
        state: synthetic,
        hud: {
          phase: `playback ${playback.frameIndex + 1}/${playback.frameCount}`,
          recordedPairs: 0,
        },
        trace: playback.trace(),
      });
      return;
    }
    if (lastState) {
      renderer.render({
        state: lastState,
        hud: { phase: gate.phase, recordedPairs: gate.recordedPairs },
      });
    }
  };

  const client = new SessionClient(wsUrl(), (event: ServerEvent) => {
    switch (event.event) {
      case "hello":
        statusLine(`connected: ${event.setting}`);
        break;
      case "state":
        gate.onStateEvent(event.done, event.frozen, event.t > (lastState?.t ?? -1));
        lastState = event;
        break;
      case "saved":
        gate.onSaved();
        statusLine(`saved episode (${event.pairs} pairs)`);
        break;
      case "discarded":
        gate.onDiscarded();
        statusLine(`discarded ${event.pairs} pairs`);
        break;
      case "warning":
        statusLine(`warning: ${event.msg}`);
        break;
      case "error":
        statusLine(`error: ${event.msg}`);
        break;
    }
    redraw();
  });

  document.addEventListener("keydown", (e) => {
    if (playback) {
      if (e.key === " ") {
        if (playback.isPlaying) playback.pause();
        else playback.play();
      }
      if (e.key === "ArrowRight") playback.stepForward();
      if (e.key === "ArrowLeft") playback.stepBack();
      if (e.key === "0") playback.rewind();
      if (e.key === "+") playback.speed = Math.min(playback.speed * 2, 16);
      if (e.key === "-") playback.speed = Math.max(playback.speed / 2, 0.25);
      if (e.key === "Escape") {
        playback = null;
        statusLine("playback closed");
      }
      redraw();
      return;
    }
    chord.keyDown(e.key);
    if (e.key === " " && gate.shouldSendAct()) {
      client.act(chord.current().action);
    } else if (e.key.toLowerCase() === "f" && gate.canToggleFreeze()) {
      client.freeze(gate.phase !== "frozen");
    } else if (e.key.toLowerCase() === "r") {
      gate.onReset();
      client.reset(null);
    } else if (e.key === "Enter" && gate.canSave()) {
      client.save();
    } else if (e.key === "Backspace") {
      client.discard();
    }
  });
  document.addEventListener("keyup", (e) => chord.keyUp(e.key));

  const fileInput = document.getElementById("demo-file") as HTMLInputElement | null;
  fileInput?.addEventListener("change", async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    try {
      const parsed = parseDemoFile(await file.text());
      playback = new PlaybackController(parsed.episodes[0]);
      statusLine(
        `playback: ${parsed.header.setting}, episode 1/${parsed.episodes.length}, ` +
          `${episodeFrames(parsed.episodes[0]).length} frames`,
      );
      redraw();
    } catch (err) {
      statusLine(`parse error: ${err}`);
    }
  });

  setInterval(() => {
    if (playback?.isPlaying) {
      playback.tick();
      redraw();
    }
  }, 100);
}

boot().catch((err) => statusLine(`startup failed: ${err}`));
