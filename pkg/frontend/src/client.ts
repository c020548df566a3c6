// WebSocket wrapper for the recording protocol.

import type { Command, Geometry, ServerEvent } from "./types";

export type EventHandler = (event: ServerEvent) => void;

export class SessionClient {
  private socket: WebSocket;
  geometry: Geometry | null = null;

  constructor(url: string, private readonly onEvent: EventHandler) {
    this.socket = new WebSocket(url);
    this.socket.addEventListener("message", (msg: MessageEvent) => {
      const event = JSON.parse(String(msg.data)) as ServerEvent;
      if (event.event === "hello") this.geometry = event.geometry;
      this.onEvent(event);
    });
  }

  send(command: Command): void {
    this.socket.send(JSON.stringify(command));
  }

  reset(seed: number | null = null): void {
    this.send({ cmd: "reset", seed });
  }

  act(action: number): void {
    this.send({ cmd: "act", action });
  }

  freeze(on: boolean): void {
    this.send({ cmd: "freeze", on });
  }

  save(): void {
    this.send({ cmd: "save" });
  }

  discard(): void {
    this.send({ cmd: "discard" });
  }

  close(): void {
    this.socket.close();
  }
}

export async function fetchGeometry(baseUrl = ""): Promise<Geometry> {
  const res = await fetch(`${baseUrl}/config`);
  if (!res.ok) throw new Error(`GET /config failed: ${res.status}`);
  return (await res.json()) as Geometry;
}
