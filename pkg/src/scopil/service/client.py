"""Headless synchronous client for the recording protocol, for scripts and
protocol tests against a live server."""

from __future__ import annotations

import json

from websockets.sync.client import connect


class DemoClient:
    """Blocking wrapper over one WebSocket session."""

    def __init__(self, url: str, timeout: float = 10.0):
        self._ws = connect(url, open_timeout=timeout, close_timeout=timeout)
        self._timeout = timeout
        self.hello = self.recv()
        if self.hello.get("event") != "hello":
            raise RuntimeError(f"expected hello event, got {self.hello}")

    def recv(self) -> dict:
        return json.loads(self._ws.recv(timeout=self._timeout))

    def send(self, **cmd) -> None:
        self._ws.send(json.dumps(cmd))

    def roundtrip(self, n_events: int = 1, **cmd) -> list[dict]:
        """Send one command and collect its response events."""
        self.send(**cmd)
        return [self.recv() for _ in range(n_events)]

    def reset(self, seed: int | None = None) -> dict:
        return self.roundtrip(cmd="reset", seed=seed)[0]

    def act(self, action: int) -> dict:
        """One step; returns the state event (skipping a frozen warning)."""
        events = self.roundtrip(cmd="act", action=action)
        if events[0].get("event") == "warning":
            events.append(self.recv())
        return events[-1]

    def freeze(self, on: bool) -> dict:
        return self.roundtrip(cmd="freeze", on=on)[0]

    def save(self) -> dict:
        return self.roundtrip(cmd="save")[0]

    def discard(self) -> dict:
        return self.roundtrip(cmd="discard")[0]

    def close(self) -> None:
        self._ws.close()

    def __enter__(self) -> "DemoClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
