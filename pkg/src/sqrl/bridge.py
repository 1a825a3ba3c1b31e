"""Client for the reference-environment bridge subprocess.

The bridge is a child process speaking one JSON object per line over
stdin/stdout. This side owns the process lifecycle: spawn, hello handshake
(protocol version 1, 10 s budget), strictly serial request/response, close.
"""

from __future__ import annotations

import json
import select
import shlex
import subprocess

from .errors import BridgeError

PROTOCOL_VERSION = 1
HANDSHAKE_TIMEOUT = 10.0
REQUEST_TIMEOUT = 60.0


class BridgeClient:
    def __init__(self, command, timeout=HANDSHAKE_TIMEOUT):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as e:
            raise BridgeError(f"could not launch bridge {argv!r}: {e}") from e
        self._seq = 0
        hello = self.request({"cmd": "hello"}, timeout=timeout)
        if hello.get("protocol") != PROTOCOL_VERSION:
            self.close()
            raise BridgeError(
                f"bridge speaks protocol {hello.get('protocol')!r}, "
                f"need {PROTOCOL_VERSION}"
            )

    def _read_line(self, timeout):
        stream = self._proc.stdout
        ready, _, _ = select.select([stream], [], [], timeout)
        if not ready:
            raise BridgeError(f"bridge did not answer within {timeout} s")
        line = stream.readline()
        if line == "":
            raise BridgeError("bridge closed its output stream")
        return line

    def request(self, payload: dict, timeout=REQUEST_TIMEOUT) -> dict:
        if self._proc.poll() is not None:
            raise BridgeError("bridge process has exited")
        self._seq += 1
        payload = dict(payload, seq=self._seq)
        try:
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise BridgeError(f"bridge pipe broke: {e}") from e
        line = self._read_line(timeout)
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as e:
            raise BridgeError(f"malformed bridge reply: {line!r}") from e
        if reply.get("seq") != self._seq:
            raise BridgeError(
                f"out-of-order reply: sent seq {self._seq}, got {reply.get('seq')!r}"
            )
        return reply

    def call(self, **payload) -> dict:
        """Request that must succeed; raises BridgeError on ok=false."""
        reply = self.request(payload)
        if not reply.get("ok"):
            raise BridgeError(f"bridge error: {reply.get('error', 'unknown')}")
        return reply

    def close(self):
        if self._proc.poll() is None:
            try:
                self.request({"cmd": "close"}, timeout=2.0)
            except BridgeError:
                pass
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class BridgeEnv:
    """Remote environment behind a BridgeClient, same interface as the
    native environments."""

    def __init__(self, remote_id: str, command):
        self.remote_id = remote_id
        self._client = BridgeClient(command) if not isinstance(command, BridgeClient) else command
        info = self._client.call(cmd="spec", env=remote_id)
        self.obs_dim = info["obs_dim"]
        self.n_actions = info["n_actions"]

    def reset(self, seed=None):
        reply = self._client.call(cmd="reset", env=self.remote_id, seed=seed)
        return reply["obs"]

    def step(self, action):
        reply = self._client.call(cmd="step", action=int(action))
        return reply["obs"], reply["reward"], reply["done"]

    def inject_state(self, raw):
        self._client.call(cmd="inject_state", state=[float(v) for v in raw])

    def close(self):
        self._client.close()
