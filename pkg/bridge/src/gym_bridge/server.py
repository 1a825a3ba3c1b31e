"""Line-delimited JSON request loop over stdin/stdout.

One JSON object per line in each direction; every response carries the
request's sequence number. Malformed input, unknown commands and
environment faults produce ok=false responses, never a dead process. The
loop is strictly serial.
"""

from __future__ import annotations

import json
import sys

from .backends import backend_name, make_adapter, spec_for

PROTOCOL_VERSION = 1


class BridgeServer:
    def __init__(self):
        self.adapter = None
        self.episode_over = True

    def handle(self, request: dict) -> dict:
        cmd = request.get("cmd")
        if cmd == "hello":
            return {"ok": True, "protocol": PROTOCOL_VERSION,
                    "backend": backend_name()}
        if cmd == "spec":
            obs_dim, n_actions = spec_for(request["env"])
            return {"ok": True, "obs_dim": obs_dim, "n_actions": n_actions}
        if cmd == "reset":
            env_id = request.get("env")
            if env_id is not None and (
                self.adapter is None or self.adapter.env_id != env_id
            ):
                if self.adapter is not None:
                    self.adapter.close()
                self.adapter = make_adapter(env_id)
            if self.adapter is None:
                raise RuntimeError("reset needs an env id")
            obs, _ = self.adapter.reset(seed=request.get("seed"))
            self.episode_over = False
            return {"ok": True, "obs": [float(v) for v in obs],
                    "obs_dim": self.adapter.obs_dim,
                    "n_actions": self.adapter.n_actions}
        if cmd == "step":
            if self.adapter is None:
                raise RuntimeError("no environment; send reset first")
            if self.episode_over:
                raise RuntimeError("episode is over; send reset or inject_state")
            action = request.get("action")
            if not isinstance(action, int) or not 0 <= action < self.adapter.n_actions:
                raise RuntimeError(
                    f"action must be an int in [0, {self.adapter.n_actions}), "
                    f"got {action!r}"
                )
            obs, reward, done, truncated = self.adapter.step(action)
            self.episode_over = bool(done)
            return {"ok": True, "obs": [float(v) for v in obs],
                    "reward": float(reward), "done": bool(done),
                    "truncated": bool(truncated)}
        if cmd == "inject_state":
            if self.adapter is None:
                raise RuntimeError("no environment; send reset first")
            self.adapter.set_state([float(v) for v in request["state"]])
            self.episode_over = False
            return {"ok": True}
        if cmd == "close":
            if self.adapter is not None:
                self.adapter.close()
            return {"ok": True, "closing": True}
        raise RuntimeError(f"unknown cmd {cmd!r}")


def serve(stdin=None, stdout=None):
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    server = BridgeServer()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        seq = None
        try:
            request = json.loads(line)
            seq = request.get("seq")
            reply = server.handle(request)
        except Exception as e:  # noqa: BLE001 - protocol promises survival
            reply = {"ok": False, "error": str(e)}
        reply["seq"] = seq
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()
        if reply.get("closing"):
            break


def main():
    serve()
    return 0


if __name__ == "__main__":
    sys.exit(main())
