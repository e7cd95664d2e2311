"""Black-box access over a line-oriented subprocess protocol.

The child receives one CSV line per query point on stdin (features in
original units) and must answer one decimal number per line on stdout,
in order.  Queries are written as whole batches followed by a flush, so
children may buffer freely as long as replies stay ordered.
"""

from __future__ import annotations

import shlex
import subprocess
import threading
from dataclasses import dataclass

import numpy as np

from .errors import BlackBoxTimeout, ChildExit, MalformedReply


@dataclass
class BlackBoxHandle:
    """Live black-box access description.

    mode "subprocess" runs ``command`` as a protocol child; mode
    "sample-file" marks that queries are impossible and values come
    solely from the labeled data file (query_blackbox refuses it).
    """

    mode: str
    command: str = ""
    timeout: float = 60.0

    def __post_init__(self):
        if self.mode not in ("sample-file", "subprocess"):
            raise ValueError("mode must be 'sample-file' or 'subprocess'")
        if self.mode == "subprocess" and not self.command:
            raise ValueError("subprocess mode needs a command line")


class SubprocessBlackBox:
    """Owns one protocol child for the duration of a fitting run."""

    def __init__(self, handle: BlackBoxHandle):
        if handle.mode != "subprocess":
            raise ValueError("only subprocess handles own a child process")
        self.handle = handle
        self._proc = subprocess.Popen(
            shlex.split(handle.command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            bufsize=1,
        )
        self.queries = 0

    def query(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = points.shape[0]
        if n == 0:
            return np.zeros(0)
        if self._proc.poll() is not None:
            raise ChildExit(
                f"black-box child exited with code {self._proc.returncode}"
            )
        payload = "\n".join(",".join(repr(float(v)) for v in row) for row in points) + "\n"
        replies: list[str] = []
        error: list[BaseException] = []

        def pump():
            try:
                self._proc.stdin.write(payload)
                self._proc.stdin.flush()
                for _ in range(n):
                    line = self._proc.stdout.readline()
                    if line == "":
                        raise ChildExit("black-box child closed its output early")
                    replies.append(line)
            except BaseException as exc:  # surfaced on the caller thread
                error.append(exc)

        worker = threading.Thread(target=pump, daemon=True)
        worker.start()
        worker.join(self.handle.timeout)
        if worker.is_alive():
            self._proc.kill()
            raise BlackBoxTimeout(
                f"no reply within {self.handle.timeout}s for a {n}-point batch"
            )
        if error:
            exc = error[0]
            if isinstance(exc, ChildExit):
                raise exc
            raise ChildExit(str(exc)) from exc
        values = np.empty(n)
        for i, line in enumerate(replies):
            try:
                values[i] = float(line.strip())
            except ValueError:
                raise MalformedReply(
                    f"non-numeric reply {line.strip()!r} at line {i}", line_index=i
                ) from None
        self.queries += n
        return values

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def query_blackbox(handle_or_child, points: np.ndarray) -> np.ndarray:
    """Query a live black-box at the given points (original units).

    Accepts either a BlackBoxHandle in subprocess mode (a child is
    spawned for the batch and closed afterwards) or an already-running
    SubprocessBlackBox.  Sample-file handles cannot be queried.
    """
    if isinstance(handle_or_child, SubprocessBlackBox):
        return handle_or_child.query(points)
    handle = handle_or_child
    if handle.mode == "sample-file":
        raise ValueError("sample-file black-boxes cannot be queried")
    with SubprocessBlackBox(handle) as child:
        return child.query(points)
