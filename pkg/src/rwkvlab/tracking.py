"""Byte accounting for numeric buffers.

Only buffers created through this package's tracked constructors
(``numerics.as_vec64``, ``numerics.as_mat64``, ``numerics.alloc_zeros`` and
the model buffers built on them) are counted; numpy temporaries inside
kernels are not.  "current" falls when a tracked buffer is garbage
collected, "peak" is monotone for the lifetime of the tracker.

Tracking is off by default; enable it explicitly (CLI runs do) before
querying stats.
"""

from __future__ import annotations

import threading
import weakref

from .errors import UnsupportedError


class PeakWindow:
    """Peak tracked bytes observed between entry and exit."""

    def __init__(self, tracker: "BufferTracker"):
        self._tracker = tracker
        self.peak = 0

    def __enter__(self) -> "PeakWindow":
        self._tracker._open_window(self)
        return self

    def __exit__(self, *exc) -> None:
        self._tracker._close_window(self)


class BufferTracker:
    def __init__(self):
        self._lock = threading.Lock()
        self._enabled = False
        self._current = 0
        self._peak = 0
        self._windows: list[PeakWindow] = []

    @property
    def enabled(self) -> bool:
        return self._enabled

    def enable(self) -> None:
        with self._lock:
            self._enabled = True

    def disable(self) -> None:
        with self._lock:
            self._enabled = False

    def reset(self) -> None:
        with self._lock:
            self._current = 0
            self._peak = 0
            self._windows.clear()

    def register(self, arr) -> None:
        if not self._enabled:
            return
        nbytes = int(arr.nbytes)
        with self._lock:
            self._current += nbytes
            if self._current > self._peak:
                self._peak = self._current
            for window in self._windows:
                window.peak = max(window.peak, self._current)
        weakref.finalize(arr, self._release, nbytes)

    def _release(self, nbytes: int) -> None:
        with self._lock:
            self._current = max(0, self._current - nbytes)

    def stats(self) -> tuple[int, int]:
        with self._lock:
            if not self._enabled:
                raise UnsupportedError("buffer tracking is disabled")
            return self._current, self._peak

    def window(self) -> PeakWindow:
        return PeakWindow(self)

    def _open_window(self, window: PeakWindow) -> None:
        with self._lock:
            window.peak = self._current
            self._windows.append(window)

    def _close_window(self, window: PeakWindow) -> None:
        with self._lock:
            if window in self._windows:
                self._windows.remove(window)


#: Process-wide tracker used by the tracked constructors.
tracker = BufferTracker()


def register(arr) -> None:
    tracker.register(arr)


def tracked_alloc_stats() -> tuple[int, int]:
    """(current bytes, peak bytes) of tracked buffers; peak is monotone."""
    return tracker.stats()
