"""Discrete-event clock: the only time authority in the emulation."""

import heapq


class Scheduler:
    def __init__(self):
        self.now = 0.0
        self._queue = []
        self._seq = 0

    def at(self, time_s: float, callback):
        if time_s < self.now:
            time_s = self.now
        heapq.heappush(self._queue, (time_s, self._seq, callback))
        self._seq += 1

    def after(self, delay_s: float, callback):
        self.at(self.now + max(delay_s, 0.0), callback)

    def advance(self, delay_s: float):
        """Move time forward, running anything that falls due."""
        self.run_until(self.now + max(delay_s, 0.0))

    def run_until(self, time_s: float):
        while self._queue and self._queue[0][0] <= time_s:
            t, _, callback = heapq.heappop(self._queue)
            self.now = max(self.now, t)
            callback()
        self.now = max(self.now, time_s)

    def run_until_idle(self):
        while self._queue:
            t, _, callback = heapq.heappop(self._queue)
            self.now = max(self.now, t)
            callback()

    @property
    def pending(self) -> int:
        return len(self._queue)
