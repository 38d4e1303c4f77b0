#!/usr/bin/env python3
"""
Wall-clock deadline for long searches

The planner polls the deadline between expansions instead of sleeping, so a
run stops shortly after its time budget runs out.
"""

import time


class DeadlineExceeded(Exception):
    """Raised by :meth:`Deadline.check` once the budget is spent."""


class Deadline:
    """Time budget measured with a monotonic clock, starting at creation."""

    def __init__(self, timeout_ms: int, check_every: int = 64):
        """
        Initialize deadline

        Args:
            timeout_ms: Budget in milliseconds
            check_every: Number of :meth:`check` calls between clock reads
        """
        self.timeout_ms = timeout_ms
        self.started = time.monotonic()
        self.expires_at = self.started + timeout_ms / 1000.0
        self.check_every = max(1, check_every)
        self._calls = 0

    def expired(self) -> bool:
        return time.monotonic() >= self.expires_at

    def check(self):
        """Raise DeadlineExceeded if the budget is spent (clock read is amortized)."""
        self._calls += 1
        if self._calls % self.check_every == 0 and self.expired():
            raise DeadlineExceeded(f"time budget of {self.timeout_ms} ms exceeded")

    def elapsed_ms(self) -> float:
        return (time.monotonic() - self.started) * 1000.0
