from __future__ import annotations

import threading
import time
from typing import Callable, Optional


class TokenBucket:
    """Requests-per-minute limiter; ``acquire`` blocks until a token is free."""

    def __init__(self, rpm: Optional[float], burst: int = 1,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.rate = None if not rpm else rpm / 60.0
        self.capacity = max(1, burst)
        self.tokens = float(self.capacity)
        self.clock = clock
        self.sleep = sleep
        self.last = clock()
        self.lock = threading.Lock()

    def acquire(self) -> float:
        """Take one token; returns the time spent waiting."""
        if self.rate is None:
            return 0.0
        waited = 0.0
        while True:
            with self.lock:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.last) * self.rate)
                self.last = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return waited
                delay = (1 - self.tokens) / self.rate
            self.sleep(delay)
            waited += delay
