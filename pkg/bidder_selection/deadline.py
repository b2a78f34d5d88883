import time


class DeadlineExceeded(RuntimeError):
    pass


class Deadline:
    """
    Wall-clock limit checked cooperatively by the solver and baseline loops.
    ``Deadline()`` never expires.
    """

    def __init__(self, seconds=None, clock=time.monotonic):
        self.seconds = seconds
        self._clock = clock
        self.expires = None if seconds is None else clock() + seconds

    @property
    def expired(self):
        return self.expires is not None and self._clock() >= self.expires

    def remaining(self):
        if self.expires is None:
            return None
        return max(0.0, self.expires - self._clock())

    def check(self, where=""):
        if self.expired:
            suffix = f" in {where}" if where else ""
            raise DeadlineExceeded(f"{self.seconds}s limit exceeded{suffix}")
