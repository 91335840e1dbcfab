"""Global sequence counter."""


class SequenceCounter:
    """
    Hands out strictly increasing sequence numbers.

    0 is reserved as the beginning of time and never assigned.
    """

    def __init__(self, last: int = 0):
        if last < 0:
            raise ValueError("sequence numbers are non-negative")
        self._last = last

    def next_sequence(self) -> int:
        self._last += 1
        return self._last

    @property
    def current(self) -> int:
        """Last assigned sequence number (0 when none)."""
        return self._last
