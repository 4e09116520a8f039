"""Optional runtime invariant checks for verification runs.

When attached, forwarders and consumers report state transitions here; any
violated condition is recorded (and the message kept) so a verification run
can assert `violations == []` at the end without aborting mid-simulation.
"""

from __future__ import annotations


class InvariantChecker:
    def __init__(self, max_messages: int = 50):
        self.violations: list[str] = []
        self.checked = 0
        self._max = max_messages
        self._forwarded: dict[int, set] = {}

    def check(self, condition: bool, message: str) -> None:
        self.checked += 1
        if not condition and len(self.violations) < self._max:
            self.violations.append(message)

    def note_interest_forwarded(self, node: int, name, nonce: int) -> None:
        """Loop freedom: a node never forwards two Interests with the same
        (name, nonce)."""
        seen = self._forwarded.setdefault(node, set())
        key = (name, nonce)
        self.check(key not in seen, f"node {node} re-forwarded {name} nonce {nonce}")
        seen.add(key)

    def ok(self) -> bool:
        return not self.violations
