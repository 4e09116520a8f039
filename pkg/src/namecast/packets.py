"""Interest and Data packet records plus hierarchical name helpers.

Names are tuples of text components; data names carry a trailing sequence
component (``seq=<n>``).  Serialized sizes only need to preserve the relative
Interest-vs-Data airtime, so headers are fixed small constants.
"""

from __future__ import annotations

from dataclasses import dataclass

Name = tuple[str, ...]

INTEREST_OVERHEAD = 20   # bytes added to the name for an Interest on the wire
DATA_OVERHEAD = 28       # bytes added to name + payload for a Data packet
LINK_OVERHEAD = 34       # per-frame link-layer overhead in bytes


def parse_name(text: str) -> Name:
    components = tuple(c for c in text.split("/") if c)
    if not components:
        raise ValueError(f"empty name: {text!r}")
    return components


def format_name(name: Name) -> str:
    return "/" + "/".join(name)


def name_wire_size(name: Name) -> int:
    """Encoded size in bytes: one separator byte plus the text of each component."""
    return sum(len(c) + 1 for c in name)


def is_prefix(prefix: Name, name: Name) -> bool:
    return len(prefix) <= len(name) and name[: len(prefix)] == prefix


def seq_name(prefix: Name, seq: int) -> Name:
    return prefix + (f"seq={seq}",)


def seq_of(name: Name) -> int | None:
    last = name[-1]
    if last.startswith("seq="):
        try:
            return int(last[4:])
        except ValueError:
            return None
    return None


def producer_prefix(name: Name) -> Name:
    """Data name minus its final (sequence) component; single-component names
    are their own prefix."""
    return name[:-1] if len(name) > 1 else name


@dataclass(frozen=True)
class Interest:
    name: Name
    nonce: int          # fresh 32-bit value per application send, retransmissions included
    lifetime: float     # seconds the PIT entry stays alive
    hop_count: int = 0  # incremented by each forwarding hop

    def wire_size(self) -> int:
        return name_wire_size(self.name) + INTEREST_OVERHEAD


@dataclass(frozen=True)
class Data:
    name: Name
    payload_size: int
    hop_count: int = 0      # hops from the node that produced (or cached) it
    cm_flag: bool = False   # congestion mark, sticky once set

    def wire_size(self) -> int:
        return name_wire_size(self.name) + self.payload_size + DATA_OVERHEAD
