"""Fault injection for self-checks.

``cmd_verify --inject-fault=<name>`` activates a named, deliberate defect in
one builder so the verification suite can demonstrate it catches real bugs.
"""
from .errors import InputError

KNOWN_FAULTS = {
    "horizon-gap": "halve the threshold ramp slope so saturation needs twice the margin",
}

_active: frozenset = frozenset()


def set_faults(names) -> None:
    global _active
    names = frozenset(names or ())
    unknown = names - set(KNOWN_FAULTS)
    if unknown:
        raise InputError(f"unknown fault(s) {sorted(unknown)}; known: {sorted(KNOWN_FAULTS)}")
    _active = names


def clear_faults() -> None:
    set_faults(())


def is_active(name: str) -> bool:
    return name in _active
