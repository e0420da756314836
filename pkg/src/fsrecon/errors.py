"""Exception types shared across the package.

Outcome values that participate in the algebra (a broken application, a
sequence that cannot be normalized) are ordinary return values, not
exceptions; see fstree.Broken and canonical.NotNormalizable.  Exceptions
are reserved for contract violations and bad inputs.
"""

from __future__ import annotations


class FsreconError(Exception):
    """Base class for every error raised by this package."""


class PathSyntaxError(FsreconError):
    """A path string could not be parsed into a node id."""


class UnknownNodeError(FsreconError):
    """A node id was used with a namespace that does not contain it."""

    def __init__(self, node: object) -> None:
        super().__init__(f"node not in namespace: {node}")
        self.node = node


class TreePropertyError(FsreconError):
    """A filesystem value violates the directory-above-content rule."""

    def __init__(self, violator: object) -> None:
        super().__init__(
            f"tree property violated at {violator}: "
            "non-empty node whose parent is not a directory"
        )
        self.violator = violator


class CanonicalityError(FsreconError):
    """A command set or sequence fails one of the canonical-form clauses.

    The offending clause is kept in .clause so callers can report which
    rule failed: "no-null", "one-per-node", "order", or "connected".
    """

    def __init__(self, clause: str, detail: str) -> None:
        super().__init__(f"not canonical ({clause}): {detail}")
        self.clause = clause
        self.detail = detail


class RefluenceError(FsreconError):
    """Two command sets admit no common filesystem to act on."""


class EnumerationBoundError(FsreconError):
    """An exhaustive enumeration would exceed the configured bound."""

    def __init__(self, estimate: int, bound: int) -> None:
        super().__init__(
            f"enumeration refused: estimated {estimate} states exceeds bound {bound}"
        )
        self.estimate = estimate
        self.bound = bound


class PolicyError(FsreconError):
    """A resolution policy cannot or refuses to decide a conflict."""


class ValidationError(FsreconError):
    """An input fails a documented precondition."""


class FormatError(FsreconError):
    """A snapshot, log, or plan file is malformed."""


class InternalInvariantError(FsreconError):
    """A property the theory guarantees failed to hold; this is a bug."""
