"""Shared exception types."""


class CyberDepError(Exception):
    """Base class for all cyberdep failures."""


class ValidationError(CyberDepError):
    """Input data violates a structural contract (topology, profile, graph, manifest)."""


class FormatError(CyberDepError):
    """A file or stream does not conform to its documented format."""


class QueryError(CyberDepError):
    """A conditional-probability query names an unknown node or a non-parent."""
