from __future__ import annotations


class NexcpError(Exception):
    """Base class for errors raised by the nexcp library."""


class DomainError(NexcpError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class EnumerationTooLarge(DomainError):
    """A joint support is too large to enumerate exactly."""


class DataFormatError(NexcpError, ValueError):
    """Input data could not be parsed into a dataset."""


class BoundViolation(NexcpError, AssertionError):
    """A theoretical inequality failed to hold on a concrete instance."""
