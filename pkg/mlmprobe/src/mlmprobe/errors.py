"""Exception types for the adapter."""


class AdapterError(Exception):
    """Malformed export files, shape mismatches, or harness misuse."""
