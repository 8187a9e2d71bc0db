"""Core infrastructure: configuration, logging, errors, worker pools."""
