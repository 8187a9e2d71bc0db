"""Shared utilities and cross-feature code."""
