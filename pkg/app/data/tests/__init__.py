"""Tests for the data slice."""
