"""Tests for the safenet slice."""
