"""Tests for the channel slice."""
