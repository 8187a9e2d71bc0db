"""Tests for the evaluation slice."""
