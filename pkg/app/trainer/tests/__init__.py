"""Tests for the trainer slice."""
