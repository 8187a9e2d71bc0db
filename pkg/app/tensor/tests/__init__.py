"""Tests for the tensor slice."""
