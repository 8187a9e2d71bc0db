"""SAFE semantic communication simulator package."""
