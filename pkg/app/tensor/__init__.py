"""Reverse-mode autodiff engine with the codec layer set."""
