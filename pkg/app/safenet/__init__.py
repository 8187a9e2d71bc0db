"""Multi-branch semantic codec network."""
