"""Adam training and the multi-stage training strategies."""
