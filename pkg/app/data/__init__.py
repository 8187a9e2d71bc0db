"""Image ingestion, synthetic datasets and splitting."""
