"""File formats, metrics and synthetic data around the core pipeline."""
