"""FastAPI service wrapping the detection engine."""
