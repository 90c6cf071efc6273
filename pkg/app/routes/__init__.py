"""Application route modules."""
