"""Multi-sinusoid frequency estimation."""
