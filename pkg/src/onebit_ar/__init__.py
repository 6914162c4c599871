"""Amplitude Retrieval for one-bit MIMO channel estimation."""
