"""Consensus dynamics on signed graphs."""
