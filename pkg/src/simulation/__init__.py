"""Seeded trajectory sampling and Monte-Carlo policy evaluation."""
