"""Assortment offers under a choice model."""
