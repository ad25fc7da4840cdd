"""Encounter, feature and normalization transforms."""
