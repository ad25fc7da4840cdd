"""Transformer over (time, variable, value) triplets and the logistic baseline."""
