"""Datasets, experiment recipes, outputs and run orchestration."""
