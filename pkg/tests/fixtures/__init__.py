"""Test fixtures: dynamics builders, fault-injection dynamics and tiny datasets."""
