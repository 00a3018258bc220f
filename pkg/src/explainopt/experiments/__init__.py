"""Experiment harness: generators, history construction, sweeps and scenario data."""
