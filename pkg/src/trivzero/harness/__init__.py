"""Batch plumbing: configuration, cache and the command-line entry point."""
