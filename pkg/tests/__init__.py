"""Tests package for dotbench."""
