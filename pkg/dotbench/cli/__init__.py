"""Command-line interface."""
from dotbench.cli.commands import build_parser, main, run

__all__ = ['build_parser', 'main', 'run']
