import argparse

from dssa.experiments.controller import register as register_experiments


def register_commands(subparsers: argparse._SubParsersAction):
    register_experiments(subparsers)
