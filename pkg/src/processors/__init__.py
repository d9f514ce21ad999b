"""Experiment pipelines for oscsym, one per CLI subcommand."""

from processors import (
    amp2sym_processor,
    compose_processor,
    kernel_processor,
    sandwich_processor,
    selftest_processor,
    stationary_processor,
    weyl_processor,
)

SUBCOMMANDS = {
    "compose": compose_processor.run,
    "amp2sym": amp2sym_processor.run,
    "stationary": stationary_processor.run,
    "weyl": weyl_processor.run,
    "kernel": kernel_processor.run,
    "sandwich": sandwich_processor.run,
    "selftest": selftest_processor.run,
}

__all__ = ["SUBCOMMANDS"]
