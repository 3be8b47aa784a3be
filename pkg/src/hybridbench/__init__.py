"""Simulated hybrid quantum-classical workloads: QuEnc MaxCut, hybrid neural networks, QTT Poisson."""

__version__ = "0.1.0"
