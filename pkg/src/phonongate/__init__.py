"""Phononic CNOT gates in a nanobeam-cavity system: analytic gate
construction and open-system master-equation simulation."""

__version__ = "0.1.0"
