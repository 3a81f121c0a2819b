"""Variable-sized robust and inverse min-max regret combinatorial optimization."""

__version__ = "0.1.0"
