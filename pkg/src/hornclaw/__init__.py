"""hornclaw: verify mini functional programs via constrained Horn clauses."""

__version__ = "0.1.0"
