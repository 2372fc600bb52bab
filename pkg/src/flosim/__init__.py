"""Phase-sensitive simulation of fermionic linear optics with controlled-phase gates."""

__version__ = "0.1.0"
